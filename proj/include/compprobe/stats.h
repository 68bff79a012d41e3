#ifndef COMPPROBE_STATS_H_
#define COMPPROBE_STATS_H_

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace compprobe {

// Ranks starting at 1; tied values share the mean of their ranks.
std::vector<double> AverageRanks(std::span<const double> values);

double PearsonCorrelation(std::span<const double> xs,
                          std::span<const double> ys);

struct CorrelationResult {
  double rho = 0.0;
  double p_raw = 1.0;
  double p_adjusted = 1.0;
  std::size_t n = 0;
};

enum class PValueMethod {
  kAuto,         // permutation below kPermutationThreshold, else asymptotic
  kAsymptotic,   // Student t with n - 2 degrees of freedom
  kPermutation,  // exact when n! <= permutations, Monte Carlo otherwise
};

inline constexpr std::size_t kPermutationThreshold = 30;

struct SpearmanOptions {
  PValueMethod method = PValueMethod::kAuto;
  std::uint64_t seed = 0;
  std::size_t permutations = 100000;
};

// Spearman rank correlation with a two-sided p-value. p_adjusted is set
// equal to p_raw. Throws DimError on unequal lengths, TooSmall if n < 3 and
// UndefinedCorrelation if either input is constant.
CorrelationResult Spearman(std::span<const double> xs,
                           std::span<const double> ys,
                           const SpearmanOptions& options = {});

// Two-sided p-value for a correlation of rho over n pairs from the t
// distribution with n - 2 degrees of freedom.
double AsymptoticCorrelationPValue(double rho, std::size_t n);

// Holm step-down adjustment, returned in input order. Throws DomainError on
// a value outside [0, 1].
std::vector<double> HolmBonferroni(std::span<const double> p_values);

// Applies HolmBonferroni across the p_raw of a batch, filling p_adjusted.
void AdjustHolm(std::vector<CorrelationResult>& results);

enum class AlphaLevel { kNominal, kOrdinal, kInterval };

// (unit, annotator) -> value.
using RatingTable = std::map<std::pair<std::string, std::string>, double>;

// Krippendorff's alpha from the coincidence matrix. Units with fewer than
// two ratings are not pairable and are ignored. Throws Undefined when fewer
// than two units are pairable, or when expected disagreement is zero while
// observed disagreement is not; returns 1 when both are zero.
double KrippendorffAlpha(const RatingTable& ratings,
                         AlphaLevel level = AlphaLevel::kOrdinal);

}  // namespace compprobe

#endif  // COMPPROBE_STATS_H_
