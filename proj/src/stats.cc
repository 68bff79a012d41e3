#include "compprobe/stats.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/special_functions/beta.hpp>

#include "compprobe/errors.h"
#include "compprobe/random.h"

namespace compprobe {
namespace {

constexpr double kTieTolerance = 1e-12;

double Factorial(std::size_t n) {
  double f = 1.0;
  for (std::size_t i = 2; i <= n; ++i) f *= static_cast<double>(i);
  return f;
}

// Pearson correlation of ys permuted by `perm` against xs, both already
// centred; sxx * syy is the fixed denominator.
double PermutedCorrelation(const std::vector<double>& xc,
                           const std::vector<double>& yc,
                           const std::vector<std::size_t>& perm,
                           double denom) {
  double sxy = 0.0;
  for (std::size_t i = 0; i < xc.size(); ++i) sxy += xc[i] * yc[perm[i]];
  return sxy / denom;
}

double PermutationPValue(const std::vector<double>& rx,
                         const std::vector<double>& ry, double rho,
                         const SpearmanOptions& options) {
  const std::size_t n = rx.size();
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  std::vector<double> xc(n), yc(n);
  double sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    xc[i] = rx[i] - mx;
    yc[i] = ry[i] - my;
    sxx += xc[i] * xc[i];
    syy += yc[i] * yc[i];
  }
  const double denom = std::sqrt(sxx * syy);
  const double threshold = std::abs(rho) - kTieTolerance;

  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  if (Factorial(n) <= static_cast<double>(options.permutations)) {
    std::size_t hits = 0, total = 0;
    do {
      ++total;
      if (std::abs(PermutedCorrelation(xc, yc, perm, denom)) >= threshold) ++hits;
    } while (std::next_permutation(perm.begin(), perm.end()));
    return static_cast<double>(hits) / static_cast<double>(total);
  }
  Rng rng(options.seed);
  std::size_t hits = 0;
  for (std::size_t k = 0; k < options.permutations; ++k) {
    rng.Shuffle(perm);
    if (std::abs(PermutedCorrelation(xc, yc, perm, denom)) >= threshold) ++hits;
  }
  return static_cast<double>(hits + 1) /
         static_cast<double>(options.permutations + 1);
}

}  // namespace

std::vector<double> AverageRanks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return values[a] < values[b];
  });
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

double PearsonCorrelation(std::span<const double> xs,
                          std::span<const double> ys) {
  if (xs.size() != ys.size()) throw DimError("correlation inputs differ in length");
  const std::size_t n = xs.size();
  if (n == 0) throw TooSmall("correlation of empty inputs");
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw UndefinedCorrelation("correlation with a constant input");
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double AsymptoticCorrelationPValue(double rho, std::size_t n) {
  if (n < 3) throw TooSmall("need n >= 3 for a correlation p-value");
  const double r2 = rho * rho;
  if (r2 >= 1.0) return 0.0;
  const double df = static_cast<double>(n - 2);
  const double t2 = r2 * df / (1.0 - r2);
  return std::clamp(boost::math::ibeta(df / 2.0, 0.5, df / (df + t2)), 0.0, 1.0);
}

CorrelationResult Spearman(std::span<const double> xs,
                           std::span<const double> ys,
                           const SpearmanOptions& options) {
  if (xs.size() != ys.size()) throw DimError("spearman inputs differ in length");
  if (xs.size() < 3) throw TooSmall("spearman needs at least 3 pairs");
  const auto rx = AverageRanks(xs);
  const auto ry = AverageRanks(ys);
  CorrelationResult r;
  r.n = xs.size();
  r.rho = PearsonCorrelation(rx, ry);
  const bool permute =
      options.method == PValueMethod::kPermutation ||
      (options.method == PValueMethod::kAuto && r.n < kPermutationThreshold);
  r.p_raw = permute ? PermutationPValue(rx, ry, r.rho, options)
                    : AsymptoticCorrelationPValue(r.rho, r.n);
  r.p_adjusted = r.p_raw;
  return r;
}

std::vector<double> HolmBonferroni(std::span<const double> p_values) {
  const std::size_t m = p_values.size();
  for (double p : p_values) {
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError("p-value outside [0, 1]");
  }
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return p_values[a] < p_values[b];
  });
  std::vector<double> adjusted(m);
  double running = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    const double scaled =
        std::min(1.0, static_cast<double>(m - j) * p_values[order[j]]);
    running = std::max(running, scaled);
    adjusted[order[j]] = running;
  }
  return adjusted;
}

void AdjustHolm(std::vector<CorrelationResult>& results) {
  std::vector<double> raw;
  raw.reserve(results.size());
  for (const auto& r : results) raw.push_back(r.p_raw);
  const auto adjusted = HolmBonferroni(raw);
  for (std::size_t i = 0; i < results.size(); ++i) {
    results[i].p_adjusted = adjusted[i];
  }
}

double KrippendorffAlpha(const RatingTable& ratings, AlphaLevel level) {
  // Group values by unit.
  std::map<std::string, std::vector<double>> units;
  for (const auto& [key, value] : ratings) {
    if (!std::isfinite(value)) throw DomainError("non-finite rating");
    units[key.first].push_back(value);
  }
  std::vector<double> categories;
  std::size_t pairable_units = 0;
  for (const auto& [unit, values] : units) {
    if (values.size() < 2) continue;
    ++pairable_units;
    categories.insert(categories.end(), values.begin(), values.end());
  }
  if (pairable_units < 2) {
    throw Undefined("alpha needs at least two units with two or more ratings");
  }
  std::sort(categories.begin(), categories.end());
  categories.erase(std::unique(categories.begin(), categories.end()),
                   categories.end());
  const std::size_t v = categories.size();
  auto index_of = [&](double x) {
    return static_cast<std::size_t>(
        std::lower_bound(categories.begin(), categories.end(), x) -
        categories.begin());
  };

  // Coincidence matrix and its marginals.
  std::vector<double> coincidence(v * v, 0.0);
  for (const auto& [unit, values] : units) {
    const std::size_t m = values.size();
    if (m < 2) continue;
    const double weight = 1.0 / static_cast<double>(m - 1);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < m; ++j) {
        if (i != j) coincidence[index_of(values[i]) * v + index_of(values[j])] += weight;
      }
    }
  }
  std::vector<double> marginal(v, 0.0);
  for (std::size_t c = 0; c < v; ++c) {
    for (std::size_t k = 0; k < v; ++k) marginal[c] += coincidence[c * v + k];
  }
  const double total = std::accumulate(marginal.begin(), marginal.end(), 0.0);

  auto delta2 = [&](std::size_t c, std::size_t k) -> double {
    switch (level) {
      case AlphaLevel::kNominal:
        return c == k ? 0.0 : 1.0;
      case AlphaLevel::kInterval: {
        const double d = categories[c] - categories[k];
        return d * d;
      }
      case AlphaLevel::kOrdinal: {
        const std::size_t lo = std::min(c, k), hi = std::max(c, k);
        double sum = 0.0;
        for (std::size_t g = lo; g <= hi; ++g) sum += marginal[g];
        const double d = sum - (marginal[c] + marginal[k]) / 2.0;
        return d * d;
      }
    }
    return 0.0;
  };

  double observed = 0.0, expected = 0.0;
  for (std::size_t c = 0; c < v; ++c) {
    for (std::size_t k = 0; k < v; ++k) {
      const double d = delta2(c, k);
      observed += coincidence[c * v + k] * d;
      expected += marginal[c] * marginal[k] * d;
    }
  }
  if (expected == 0.0) {
    if (observed == 0.0) return 1.0;
    throw Undefined("zero expected disagreement");
  }
  return 1.0 - (total - 1.0) * observed / expected;
}

}  // namespace compprobe
