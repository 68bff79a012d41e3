#ifndef COMPPROBE_EVALUATION_H_
#define COMPPROBE_EVALUATION_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "compprobe/embedding_store.h"
#include "compprobe/probes.h"

namespace compprobe {

// u·v / (|u||v|), accumulated in double. Throws ZeroVector if either norm
// is zero and DimError on a length mismatch.
double CosineSimilarity(std::span<const float> u, std::span<const float> v);

// Per-phrase compositionality score: similarity of the probe prediction to
// the actual parent vector. Rows with a zero vector are kept with
// zero_vector set; their score is not meaningful.
struct ScoreRecord {
  std::string phrase_id;
  std::string tree_type;
  double cosine_score = 0.0;
  double cosine_distance = 1.0;
  std::size_t parent_len = 0;
  bool zero_vector = false;
};

struct ScoreSummary {
  std::size_t count = 0;    // scored rows
  std::size_t flagged = 0;  // zero-vector rows, excluded from mean/stddev
  double mean = 0.0;
  double stddev = 0.0;  // population
};

std::vector<ScoreRecord> ScorePredictions(const Matrix& predictions,
                                          const TripleMatrix& triples);
std::vector<ScoreRecord> ScorePhrases(const ProbeModel& probe,
                                      const TripleMatrix& triples);
ScoreSummary Summarize(const std::vector<ScoreRecord>& scores);

// TSV with header "phrase_id tree_type cosine_score parent_len"; flagged rows
// carry NA as score.
void WriteScoresTsv(const std::vector<ScoreRecord>& scores, std::ostream& out);
std::vector<ScoreRecord> ReadScoresTsv(std::istream& in);
std::vector<ScoreRecord> ReadScoresTsv(const std::filesystem::path& path);

// dist_probe / dist_control, where dist_control is the mean cosine distance
// of each prediction to a parent vector drawn uniformly from the other rows
// (with replacement, redrawn per row). Throws TooSmall if n < 2 and
// DegenerateControl if dist_control is 0.
double ControlErrorRatio(const Matrix& predictions, const Matrix& parents,
                         std::uint64_t seed);
double ControlErrorRatio(const ProbeModel& probe, const TripleMatrix& triples,
                         std::uint64_t seed);

inline constexpr double kDefaultCurveFractions[] = {
    0.00005, 0.0001, 0.001, 0.005, 0.01, 0.1, 1.0};

struct LearningCurve {
  ProbeKind probe_kind = ProbeKind::kAff;
  std::vector<double> fractions;
  std::vector<double> test_scores;        // mean test cosine per fraction
  std::vector<double> skipped_fractions;  // yielded zero training rows
};

// Trains from the same seed and initialization on growing prefixes of the
// first fold's shuffled training split and scores each on its test split.
LearningCurve ComputeLearningCurve(
    ProbeKind kind, const TripleMatrix& triples, const TrainConfig& config,
    std::span<const double> fractions = kDefaultCurveFractions);

// Trapezoidal area under score vs. log10(fraction), divided by the
// log-range and multiplied by 100, so a constant curve at c scores 100c.
// Throws CurveTooShort with fewer than two points.
double CurveAuc(const LearningCurve& curve);

}  // namespace compprobe

#endif  // COMPPROBE_EVALUATION_H_
