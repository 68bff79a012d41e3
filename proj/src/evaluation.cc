#include "compprobe/evaluation.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "compprobe/errors.h"
#include "compprobe/random.h"
#include "compprobe/tsv.h"

namespace compprobe {
namespace {

constexpr std::string_view kScoresHeader =
    "phrase_id\ttree_type\tcosine_score\tparent_len";

double RowCosine(const Matrix& a, Eigen::Index i, const Matrix& b,
                 Eigen::Index j, bool& zero) {
  const double na = a.row(i).cast<double>().norm();
  const double nb = b.row(j).cast<double>().norm();
  zero = na == 0.0 || nb == 0.0;
  if (zero) return 0.0;
  const double c = a.row(i).cast<double>().dot(b.row(j).cast<double>()) / (na * nb);
  return std::clamp(c, -1.0, 1.0);
}

}  // namespace

double CosineSimilarity(std::span<const float> u, std::span<const float> v) {
  if (u.size() != v.size()) throw DimError("cosine of vectors of unequal length");
  double dot = 0.0, nu = 0.0, nv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += double{u[i]} * v[i];
    nu += double{u[i]} * u[i];
    nv += double{v[i]} * v[i];
  }
  if (nu == 0.0 || nv == 0.0) throw ZeroVector("cosine of a zero vector");
  return std::clamp(dot / (std::sqrt(nu) * std::sqrt(nv)), -1.0, 1.0);
}

std::vector<ScoreRecord> ScorePredictions(const Matrix& predictions,
                                          const TripleMatrix& triples) {
  if (predictions.rows() != triples.parent.rows() ||
      predictions.cols() != triples.parent.cols()) {
    throw DimError("predictions do not match triples");
  }
  std::vector<ScoreRecord> out;
  out.reserve(triples.rows());
  for (Eigen::Index i = 0; i < predictions.rows(); ++i) {
    const auto r = static_cast<std::size_t>(i);
    ScoreRecord s;
    s.phrase_id = triples.phrase_ids[r];
    s.tree_type = triples.tree_types[r];
    s.parent_len = triples.parent_lens[r];
    s.cosine_score = RowCosine(triples.parent, i, predictions, i, s.zero_vector);
    s.cosine_distance = 1.0 - s.cosine_score;
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<ScoreRecord> ScorePhrases(const ProbeModel& probe,
                                      const TripleMatrix& triples) {
  return ScorePredictions(ApplyProbe(probe, triples.left, triples.right),
                          triples);
}

ScoreSummary Summarize(const std::vector<ScoreRecord>& scores) {
  ScoreSummary s;
  double sum = 0.0;
  for (const auto& r : scores) {
    if (r.zero_vector) {
      ++s.flagged;
      continue;
    }
    ++s.count;
    sum += r.cosine_score;
  }
  if (s.count == 0) return s;
  s.mean = sum / static_cast<double>(s.count);
  double ss = 0.0;
  for (const auto& r : scores) {
    if (!r.zero_vector) ss += (r.cosine_score - s.mean) * (r.cosine_score - s.mean);
  }
  s.stddev = std::sqrt(ss / static_cast<double>(s.count));
  return s;
}

void WriteScoresTsv(const std::vector<ScoreRecord>& scores, std::ostream& out) {
  out << kScoresHeader << '\n';
  for (const auto& s : scores) {
    out << s.phrase_id << '\t' << s.tree_type << '\t';
    if (s.zero_vector) {
      out << "NA";
    } else {
      std::ostringstream v;
      v << std::setprecision(17) << s.cosine_score;
      out << v.str();
    }
    out << '\t' << s.parent_len << '\n';
  }
}

std::vector<ScoreRecord> ReadScoresTsv(std::istream& in) {
  std::string line;
  if (!ReadLine(in, line) || line != kScoresHeader) {
    throw FormatError("scores: missing or unexpected header");
  }
  std::vector<ScoreRecord> out;
  std::size_t line_no = 1;
  while (ReadLine(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto f = SplitTabs(line);
    if (f.size() != 4) {
      throw FormatError("scores line " + std::to_string(line_no) +
                        ": expected 4 fields");
    }
    ScoreRecord s;
    s.phrase_id = std::move(f[0]);
    s.tree_type = std::move(f[1]);
    try {
      if (f[2] == "NA") {
        s.zero_vector = true;
      } else {
        s.cosine_score = std::stod(f[2]);
        s.cosine_distance = 1.0 - s.cosine_score;
      }
      s.parent_len = std::stoul(f[3]);
    } catch (const std::exception&) {
      throw FormatError("scores line " + std::to_string(line_no) +
                        ": bad number");
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<ScoreRecord> ReadScoresTsv(const std::filesystem::path& path) {
  std::ifstream in = OpenForRead(path, true);
  return ReadScoresTsv(in);
}

double ControlErrorRatio(const Matrix& predictions, const Matrix& parents,
                         std::uint64_t seed) {
  if (predictions.rows() != parents.rows() ||
      predictions.cols() != parents.cols()) {
    throw DimError("predictions do not match parents");
  }
  const auto n = parents.rows();
  if (n < 2) throw TooSmall("control task needs at least 2 rows");
  Rng rng(seed);
  double probe = 0.0, control = 0.0;
  bool zero = false;
  for (Eigen::Index i = 0; i < n; ++i) {
    probe += 1.0 - RowCosine(predictions, i, parents, i, zero);
    auto j = static_cast<Eigen::Index>(rng.Below(static_cast<std::uint64_t>(n - 1)));
    if (j >= i) ++j;
    control += 1.0 - RowCosine(predictions, i, parents, j, zero);
  }
  if (control == 0.0) throw DegenerateControl("control distance is zero");
  return probe / control;
}

double ControlErrorRatio(const ProbeModel& probe, const TripleMatrix& triples,
                         std::uint64_t seed) {
  return ControlErrorRatio(ApplyProbe(probe, triples.left, triples.right),
                           triples.parent, seed);
}

LearningCurve ComputeLearningCurve(ProbeKind kind, const TripleMatrix& triples,
                                   const TrainConfig& config,
                                   std::span<const double> fractions) {
  config.Validate();
  for (std::size_t i = 1; i < fractions.size(); ++i) {
    if (!(fractions[i] > fractions[i - 1])) {
      throw DomainError("curve fractions must be strictly increasing");
    }
  }
  const FoldSplit split = MakeFolds(triples.rows(), 10, config.seed).front();
  const TripleMatrix test = triples.Subset(split.test);
  const TripleMatrix dev = triples.Subset(split.dev);

  LearningCurve curve;
  curve.probe_kind = kind;
  for (double f : fractions) {
    if (!(f > 0.0 && f <= 1.0)) throw DomainError("curve fraction outside (0, 1]");
    const auto rows = static_cast<std::size_t>(
        std::floor(f * static_cast<double>(split.train.size()) + 1e-9));
    if (rows == 0) {
      curve.skipped_fractions.push_back(f);
      continue;
    }
    ProbeModel probe = ProbeModel::Arithmetic(ProbeKind::kAdd, triples.dim());
    if (IsTrainable(kind)) {
      const TripleMatrix train =
          triples.Subset(std::span<const std::size_t>(split.train).first(rows));
      probe = TrainProbe(kind, train, dev, config);
    } else {
      probe = ProbeModel::Arithmetic(kind, triples.dim());
    }
    curve.fractions.push_back(f);
    curve.test_scores.push_back(
        1.0 - MeanCosineDistance(ApplyProbe(probe, test.left, test.right),
                                 test.parent));
  }
  if (curve.fractions.size() < 2) {
    throw CurveTooShort("fewer than two fractions leave any training rows");
  }
  return curve;
}

double CurveAuc(const LearningCurve& curve) {
  const auto& x = curve.fractions;
  const auto& y = curve.test_scores;
  if (x.size() != y.size()) throw DimError("curve fractions and scores differ");
  if (x.size() < 2) throw CurveTooShort("need at least two curve points");
  // Integrate the deviation from the first score, so a flat curve is exact.
  const double base = y.front();
  double area = 0.0;
  const double range = std::log10(x.back()) - std::log10(x.front());
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    const double dx = std::log10(x[i + 1]) - std::log10(x[i]);
    if (!(dx > 0.0)) throw DomainError("curve fractions must be increasing");
    area += dx * ((y[i] - base) + (y[i + 1] - base)) / 2.0;
  }
  return 100.0 * (base + area / range);
}

}  // namespace compprobe
