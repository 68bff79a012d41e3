#include "compprobe/analysis.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "compprobe/errors.h"
#include "compprobe/tsv.h"

namespace compprobe {
namespace {

constexpr std::string_view kAnnotationsHeader =
    "phrase_id\tannotator_id\tcomp\tleft_contrib\tright_contrib\tis_idiom\tpair_id";
constexpr std::string_view kNeHeader = "phrase_id\tentity_type";

bool IsNa(const std::string& field) { return field == "NA" || field.empty(); }

std::optional<int> ParseRating(const std::string& field, std::size_t line_no) {
  if (IsNa(field)) return std::nullopt;
  if (field.size() == 1 && field[0] >= '1' && field[0] <= '3') {
    return field[0] - '0';
  }
  throw FormatError("annotations line " + std::to_string(line_no) +
                    ": rating must be 1, 2, 3 or NA, got '" + field + "'");
}

bool ParseBool(const std::string& field, std::size_t line_no) {
  if (field == "1" || field == "true" || field == "True") return true;
  if (field == "0" || field == "false" || field == "False" || IsNa(field)) {
    return false;
  }
  throw FormatError("annotations line " + std::to_string(line_no) +
                    ": bad is_idiom value '" + field + "'");
}

double Mean(const std::vector<double>& xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

std::size_t HistogramBin(double score) {
  const double clamped = std::clamp(score, -1.0, 1.0);
  const auto bin = static_cast<std::size_t>(
      std::floor((clamped + 1.0) / 2.0 * static_cast<double>(kHistogramBins)));
  return std::min(bin, kHistogramBins - 1);
}

void AddToDistribution(ScoreDistribution& d, double score) {
  // mean holds the running sum until FinishDistribution.
  ++d.count;
  d.mean += score;
  ++d.histogram[HistogramBin(score)];
}

void FinishDistribution(ScoreDistribution& d) {
  if (d.count > 0) d.mean /= static_cast<double>(d.count);
}

}  // namespace

std::vector<AnnotationRecord> ReadAnnotationsTsv(std::istream& in) {
  std::string line;
  if (!ReadLine(in, line) || line != kAnnotationsHeader) {
    throw FormatError("annotations: missing or unexpected header");
  }
  std::vector<AnnotationRecord> out;
  std::size_t line_no = 1;
  while (ReadLine(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto f = SplitTabs(line);
    if (f.size() == 6) f.emplace_back();  // trailing empty pair_id
    if (f.size() != 7) {
      throw FormatError("annotations line " + std::to_string(line_no) +
                        ": expected 7 fields");
    }
    AnnotationRecord r;
    r.phrase_id = std::move(f[0]);
    r.annotator_id = std::move(f[1]);
    r.compositionality = ParseRating(f[2], line_no);
    r.left_contrib = ParseRating(f[3], line_no);
    r.right_contrib = ParseRating(f[4], line_no);
    r.is_idiom = ParseBool(f[5], line_no);
    r.pair_id = IsNa(f[6]) ? std::string() : std::move(f[6]);
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<AnnotationRecord> ReadAnnotationsTsv(
    const std::filesystem::path& path) {
  std::ifstream in = OpenForRead(path, true);
  return ReadAnnotationsTsv(in);
}

std::vector<TreeTypeRow> GroupScoresByTreeType(
    const std::vector<ScoreRecord>& scores) {
  std::map<std::string, std::vector<double>> groups;
  for (const auto& s : scores) {
    if (!s.zero_vector) groups[s.tree_type].push_back(s.cosine_distance);
  }
  if (groups.empty()) throw EmptyDataset("no scored phrases to group");
  std::vector<TreeTypeRow> rows;
  rows.reserve(groups.size());
  for (const auto& [type, distances] : groups) {
    TreeTypeRow row;
    row.tree_type = type;
    row.count = distances.size();
    row.mean_distance = Mean(distances);
    double ss = 0.0;
    for (double d : distances) ss += (d - row.mean_distance) * (d - row.mean_distance);
    row.stddev = std::sqrt(ss / static_cast<double>(row.count));
    rows.push_back(std::move(row));
  }
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    return a.mean_distance > b.mean_distance;
  });
  return rows;
}

std::map<std::string, double> AggregateHuman(
    const std::vector<AnnotationRecord>& annotations) {
  std::map<std::string, std::vector<double>> ratings;
  for (const auto& a : annotations) {
    if (a.compositionality) ratings[a.phrase_id].push_back(*a.compositionality);
  }
  std::map<std::string, double> out;
  for (const auto& [id, values] : ratings) out[id] = Mean(values);
  return out;
}

std::vector<FamilyCorrelation> HumanModelCorrelation(
    const std::map<std::string, double>& human,
    const std::vector<ScoreFamily>& families, const SpearmanOptions& options) {
  std::vector<FamilyCorrelation> out;
  std::vector<CorrelationResult> results;
  for (const auto& family : families) {
    std::vector<double> xs, ys;
    std::set<std::string> seen;
    for (const auto& s : family.scores) {
      if (s.zero_vector || !seen.insert(s.phrase_id).second) continue;
      auto it = human.find(s.phrase_id);
      if (it == human.end()) continue;
      xs.push_back(it->second);
      ys.push_back(s.cosine_score);
    }
    if (xs.size() < 3) {
      throw TooSmall("family " + family.name + " overlaps human judgments in " +
                     std::to_string(xs.size()) + " phrases; need 3");
    }
    out.push_back({family.name, Spearman(xs, ys, options)});
    results.push_back(out.back().result);
  }
  AdjustHolm(results);
  for (std::size_t i = 0; i < out.size(); ++i) out[i].result = results[i];
  return out;
}

AccuracyResult SubphraseContributionTest(
    const std::vector<AnnotationRecord>& annotations,
    const EmbeddingStore& store, const PhraseCatalog& catalog) {
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> sides;
  for (const auto& a : annotations) {
    if (!a.compositionality) continue;
    auto& [left, right] = sides[a.phrase_id];
    if (a.left_contrib) left.push_back(*a.left_contrib);
    if (a.right_contrib) right.push_back(*a.right_contrib);
  }
  AccuracyResult result;
  for (const auto& [id, lr] : sides) {
    const auto& [left, right] = lr;
    if (left.empty() || right.empty()) continue;
    const double ml = Mean(left), mr = Mean(right);
    if (ml == mr) continue;
    const PhraseRecord* phrase = catalog.Find(id);
    const auto* x = phrase ? store.Find(TextKey(phrase->parent_text)) : nullptr;
    const auto* a = phrase ? store.Find(TextKey(phrase->left_text)) : nullptr;
    const auto* b = phrase ? store.Find(TextKey(phrase->right_text)) : nullptr;
    if (!x || !a || !b) {
      ++result.skipped;
      continue;
    }
    const std::size_t dim = store.dim();
    double d_left = 0.0, d_right = 0.0;
    try {
      d_left = 1.0 - CosineSimilarity({x, dim}, {a, dim});
      d_right = 1.0 - CosineSimilarity({x, dim}, {b, dim});
    } catch (const ZeroVector&) {
      ++result.skipped;
      continue;
    }
    ++result.eligible;
    if ((ml > mr && d_left < d_right) || (mr > ml && d_right < d_left)) {
      ++result.correct;
    }
  }
  if (result.eligible == 0) throw EmptyTest("no phrase eligible for the contribution test");
  return result;
}

AccuracyResult IdiomaticityTest(
    const std::vector<AnnotationRecord>& annotations,
    const std::vector<ScoreRecord>& scores) {
  const auto human = AggregateHuman(annotations);
  std::map<std::string, double> model;
  for (const auto& s : scores) {
    if (!s.zero_vector) model.emplace(s.phrase_id, s.cosine_score);
  }
  // pair_id -> (idioms, matches)
  std::map<std::string, std::pair<std::set<std::string>, std::set<std::string>>> pairs;
  for (const auto& a : annotations) {
    if (a.pair_id.empty()) continue;
    auto& [idioms, matches] = pairs[a.pair_id];
    (a.is_idiom ? idioms : matches).insert(a.phrase_id);
  }
  AccuracyResult result;
  for (const auto& [pair_id, group] : pairs) {
    for (const auto& idiom : group.first) {
      for (const auto& match : group.second) {
        const auto hi = human.find(idiom), hm = human.find(match);
        if (hi == human.end() || hm == human.end()) continue;
        if (!(hi->second < hm->second)) continue;
        const auto si = model.find(idiom), sm = model.find(match);
        if (si == model.end() || sm == model.end()) {
          ++result.skipped;
          continue;
        }
        ++result.eligible;
        if (si->second < sm->second) ++result.correct;
      }
    }
  }
  if (result.eligible == 0) throw EmptyTest("no idiom pair eligible for the idiomaticity test");
  return result;
}

std::string_view FeatureName(Feature feature) {
  return feature == Feature::kWordLength ? "word_length" : "log_frequency";
}

CorrelationResult FeatureCorrelation(const std::vector<ScoreRecord>& scores,
                                     const FeatureRequest& request,
                                     const SpearmanOptions& options) {
  std::vector<double> xs, ys;
  for (const auto& s : scores) {
    if (s.zero_vector) continue;
    auto it = request.values.find(s.phrase_id);
    if (it != request.values.end()) {
      xs.push_back(it->second);
    } else if (request.feature == Feature::kWordLength && s.parent_len > 0) {
      xs.push_back(static_cast<double>(s.parent_len));
    } else {
      continue;
    }
    ys.push_back(s.cosine_score);
  }
  if (xs.empty()) {
    throw EmptyTest("no phrase has feature " + std::string(FeatureName(request.feature)));
  }
  return Spearman(xs, ys, options);
}

std::vector<CorrelationResult> FeatureCorrelations(
    const std::vector<ScoreRecord>& scores,
    const std::vector<FeatureRequest>& requests,
    const SpearmanOptions& options) {
  std::vector<CorrelationResult> out;
  out.reserve(requests.size());
  for (const auto& r : requests) out.push_back(FeatureCorrelation(scores, r, options));
  AdjustHolm(out);
  return out;
}

NeLabels ReadNeLabels(std::istream& in) {
  std::string line;
  if (!ReadLine(in, line) || line != kNeHeader) {
    throw FormatError("ne labels: missing or unexpected header");
  }
  NeLabels out;
  std::size_t line_no = 1;
  while (ReadLine(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto f = SplitTabs(line);
    if (f.size() == 1) f.emplace_back();
    if (f.size() != 2 || f[0].empty()) {
      throw FormatError("ne labels line " + std::to_string(line_no) +
                        ": expected 2 fields");
    }
    if (IsNa(f[1])) {
      out[f[0]] = std::nullopt;
    } else {
      out[f[0]] = f[1];
    }
  }
  return out;
}

NeLabels ReadNeLabels(const std::filesystem::path& path) {
  std::ifstream in = OpenForRead(path, true);
  return ReadNeLabels(in);
}

NeSplitResult NeSplit(const std::vector<ScoreRecord>& scores,
                      const NeLabels& labels) {
  NeSplitResult result;
  std::map<std::string, ScoreDistribution> by_type;
  for (const auto& s : scores) {
    if (s.zero_vector) continue;
    auto it = labels.find(s.phrase_id);
    if (it == labels.end() || !it->second) {
      AddToDistribution(result.non_entities, s.cosine_score);
      continue;
    }
    AddToDistribution(result.entities, s.cosine_score);
    auto& d = by_type[*it->second];
    d.group = *it->second;
    AddToDistribution(d, s.cosine_score);
  }
  FinishDistribution(result.entities);
  FinishDistribution(result.non_entities);
  for (auto& [type, d] : by_type) {
    FinishDistribution(d);
    result.by_type.push_back(std::move(d));
  }
  return result;
}

}  // namespace compprobe
