#ifndef COMPPROBE_ANALYSIS_H_
#define COMPPROBE_ANALYSIS_H_

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "compprobe/embedding_store.h"
#include "compprobe/evaluation.h"
#include "compprobe/phrases.h"
#include "compprobe/stats.h"

namespace compprobe {

// One annotator's judgments of one phrase. Missing optionals are declined
// answers (NA in the TSV).
struct AnnotationRecord {
  std::string phrase_id;
  std::string annotator_id;
  std::optional<int> compositionality;  // 1 not, 2 somewhat, 3 fully
  std::optional<int> left_contrib;      // 1..3
  std::optional<int> right_contrib;     // 1..3
  bool is_idiom = false;
  std::string pair_id;
};

// Header: phrase_id annotator_id comp left_contrib right_contrib is_idiom
// pair_id. Throws FormatError on malformed rows or ratings outside 1..3.
std::vector<AnnotationRecord> ReadAnnotationsTsv(std::istream& in);
std::vector<AnnotationRecord> ReadAnnotationsTsv(
    const std::filesystem::path& path);

struct TreeTypeRow {
  std::string tree_type;
  double mean_distance = 0.0;
  std::size_t count = 0;
  double stddev = 0.0;  // population
};

// Sorted by mean distance, largest first; ties by tree type. Flagged rows
// are ignored. Throws EmptyDataset if nothing is left.
std::vector<TreeTypeRow> GroupScoresByTreeType(
    const std::vector<ScoreRecord>& scores);

// Mean compositionality per phrase over non-declined ratings; phrases with
// no valid rating are dropped.
std::map<std::string, double> AggregateHuman(
    const std::vector<AnnotationRecord>& annotations);

struct ScoreFamily {
  std::string name;  // e.g. "roberta_CLS"
  std::vector<ScoreRecord> scores;
};

struct FamilyCorrelation {
  std::string family;
  CorrelationResult result;
};

// Spearman between human means and model scores per family over the
// phrases both cover, Holm-adjusted across families. Throws TooSmall when a
// family overlaps the human set in fewer than 3 phrases.
std::vector<FamilyCorrelation> HumanModelCorrelation(
    const std::map<std::string, double>& human,
    const std::vector<ScoreFamily>& families,
    const SpearmanOptions& options = {});

struct AccuracyResult {
  std::size_t correct = 0;
  std::size_t eligible = 0;
  std::size_t skipped = 0;  // otherwise eligible, but missing model data

  double accuracy() const {
    return eligible == 0 ? 0.0
                         : static_cast<double>(correct) /
                               static_cast<double>(eligible);
  }
};

// Phrases whose mean left and right contribution ratings differ; correct
// when the side rated higher is the child with the smaller cosine distance
// to the parent vector. Distance ties are incorrect. Annotator rows with a
// declined compositionality rating are excluded. Throws EmptyTest if no
// phrase is eligible.
AccuracyResult SubphraseContributionTest(
    const std::vector<AnnotationRecord>& annotations,
    const EmbeddingStore& store, const PhraseCatalog& catalog);

// (idiom, match) pairs sharing a pair id where humans rate the idiom
// strictly less compositional; correct when the model also scores it lower.
// Ties are incorrect. Throws EmptyTest if no pair is eligible.
AccuracyResult IdiomaticityTest(
    const std::vector<AnnotationRecord>& annotations,
    const std::vector<ScoreRecord>& scores);

enum class Feature { kWordLength, kLogFrequency };

std::string_view FeatureName(Feature feature);

struct FeatureRequest {
  Feature feature;
  // phrase_id -> value. Word length falls back to ScoreRecord::parent_len
  // when a phrase is absent.
  std::map<std::string, double> values;
};

// Spearman of feature against cosine score. Throws EmptyTest when no phrase
// has the feature.
CorrelationResult FeatureCorrelation(const std::vector<ScoreRecord>& scores,
                                     const FeatureRequest& request,
                                     const SpearmanOptions& options = {});

// One correlation per request, Holm-adjusted across the batch.
std::vector<CorrelationResult> FeatureCorrelations(
    const std::vector<ScoreRecord>& scores,
    const std::vector<FeatureRequest>& requests,
    const SpearmanOptions& options = {});

inline constexpr std::size_t kHistogramBins = 20;  // width 0.1 over [-1, 1]

struct ScoreDistribution {
  std::string group;
  std::size_t count = 0;
  double mean = 0.0;
  std::vector<std::size_t> histogram = std::vector<std::size_t>(kHistogramBins);
};

struct NeSplitResult {
  ScoreDistribution entities{"NE"};
  ScoreDistribution non_entities{"non-NE"};
  std::vector<ScoreDistribution> by_type;  // sorted by type name
};

// phrase_id -> entity type; nullopt or absent means not an entity.
using NeLabels = std::map<std::string, std::optional<std::string>>;

NeLabels ReadNeLabels(std::istream& in);
NeLabels ReadNeLabels(const std::filesystem::path& path);

NeSplitResult NeSplit(const std::vector<ScoreRecord>& scores,
                      const NeLabels& labels);

}  // namespace compprobe

#endif  // COMPPROBE_ANALYSIS_H_
