#include "cli.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "compprobe/analysis.h"
#include "compprobe/chip.h"
#include "compprobe/embedding_store.h"
#include "compprobe/errors.h"
#include "compprobe/evaluation.h"
#include "compprobe/phrases.h"
#include "compprobe/probes.h"
#include "compprobe/random.h"
#include "compprobe/stats.h"
#include "compprobe/tsv.h"

namespace compprobe::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

const auto kProbeNames = CLI::IsMember({"ADD", "W1", "W2", "LIN", "AFF", "MLP"},
                                       CLI::ignore_case);

std::string Num(double v) {
  if (std::isnan(v)) return "NA";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

std::string Hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void WriteJson(const fs::path& path, const json& j) {
  auto out = OpenForWrite(path);
  out << j.dump(2) << '\n';
}

void EnsureDir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("cannot create directory " + dir.string());
}

// Flags shared by every subcommand that trains probes.
struct TrainFlags {
  std::uint64_t seed = 0;
  std::size_t folds = 10;
  TrainConfig config;

  void Register(CLI::App* app) {
    app->add_option("--seed", seed, "Run seed; stage seeds derive from it")
        ->capture_default_str();
    app->add_option("--folds", folds, "Cross-validation folds")
        ->check(CLI::Range(2, 1000))
        ->capture_default_str();
    app->add_option("--train-frac", config.train_fraction,
                    "Fraction of each training split used")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    app->add_option("--batch-size", config.batch_size)->capture_default_str();
    app->add_option("--lr", config.learning_rate, "Adam learning rate")
        ->capture_default_str();
    app->add_option("--max-epochs", config.max_epochs)->capture_default_str();
    app->add_option("--patience", config.patience)->capture_default_str();
  }

  TrainConfig Resolved() const {
    TrainConfig c = config;
    c.seed = DeriveSeed(seed, "train");
    return c;
  }
};

struct StatFlags {
  std::string p_method = "auto";
  std::string alpha_level = "ordinal";

  void Register(CLI::App* app) {
    app->add_option("--p-method", p_method, "Spearman p-value method")
        ->check(CLI::IsMember({"auto", "asymptotic", "permutation"}))
        ->capture_default_str();
    app->add_option("--alpha-level", alpha_level,
                    "Krippendorff alpha distance metric")
        ->check(CLI::IsMember({"nominal", "ordinal", "interval"}))
        ->capture_default_str();
  }

  SpearmanOptions Spearman(std::uint64_t seed) const {
    SpearmanOptions o;
    o.seed = DeriveSeed(seed, "spearman");
    o.method = p_method == "asymptotic"    ? PValueMethod::kAsymptotic
               : p_method == "permutation" ? PValueMethod::kPermutation
                                           : PValueMethod::kAuto;
    return o;
  }

  AlphaLevel Level() const {
    return alpha_level == "nominal"    ? AlphaLevel::kNominal
           : alpha_level == "interval" ? AlphaLevel::kInterval
                                       : AlphaLevel::kOrdinal;
  }
};

struct Dataset {
  EmbeddingStore store;
  PhraseCatalog catalog;
  AssembledTriples assembled;
};

Dataset LoadDataset(const fs::path& store_path, const PhraseCatalog& catalog,
                    std::ostream& err) {
  EmbeddingStore store = ReadStore(store_path);
  AssembledTriples assembled = AssembleTriples(catalog, store);
  err << "assembled " << assembled.triples.rows() << " triples ("
      << assembled.skipped << " skipped for missing vectors)\n";
  return {std::move(store), catalog, std::move(assembled)};
}

std::string FamilyName(const EmbeddingStore& store) {
  return store.model_id() + "_" + std::string(RepKindName(store.rep_kind()));
}

json CorrelationJson(const CorrelationResult& r) {
  return {{"rho", r.rho}, {"p_raw", r.p_raw}, {"p_adjusted", r.p_adjusted},
          {"n", r.n}};
}

json AccuracyJson(const AccuracyResult& r) {
  return {{"correct", r.correct},
          {"eligible", r.eligible},
          {"skipped", r.skipped},
          {"accuracy", r.accuracy()}};
}

// ---- Analysis reports. Each writes <dir>/<name>.tsv and returns a summary.

json TreeTypesReport(const std::vector<ScoreRecord>& scores, const fs::path& dir) {
  const auto rows = GroupScoresByTreeType(scores);
  auto out = OpenForWrite(dir / "tree_types.tsv");
  out << "tree_type\tmean_distance\tcount\tstddev\n";
  for (const auto& r : rows) {
    out << r.tree_type << '\t' << Num(r.mean_distance) << '\t' << r.count << '\t'
        << Num(r.stddev) << '\n';
  }
  json j = {{"types", rows.size()}};
  if (!rows.empty()) {
    j["least_compositional"] = rows.front().tree_type;
    j["most_compositional"] = rows.back().tree_type;
  }
  return j;
}

json DistributionJson(const ScoreDistribution& d) {
  json j = {{"group", d.group}, {"count", d.count}, {"histogram", d.histogram}};
  j["mean"] = d.count == 0 ? json(nullptr) : json(d.mean);
  return j;
}

json NeReport(const std::vector<ScoreRecord>& scores, const NeLabels& labels,
              const fs::path& dir) {
  const auto split = NeSplit(scores, labels);
  auto out = OpenForWrite(dir / "ne.tsv");
  out << "group\tcount\tmean";
  for (std::size_t b = 0; b < kHistogramBins; ++b) {
    out << "\tbin_" << Num(-1.0 + 0.1 * static_cast<double>(b));
  }
  out << '\n';
  std::vector<const ScoreDistribution*> groups = {&split.entities,
                                                  &split.non_entities};
  for (const auto& d : split.by_type) groups.push_back(&d);
  json by_type = json::array();
  for (const auto* d : groups) {
    out << d->group << '\t' << d->count << '\t'
        << (d->count == 0 ? "NA" : Num(d->mean));
    for (auto c : d->histogram) out << '\t' << c;
    out << '\n';
  }
  for (const auto& d : split.by_type) by_type.push_back(DistributionJson(d));
  return {{"entities", DistributionJson(split.entities)},
          {"non_entities", DistributionJson(split.non_entities)},
          {"by_type", by_type}};
}

json LengthReport(const std::vector<ScoreRecord>& scores,
                  const PhraseCatalog* catalog, const NgramIndex* index,
                  const SpearmanOptions& options, const fs::path& dir) {
  std::vector<FeatureRequest> requests = {{Feature::kWordLength, {}}};
  if (catalog && index) {
    FeatureRequest freq{Feature::kLogFrequency, {}};
    for (const auto& r : catalog->records()) {
      const auto count = index->SurfaceCount(r.parent_text);
      if (count > 0) {
        freq.values[r.phrase_id] = std::log10(static_cast<double>(count));
      }
    }
    requests.push_back(std::move(freq));
  }
  // A feature without a defined correlation is listed as unavailable.
  std::vector<FeatureRequest> usable;
  json missing = json::array();
  for (auto& r : requests) {
    try {
      FeatureCorrelation(scores, r, {PValueMethod::kAsymptotic, 0, 1});
      usable.push_back(std::move(r));
    } catch (const EmptyTest&) {
      missing.push_back(FeatureName(r.feature));
    } catch (const TooSmall&) {
      missing.push_back(FeatureName(r.feature));
    } catch (const UndefinedCorrelation&) {
      missing.push_back(FeatureName(r.feature));
    }
  }
  if (usable.empty()) throw EmptyTest("no feature has a defined correlation");
  const auto results = FeatureCorrelations(scores, usable, options);
  auto out = OpenForWrite(dir / "length.tsv");
  out << "feature\trho\tp_raw\tp_adjusted\tn\n";
  json features = json::object();
  for (std::size_t i = 0; i < usable.size(); ++i) {
    const auto& r = results[i];
    const std::string name(FeatureName(usable[i].feature));
    out << name << '\t' << Num(r.rho) << '\t' << Num(r.p_raw) << '\t'
        << Num(r.p_adjusted) << '\t' << r.n << '\n';
    features[name] = CorrelationJson(r);
  }
  return {{"features", features}, {"unavailable", missing}};
}

json HumanReport(const std::vector<AnnotationRecord>& annotations,
                 const std::vector<ScoreFamily>& families,
                 const SpearmanOptions& options, AlphaLevel level,
                 const fs::path& dir) {
  const auto human = AggregateHuman(annotations);
  const auto results = HumanModelCorrelation(human, families, options);
  auto out = OpenForWrite(dir / "human.tsv");
  out << "family\trho\tp_raw\tp_adjusted\tn\n";
  json j_families = json::object();
  for (const auto& f : results) {
    out << f.family << '\t' << Num(f.result.rho) << '\t' << Num(f.result.p_raw)
        << '\t' << Num(f.result.p_adjusted) << '\t' << f.result.n << '\n';
    j_families[f.family] = CorrelationJson(f.result);
  }
  RatingTable ratings;
  for (const auto& a : annotations) {
    if (a.compositionality) {
      ratings[{a.phrase_id, a.annotator_id}] = *a.compositionality;
    }
  }
  json alpha;
  try {
    alpha = KrippendorffAlpha(ratings, level);
  } catch (const Undefined&) {
    alpha = nullptr;
  }
  return {{"phrases_rated", human.size()},
          {"krippendorff_alpha", alpha},
          {"families", j_families}};
}

json SubphraseReport(const std::vector<AnnotationRecord>& annotations,
                     const EmbeddingStore& store, const PhraseCatalog& catalog,
                     const fs::path& dir) {
  const auto r = SubphraseContributionTest(annotations, store, catalog);
  auto out = OpenForWrite(dir / "subphrase.tsv");
  out << "correct\teligible\tskipped\taccuracy\n"
      << r.correct << '\t' << r.eligible << '\t' << r.skipped << '\t'
      << Num(r.accuracy()) << '\n';
  return AccuracyJson(r);
}

json IdiomReport(const std::vector<AnnotationRecord>& annotations,
                 const std::vector<ScoreRecord>& scores, const fs::path& dir) {
  const auto r = IdiomaticityTest(annotations, scores);
  auto out = OpenForWrite(dir / "idiom.tsv");
  out << "correct\teligible\tskipped\taccuracy\n"
      << r.correct << '\t' << r.eligible << '\t' << r.skipped << '\t'
      << Num(r.accuracy()) << '\n';
  return AccuracyJson(r);
}

NgramIndex LoadIndexLogged(const fs::path& path, std::ostream& err) {
  IndexLoad loaded = LoadIndex(path);
  for (const auto& w : loaded.warnings) err << "warning: " << w << '\n';
  return std::move(loaded.index);
}

std::vector<MatchResult> MatchAll(const std::vector<std::string>& idioms,
                                  const NgramIndex& index, std::size_t k,
                                  const std::set<std::string, std::less<>>& exclusions,
                                  std::ostream& err) {
  std::vector<MatchResult> results;
  for (const auto& idiom : idioms) {
    try {
      results.push_back(MatchIdiom(idiom, index, k, exclusions));
    } catch (const NotFound& e) {
      err << "warning: " << e.what() << '\n';
    } catch (const EmptyMatch& e) {
      err << "warning: " << e.what() << '\n';
    }
  }
  return results;
}

std::vector<std::string> ReadLinesFile(const fs::path& path) {
  auto in = OpenForRead(path);
  return ReadLines(in);
}

// ---- Subcommands.

struct HarvestCmd {
  std::string trees, out;
  std::size_t markov = CnfOptions{}.horizontal_markov;

  void Register(CLI::App& app) {
    auto* c = app.add_subcommand("harvest", "Harvest binary subphrases from bracketed trees");
    c->add_option("--trees", trees, "Directory of bracketed tree files")
        ->required()
        ->check(CLI::ExistingDirectory);
    c->add_option("--out", out, "Catalog TSV to write")->required();
    c->add_option("--markov", markov,
                  "Sibling labels kept in synthetic CNF labels (0 = all)")
        ->capture_default_str();
    c->callback([this] { run = true; });
  }

  int Run(std::ostream&, std::ostream& err) {
    CnfOptions cnf;
    cnf.horizontal_markov = markov;
    const PhraseCatalog catalog = BuildCatalog(HarvestDirectory(trees, cnf));
    auto f = OpenForWrite(out);
    WriteCatalogTsv(catalog, f);
    err << "harvested " << catalog.size() << " unique phrases, "
        << catalog.tree_type_counts().size() << " tree types\n";
    return kExitOk;
  }

  bool run = false;
};

struct VerifyStoreCmd {
  std::string store;

  void Register(CLI::App& app) {
    auto* c = app.add_subcommand("verify-store", "Check an embedding store and print its summary");
    c->add_option("--store", store, "Binary or JSON-lines store")->required();
    c->callback([this] { run = true; });
  }

  int Run(std::ostream& out, std::ostream&) {
    const StoreSummary s = VerifyStore(store);
    out << "format\t" << (s.format == StoreFormat::kBinary ? "binary" : "jsonl")
        << "\nmodel\t" << s.model_id << "\nrep\t" << RepKindName(s.rep_kind)
        << "\ndim\t" << s.dim << "\ncount\t" << s.count << "\nchecksum\t"
        << Hex(s.checksum) << '\n';
    return kExitOk;
  }

  bool run = false;
};

struct TrainCmd {
  std::string probe, store, catalog, out, folds_out;
  TrainFlags flags;

  void Register(CLI::App& app) {
    auto* c = app.add_subcommand("train", "Cross-validate a probe and save the first fold's checkpoint");
    c->add_option("--probe", probe, "ADD, W1, W2, LIN, AFF or MLP")
        ->required()
        ->check(kProbeNames);
    c->add_option("--store", store, "Embedding store")->required();
    c->add_option("--catalog", catalog, "Catalog TSV")->required();
    c->add_option("--out", out, "Checkpoint to write")->required();
    c->add_option("--folds-out", folds_out, "Per-fold results TSV");
    flags.Register(c);
    c->callback([this] { run = true; });
  }

  int Run(std::ostream&, std::ostream& err) {
    const ProbeKind kind = ParseProbeKind(probe);
    const Dataset data = LoadDataset(store, ReadCatalogTsv(fs::path(catalog)), err);
    const TrainConfig cfg = flags.Resolved();
    const auto folds = CrossValidate(kind, data.assembled.triples, cfg, flags.folds);
    WriteProbe({folds.front().probe, cfg}, out);
    double mean = 0.0;
    for (const auto& f : folds) mean += f.test_mean_cosine;
    mean /= static_cast<double>(folds.size());
    if (!folds_out.empty()) {
      auto f = OpenForWrite(folds_out);
      f << "fold\ttest_mean_cosine\tepochs\n";
      for (const auto& r : folds) {
        f << r.fold_index << '\t' << Num(r.test_mean_cosine) << '\t'
          << r.dev_curve.size() << '\n';
      }
    }
    err << ProbeKindName(kind) << ": mean test cosine " << Num(mean) << " over "
        << folds.size() << " folds\n";
    return kExitOk;
  }

  bool run = false;
};

struct EvaluateCmd {
  std::string probe = "AFF", checkpoint, store, catalog, out, summary;
  TrainFlags flags;

  void Register(CLI::App& app) {
    auto* c = app.add_subcommand("evaluate", "Score every phrase and compute the control error ratio");
    auto* p = c->add_option("--probe", probe, "Probe kind to cross-validate")
                  ->check(kProbeNames)
                  ->capture_default_str();
    c->add_option("--checkpoint", checkpoint, "Score with a saved probe instead")
        ->excludes(p);
    c->add_option("--store", store, "Embedding store")->required();
    c->add_option("--catalog", catalog, "Catalog TSV")->required();
    c->add_option("--out", out, "Scores TSV to write")->required();
    c->add_option("--summary", summary, "Summary JSON to write");
    flags.Register(c);
    c->callback([this] { run = true; });
  }

  int Run(std::ostream&, std::ostream& err) {
    const Dataset data = LoadDataset(store, ReadCatalogTsv(fs::path(catalog)), err);
    const TripleMatrix& triples = data.assembled.triples;
    const std::uint64_t control_seed = DeriveSeed(flags.seed, "control");
    json j;
    ProbeModel scorer;
    if (!checkpoint.empty()) {
      scorer = ReadProbe(checkpoint).probe;
      j["checkpoint"] = checkpoint;
      j["error_ratio"] = ControlErrorRatio(scorer, triples, control_seed);
    } else {
      const auto folds =
          CrossValidate(ParseProbeKind(probe), triples, flags.Resolved(), flags.folds);
      scorer = folds.front().probe;
      double mean = 0.0;
      for (const auto& f : folds) mean += f.test_mean_cosine;
      j["mean_test_cosine"] = mean / static_cast<double>(folds.size());
      j["error_ratio"] = ControlErrorRatio(HeldOutPredictions(folds, triples),
                                           triples.parent, control_seed);
    }
    j["probe"] = ProbeKindName(scorer.kind);
    const auto scores = ScorePhrases(scorer, triples);
    auto f = OpenForWrite(out);
    WriteScoresTsv(scores, f);
    const ScoreSummary s = Summarize(scores);
    j["scored"] = s.count;
    j["flagged"] = s.flagged;
    j["mean_score"] = s.mean;
    j["stddev_score"] = s.stddev;
    if (!summary.empty()) WriteJson(summary, j);
    err << "scored " << s.count << " phrases, mean " << Num(s.mean) << " (sd "
        << Num(s.stddev) << "), error ratio " << Num(j["error_ratio"].get<double>())
        << '\n';
    return kExitOk;
  }

  bool run = false;
};

json CurveJson(const LearningCurve& curve) {
  return {{"probe", ProbeKindName(curve.probe_kind)},
          {"fractions", curve.fractions},
          {"test_scores", curve.test_scores},
          {"skipped_fractions", curve.skipped_fractions},
          {"auc", CurveAuc(curve)}};
}

struct MdlCmd {
  std::string probe = "AFF", store, catalog, out;
  std::vector<double> fractions{std::begin(kDefaultCurveFractions),
                                std::end(kDefaultCurveFractions)};
  TrainFlags flags;

  void Register(CLI::App& app) {
    auto* c = app.add_subcommand("mdl", "Learning curve over training fractions and its AUC");
    c->add_option("--probe", probe)->check(kProbeNames)->capture_default_str();
    c->add_option("--store", store, "Embedding store")->required();
    c->add_option("--catalog", catalog, "Catalog TSV")->required();
    c->add_option("--out", out, "Curve JSON to write")->required();
    c->add_option("--fractions", fractions, "Increasing training fractions")
        ->delimiter(',')
        ->capture_default_str();
    flags.Register(c);
    c->callback([this] { run = true; });
  }

  int Run(std::ostream&, std::ostream& err) {
    const Dataset data = LoadDataset(store, ReadCatalogTsv(fs::path(catalog)), err);
    const auto curve = ComputeLearningCurve(ParseProbeKind(probe),
                                            data.assembled.triples,
                                            flags.Resolved(), fractions);
    const json j = CurveJson(curve);
    WriteJson(out, j);
    err << probe << ": AUC " << Num(j["auc"].get<double>()) << '\n';
    return kExitOk;
  }

  bool run = false;
};

struct AnalyzeCmd {
  std::string report, annotations, ne_labels, index, catalog, store, out_dir;
  std::vector<std::string> scores;
  std::uint64_t seed = 0;
  StatFlags stats;

  void Register(CLI::App& app) {
    auto* c = app.add_subcommand("analyze", "Run one analysis report");
    c->add_option("--report", report)
        ->required()
        ->check(CLI::IsMember(
            {"tree-types", "ne", "length", "human", "subphrase", "idiom"}));
    c->add_option("--scores", scores,
                  "Scores TSV; repeat for several families (named by file stem)");
    c->add_option("--annotations", annotations, "Annotation TSV");
    c->add_option("--ne-labels", ne_labels, "Named-entity label TSV");
    c->add_option("--index", index, "Syntactic n-gram index TSV");
    c->add_option("--catalog", catalog, "Catalog TSV");
    c->add_option("--store", store, "Embedding store");
    c->add_option("--out-dir", out_dir, "Directory for <report>.tsv and .json")
        ->required();
    c->add_option("--seed", seed)->capture_default_str();
    stats.Register(c);
    c->callback([this] { run = true; });
  }

  // Missing inputs for the chosen report are usage errors.
  void Require(bool present, const char* flag) const {
    if (!present) {
      throw CLI::RequiredError(std::string(flag) + " is required for --report " +
                               report);
    }
  }

  int Run(std::ostream&, std::ostream& err) {
    const fs::path dir(out_dir);
    auto first_scores = [&] {
      Require(!scores.empty(), "--scores");
      return ReadScoresTsv(fs::path(scores.front()));
    };
    json j;
    if (report == "tree-types") {
      Require(!scores.empty(), "--scores");
      EnsureDir(dir);
      j = TreeTypesReport(first_scores(), dir);
    } else if (report == "ne") {
      Require(!scores.empty(), "--scores");
      Require(!ne_labels.empty(), "--ne-labels");
      EnsureDir(dir);
      j = NeReport(first_scores(), ReadNeLabels(fs::path(ne_labels)), dir);
    } else if (report == "length") {
      Require(!scores.empty(), "--scores");
      Require(index.empty() || !catalog.empty(), "--catalog (with --index)");
      EnsureDir(dir);
      std::optional<PhraseCatalog> cat;
      std::optional<NgramIndex> idx;
      if (!index.empty()) {
        cat = ReadCatalogTsv(fs::path(catalog));
        idx = LoadIndexLogged(index, err);
      }
      j = LengthReport(first_scores(), cat ? &*cat : nullptr, idx ? &*idx : nullptr,
                       stats.Spearman(seed), dir);
    } else if (report == "human") {
      Require(!scores.empty(), "--scores");
      Require(!annotations.empty(), "--annotations");
      EnsureDir(dir);
      std::vector<ScoreFamily> families;
      for (const auto& path : scores) {
        families.push_back({fs::path(path).stem().string(), ReadScoresTsv(fs::path(path))});
      }
      j = HumanReport(ReadAnnotationsTsv(fs::path(annotations)), families,
                      stats.Spearman(seed), stats.Level(), dir);
    } else if (report == "subphrase") {
      Require(!annotations.empty(), "--annotations");
      Require(!store.empty(), "--store");
      Require(!catalog.empty(), "--catalog");
      EnsureDir(dir);
      j = SubphraseReport(ReadAnnotationsTsv(fs::path(annotations)), ReadStore(store),
                          ReadCatalogTsv(fs::path(catalog)), dir);
    } else {
      Require(!scores.empty(), "--scores");
      Require(!annotations.empty(), "--annotations");
      EnsureDir(dir);
      j = IdiomReport(ReadAnnotationsTsv(fs::path(annotations)), first_scores(), dir);
    }
    std::string name = report == "tree-types" ? "tree_types" : report;
    WriteJson(dir / (name + ".json"), j);
    err << "wrote " << (dir / (name + ".tsv")).string() << '\n';
    return kExitOk;
  }

  bool run = false;
};

struct MatchIdiomsCmd {
  std::string idioms, index, exclusions, lemmas, out;
  std::size_t k = 3;

  void Register(CLI::App& app) {
    auto* c = app.add_subcommand("match-idioms", "Find frequency-matched phrases sharing each idiom's pattern");
    c->add_option("--idioms", idioms, "Idiom list, one per line")->required();
    c->add_option("--index", index, "Syntactic n-gram index TSV")->required();
    c->add_option("--exclusions", exclusions, "Surfaces never used as matches");
    c->add_option("--lemmas", lemmas, "word<TAB>lemma map for idiom dedup");
    c->add_option("--k", k, "Matches per idiom")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    c->add_option("--out", out, "Matches TSV to write")->required();
    c->callback([this] { run = true; });
  }

  int Run(std::ostream&, std::ostream& err) {
    auto list = ReadLinesFile(idioms);
    if (!lemmas.empty()) {
      auto in = OpenForRead(lemmas);
      list = DedupByLemma(list, ReadLemmaMap(in));
    }
    std::set<std::string, std::less<>> excluded;
    if (!exclusions.empty()) {
      for (auto& s : ReadLinesFile(exclusions)) excluded.insert(std::move(s));
    }
    const NgramIndex idx = LoadIndexLogged(index, err);
    const auto results = MatchAll(list, idx, k, excluded, err);
    auto f = OpenForWrite(out);
    WriteMatchesTsv(results, f);
    err << "matched " << results.size() << " of " << list.size() << " idioms\n";
    if (results.empty()) throw EmptyMatch("no idiom could be matched");
    return kExitOk;
  }

  bool run = false;
};

struct ReportCmd {
  std::string trees, catalog, store, annotations, ne_labels, index, idioms,
      exclusions, out_dir;
  std::vector<std::string> probes{"ADD", "W1", "W2", "LIN", "AFF", "MLP"};
  std::vector<std::string> curve_probes{"AFF"};
  std::string score_probe = "AFF";
  std::vector<double> fractions{std::begin(kDefaultCurveFractions),
                                std::end(kDefaultCurveFractions)};
  TrainFlags flags;
  StatFlags stats;

  void Register(CLI::App& app) {
    auto* c = app.add_subcommand("report", "Run the whole pipeline into one JSON + TSV bundle");
    auto* t = c->add_option("--trees", trees, "Directory of bracketed tree files")
                  ->check(CLI::ExistingDirectory);
    auto* k = c->add_option("--catalog", catalog, "Existing catalog TSV")->excludes(t);
    c->add_option("--store", store, "Embedding store")->required();
    c->add_option("--annotations", annotations, "Annotation TSV");
    c->add_option("--ne-labels", ne_labels, "Named-entity label TSV");
    c->add_option("--index", index, "Syntactic n-gram index TSV");
    c->add_option("--idioms", idioms, "Idiom list for matching (needs --index)");
    c->add_option("--exclusions", exclusions, "Match exclusion list");
    c->add_option("--probes", probes, "Probes to cross-validate")
        ->delimiter(',')
        ->check(kProbeNames)
        ->capture_default_str();
    c->add_option("--curve-probes", curve_probes, "Probes given a learning curve")
        ->delimiter(',')
        ->check(kProbeNames)
        ->capture_default_str();
    c->add_option("--score-probe", score_probe, "Probe whose first fold scores phrases")
        ->check(kProbeNames)
        ->capture_default_str();
    c->add_option("--fractions", fractions)->delimiter(',')->capture_default_str();
    c->add_option("--out-dir", out_dir, "Bundle directory")->required();
    flags.Register(c);
    stats.Register(c);
    c->callback([this, t, k] {
      if (t->count() + k->count() == 0) {
        throw CLI::RequiredError("--trees or --catalog");
      }
      run = true;
    });
  }

  int Run(std::ostream&, std::ostream& err) {
    const fs::path dir(out_dir);
    EnsureDir(dir);
    PhraseCatalog cat = trees.empty() ? ReadCatalogTsv(fs::path(catalog))
                                      : BuildCatalog(HarvestDirectory(trees));
    {
      auto f = OpenForWrite(dir / "catalog.tsv");
      WriteCatalogTsv(cat, f);
    }
    const Dataset data = LoadDataset(store, cat, err);
    const TripleMatrix& triples = data.assembled.triples;
    const TrainConfig cfg = flags.Resolved();
    const std::uint64_t control_seed = DeriveSeed(flags.seed, "control");
    const SpearmanOptions spearman = stats.Spearman(flags.seed);

    json j;
    j["seed"] = flags.seed;
    j["store"] = {{"model", data.store.model_id()},
                  {"rep", RepKindName(data.store.rep_kind())},
                  {"dim", data.store.dim()},
                  {"count", data.store.size()},
                  {"checksum", Hex(data.store.Checksum())}};
    j["catalog"] = {{"phrases", cat.size()},
                    {"tree_types", cat.tree_type_counts().size()},
                    {"triples", triples.rows()},
                    {"skipped", data.assembled.skipped}};

    const ProbeKind score_kind = ParseProbeKind(score_probe);
    std::optional<ProbeModel> scorer;
    json probe_rows = json::array();
    {
      auto f = OpenForWrite(dir / "probes.tsv");
      f << "probe\tmean_test_cosine\terror_ratio\n";
      for (const auto& name : probes) {
        const ProbeKind kind = ParseProbeKind(name);
        const auto folds = CrossValidate(kind, triples, cfg, flags.folds);
        double mean = 0.0;
        std::vector<double> per_fold;
        for (const auto& r : folds) {
          mean += r.test_mean_cosine;
          per_fold.push_back(r.test_mean_cosine);
        }
        mean /= static_cast<double>(folds.size());
        const double ratio = ControlErrorRatio(HeldOutPredictions(folds, triples),
                                               triples.parent, control_seed);
        if (kind == score_kind) scorer = folds.front().probe;
        f << ProbeKindName(kind) << '\t' << Num(mean) << '\t' << Num(ratio) << '\n';
        probe_rows.push_back({{"probe", ProbeKindName(kind)},
                              {"mean_test_cosine", mean},
                              {"fold_test_cosine", per_fold},
                              {"error_ratio", ratio}});
        err << ProbeKindName(kind) << ": test cosine " << Num(mean)
            << ", error ratio " << Num(ratio) << '\n';
      }
    }
    j["probes"] = probe_rows;

    json curves = json::array();
    for (const auto& name : curve_probes) {
      curves.push_back(CurveJson(
          ComputeLearningCurve(ParseProbeKind(name), triples, cfg, fractions)));
    }
    j["curves"] = curves;

    if (!scorer) {
      const auto split = MakeFolds(triples.rows(), flags.folds, cfg.seed).front();
      scorer = TrainFold(score_kind, triples, split, 0, cfg).probe;
    }
    const auto scores = ScorePhrases(*scorer, triples);
    {
      auto f = OpenForWrite(dir / "scores.tsv");
      WriteScoresTsv(scores, f);
    }
    const ScoreSummary summary = Summarize(scores);
    j["scores"] = {{"probe", ProbeKindName(score_kind)},
                   {"scored", summary.count},
                   {"flagged", summary.flagged},
                   {"mean", summary.mean},
                   {"stddev", summary.stddev}};

    j["tree_types"] = TreeTypesReport(scores, dir);
    std::optional<NgramIndex> idx;
    if (!index.empty()) idx = LoadIndexLogged(index, err);
    j["length"] = LengthReport(scores, &cat, idx ? &*idx : nullptr, spearman, dir);
    if (!ne_labels.empty()) {
      j["ne"] = NeReport(scores, ReadNeLabels(fs::path(ne_labels)), dir);
    }
    if (!annotations.empty()) {
      const auto notes = ReadAnnotationsTsv(fs::path(annotations));
      j["human"] = Guarded([&] {
        return HumanReport(notes, {{FamilyName(data.store), scores}}, spearman,
                           stats.Level(), dir);
      }, err);
      j["subphrase"] = Guarded([&] {
        return SubphraseReport(notes, data.store, cat, dir);
      }, err);
      j["idiom"] = Guarded([&] { return IdiomReport(notes, scores, dir); }, err);
    }
    if (!idioms.empty()) {
      if (!idx) throw CLI::RequiredError("--index (with --idioms)");
      std::set<std::string, std::less<>> excluded;
      if (!exclusions.empty()) {
        for (auto& s : ReadLinesFile(exclusions)) excluded.insert(std::move(s));
      }
      const auto list = ReadLinesFile(idioms);
      const auto results = MatchAll(list, *idx, 3, excluded, err);
      auto f = OpenForWrite(dir / "matches.tsv");
      WriteMatchesTsv(results, f);
      j["chip"] = {{"idioms", list.size()}, {"matched", results.size()}};
    }
    WriteJson(dir / "report.json", j);
    err << "wrote bundle to " << dir.string() << '\n';
    return kExitOk;
  }

  // Analyses whose inputs do not support them are recorded, not fatal.
  template <typename F>
  static json Guarded(F&& f, std::ostream& err) {
    try {
      return f();
    } catch (const EmptyTest& e) {
      err << "warning: " << e.what() << '\n';
      return {{"error", e.what()}};
    } catch (const TooSmall& e) {
      err << "warning: " << e.what() << '\n';
      return {{"error", e.what()}};
    }
  }

  bool run = false;
};

}  // namespace

int Run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Compositionality probing toolkit", "compprobe"};
  app.set_config("--config", "", "TOML file mirroring the flags, one [section] per subcommand");
  app.require_subcommand(1);
  app.fallthrough(false);

  HarvestCmd harvest;
  VerifyStoreCmd verify;
  TrainCmd train;
  EvaluateCmd evaluate;
  MdlCmd mdl;
  AnalyzeCmd analyze;
  MatchIdiomsCmd match;
  ReportCmd report;
  harvest.Register(app);
  verify.Register(app);
  train.Register(app);
  evaluate.Register(app);
  mdl.Register(app);
  analyze.Register(app);
  match.Register(app);
  report.Register(app);

  auto usage = [&](const CLI::Error& e) {
    err << "usage error: " << e.what() << "\n\n";
    const auto parsed = app.get_subcommands();
    err << (parsed.empty() ? app.help() : parsed.front()->help());
    return kExitUsage;
  };

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    const auto parsed = app.get_subcommands();
    out << (parsed.empty() ? app.help() : parsed.front()->help());
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << "compprobe 1.0.0\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    return usage(e);
  }

  try {
    if (harvest.run) return harvest.Run(out, err);
    if (verify.run) return verify.Run(out, err);
    if (train.run) return train.Run(out, err);
    if (evaluate.run) return evaluate.Run(out, err);
    if (mdl.run) return mdl.Run(out, err);
    if (analyze.run) return analyze.Run(out, err);
    if (match.run) return match.Run(out, err);
    if (report.run) return report.Run(out, err);
  } catch (const CLI::Error& e) {
    return usage(e);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace compprobe::cli
