// One PASS/FAIL line per acceptance criterion; exit status 1 if any fail.

#include <Eigen/Cholesky>
#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>

#include "cli.h"
#include "compprobe/analysis.h"
#include "compprobe/chip.h"
#include "compprobe/errors.h"
#include "compprobe/evaluation.h"
#include "compprobe/probes.h"
#include "compprobe/stats.h"
#include "compprobe/tree.h"
#include "oracles.h"
#include "test_util.h"

using namespace compprobe;
using namespace compprobe::testing;
namespace fs = std::filesystem;

namespace {

constexpr double kRecoveryCosine = 0.999;
constexpr double kCoefficientTolerance = 0.1;
constexpr double kRecoverySeconds = 60.0;
constexpr double kOrderingMargin = 0.01;
constexpr std::size_t kMinCnfCases = 500;
constexpr double kOracleTolerance = 1e-9;
constexpr int kOracleInstances = 200;
constexpr double kPermutationSigmas = 3.0;
constexpr double kControlTolerance = 0.05;
constexpr double kPipelineSeconds = 120.0;

struct Verdict {
  bool pass = true;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double Seconds(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string Fmt(const char* format, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, format, a, b, c, d);
  return buf;
}

// Least-squares α1, α2 and β for parent ≈ α1·left + α2·right + β, solved in
// closed form after centering each column (which eliminates β).
struct AffineFit {
  double a1 = 0, a2 = 0;
  Eigen::VectorXd beta;
};

AffineFit OracleAffine(const TripleMatrix& t) {
  const Eigen::MatrixXd x = t.parent.cast<double>();
  const Eigen::MatrixXd a = t.left.cast<double>();
  const Eigen::MatrixXd b = t.right.cast<double>();
  const Eigen::RowVectorXd mx = x.colwise().mean(), ma = a.colwise().mean(),
                           mb = b.colwise().mean();
  const Eigen::MatrixXd xc = x.rowwise() - mx, ac = a.rowwise() - ma,
                        bc = b.rowwise() - mb;
  Eigen::Matrix2d lhs;
  lhs << ac.cwiseProduct(ac).sum(), ac.cwiseProduct(bc).sum(),
      ac.cwiseProduct(bc).sum(), bc.cwiseProduct(bc).sum();
  const Eigen::Vector2d rhs(ac.cwiseProduct(xc).sum(), bc.cwiseProduct(xc).sum());
  const Eigen::Vector2d alpha = lhs.ldlt().solve(rhs);
  AffineFit fit;
  fit.a1 = alpha[0];
  fit.a2 = alpha[1];
  fit.beta = (mx - alpha[0] * ma - alpha[1] * mb).transpose();
  return fit;
}

double MeanTestCosine(const std::vector<FoldResult>& folds) {
  double sum = 0;
  for (const auto& f : folds) sum += f.test_mean_cosine;
  return sum / static_cast<double>(folds.size());
}

Verdict AffineRecovery() {
  const auto start = Clock::now();
  Rng rng(2024);
  Vector beta(32);
  for (auto& v : beta) v = static_cast<float>(rng.Normal());
  const auto triples = AffineTriples(2000, 32, 3, 5, beta, 7, 0.05);
  // Default step size, batch and epoch cap, but patience spans the whole
  // budget: at lr 0.512 the dev loss rises for two epochs before it settles,
  // which stops the default run early. That run is reported alongside.
  TrainConfig config;
  config.seed = DeriveSeed(1, "train");
  const double default_cos = MeanTestCosine(CrossValidate(ProbeKind::kAff, triples, config));
  config.patience = config.max_epochs;

  const auto aff = CrossValidate(ProbeKind::kAff, triples, config);
  const auto lin = CrossValidate(ProbeKind::kLin, triples, config);
  const double aff_cos = MeanTestCosine(aff), lin_cos = MeanTestCosine(lin);

  const ProbeModel& p = aff.front().probe;
  const AffineFit oracle = OracleAffine(triples.Subset(aff.front().split.train));
  const double da1 = std::abs(p.alpha1 - oracle.a1);
  const double da2 = std::abs(p.alpha2 - oracle.a2);
  const double dbeta = (p.beta.cast<double>() - oracle.beta).cwiseAbs().maxCoeff();
  const double secs = Seconds(start);

  Verdict v;
  v.pass = aff_cos >= kRecoveryCosine && da1 <= kCoefficientTolerance &&
           da2 <= kCoefficientTolerance && dbeta <= kCoefficientTolerance &&
           lin_cos < aff_cos && secs < kRecoverySeconds;
  v.detail = Fmt("AFF cos %.6f, LIN cos %.6f, alpha (%.4f, %.4f)", aff_cos, lin_cos,
                 p.alpha1, p.alpha2) +
             Fmt(" vs oracle (%.4f, %.4f), max|dbeta| %.4f, %.1fs", oracle.a1, oracle.a2,
                 dbeta, secs) +
             Fmt("; patience %.0f (AFF cos %.6f at patience 2)", config.patience, default_cos);
  return v;
}

Verdict ProbeOrdering() {
  // Anisotropic children; the parent leans on the right child.
  Rng rng(99);
  const std::size_t n = 2000, d = 32;
  Vector cone(d);
  for (auto& v : cone) v = static_cast<float>(rng.Normal());
  Matrix left = GaussianMatrix(rng, n, d);
  Matrix right = GaussianMatrix(rng, n, d);
  left.rowwise() += cone.transpose();
  right.rowwise() += cone.transpose();
  Matrix parent = 0.3f * left + 0.9f * right + GaussianMatrix(rng, n, d, 0.6);
  const auto triples = MakeTriples(parent, left, right);
  TrainConfig config;
  config.seed = DeriveSeed(3, "train");
  const std::uint64_t control = DeriveSeed(3, "control");

  auto ratio = [&](ProbeKind kind) {
    const auto folds = CrossValidate(kind, triples, config);
    return ControlErrorRatio(HeldOutPredictions(folds, triples), triples.parent, control);
  };
  const double aff = ratio(ProbeKind::kAff), w2 = ratio(ProbeKind::kW2),
               w1 = ratio(ProbeKind::kW1);
  Verdict v;
  v.pass = aff <= w2 && w1 - w2 > kOrderingMargin;
  v.detail = Fmt("error ratios AFF %.4f, W2 %.4f, W1 %.4f", aff, w2, w1);
  return v;
}

Verdict CnfSuite() {
  Rng rng(20240917);
  std::size_t cases = 0, failures = 0;
  while (cases < kMinCnfCases) {
    const ConstituencyTree t = RandomTree(rng, 8);
    for (std::size_t window : {0u, 1u, 2u, 3u}) {
      const BinaryTree b = ToCnfRightFactored(t, {window});
      if (Yield(b) != Yield(t) || !(CollapseCnf(b) == t)) ++failures;
    }
    ++cases;
  }
  const auto b = ToCnfRightFactored(ParseBracketed("(S (NP-SBJ (PRP He)) (VP (VBD left)) (. .))"));
  const std::string label = b.right().label;
  Verdict v;
  v.pass = failures == 0 && label == "S|<VP-.>";
  v.detail = std::to_string(cases) + " trees x 4 windows, " + std::to_string(failures) +
             " failures; (S NP-SBJ VP .) right child " + label;
  return v;
}

Verdict StatsOracles() {
  Rng rng(5);
  double spearman_err = 0, holm_err = 0, alpha_err = 0;
  for (int k = 0; k < kOracleInstances;) {
    const std::size_t n = 3 + rng.Below(20);
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = static_cast<double>(rng.Below(5));
      y[i] = rng.Uniform() < 0.5 ? static_cast<double>(rng.Below(3)) : rng.Normal();
    }
    SpearmanOptions o;
    o.method = PValueMethod::kAsymptotic;
    try {
      spearman_err = std::max(spearman_err, std::abs(Spearman(x, y, o).rho - OracleSpearman(x, y)));
      ++k;
    } catch (const UndefinedCorrelation&) {
    }
  }
  for (int k = 0; k < kOracleInstances; ++k) {
    std::vector<double> p(1 + rng.Below(10));
    for (auto& v : p) v = rng.Uniform() * rng.Uniform();
    const auto got = HolmBonferroni(p), want = OracleHolm(p);
    for (std::size_t i = 0; i < p.size(); ++i) {
      holm_err = std::max(holm_err, std::abs(got[i] - want[i]));
    }
  }
  const std::vector<std::string> annotators = {"a", "b", "c"};
  for (int k = 0; k < kOracleInstances;) {
    std::vector<std::vector<double>> units(2 + rng.Below(8));
    std::vector<std::string> names;
    for (auto& u : units) {
      names.push_back("u" + std::to_string(names.size()));
      for (std::size_t m = 1 + rng.Below(3); m > 0; --m) {
        u.push_back(static_cast<double>(1 + rng.Below(3)));
      }
    }
    try {
      const double got = KrippendorffAlpha(ToTable(units, names, annotators));
      alpha_err = std::max(alpha_err, std::abs(got - OracleOrdinalAlpha(units)));
      ++k;
    } catch (const Undefined&) {
    }
  }

  // Permutation p against an independent Monte Carlo shuffle.
  std::mt19937 oracle_rng(77);
  double worst_sigmas = 0;
  for (std::size_t n : {7u, 10u, 15u}) {
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = rng.Normal();
      y[i] = 0.5 * x[i] + rng.Normal();
    }
    SpearmanOptions o;
    o.method = PValueMethod::kPermutation;
    o.seed = 11;
    const auto r = Spearman(x, y, o);
    const int draws = 100000;
    int hits = 0;
    auto shuffled = y;
    for (int k = 0; k < draws; ++k) {
      std::shuffle(shuffled.begin(), shuffled.end(), oracle_rng);
      hits += std::abs(OracleSpearman(x, shuffled)) >= std::abs(r.rho) - 1e-12;
    }
    const double p = static_cast<double>(hits) / draws;
    const double sigma =
        std::sqrt(std::max(p * (1 - p), 1e-4) * (1.0 / draws + 1.0 / o.permutations));
    worst_sigmas = std::max(worst_sigmas, std::abs(r.p_raw - p) / sigma);
  }

  Verdict v;
  v.pass = spearman_err <= kOracleTolerance && holm_err <= kOracleTolerance &&
           alpha_err <= kOracleTolerance && worst_sigmas <= kPermutationSigmas;
  v.detail = Fmt("max |err| spearman %.2g, holm %.2g, alpha %.2g; permutation p within %.2f sigma",
                 spearman_err, holm_err, alpha_err, worst_sigmas);
  return v;
}

Verdict AucExactness() {
  LearningCurve c;
  c.fractions.assign(std::begin(kDefaultCurveFractions), std::end(kDefaultCurveFractions));
  bool constant_ok = true;
  for (double level : {0.0, 0.37, 0.95, 1.0}) {
    c.test_scores.assign(c.fractions.size(), level);
    constant_ok = constant_ok && CurveAuc(c) == 100.0 * level;
  }
  LearningCurve two;
  two.fractions = {0.01, 1.0};
  two.test_scores = {0.8, 1.0};
  const double auc = CurveAuc(two);
  Verdict v;
  v.pass = constant_ok && std::abs(auc - 90.0) <= 1e-12;
  v.detail = std::string("constant curves exact: ") + (constant_ok ? "yes" : "no") +
             Fmt("; two-point AUC %.15g", auc);
  return v;
}

Verdict ControlCalibration() {
  Rng rng(6);
  const std::size_t n = 5000, d = 24;
  Vector cone(d);
  for (auto& v : cone) v = static_cast<float>(2.0 + rng.Normal());
  Matrix parents = GaussianMatrix(rng, n, d, 0.7);
  Matrix guesses = GaussianMatrix(rng, n, d, 0.7);
  parents.rowwise() += cone.transpose();
  guesses.rowwise() += cone.transpose();
  const double raw = 1.0 - MeanCosineDistance(guesses, parents);
  const double ratio = ControlErrorRatio(guesses, parents, DeriveSeed(6, "control"));
  Verdict v;
  v.pass = std::abs(ratio - 1.0) <= kControlTolerance;
  v.detail = Fmt("random predictions: raw cosine %.4f, error ratio %.4f", raw, ratio);
  return v;
}

Verdict AnnotationAccuracies() {
  auto rating = [](const std::string& id, const std::string& who, int comp, int l, int r,
                   bool idiom = false, const std::string& pair = "") {
    return AnnotationRecord{id, who, comp, l, r, idiom, pair};
  };
  auto angle = [](double deg) {
    const double rad = deg * 3.141592653589793 / 180.0;
    return std::vector<float>{static_cast<float>(std::cos(rad)),
                              static_cast<float>(std::sin(rad))};
  };
  // Ten phrases for the contribution test: (left mean, right mean) come
  // from two annotators; child vectors sit at the given angles from the
  // parent. Hand count: nine eligible (s4 ties in humans), five correct.
  struct Plant {
    int l0, l1, r0, r1;
    double left_deg, right_deg;
  };
  const Plant plants[] = {
      {3, 3, 1, 1, 10, 80},    // correct
      {3, 2, 1, 2, 60, 20},    // wrong
      {1, 1, 3, 3, 70, 5},     // correct
      {1, 2, 3, 3, 5, 70},     // wrong
      {2, 2, 2, 2, 5, 70},     // not eligible
      {3, 3, 1, 1, 30, 30},    // distance tie, wrong
      {2, 3, 1, 1, 0, 45},     // correct
      {1, 1, 2, 2, 90, 40},    // correct
      {3, 3, 1, 2, 20, 50},    // correct
      {1, 1, 3, 2, 100, 170},  // wrong
  };
  std::vector<AnnotationRecord> ann;
  std::vector<PhraseRecord> phrases;
  EmbeddingStore store("toy", RepKind::kAvg, 2);
  for (std::size_t i = 0; i < std::size(plants); ++i) {
    PhraseRecord r;
    r.left_text = "l" + std::to_string(i);
    r.right_text = "r" + std::to_string(i);
    r.parent_text = r.left_text + " " + r.right_text;
    r.tree_type = "NP → JJ NN";
    r.parent_len = 2;
    r.left_len = r.right_len = 1;
    r.phrase_id = PhraseId(r.parent_text, r.left_text, r.right_text, r.tree_type);
    store.Add(TextKey(r.parent_text), angle(0), r.parent_text);
    store.Add(TextKey(r.left_text), angle(plants[i].left_deg), r.left_text);
    store.Add(TextKey(r.right_text), angle(plants[i].right_deg), r.right_text);
    ann.push_back(rating(r.phrase_id, "x", 2, plants[i].l0, plants[i].r0));
    ann.push_back(rating(r.phrase_id, "y", 2, plants[i].l1, plants[i].r1));
    phrases.push_back(std::move(r));
  }
  // Ten phrases in five idiom/match pairs. Hand count: four eligible (p3
  // has the idiom rated more compositional), two correct.
  struct Pair {
    int idiom_a, idiom_b, match_a, match_b;
    double idiom_score, match_score;
  };
  const Pair pairs[] = {
      {1, 1, 3, 3, 0.2, 0.9},  // correct
      {1, 2, 2, 3, 0.6, 0.4},  // wrong
      {1, 1, 2, 2, 0.5, 0.5},  // score tie, wrong
      {3, 3, 2, 2, 0.1, 0.8},  // not eligible
      {1, 1, 3, 3, 0.1, 0.3},  // correct
  };
  std::vector<AnnotationRecord> idiom_ann;
  std::vector<ScoreRecord> scores;
  for (std::size_t k = 0; k < std::size(pairs); ++k) {
    const std::string pair = "pair" + std::to_string(k);
    const std::string idiom = "idiom" + std::to_string(k), match = "match" + std::to_string(k);
    idiom_ann.push_back(rating(idiom, "x", pairs[k].idiom_a, 2, 2, true, pair));
    idiom_ann.push_back(rating(idiom, "y", pairs[k].idiom_b, 2, 2, true, pair));
    idiom_ann.push_back(rating(match, "x", pairs[k].match_a, 2, 2, false, pair));
    idiom_ann.push_back(rating(match, "y", pairs[k].match_b, 2, 2, false, pair));
    scores.push_back({idiom, "T", pairs[k].idiom_score, 1 - pairs[k].idiom_score, 2, false});
    scores.push_back({match, "T", pairs[k].match_score, 1 - pairs[k].match_score, 2, false});
  }

  const auto sub = SubphraseContributionTest(ann, store, BuildCatalog(phrases));
  const auto idi = IdiomaticityTest(idiom_ann, scores);
  Verdict v;
  v.pass = sub.eligible == 9 && sub.correct == 5 && sub.accuracy() == 5.0 / 9.0 &&
           idi.eligible == 4 && idi.correct == 2 && idi.accuracy() == 0.5;
  v.detail = "subphrase " + std::to_string(sub.correct) + "/" + std::to_string(sub.eligible) +
             " (hand 5/9), idiom " + std::to_string(idi.correct) + "/" +
             std::to_string(idi.eligible) + " (hand 2/4)";
  return v;
}

Verdict ChipGolden() {
  std::stringstream index(
      "devil's advocate\tJJ/dep/2 NN/pobj/0\t250\n"
      "baker's town\tJJ/dep/2 NN/pobj/0\t250\n"
      "act of darkness\tNN/dobj/0 IN/prep/1 NN/pobj/2\t20137\n"
      "abandonment of institution\tNN/dobj/0 IN/prep/1 NN/pobj/2\t20137\n"
      "school of hard knocks\tNN/pobj/0 IN/prep/1 JJ/amod/4 NNS/pobj/2\t4897788\n"
      "field of social studies\tNN/pobj/0 IN/prep/1 JJ/amod/4 NNS/pobj/2\t4897788\n"
      "green field\tJJ/dep/2 NN/pobj/0\t900\n");
  const auto loaded = LoadIndex(index);
  const auto r = MatchIdiom("devil's advocate", loaded.index);
  const bool first = !r.matches.empty() && r.matches[0].surface == "baker's town";
  const double log_freq = std::round(r.log_freq * 1000) / 1000;
  Verdict v;
  v.pass = first && r.pattern == "JJ/dep/2 NN/pobj/0" && log_freq == 2.398 &&
           r.matches[0].log_freq == r.log_freq;
  v.detail = "first match '" + (r.matches.empty() ? std::string() : r.matches[0].surface) +
             "', pattern '" + r.pattern + "'" + Fmt(", log freq %.3f", r.log_freq);
  return v;
}

Verdict EndToEndDeterminism() {
  const auto start = Clock::now();
  TempDir dir("acceptance");
  fs::create_directories(dir / "trees");
  WriteText(dir / "trees" / "wsj_0001.mrg", ToyTreebank(50, 2718));
  const PhraseCatalog catalog = BuildCatalog(HarvestDirectory(dir / "trees"));
  const EmbeddingStore s = SyntheticStore(catalog, 16, 31);
  std::vector<EmbeddingRecord> records;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto v = s.Get(s.key(i));
    records.push_back({s.key(i), s.text(i), s.model_id(), s.rep_kind(), {v.begin(), v.end()}});
  }
  WriteStore(records, dir / "store.bin");

  auto run = [&](const std::string& name) {
    const std::string trees = (dir / "trees").string(), store = (dir / "store.bin").string(),
                      out = (dir / name).string();
    const char* argv[] = {"compprobe", "report", "--trees", trees.c_str(), "--store",
                          store.c_str(), "--seed", "42", "--out-dir", out.c_str()};
    std::ostringstream o, e;
    return cli::Run(static_cast<int>(std::size(argv)), argv, o, e);
  };
  const int first = run("a"), second = run("b");
  std::size_t files = 0, identical = 0;
  if (first == 0 && second == 0) {
    for (const auto& entry : fs::directory_iterator(dir / "a")) {
      ++files;
      const auto other = dir / "b" / entry.path().filename();
      identical += fs::exists(other) && ReadText(entry.path()) == ReadText(other);
    }
  }
  const double secs = Seconds(start);
  Verdict v;
  v.pass = first == 0 && second == 0 && files > 0 && identical == files &&
           secs < kPipelineSeconds;
  v.detail = std::to_string(catalog.size()) + " phrases, all six probes; " +
             std::to_string(identical) + "/" + std::to_string(files) +
             " bundle files identical" + Fmt(", %.1fs for both runs", secs);
  return v;
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Verdict()>> criteria[] = {
      {"synthetic affine recovery", AffineRecovery},
      {"probe ordering", ProbeOrdering},
      {"CNF suite", CnfSuite},
      {"statistics oracles", StatsOracles},
      {"AUC exactness", AucExactness},
      {"control-ratio calibration", ControlCalibration},
      {"subphrase and idiomaticity hand counts", AnnotationAccuracies},
      {"CHIP matcher golden", ChipGolden},
      {"end-to-end determinism", EndToEndDeterminism},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Verdict v;
    try {
      v = check();
    } catch (const std::exception& e) {
      v = {false, std::string("threw: ") + e.what()};
    }
    failed += !v.pass;
    std::printf("%s  %s: %s\n", v.pass ? "PASS" : "FAIL", name, v.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(std::size(criteria)) - failed,
              std::size(criteria));
  return failed == 0 ? 0 : 1;
}
