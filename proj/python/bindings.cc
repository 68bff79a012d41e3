#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "compprobe/chip.h"
#include "compprobe/embedding_store.h"
#include "compprobe/errors.h"
#include "compprobe/evaluation.h"
#include "compprobe/phrases.h"
#include "compprobe/probes.h"
#include "compprobe/stats.h"
#include "compprobe/tree.h"

namespace py = pybind11;
using namespace compprobe;
using namespace pybind11::literals;

namespace {

// Row i of the three matrices is one triple; ids are synthetic ("r<i>").
TripleMatrix Triples(Matrix parent, Matrix left, Matrix right) {
  if (parent.rows() != left.rows() || parent.rows() != right.rows() ||
      parent.cols() != left.cols() || parent.cols() != right.cols()) {
    throw DimError("parent, left and right must have the same shape");
  }
  TripleMatrix t;
  const auto n = static_cast<std::size_t>(parent.rows());
  t.parent = std::move(parent);
  t.left = std::move(left);
  t.right = std::move(right);
  for (std::size_t i = 0; i < n; ++i) {
    t.phrase_ids.push_back("r" + std::to_string(i));
    t.tree_types.emplace_back();
    t.parent_lens.push_back(0);
  }
  return t;
}

TrainConfig Config(std::size_t batch_size, double learning_rate, std::size_t max_epochs,
                   std::size_t patience, std::uint64_t seed, double train_fraction) {
  TrainConfig c;
  c.batch_size = batch_size;
  c.learning_rate = learning_rate;
  c.max_epochs = max_epochs;
  c.patience = patience;
  c.seed = seed;
  c.train_fraction = train_fraction;
  c.Validate();
  return c;
}

StoreFormat ParseFormat(const std::string& name) {
  if (name == "binary") return StoreFormat::kBinary;
  if (name == "jsonl") return StoreFormat::kJsonLines;
  throw FormatError("unknown store format '" + name + "' (binary or jsonl)");
}

std::string_view FormatName(StoreFormat f) {
  return f == StoreFormat::kBinary ? "binary" : "jsonl";
}

PValueMethod ParseMethod(const std::string& name) {
  if (name == "auto") return PValueMethod::kAuto;
  if (name == "asymptotic") return PValueMethod::kAsymptotic;
  if (name == "permutation") return PValueMethod::kPermutation;
  throw FormatError("unknown p-value method '" + name + "'");
}

AlphaLevel ParseLevel(const std::string& name) {
  if (name == "nominal") return AlphaLevel::kNominal;
  if (name == "ordinal") return AlphaLevel::kOrdinal;
  if (name == "interval") return AlphaLevel::kInterval;
  throw FormatError("unknown measurement level '" + name + "'");
}

py::dict CorrelationDict(const CorrelationResult& r) {
  return py::dict("rho"_a = r.rho, "p_raw"_a = r.p_raw, "p_adjusted"_a = r.p_adjusted,
                  "n"_a = r.n);
}

}  // namespace

PYBIND11_MODULE(_compprobe, m) {
  auto error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
#define COMPPROBE_ERROR(Name) py::register_exception<Name>(m, #Name, error)
  COMPPROBE_ERROR(ParseError);
  COMPPROBE_ERROR(FormatError);
  COMPPROBE_ERROR(DimError);
  COMPPROBE_ERROR(DuplicateError);
  COMPPROBE_ERROR(NotFound);
  COMPPROBE_ERROR(EmptyDataset);
  COMPPROBE_ERROR(NotTrainable);
  COMPPROBE_ERROR(TooSmall);
  COMPPROBE_ERROR(ZeroVector);
  COMPPROBE_ERROR(DegenerateControl);
  COMPPROBE_ERROR(CurveTooShort);
  COMPPROBE_ERROR(UndefinedCorrelation);
  COMPPROBE_ERROR(DomainError);
  COMPPROBE_ERROR(Undefined);
  COMPPROBE_ERROR(EmptyTest);
  COMPPROBE_ERROR(EmptyIndex);
  COMPPROBE_ERROR(EmptyMatch);
#undef COMPPROBE_ERROR

  // Trees.
  py::class_<ConstituencyTree>(m, "ConstituencyTree")
      .def_readonly("label", &ConstituencyTree::label)
      .def_readonly("leaf", &ConstituencyTree::leaf)
      .def_readonly("children", &ConstituencyTree::children)
      .def("__eq__", [](const ConstituencyTree& a, const ConstituencyTree& b) { return a == b; })
      .def("__str__", [](const ConstituencyTree& t) { return ToBracketed(t); })
      .def("yield_", [](const ConstituencyTree& t) { return Yield(t); });
  py::class_<BinaryTree>(m, "BinaryTree")
      .def_readonly("label", &BinaryTree::label)
      .def_readonly("leaf", &BinaryTree::leaf)
      .def_readonly("children", &BinaryTree::children)
      .def("__eq__", [](const BinaryTree& a, const BinaryTree& b) { return a == b; })
      .def("__str__", [](const BinaryTree& t) { return ToBracketed(t); })
      .def("yield_", [](const BinaryTree& t) { return Yield(t); });

  m.def("parse_tree", [](const std::string& text) { return ParseBracketed(text); });
  m.def("parse_trees", [](const std::string& text) { return ParseBracketedAll(text); });
  m.def(
      "to_cnf",
      [](const ConstituencyTree& t, std::size_t horizontal_markov) {
        return ToCnfRightFactored(t, {horizontal_markov});
      },
      "tree"_a, "horizontal_markov"_a = 2);
  m.def("collapse_cnf", &CollapseCnf);

  // Phrases.
  py::class_<PhraseRecord>(m, "PhraseRecord")
      .def_readonly("phrase_id", &PhraseRecord::phrase_id)
      .def_readonly("parent_text", &PhraseRecord::parent_text)
      .def_readonly("left_text", &PhraseRecord::left_text)
      .def_readonly("right_text", &PhraseRecord::right_text)
      .def_readonly("tree_type", &PhraseRecord::tree_type)
      .def_readonly("parent_len", &PhraseRecord::parent_len)
      .def_readonly("left_len", &PhraseRecord::left_len)
      .def_readonly("right_len", &PhraseRecord::right_len)
      .def_readonly("source_doc", &PhraseRecord::source_doc);

  m.def("phrase_id", &PhraseId, "parent_text"_a, "left_text"_a, "right_text"_a, "tree_type"_a);
  m.def("text_key", &TextKey);
  m.def(
      "harvest",
      [](const std::string& text, const std::string& source, std::size_t horizontal_markov) {
        std::vector<PhraseRecord> out;
        const auto trees = ParseBracketedAll(text);
        for (std::size_t i = 0; i < trees.size(); ++i) {
          for (auto& r : HarvestSubphrases(ToCnfRightFactored(trees[i], {horizontal_markov}),
                                           source + "#" + std::to_string(i + 1))) {
            out.push_back(std::move(r));
          }
        }
        return out;
      },
      "text"_a, "source"_a = "input", "horizontal_markov"_a = 2);
  m.def(
      "harvest_directory",
      [](const std::filesystem::path& dir, std::size_t horizontal_markov) {
        return HarvestDirectory(dir, {horizontal_markov});
      },
      "dir"_a, "horizontal_markov"_a = 2);

  // Embedding stores.
  py::class_<EmbeddingStore>(m, "EmbeddingStore")
      .def_property_readonly("model_id", &EmbeddingStore::model_id)
      .def_property_readonly("rep_kind",
                             [](const EmbeddingStore& s) { return RepKindName(s.rep_kind()); })
      .def_property_readonly("dim", &EmbeddingStore::dim)
      .def("__len__", &EmbeddingStore::size)
      .def("__contains__",
           [](const EmbeddingStore& s, const std::string& k) { return s.Find(k) != nullptr; })
      .def("keys",
           [](const EmbeddingStore& s) {
             std::vector<std::string> keys;
             for (std::size_t i = 0; i < s.size(); ++i) keys.push_back(s.key(i));
             return keys;
           })
      .def("get", [](const EmbeddingStore& s, const std::string& key) {
        const auto v = s.Get(key);
        return Vector(Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())));
      });

  m.def("read_store", &ReadStore);
  m.def("verify_store", [](const std::filesystem::path& path) {
    const StoreSummary s = VerifyStore(path);
    return py::dict("format"_a = FormatName(s.format), "model_id"_a = s.model_id,
                    "rep_kind"_a = RepKindName(s.rep_kind), "dim"_a = s.dim,
                    "count"_a = s.count, "checksum"_a = s.checksum);
  });
  m.def(
      "write_store",
      [](const std::filesystem::path& path, const std::vector<std::string>& texts,
         const Matrix& vectors, const std::string& model_id, const std::string& rep_kind,
         const std::string& format) {
        if (static_cast<std::size_t>(vectors.rows()) != texts.size()) {
          throw DimError("one vector row per text is required");
        }
        std::vector<EmbeddingRecord> records;
        for (std::size_t i = 0; i < texts.size(); ++i) {
          const auto row = vectors.row(static_cast<Eigen::Index>(i));
          records.push_back({TextKey(texts[i]), texts[i], model_id, ParseRepKind(rep_kind),
                             {row.data(), row.data() + row.size()}});
        }
        WriteStore(records, path, ParseFormat(format));
      },
      "path"_a, "texts"_a, "vectors"_a, "model_id"_a, "rep_kind"_a = "CLS",
      "format"_a = "binary");

  // Probes.
  py::class_<ProbeModel>(m, "ProbeModel")
      .def_property_readonly("kind", [](const ProbeModel& p) { return ProbeKindName(p.kind); })
      .def_readonly("dim", &ProbeModel::dim)
      .def_readonly("alpha1", &ProbeModel::alpha1)
      .def_readonly("alpha2", &ProbeModel::alpha2)
      .def_readonly("beta", &ProbeModel::beta)
      .def_static("arithmetic",
                  [](const std::string& kind, std::size_t dim) {
                    return ProbeModel::Arithmetic(ParseProbeKind(kind), dim);
                  })
      .def_static("linear", &ProbeModel::Linear)
      .def_static("affine", &ProbeModel::Affine)
      .def("__eq__", [](const ProbeModel& a, const ProbeModel& b) { return a == b; });

  const auto config_args = [] {
    const TrainConfig d;
    return std::make_tuple(py::arg("batch_size") = d.batch_size,
                           py::arg("learning_rate") = d.learning_rate,
                           py::arg("max_epochs") = d.max_epochs,
                           py::arg("patience") = d.patience, py::arg("seed") = d.seed,
                           py::arg("train_fraction") = d.train_fraction);
  };
  const auto [a_bs, a_lr, a_ep, a_pat, a_seed, a_frac] = config_args();

  m.def(
      "train_probe",
      [](const std::string& kind, Matrix parent, Matrix left, Matrix right,
         Matrix dev_parent, Matrix dev_left, Matrix dev_right, std::size_t batch_size,
         double learning_rate, std::size_t max_epochs, std::size_t patience,
         std::uint64_t seed, double train_fraction) {
        const auto train = Triples(std::move(parent), std::move(left), std::move(right));
        const auto dev =
            Triples(std::move(dev_parent), std::move(dev_left), std::move(dev_right));
        const auto c = Config(batch_size, learning_rate, max_epochs, patience, seed,
                              train_fraction);
        py::gil_scoped_release release;
        return TrainProbe(ParseProbeKind(kind), train, dev, c);
      },
      "kind"_a, "parent"_a, "left"_a, "right"_a, "dev_parent"_a, "dev_left"_a,
      "dev_right"_a, a_bs, a_lr, a_ep, a_pat, a_seed, a_frac);
  m.def("apply_probe", [](const ProbeModel& p, const Matrix& left, const Matrix& right) {
    return ApplyProbe(p, left, right);
  });
  m.def(
      "cross_validate",
      [](const std::string& kind, Matrix parent, Matrix left, Matrix right,
         std::size_t folds, std::size_t batch_size, double learning_rate,
         std::size_t max_epochs, std::size_t patience, std::uint64_t seed,
         double train_fraction) {
        const auto t = Triples(std::move(parent), std::move(left), std::move(right));
        const auto c = Config(batch_size, learning_rate, max_epochs, patience, seed,
                              train_fraction);
        std::vector<FoldResult> results;
        Matrix held_out;
        {
          py::gil_scoped_release release;
          results = CrossValidate(ParseProbeKind(kind), t, c, folds);
          held_out = HeldOutPredictions(results, t);
        }
        py::list out;
        for (const auto& f : results) {
          out.append(py::dict("fold_index"_a = f.fold_index, "probe"_a = f.probe,
                              "test_mean_cosine"_a = f.test_mean_cosine,
                              "dev_curve"_a = f.dev_curve));
        }
        return py::make_tuple(out, held_out);
      },
      "kind"_a, "parent"_a, "left"_a, "right"_a, "folds"_a = 10, a_bs, a_lr, a_ep, a_pat,
      a_seed, a_frac);
  m.def("mean_cosine_distance", &MeanCosineDistance, "predictions"_a, "targets"_a);
  m.def(
      "control_error_ratio",
      [](const Matrix& predictions, const Matrix& parents, std::uint64_t seed) {
        return ControlErrorRatio(predictions, parents, seed);
      },
      "predictions"_a, "parents"_a, "seed"_a = 0);
  m.def("curve_auc", [](std::vector<double> fractions, std::vector<double> scores) {
    LearningCurve c;
    c.fractions = std::move(fractions);
    c.test_scores = std::move(scores);
    return CurveAuc(c);
  });
  m.def("write_probe", [](const ProbeModel& p, const std::filesystem::path& path) {
    WriteProbe({p, TrainConfig{}}, path);
  });
  m.def("read_probe",
        [](const std::filesystem::path& path) { return ReadProbe(path).probe; });

  // Statistics.
  m.def(
      "spearman",
      [](const std::vector<double>& xs, const std::vector<double>& ys,
         const std::string& method, std::uint64_t seed, std::size_t permutations) {
        SpearmanOptions o;
        o.method = ParseMethod(method);
        o.seed = seed;
        o.permutations = permutations;
        return CorrelationDict(Spearman(xs, ys, o));
      },
      "xs"_a, "ys"_a, "method"_a = "auto", "seed"_a = 0,
      "permutations"_a = SpearmanOptions{}.permutations);
  m.def("holm_bonferroni",
        [](const std::vector<double>& p) { return HolmBonferroni(p); });
  m.def(
      "krippendorff_alpha",
      [](const RatingTable& ratings, const std::string& level) {
        return KrippendorffAlpha(ratings, ParseLevel(level));
      },
      "ratings"_a, "level"_a = "ordinal");

  // Idiom matching.
  py::class_<NgramIndex>(m, "NgramIndex")
      .def("__len__", &NgramIndex::size)
      .def("surface_count", &NgramIndex::SurfaceCount);
  m.def("load_index", [](const std::filesystem::path& path) {
    IndexLoad load = LoadIndex(path);
    return py::make_tuple(std::move(load.index), load.warnings);
  });
  m.def(
      "match_idiom",
      [](const std::string& idiom, const NgramIndex& index, std::size_t k,
         const std::set<std::string, std::less<>>& exclusions) {
        const MatchResult r = MatchIdiom(idiom, index, k, exclusions);
        py::list matches;
        for (const auto& x : r.matches) {
          matches.append(py::dict("surface"_a = x.surface, "delta"_a = x.delta,
                                  "log_freq"_a = x.log_freq));
        }
        return py::dict("idiom"_a = r.idiom, "pattern"_a = r.pattern,
                        "log_freq"_a = r.log_freq, "matches"_a = matches);
      },
      "idiom"_a, "index"_a, "k"_a = 3,
      "exclusions"_a = std::set<std::string, std::less<>>{});
}
