#ifndef COMPPROBE_TESTS_TEST_UTIL_H_
#define COMPPROBE_TESTS_TEST_UTIL_H_

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "compprobe/embedding_store.h"
#include "compprobe/phrases.h"
#include "compprobe/random.h"
#include "compprobe/tree.h"

namespace compprobe::testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    Rng rng(Fnv1a64(tag) ^ reinterpret_cast<std::uintptr_t>(this));
    path_ = std::filesystem::temp_directory_path() /
            ("compprobe-" + tag + "-" + std::to_string(rng.Next()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const {
    return path_ / name;
  }

 private:
  std::filesystem::path path_;
};

inline void WriteText(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

inline std::string ReadText(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

inline Matrix GaussianMatrix(Rng& rng, std::size_t rows, std::size_t cols,
                             double scale = 1.0) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      m(i, j) = static_cast<float>(scale * rng.Normal());
    }
  }
  return m;
}

inline TripleMatrix MakeTriples(Matrix parent, Matrix left, Matrix right) {
  TripleMatrix t;
  const auto n = static_cast<std::size_t>(parent.rows());
  t.parent = std::move(parent);
  t.left = std::move(left);
  t.right = std::move(right);
  for (std::size_t i = 0; i < n; ++i) {
    t.phrase_ids.push_back("p" + std::to_string(i));
    t.tree_types.push_back(i % 2 ? "NP → DT NN" : "VP → VB NP");
    t.parent_lens.push_back(2 + i % 5);
  }
  return t;
}

// parent = a1·left + a2·right + beta (+ Gaussian noise), children N(0, 1).
inline TripleMatrix AffineTriples(std::size_t n, std::size_t d, float a1,
                                  float a2, const Vector& beta,
                                  std::uint64_t seed, double noise = 0.0) {
  Rng rng(seed);
  Matrix left = GaussianMatrix(rng, n, d);
  Matrix right = GaussianMatrix(rng, n, d);
  Matrix parent = a1 * left + a2 * right;
  parent.rowwise() += beta.transpose();
  if (noise > 0.0) parent += GaussianMatrix(rng, n, d, noise);
  return MakeTriples(std::move(parent), std::move(left), std::move(right));
}

// Store with one vector per text in the catalog. Words get seeded Gaussian
// vectors; each phrase is 0.3·left + 0.7·right + a shared offset + noise,
// built bottom-up so children precede parents.
inline EmbeddingStore SyntheticStore(const PhraseCatalog& catalog,
                                     std::size_t dim, std::uint64_t seed,
                                     std::string model = "toy-encoder",
                                     RepKind rep = RepKind::kAvg) {
  std::vector<const PhraseRecord*> order;
  for (const auto& r : catalog.records()) order.push_back(&r);
  std::stable_sort(order.begin(), order.end(), [](const auto* a, const auto* b) {
    return a->parent_len < b->parent_len;
  });
  Rng offset_rng(DeriveSeed(seed, "offset"));
  Vector offset(dim);
  for (auto& v : offset) v = static_cast<float>(offset_rng.Normal());

  std::map<std::string, Vector> vectors;
  auto word_or_known = [&](const std::string& text) -> const Vector& {
    auto it = vectors.find(text);
    if (it != vectors.end()) return it->second;
    Rng rng(DeriveSeed(seed, text));
    Vector v(dim);
    for (auto& x : v) x = static_cast<float>(rng.Normal());
    return vectors.emplace(text, std::move(v)).first->second;
  };
  for (const auto* r : order) {
    if (vectors.count(r->parent_text)) continue;
    const Vector a = word_or_known(r->left_text);
    const Vector b = word_or_known(r->right_text);
    Rng noise(DeriveSeed(seed, "noise:" + r->parent_text));
    Vector p = 0.3f * a + 0.7f * b + offset;
    for (auto& x : p) x += static_cast<float>(0.2 * noise.Normal());
    vectors.emplace(r->parent_text, std::move(p));
  }
  EmbeddingStore store(std::move(model), rep, dim);
  for (const auto& [text, v] : vectors) {
    store.Add(TextKey(text), std::span<const float>(v.data(), dim), text);
  }
  return store;
}

// Random n-ary tree with between 1 and max_leaves leaves and fan-out up to 4.
inline ConstituencyTree RandomTree(Rng& rng, std::size_t max_leaves,
                                   std::size_t depth = 0) {
  static const char* kPhrase[] = {"S", "NP", "VP", "PP", "NP-SBJ", "ADJP", "SBAR"};
  static const char* kTag[] = {"DT", "NN", "VB", "JJ", "IN", "NNP", ".", ","};
  static const char* kWord[] = {"the", "cat", "sat", "on", "a", "mat", "green",
                                "eggs", "and", "ham", "ran", "fast"};
  if (max_leaves == 1 || depth > 4 || rng.Uniform() < 0.25) {
    return {kTag[rng.Below(8)], kWord[rng.Below(12)], {}};
  }
  ConstituencyTree node{kPhrase[rng.Below(7)], std::nullopt, {}};
  std::size_t budget = max_leaves;
  const std::size_t kids = 1 + rng.Below(std::min<std::size_t>(4, budget));
  for (std::size_t k = 0; k < kids && budget > 0; ++k) {
    const std::size_t remaining_kids = kids - k - 1;
    const std::size_t cap = budget > remaining_kids ? budget - remaining_kids : 1;
    const std::size_t share = 1 + rng.Below(cap);
    node.children.push_back(RandomTree(rng, share, depth + 1));
    budget -= std::min(budget, Yield(node.children.back()).size());
  }
  return node;
}

// `count` PTB-style trees, one per line, each wrapped in "( ... )".
inline std::string ToyTreebank(std::size_t count, std::uint64_t seed) {
  Rng rng(seed);
  std::string out;
  for (std::size_t i = 0; i < count; ++i) {
    ConstituencyTree t = RandomTree(rng, 8);
    if (t.is_preterminal()) t = {"S", std::nullopt, {t, {".", ".", {}}}};
    out += "( " + ToBracketed(t) + " )\n";
  }
  return out;
}

}  // namespace compprobe::testing

#endif  // COMPPROBE_TESTS_TEST_UTIL_H_
