#ifndef COMPPROBE_EMBEDDING_STORE_H_
#define COMPPROBE_EMBEDDING_STORE_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "compprobe/phrases.h"

namespace compprobe {

// Row-major so that one phrase's vector is contiguous.
using Matrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic,
                             Eigen::RowMajor>;
using Vector = Eigen::VectorXf;

enum class RepKind { kCls, kLast, kAvg };

std::string_view RepKindName(RepKind kind);
RepKind ParseRepKind(std::string_view name);  // FormatError if unknown

struct EmbeddingRecord {
  std::string phrase_id;  // TextKey(text) for standalone phrase embeddings
  std::string text;
  std::string model_id;
  RepKind rep_kind = RepKind::kCls;
  std::vector<float> vector;
};

enum class StoreFormat { kBinary, kJsonLines };

// In-memory store for one (model, representation kind). Keys are unique and
// every vector has the store dimension.
class EmbeddingStore {
 public:
  EmbeddingStore(std::string model_id, RepKind rep_kind, std::size_t dim);

  // Throws DimError on a wrong length or non-finite entry, DuplicateError on
  // a repeated key.
  void Add(std::string key, std::span<const float> vector,
           std::string text = {});

  // nullptr when absent.
  const float* Find(std::string_view key) const;
  // Throws NotFound when absent.
  std::span<const float> Get(std::string_view key) const;

  const std::string& model_id() const { return model_id_; }
  RepKind rep_kind() const { return rep_kind_; }
  std::size_t dim() const { return dim_; }
  std::size_t size() const { return keys_.size(); }
  const std::string& key(std::size_t i) const { return keys_[i]; }
  const std::string& text(std::size_t i) const { return texts_[i]; }
  std::span<const float> vector(std::size_t i) const {
    return {data_.data() + i * dim_, dim_};
  }

  // FNV-1a over keys and little-endian float bytes in record order; equal
  // for the same content in either file format.
  std::uint64_t Checksum() const;

 private:
  std::string model_id_;
  RepKind rep_kind_;
  std::size_t dim_;
  std::vector<std::string> keys_;
  std::vector<std::string> texts_;
  std::vector<float> data_;
  std::unordered_map<std::string, std::size_t> index_;
};

// All records must share dimension, model and representation kind.
EmbeddingStore MakeStore(const std::vector<EmbeddingRecord>& records);

void WriteStore(const std::vector<EmbeddingRecord>& records,
                const std::filesystem::path& path,
                StoreFormat format = StoreFormat::kBinary);
void WriteStore(const EmbeddingStore& store, const std::filesystem::path& path,
                StoreFormat format = StoreFormat::kBinary);

// Detects the format from the leading magic bytes.
EmbeddingStore ReadStore(const std::filesystem::path& path);

struct StoreSummary {
  StoreFormat format;
  std::string model_id;
  RepKind rep_kind;
  std::size_t dim;
  std::size_t count;
  std::uint64_t checksum;
};

StoreSummary VerifyStore(const std::filesystem::path& path);

// Aligned (parent, left, right) vectors; row i of each matrix belongs to
// phrase_ids[i].
struct TripleMatrix {
  Matrix parent;
  Matrix left;
  Matrix right;
  std::vector<std::string> phrase_ids;
  std::vector<std::string> tree_types;
  std::vector<std::size_t> parent_lens;

  std::size_t rows() const { return phrase_ids.size(); }
  std::size_t dim() const { return static_cast<std::size_t>(parent.cols()); }

  TripleMatrix Subset(std::span<const std::size_t> rows) const;
};

struct AssembledTriples {
  TripleMatrix triples;
  std::size_t skipped = 0;
};

// Looks up TextKey(text) for the three texts of every record; records with
// any vector missing are skipped and counted. Throws EmptyDataset if
// nothing remains.
AssembledTriples AssembleTriples(const PhraseCatalog& catalog,
                                 const EmbeddingStore& store);

}  // namespace compprobe

#endif  // COMPPROBE_EMBEDDING_STORE_H_
