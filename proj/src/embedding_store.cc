#include "compprobe/embedding_store.h"

#include <bit>
#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>

#include <nlohmann/json.hpp>

#include "compprobe/errors.h"
#include "compprobe/random.h"
#include "compprobe/tsv.h"
#include "bytes.h"

namespace compprobe {
namespace {

constexpr char kMagic[4] = {'C', 'T', 'E', '1'};

using bytes::PutFloat;
using bytes::PutString;
using bytes::PutU32;

std::string EncodeBinary(const EmbeddingStore& store) {
  if (store.size() > std::numeric_limits<std::uint32_t>::max()) {
    throw FormatError("too many records for binary store");
  }
  std::string out(kMagic, 4);
  PutU32(out, static_cast<std::uint32_t>(store.dim()));
  PutU32(out, static_cast<std::uint32_t>(store.size()));
  PutString(out, store.model_id());
  PutString(out, RepKindName(store.rep_kind()));
  for (std::size_t i = 0; i < store.size(); ++i) {
    PutString(out, store.key(i));
    for (float f : store.vector(i)) PutFloat(out, f);
  }
  return out;
}

EmbeddingStore DecodeBinary(std::string_view data) {
  bytes::Reader in(data.substr(4));
  const std::uint32_t dim = in.U32("dim");
  const std::uint32_t count = in.U32("count");
  std::string model = in.String("model id");
  const RepKind rep = ParseRepKind(in.String("rep kind"));
  if (dim == 0) throw FormatError("store header has zero dimension");
  if (count > 0 && std::uint64_t{dim} * 4 > in.remaining()) {
    throw FormatError("store header dimension exceeds file size");
  }
  EmbeddingStore store(std::move(model), rep, dim);
  std::vector<float> v(dim);
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string key = in.String("phrase id");
    for (auto& f : v) f = in.Float("vector");
    store.Add(std::move(key), v);
  }
  if (!in.done()) throw FormatError("trailing bytes after last store record");
  return store;
}

std::string EncodeJsonLines(const EmbeddingStore& store) {
  std::string out;
  for (std::size_t i = 0; i < store.size(); ++i) {
    nlohmann::json row;
    row["id"] = store.key(i);
    row["text"] = store.text(i);
    row["model"] = store.model_id();
    row["rep"] = RepKindName(store.rep_kind());
    auto& vec = row["vector"] = nlohmann::json::array();
    // double holds every float exactly, and the serializer round-trips it.
    for (float f : store.vector(i)) vec.push_back(static_cast<double>(f));
    out += row.dump();
    out += '\n';
  }
  return out;
}

EmbeddingStore DecodeJsonLines(std::string_view data) {
  std::istringstream in{std::string(data)};
  std::string line;
  std::optional<EmbeddingStore> store;
  std::size_t line_no = 0;
  std::vector<float> v;
  while (ReadLine(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json row;
    try {
      row = nlohmann::json::parse(line);
      const auto rep = ParseRepKind(row.at("rep").get<std::string>());
      const auto& vec = row.at("vector");
      if (!vec.is_array()) throw FormatError("vector is not an array");
      v.clear();
      for (const auto& x : vec) v.push_back(static_cast<float>(x.get<double>()));
      if (!store) {
        if (v.empty()) throw DimError("empty vector");
        store.emplace(row.at("model").get<std::string>(), rep, v.size());
      } else if (row.at("model").get<std::string>() != store->model_id() ||
                 rep != store->rep_kind()) {
        throw FormatError("mixed model or representation kind");
      }
      store->Add(row.at("id").get<std::string>(), v,
                 row.value("text", std::string()));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("jsonl line " + std::to_string(line_no) + ": " +
                        e.what());
    }
  }
  if (!store) throw FormatError("empty store file");
  return std::move(*store);
}

}  // namespace

std::string_view RepKindName(RepKind kind) {
  switch (kind) {
    case RepKind::kCls:
      return "CLS";
    case RepKind::kLast:
      return "LAST";
    case RepKind::kAvg:
      return "AVG";
  }
  return "?";
}

RepKind ParseRepKind(std::string_view name) {
  if (name == "CLS" || name == "cls") return RepKind::kCls;
  if (name == "LAST" || name == "last") return RepKind::kLast;
  if (name == "AVG" || name == "avg") return RepKind::kAvg;
  throw FormatError("unknown representation kind '" + std::string(name) + "'");
}

EmbeddingStore::EmbeddingStore(std::string model_id, RepKind rep_kind,
                               std::size_t dim)
    : model_id_(std::move(model_id)), rep_kind_(rep_kind), dim_(dim) {}

void EmbeddingStore::Add(std::string key, std::span<const float> vector,
                         std::string text) {
  if (vector.size() != dim_) {
    throw DimError("vector for '" + key + "' has dimension " +
                   std::to_string(vector.size()) + ", store has " +
                   std::to_string(dim_));
  }
  for (float f : vector) {
    if (!std::isfinite(f)) throw DimError("non-finite entry for '" + key + "'");
  }
  if (index_.count(key)) throw DuplicateError("duplicate key '" + key + "'");
  index_.emplace(key, keys_.size());
  keys_.push_back(std::move(key));
  texts_.push_back(std::move(text));
  data_.insert(data_.end(), vector.begin(), vector.end());
}

const float* EmbeddingStore::Find(std::string_view key) const {
  const auto it = index_.find(std::string(key));
  return it == index_.end() ? nullptr : data_.data() + it->second * dim_;
}

std::span<const float> EmbeddingStore::Get(std::string_view key) const {
  const float* p = Find(key);
  if (p == nullptr) throw NotFound("no embedding for '" + std::string(key) + "'");
  return {p, dim_};
}

std::uint64_t EmbeddingStore::Checksum() const {
  std::uint64_t h = Fnv1a64("");
  std::string buf;
  for (std::size_t i = 0; i < size(); ++i) {
    buf.clear();
    PutString(buf, keys_[i]);
    for (float f : vector(i)) PutFloat(buf, f);
    h = Fnv1a64(buf, h);
  }
  return h;
}

EmbeddingStore MakeStore(const std::vector<EmbeddingRecord>& records) {
  if (records.empty()) throw EmptyDataset("no embedding records");
  const auto& first = records.front();
  EmbeddingStore store(first.model_id, first.rep_kind, first.vector.size());
  for (const auto& r : records) {
    if (r.model_id != first.model_id || r.rep_kind != first.rep_kind) {
      throw FormatError("records mix models or representation kinds");
    }
    store.Add(r.phrase_id, r.vector, r.text);
  }
  return store;
}

void WriteStore(const std::vector<EmbeddingRecord>& records,
                const std::filesystem::path& path, StoreFormat format) {
  WriteStore(MakeStore(records), path, format);
}

void WriteStore(const EmbeddingStore& store, const std::filesystem::path& path,
                StoreFormat format) {
  const std::string data = format == StoreFormat::kBinary
                               ? EncodeBinary(store)
                               : EncodeJsonLines(store);
  std::ofstream out = OpenForWrite(path);
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw Error("write failed: " + path.string());
}

EmbeddingStore ReadStore(const std::filesystem::path& path) {
  std::ifstream in = OpenForRead(path, true);
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string data = buffer.str();
  if (data.size() >= 4 && data.compare(0, 4, kMagic, 4) == 0) {
    return DecodeBinary(data);
  }
  if (!data.empty() && data.front() == '{') return DecodeJsonLines(data);
  throw FormatError("unrecognized store header in " + path.string());
}

StoreSummary VerifyStore(const std::filesystem::path& path) {
  const EmbeddingStore store = ReadStore(path);
  std::ifstream in = OpenForRead(path, true);
  char magic[4] = {};
  in.read(magic, 4);
  const bool binary = std::string_view(magic, 4) == std::string_view(kMagic, 4);
  return {binary ? StoreFormat::kBinary : StoreFormat::kJsonLines,
          store.model_id(),
          store.rep_kind(),
          store.dim(),
          store.size(),
          store.Checksum()};
}

TripleMatrix TripleMatrix::Subset(std::span<const std::size_t> rows) const {
  TripleMatrix out;
  const auto d = parent.cols();
  const auto n = static_cast<Eigen::Index>(rows.size());
  out.parent.resize(n, d);
  out.left.resize(n, d);
  out.right.resize(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(rows[i]);
    out.parent.row(i) = parent.row(r);
    out.left.row(i) = left.row(r);
    out.right.row(i) = right.row(r);
    out.phrase_ids.push_back(phrase_ids[rows[i]]);
    out.tree_types.push_back(tree_types[rows[i]]);
    out.parent_lens.push_back(parent_lens[rows[i]]);
  }
  return out;
}

AssembledTriples AssembleTriples(const PhraseCatalog& catalog,
                                 const EmbeddingStore& store) {
  struct Row {
    const PhraseRecord* record;
    const float* parent;
    const float* left;
    const float* right;
  };
  std::vector<Row> rows;
  AssembledTriples result;
  for (const auto& r : catalog.records()) {
    Row row{&r, store.Find(TextKey(r.parent_text)),
            store.Find(TextKey(r.left_text)), store.Find(TextKey(r.right_text))};
    if (row.parent && row.left && row.right) {
      rows.push_back(row);
    } else {
      ++result.skipped;
    }
  }
  if (rows.empty()) {
    throw EmptyDataset("no catalog record has all three embeddings");
  }
  const auto d = static_cast<Eigen::Index>(store.dim());
  const auto n = static_cast<Eigen::Index>(rows.size());
  auto& t = result.triples;
  t.parent.resize(n, d);
  t.left.resize(n, d);
  t.right.resize(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Row& row = rows[static_cast<std::size_t>(i)];
    t.parent.row(i) = Eigen::Map<const Vector>(row.parent, d);
    t.left.row(i) = Eigen::Map<const Vector>(row.left, d);
    t.right.row(i) = Eigen::Map<const Vector>(row.right, d);
    t.phrase_ids.push_back(row.record->phrase_id);
    t.tree_types.push_back(row.record->tree_type);
    t.parent_lens.push_back(row.record->parent_len);
  }
  return result;
}

}  // namespace compprobe
