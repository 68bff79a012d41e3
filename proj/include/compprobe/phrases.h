#ifndef COMPPROBE_PHRASES_H_
#define COMPPROBE_PHRASES_H_

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "compprobe/tree.h"

namespace compprobe {

// One binary-branching phrase harvested from a treebank.
struct PhraseRecord {
  std::string phrase_id;
  std::string parent_text;
  std::string left_text;
  std::string right_text;
  std::string tree_type;  // "PARENT → LEFT RIGHT"
  std::size_t parent_len = 0;
  std::size_t left_len = 0;
  std::size_t right_len = 0;
  std::string source_doc;

  friend bool operator==(const PhraseRecord&, const PhraseRecord&) = default;
};

// Stable 16-hex-digit id of (parent, left, right, tree type).
std::string PhraseId(std::string_view parent_text, std::string_view left_text,
                     std::string_view right_text, std::string_view tree_type);

// Stable key of a standalone text, used to address embedding stores.
std::string TextKey(std::string_view text);

std::string TreeType(std::string_view parent, std::string_view left,
                     std::string_view right);

struct HarvestOptions {
  // Preterminal labels marking null elements and traces.
  std::set<std::string> null_labels = {"-NONE-"};
};

// Removes null-element preterminals and every constituent left without
// tokens. Returns false if the whole tree is null.
bool PruneNullElements(BinaryTree& tree, const HarvestOptions& options = {});

// One record per binary node (after null pruning) spanning >= 2 words.
std::vector<PhraseRecord> HarvestSubphrases(
    const BinaryTree& tree, std::string_view source_doc,
    const HarvestOptions& options = {});

class PhraseCatalog {
 public:
  PhraseCatalog() = default;

  // Deduplicates by phrase id, keeping the first occurrence.
  explicit PhraseCatalog(std::vector<PhraseRecord> records);

  const std::vector<PhraseRecord>& records() const { return records_; }
  const std::map<std::string, std::size_t>& tree_type_counts() const {
    return tree_type_counts_;
  }
  const std::map<std::size_t, std::size_t>& length_histogram() const {
    return length_histogram_;
  }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }

  // nullptr when absent.
  const PhraseRecord* Find(std::string_view phrase_id) const;

 private:
  std::vector<PhraseRecord> records_;
  std::unordered_map<std::string, std::size_t> by_id_;
  std::map<std::string, std::size_t> tree_type_counts_;
  std::map<std::size_t, std::size_t> length_histogram_;
};

PhraseCatalog BuildCatalog(std::vector<PhraseRecord> records);

// Harvests every file under `dir` (recursively, sorted by relative path).
// source_doc is "<relative path>#<tree number>".
std::vector<PhraseRecord> HarvestDirectory(const std::filesystem::path& dir,
                                           const CnfOptions& cnf = {},
                                           const HarvestOptions& options = {});

void WriteCatalogTsv(const PhraseCatalog& catalog, std::ostream& out);
PhraseCatalog ReadCatalogTsv(std::istream& in);
PhraseCatalog ReadCatalogTsv(const std::filesystem::path& path);

}  // namespace compprobe

#endif  // COMPPROBE_PHRASES_H_
