#include "compprobe/phrases.h"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "compprobe/errors.h"
#include "compprobe/random.h"
#include "compprobe/tsv.h"

namespace compprobe {
namespace {

constexpr std::string_view kCatalogHeader =
    "phrase_id\tparent_text\tleft_text\tright_text\ttree_type\tparent_len\t"
    "left_len\tright_len\tsource_doc";

std::string Hex64(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

std::string JoinWords(const std::vector<std::string>& words) {
  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

void EmitRecord(const BinaryTree& node, std::string_view source_doc,
                std::vector<PhraseRecord>& out);

// Pre-order, so a phrase precedes its subphrases.
void Harvest(const BinaryTree& node, std::string_view source_doc,
             std::vector<PhraseRecord>& out) {
  if (node.is_binary()) EmitRecord(node, source_doc, out);
  for (const auto& child : node.children) Harvest(child, source_doc, out);
}

void EmitRecord(const BinaryTree& node, std::string_view source_doc,
                std::vector<PhraseRecord>& out) {
  const auto left = Yield(node.left());
  const auto right = Yield(node.right());
  if (left.empty() || right.empty()) return;

  PhraseRecord r;
  r.left_text = JoinWords(left);
  r.right_text = JoinWords(right);
  r.parent_text = r.left_text + ' ' + r.right_text;
  r.left_len = left.size();
  r.right_len = right.size();
  r.parent_len = r.left_len + r.right_len;
  r.tree_type = TreeType(node.label, node.left().label, node.right().label);
  r.phrase_id = PhraseId(r.parent_text, r.left_text, r.right_text, r.tree_type);
  r.source_doc = std::string(source_doc);
  out.push_back(std::move(r));
}

std::size_t ParseCount(const std::string& field, std::size_t line_no) {
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(field, &used);
    if (used != field.size()) throw std::invalid_argument(field);
    return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
    throw FormatError("catalog line " + std::to_string(line_no) +
                      ": bad count '" + field + "'");
  }
}

}  // namespace

std::string PhraseId(std::string_view parent_text, std::string_view left_text,
                     std::string_view right_text, std::string_view tree_type) {
  std::uint64_t h = Fnv1a64(parent_text);
  h = Fnv1a64("\x1f", h);
  h = Fnv1a64(left_text, h);
  h = Fnv1a64("\x1f", h);
  h = Fnv1a64(right_text, h);
  h = Fnv1a64("\x1f", h);
  h = Fnv1a64(tree_type, h);
  return Hex64(h);
}

std::string TextKey(std::string_view text) { return Hex64(Fnv1a64(text)); }

std::string TreeType(std::string_view parent, std::string_view left,
                     std::string_view right) {
  std::string out(parent);
  out += " → ";
  out += left;
  out += ' ';
  out += right;
  return out;
}

bool PruneNullElements(BinaryTree& tree, const HarvestOptions& options) {
  if (tree.leaf) return options.null_labels.count(tree.label) == 0;
  std::erase_if(tree.children, [&](BinaryTree& child) {
    return !PruneNullElements(child, options);
  });
  return !tree.children.empty();
}

std::vector<PhraseRecord> HarvestSubphrases(const BinaryTree& tree,
                                            std::string_view source_doc,
                                            const HarvestOptions& options) {
  BinaryTree pruned = tree;
  std::vector<PhraseRecord> out;
  if (!PruneNullElements(pruned, options)) return out;
  Harvest(pruned, source_doc, out);
  return out;
}

PhraseCatalog::PhraseCatalog(std::vector<PhraseRecord> records) {
  records_.reserve(records.size());
  for (auto& r : records) {
    if (by_id_.count(r.phrase_id)) continue;
    by_id_.emplace(r.phrase_id, records_.size());
    ++tree_type_counts_[r.tree_type];
    ++length_histogram_[r.parent_len];
    records_.push_back(std::move(r));
  }
}

const PhraseRecord* PhraseCatalog::Find(std::string_view phrase_id) const {
  const auto it = by_id_.find(std::string(phrase_id));
  return it == by_id_.end() ? nullptr : &records_[it->second];
}

PhraseCatalog BuildCatalog(std::vector<PhraseRecord> records) {
  return PhraseCatalog(std::move(records));
}

std::vector<PhraseRecord> HarvestDirectory(const std::filesystem::path& dir,
                                           const CnfOptions& cnf,
                                           const HarvestOptions& options) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw NotFound("not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file()) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end(), [&](const fs::path& a, const fs::path& b) {
    return fs::relative(a, dir).generic_string() <
           fs::relative(b, dir).generic_string();
  });

  std::vector<PhraseRecord> out;
  for (const auto& file : files) {
    std::ifstream in = OpenForRead(file, true);
    std::stringstream buffer;
    buffer << in.rdbuf();
    const std::string name = fs::relative(file, dir).generic_string();
    std::vector<ConstituencyTree> trees;
    try {
      trees = ParseBracketedAll(buffer.str());
    } catch (const ParseError& e) {
      throw ParseError(name + ": " + e.reason(), e.offset());
    }
    for (std::size_t i = 0; i < trees.size(); ++i) {
      auto records = HarvestSubphrases(ToCnfRightFactored(trees[i], cnf),
                                       name + "#" + std::to_string(i + 1),
                                       options);
      for (auto& r : records) out.push_back(std::move(r));
    }
  }
  return out;
}

void WriteCatalogTsv(const PhraseCatalog& catalog, std::ostream& out) {
  out << kCatalogHeader << '\n';
  for (const auto& r : catalog.records()) {
    out << r.phrase_id << '\t' << r.parent_text << '\t' << r.left_text << '\t'
        << r.right_text << '\t' << r.tree_type << '\t' << r.parent_len << '\t'
        << r.left_len << '\t' << r.right_len << '\t' << r.source_doc << '\n';
  }
}

PhraseCatalog ReadCatalogTsv(std::istream& in) {
  std::string line;
  if (!ReadLine(in, line) || line != kCatalogHeader) {
    throw FormatError("catalog: missing or unexpected header");
  }
  std::vector<PhraseRecord> records;
  std::size_t line_no = 1;
  while (ReadLine(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto f = SplitTabs(line);
    if (f.size() != 9) {
      throw FormatError("catalog line " + std::to_string(line_no) +
                        ": expected 9 fields");
    }
    PhraseRecord r;
    r.phrase_id = std::move(f[0]);
    r.parent_text = std::move(f[1]);
    r.left_text = std::move(f[2]);
    r.right_text = std::move(f[3]);
    r.tree_type = std::move(f[4]);
    r.parent_len = ParseCount(f[5], line_no);
    r.left_len = ParseCount(f[6], line_no);
    r.right_len = ParseCount(f[7], line_no);
    r.source_doc = std::move(f[8]);
    records.push_back(std::move(r));
  }
  return PhraseCatalog(std::move(records));
}

PhraseCatalog ReadCatalogTsv(const std::filesystem::path& path) {
  std::ifstream in = OpenForRead(path, true);
  return ReadCatalogTsv(in);
}

}  // namespace compprobe
