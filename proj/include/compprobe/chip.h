#ifndef COMPPROBE_CHIP_H_
#define COMPPROBE_CHIP_H_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace compprobe {

// One row of a syntactic n-gram index. Pattern tokens are token/label/head
// triples, e.g. "JJ/dep/2 NN/pobj/0".
struct NgramEntry {
  std::string surface;
  std::string pattern;
  std::uint64_t count = 0;  // >= 1
};

class NgramIndex {
 public:
  // Entries with the same (surface, pattern) are summed.
  explicit NgramIndex(const std::vector<NgramEntry>& entries);

  const std::vector<NgramEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

  // Entry positions per pattern, in surface order.
  const std::vector<std::size_t>* WithPattern(std::string_view pattern) const;
  // Entry positions per surface, in pattern order.
  const std::vector<std::size_t>* WithSurface(std::string_view surface) const;

  // Total count of a surface over all patterns; 0 when absent.
  std::uint64_t SurfaceCount(std::string_view surface) const;

 private:
  std::vector<NgramEntry> entries_;
  std::map<std::string, std::vector<std::size_t>, std::less<>> by_pattern_;
  std::map<std::string, std::vector<std::size_t>, std::less<>> by_surface_;
};

struct IndexLoad {
  NgramIndex index;
  std::vector<std::string> warnings;  // one per skipped row
};

// Rows "surface TAB pattern TAB count". Malformed rows are skipped with a
// warning; throws EmptyIndex when no row survives.
IndexLoad LoadIndex(std::istream& in);
IndexLoad LoadIndex(const std::filesystem::path& path);

// Highest-count pattern of a surface, ties to the lexicographically smaller.
// Throws NotFound for an unseen surface.
const std::string& DominantPattern(std::string_view surface,
                                   const NgramIndex& index);

struct IdiomMatch {
  std::string surface;
  double delta = 0.0;  // |log10 count - log10 idiom count|
  double log_freq = 0.0;
};

struct MatchResult {
  std::string idiom;
  std::string pattern;
  double log_freq = 0.0;
  std::vector<IdiomMatch> matches;  // ascending delta, then surface
};

// Count used for frequencies is the entry count under the idiom's dominant
// pattern. Throws NotFound if the idiom is absent and EmptyMatch when no
// candidate is left.
MatchResult MatchIdiom(std::string_view idiom, const NgramIndex& index,
                       std::size_t k = 3,
                       const std::set<std::string, std::less<>>& exclusions = {});

// Idioms in input order, dropping any whose lemma-mapped form (word by word,
// unmapped words kept) was already seen.
using LemmaMap = std::map<std::string, std::string, std::less<>>;
std::vector<std::string> DedupByLemma(const std::vector<std::string>& idioms,
                                      const LemmaMap& lemmas);

// One entry per non-empty, trimmed line.
std::vector<std::string> ReadLines(std::istream& in);
// Two columns "word TAB lemma".
LemmaMap ReadLemmaMap(std::istream& in);

// Header: idiom match_rank match_surface pattern log_freq_idiom
// log_freq_match; ranks start at 1.
void WriteMatchesTsv(const std::vector<MatchResult>& results, std::ostream& out);

}  // namespace compprobe

#endif  // COMPPROBE_CHIP_H_
