#include "compprobe/chip.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "compprobe/errors.h"
#include "compprobe/tsv.h"

namespace compprobe {
namespace {

std::string Trim(std::string_view s) {
  const auto begin = s.find_first_not_of(" \t");
  if (begin == std::string_view::npos) return {};
  const auto end = s.find_last_not_of(" \t");
  return std::string(s.substr(begin, end - begin + 1));
}

// Accepts "word/label/head" tokens separated by single spaces.
bool ValidPattern(std::string_view pattern) {
  if (pattern.empty()) return false;
  std::istringstream tokens{std::string(pattern)};
  std::string token;
  std::size_t n = 0;
  while (tokens >> token) {
    ++n;
    const auto a = token.find('/');
    const auto b = token.rfind('/');
    if (a == std::string::npos || a == b || a == 0 || b == a + 1 ||
        b + 1 == token.size()) {
      return false;
    }
    if (!std::all_of(token.begin() + static_cast<std::ptrdiff_t>(b) + 1,
                     token.end(), [](unsigned char c) { return std::isdigit(c); })) {
      return false;
    }
  }
  return n > 0;
}

std::string FormatLog(double v) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(6) << v;
  return out.str();
}

}  // namespace

NgramIndex::NgramIndex(const std::vector<NgramEntry>& entries) {
  std::map<std::pair<std::string, std::string>, std::uint64_t> merged;
  for (const auto& e : entries) merged[{e.surface, e.pattern}] += e.count;
  entries_.reserve(merged.size());
  for (const auto& [key, count] : merged) {
    entries_.push_back({key.first, key.second, count});
  }
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    by_pattern_[entries_[i].pattern].push_back(i);
    by_surface_[entries_[i].surface].push_back(i);
  }
}

const std::vector<std::size_t>* NgramIndex::WithPattern(
    std::string_view pattern) const {
  auto it = by_pattern_.find(pattern);
  return it == by_pattern_.end() ? nullptr : &it->second;
}

const std::vector<std::size_t>* NgramIndex::WithSurface(
    std::string_view surface) const {
  auto it = by_surface_.find(surface);
  return it == by_surface_.end() ? nullptr : &it->second;
}

std::uint64_t NgramIndex::SurfaceCount(std::string_view surface) const {
  const auto* rows = WithSurface(surface);
  std::uint64_t total = 0;
  if (rows) {
    for (std::size_t i : *rows) total += entries_[i].count;
  }
  return total;
}

IndexLoad LoadIndex(std::istream& in) {
  std::vector<NgramEntry> entries;
  std::vector<std::string> warnings;
  std::string line;
  std::size_t line_no = 0;
  while (ReadLine(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = SplitTabs(line);
    auto warn = [&](const std::string& why) {
      warnings.push_back("index line " + std::to_string(line_no) + ": " + why);
    };
    if (f.size() != 3) {
      warn("expected 3 fields");
      continue;
    }
    if (f[0].empty()) {
      warn("empty surface");
      continue;
    }
    if (!ValidPattern(f[1])) {
      warn("malformed pattern '" + f[1] + "'");
      continue;
    }
    std::uint64_t count = 0;
    const bool digits = !f[2].empty() &&
                        std::all_of(f[2].begin(), f[2].end(),
                                    [](unsigned char c) { return std::isdigit(c); });
    try {
      if (digits) count = std::stoull(f[2]);
    } catch (const std::out_of_range&) {
      count = 0;
    }
    if (count == 0) {
      warn("count must be a positive integer, got '" + f[2] + "'");
      continue;
    }
    entries.push_back({f[0], f[1], count});
  }
  if (entries.empty()) throw EmptyIndex("n-gram index has no valid rows");
  return {NgramIndex(entries), std::move(warnings)};
}

IndexLoad LoadIndex(const std::filesystem::path& path) {
  std::ifstream in = OpenForRead(path, true);
  return LoadIndex(in);
}

const std::string& DominantPattern(std::string_view surface,
                                   const NgramIndex& index) {
  const auto* rows = index.WithSurface(surface);
  if (!rows) throw NotFound("surface not in index: " + std::string(surface));
  const NgramEntry* best = nullptr;
  for (std::size_t i : *rows) {
    const auto& e = index.entries()[i];
    // Rows are in pattern order, so strict > keeps the smaller pattern on ties.
    if (!best || e.count > best->count) best = &e;
  }
  return best->pattern;
}

MatchResult MatchIdiom(std::string_view idiom, const NgramIndex& index,
                       std::size_t k,
                       const std::set<std::string, std::less<>>& exclusions) {
  MatchResult result;
  result.idiom = std::string(idiom);
  result.pattern = DominantPattern(idiom, index);
  const auto& entries = index.entries();
  const auto* rows = index.WithPattern(result.pattern);
  std::uint64_t idiom_count = 0;
  for (std::size_t i : *rows) {
    if (entries[i].surface == idiom) idiom_count = entries[i].count;
  }
  result.log_freq = std::log10(static_cast<double>(idiom_count));

  for (std::size_t i : *rows) {
    const auto& e = entries[i];
    if (e.surface == idiom || exclusions.count(e.surface)) continue;
    const double lf = std::log10(static_cast<double>(e.count));
    result.matches.push_back({e.surface, std::abs(lf - result.log_freq), lf});
  }
  if (result.matches.empty()) {
    throw EmptyMatch("no candidate shares the pattern of '" + result.idiom + "'");
  }
  std::sort(result.matches.begin(), result.matches.end(),
            [](const IdiomMatch& a, const IdiomMatch& b) {
              if (a.delta != b.delta) return a.delta < b.delta;
              return a.surface < b.surface;
            });
  if (result.matches.size() > k) result.matches.resize(k);
  return result;
}

std::vector<std::string> DedupByLemma(const std::vector<std::string>& idioms,
                                      const LemmaMap& lemmas) {
  std::set<std::string> seen;
  std::vector<std::string> out;
  for (const auto& idiom : idioms) {
    std::istringstream words(idiom);
    std::string word, key;
    while (words >> word) {
      auto it = lemmas.find(word);
      if (!key.empty()) key += ' ';
      key += it == lemmas.end() ? word : it->second;
    }
    if (seen.insert(key).second) out.push_back(idiom);
  }
  return out;
}

std::vector<std::string> ReadLines(std::istream& in) {
  std::vector<std::string> out;
  std::string line;
  while (ReadLine(in, line)) {
    auto t = Trim(line);
    if (!t.empty()) out.push_back(std::move(t));
  }
  return out;
}

LemmaMap ReadLemmaMap(std::istream& in) {
  LemmaMap out;
  std::string line;
  std::size_t line_no = 0;
  while (ReadLine(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = SplitTabs(line);
    if (f.size() != 2 || f[0].empty() || f[1].empty()) {
      throw FormatError("lemma map line " + std::to_string(line_no) +
                        ": expected 'word TAB lemma'");
    }
    out[f[0]] = f[1];
  }
  return out;
}

void WriteMatchesTsv(const std::vector<MatchResult>& results, std::ostream& out) {
  out << "idiom\tmatch_rank\tmatch_surface\tpattern\tlog_freq_idiom\tlog_freq_match\n";
  for (const auto& r : results) {
    for (std::size_t i = 0; i < r.matches.size(); ++i) {
      out << r.idiom << '\t' << i + 1 << '\t' << r.matches[i].surface << '\t'
          << r.pattern << '\t' << FormatLog(r.log_freq) << '\t'
          << FormatLog(r.matches[i].log_freq) << '\n';
    }
  }
}

}  // namespace compprobe
