#ifndef COMPPROBE_TSV_H_
#define COMPPROBE_TSV_H_

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "compprobe/errors.h"

namespace compprobe {

inline std::vector<std::string> SplitTabs(std::string_view line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  for (;;) {
    const std::size_t tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      fields.emplace_back(line.substr(start));
      return fields;
    }
    fields.emplace_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

// Strips a trailing '\r' so files written on Windows still parse.
inline bool ReadLine(std::istream& in, std::string& line) {
  if (!std::getline(in, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

inline std::ifstream OpenForRead(const std::filesystem::path& path,
                                 bool binary = false) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) throw NotFound("cannot open " + path.string());
  return in;
}

inline std::ofstream OpenForWrite(const std::filesystem::path& path,
                                  bool binary = true) {
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

}  // namespace compprobe

#endif  // COMPPROBE_TSV_H_
