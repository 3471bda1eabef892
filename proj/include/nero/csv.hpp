#pragma once

#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "nero/error.hpp"

namespace nero::csv {

// Minimal reader for the unquoted comma-separated files this project reads and writes.

inline std::vector<std::string_view> split(std::string_view line, char sep = ',') {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '"'))
    s.remove_suffix(1);
  return s;
}

class Reader {
 public:
  explicit Reader(const std::string& path) : in_(path) {
    if (!in_) throw Error("cannot open file: " + path);
    std::string header;
    if (!std::getline(in_, header)) throw Error("file has no header row: " + path);
    auto cols = split(header);
    for (std::size_t i = 0; i < cols.size(); ++i) columns_.emplace(std::string(trim(cols[i])), i);
  }

  [[nodiscard]] std::optional<std::size_t> column(const std::string& name) const {
    auto it = columns_.find(name);
    if (it == columns_.end()) return std::nullopt;
    return it->second;
  }

  /// Reads the next non-empty row; false at end of file.
  bool next(std::vector<std::string_view>& fields) {
    while (std::getline(in_, line_)) {
      if (trim(line_).empty()) continue;
      fields = split(line_);
      for (auto& f : fields) f = trim(f);
      return true;
    }
    return false;
  }

 private:
  std::ifstream in_;
  std::string line_;
  std::unordered_map<std::string, std::size_t> columns_;
};

inline long long to_int(std::string_view s) {
  try {
    std::size_t used = 0;
    long long v = std::stoll(std::string(s), &used);
    if (used != s.size()) throw Error("");
    return v;
  } catch (const std::exception&) {
    throw Error("not an integer: '" + std::string(s) + "'");
  }
}

inline double to_double(std::string_view s) {
  try {
    std::size_t used = 0;
    double v = std::stod(std::string(s), &used);
    if (used != s.size()) throw Error("");
    return v;
  } catch (const std::exception&) {
    throw Error("not a number: '" + std::string(s) + "'");
  }
}

}  // namespace nero::csv
