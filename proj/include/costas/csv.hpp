#pragma once

// CSV emission with locale-independent, shortest round-trip float
// formatting (std::to_chars), so re-parsing a produced file recovers the
// exact doubles that were written.

#include <charconv>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace costas::csv {

inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view text) {
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size())
    throw std::invalid_argument("csv: cannot parse number '" + std::string(text) + "'");
  return v;
}

class Writer {
 public:
  Writer(const std::string& path, const std::vector<std::string>& columns) : out_(path) {
    if (!out_) throw std::runtime_error("csv: cannot open '" + path + "' for writing");
    n_columns_ = columns.size();
    for (std::size_t i = 0; i < columns.size(); ++i) {
      if (i) out_ << ',';
      out_ << columns[i];
    }
    out_ << '\n';
  }

  void row(const std::vector<std::string>& cells) {
    if (cells.size() != n_columns_) throw std::invalid_argument("csv: wrong cell count");
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << ',';
      out_ << cells[i];
    }
    out_ << '\n';
  }

  void close() {
    out_.close();
    if (!out_) throw std::runtime_error("csv: write failed");
  }

 private:
  std::ofstream out_;
  std::size_t n_columns_ = 0;
};

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};

inline std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (const char c : line) {
    if (c == ',') {
      cells.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  cells.push_back(cur);
  return cells;
}

inline Table read(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("csv: cannot open '" + path + "'");
  Table table;
  std::string line;
  if (std::getline(in, line)) table.columns = split_line(line);
  while (std::getline(in, line))
    if (!line.empty()) table.rows.push_back(split_line(line));
  return table;
}

}  // namespace costas::csv
