#pragma once

#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace fraclab {

// Shortest round-trippable decimal form. All file output goes through this so
// that a fixed seed yields byte-identical artifacts.
inline std::string fmt_g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

// Minimal CSV emitter: header row up front, one row() call per record, LF
// line endings, no quoting (fields here are numbers and plain identifiers).
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header) : out_(path) {
    if (!out_) throw std::runtime_error("cannot open for writing: " + path);
    cols_ = header.size();
    write_row(header);
  }

  void row(const std::vector<std::string>& fields) {
    if (fields.size() != cols_) throw std::logic_error("csv row width mismatch");
    write_row(fields);
  }

 private:
  void write_row(const std::vector<std::string>& fields) {
    for (size_t i = 0; i < fields.size(); ++i) {
      if (i) out_ << ',';
      out_ << fields[i];
    }
    out_ << '\n';
  }

  std::ofstream out_;
  size_t cols_ = 0;
};

}  // namespace fraclab
