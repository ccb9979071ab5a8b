#pragma once

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "stgcn/errors.hpp"

namespace stgcn::csv {

/// Shortest round-trippable decimal form of a double.
inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

/// Comma-separated writer: header row, UTF-8, LF line endings.
class Writer {
 public:
  explicit Writer(const std::string& path) : out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw IoError("cannot write csv: " + path);
  }

  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << ',';
      out_ << cells[i];
    }
    out_ << '\n';
  }

 private:
  std::ofstream out_;
};

}  // namespace stgcn::csv
