#pragma once

#include <charconv>
#include <cstdio>
#include <string>

#include "tbp/types.hpp"

namespace tbp {

// Shortest round-trip decimal form, locale-independent ('.' separator always).
inline std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

class CsvWriter {
 public:
  explicit CsvWriter(std::string header) { out_ = std::move(header); out_ += '\n'; }

  template <class... Cols>
  void row(const Cols&... cols) {
    bool first = true;
    (append_col(cols, first), ...);
    out_ += '\n';
  }

  const std::string& text() const { return out_; }

  void write_file(const std::string& path) const {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw IoError("cannot open for writing: " + path);
    bool ok = std::fwrite(out_.data(), 1, out_.size(), f) == out_.size();
    ok = (std::fclose(f) == 0) && ok;
    if (!ok) throw IoError("write failed: " + path);
  }

 private:
  void append_col(double v, bool& first) {
    if (!first) out_ += ',';
    first = false;
    out_ += format_double(v);
  }
  void append_col(int v, bool& first) { append_col(static_cast<long long>(v), first); }
  void append_col(long long v, bool& first) {
    if (!first) out_ += ',';
    first = false;
    out_ += std::to_string(v);
  }
  void append_col(unsigned long long v, bool& first) {
    if (!first) out_ += ',';
    first = false;
    out_ += std::to_string(v);
  }
  void append_col(const std::string& v, bool& first) {
    if (!first) out_ += ',';
    first = false;
    out_ += v;
  }
  void append_col(const char* v, bool& first) { append_col(std::string(v), first); }

  std::string out_;
};

}  // namespace tbp
