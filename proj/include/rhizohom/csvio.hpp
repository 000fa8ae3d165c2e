#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "rhizohom/errors.hpp"

namespace rhizohom {

// Locale-independent scientific formatting with 17 significant digits; the
// CSV bodies must be byte-identical across runs and thread counts.
inline std::string format_sci(double v) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::scientific, 16);
  return std::string(buf, res.ptr);
}

class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header)
      : out_(path, std::ios::binary), ncols_(header.size()) {
    if (!out_) throw ConfigError("cannot open CSV for writing: " + path);
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (i) out_ << ',';
      out_ << header[i];
    }
    out_ << '\n';
  }

  class Row {
   public:
    explicit Row(CsvWriter& w) : w_(w) {}
    Row& operator<<(double v) { return push(format_sci(v)); }
    Row& operator<<(int v) { return push(std::to_string(v)); }
    Row& operator<<(long long v) { return push(std::to_string(v)); }
    Row& operator<<(std::size_t v) { return push(std::to_string(v)); }
    Row& operator<<(const std::string& v) { return push(v); }
    ~Row() { w_.out_ << '\n'; }

   private:
    Row& push(const std::string& s) {
      if (count_++) w_.out_ << ',';
      w_.out_ << s;
      return *this;
    }
    CsvWriter& w_;
    std::size_t count_ = 0;
  };

  Row row() { return Row(*this); }
  std::size_t columns() const { return ncols_; }

 private:
  friend class Row;
  std::ofstream out_;
  std::size_t ncols_;
};

}  // namespace rhizohom
