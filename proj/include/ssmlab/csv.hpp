#pragma once

// Minimal CSV emission: LF line endings, 17 significant digits for reals.

#include <cstdio>
#include <initializer_list>
#include <ostream>
#include <string>
#include <string_view>
#include <type_traits>

namespace ssmlab {

/// "%.17g": enough digits to round-trip any double.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& os) : os_(os) {}

  void header(std::initializer_list<std::string_view> columns) {
    bool first = true;
    for (auto c : columns) {
      if (!first) os_ << ',';
      os_ << c;
      first = false;
    }
    os_ << '\n';
  }

  CsvWriter& field(std::string_view s) {
    sep();
    os_ << s;
    return *this;
  }
  CsvWriter& field(const char* s) { return field(std::string_view(s)); }
  CsvWriter& field(const std::string& s) { return field(std::string_view(s)); }
  CsvWriter& field(double v) {
    sep();
    os_ << format_double(v);
    return *this;
  }
  template <class Int>
    requires std::is_integral_v<Int>
  CsvWriter& field(Int v) {
    sep();
    os_ << v;
    return *this;
  }

  void end_row() {
    os_ << '\n';
    in_row_ = false;
  }

 private:
  void sep() {
    if (in_row_) os_ << ',';
    in_row_ = true;
  }

  std::ostream& os_;
  bool in_row_ = false;
};

}  // namespace ssmlab
