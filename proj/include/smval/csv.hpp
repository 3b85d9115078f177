#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

namespace smval::csv {

using Row = std::vector<std::string>;

// Reads a comma-separated file whose first line must equal `header`
// (whitespace-trimmed). Blank lines are skipped.
std::vector<Row> read(const std::filesystem::path& path, std::string_view header);

double to_double(const std::string& field);
long long to_int(const std::string& field);

// Shortest round-trip decimal representation, so rewritten files are
// byte-identical for identical values.
std::string format(double value);

class Writer {
 public:
  Writer(const std::filesystem::path& path, std::string_view header);

  template <typename... Fields>
  void row(const Fields&... fields) {
    bool first = true;
    ((write_field(fields, first)), ...);
    out_ << '\n';
  }

  void close();

 private:
  void write_field(double v, bool& first) { sep(first); out_ << format(v); }
  void write_field(int v, bool& first) { sep(first); out_ << v; }
  void write_field(long v, bool& first) { sep(first); out_ << v; }
  void write_field(long long v, bool& first) { sep(first); out_ << v; }
  void write_field(unsigned long v, bool& first) { sep(first); out_ << v; }
  void write_field(unsigned long long v, bool& first) { sep(first); out_ << v; }
  void write_field(std::string_view v, bool& first) { sep(first); out_ << v; }
  void write_field(const std::string& v, bool& first) { sep(first); out_ << v; }
  void write_field(const char* v, bool& first) { sep(first); out_ << v; }
  void sep(bool& first) {
    if (!first) out_ << ',';
    first = false;
  }

  std::filesystem::path path_;
  std::ofstream out_;
};

}  // namespace smval::csv
