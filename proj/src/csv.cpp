#include "smval/csv.hpp"

#include <charconv>
#include <stdexcept>

namespace smval::csv {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

}  // namespace

std::vector<Row> read(const std::filesystem::path& path, std::string_view header) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || trim(line) != header) {
    throw std::invalid_argument(path.string() + ": expected header '" +
                                std::string(header) + "'");
  }
  std::vector<Row> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view rest = trim(line);
    if (rest.empty()) continue;
    Row row;
    for (;;) {
      const auto comma = rest.find(',');
      row.emplace_back(trim(rest.substr(0, comma)));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

double to_double(const std::string& field) {
  double v = 0.0;
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw std::invalid_argument("not a number: '" + field + "'");
  }
  return v;
}

long long to_int(const std::string& field) {
  long long v = 0;
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw std::invalid_argument("not an integer: '" + field + "'");
  }
  return v;
}

std::string format(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw std::runtime_error("number formatting failed");
  return std::string(buf, ptr);
}

Writer::Writer(const std::filesystem::path& path, std::string_view header)
    : path_(path), out_(path) {
  if (!out_) throw std::runtime_error("cannot write " + path.string());
  out_ << header << '\n';
}

void Writer::close() {
  out_.close();
  if (!out_) throw std::runtime_error("error writing " + path_.string());
}

}  // namespace smval::csv
