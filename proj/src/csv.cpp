#include "kirman/csv.hpp"

#include <charconv>

#include "kirman/config.hpp"
#include "kirman/error.hpp"

namespace kirman::csv {

Writer::Writer(const std::filesystem::path& path, std::initializer_list<std::string> header)
    : out_(path), columns_(header.size()), path_(path.string()) {
  if (!out_) fail(ErrorCode::Config, "cannot write " + path_);
  bool first = true;
  for (const auto& h : header) {
    if (!first) out_ << ',';
    out_ << h;
    first = false;
  }
  out_ << '\n';
}

Writer& Writer::cell(double v) { return cell(config::format_double(v)); }

Writer& Writer::cell(long v) { return cell(std::to_string(v)); }

Writer& Writer::cell(const std::string& v) {
  if (in_row_ > 0) out_ << ',';
  out_ << v;
  ++in_row_;
  return *this;
}

void Writer::end_row() {
  if (in_row_ != columns_) {
    fail(ErrorCode::Domain, path_ + ": row has " + std::to_string(in_row_) + " cells, header has " +
                                std::to_string(columns_));
  }
  out_ << '\n';
  in_row_ = 0;
}

namespace {

bool parse_number(std::string_view s, double& out) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.remove_suffix(1);
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && !s.empty();
}

}  // namespace

Series read_series(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Config, "cannot open series " + path.string());
  std::string line;
  if (!std::getline(in, line)) fail(ErrorCode::Config, path.string() + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "t,value") {
    fail(ErrorCode::Config, path.string() + ": header must be 't,value', got '" + line + "'");
  }
  Series s;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto comma = line.find(',');
    double t = 0.0, v = 0.0;
    if (comma == std::string::npos || !parse_number(std::string_view(line).substr(0, comma), t) ||
        !parse_number(std::string_view(line).substr(comma + 1), v)) {
      fail(ErrorCode::Config, path.string() + ":" + std::to_string(line_no) + ": malformed row");
    }
    s.t.push_back(t);
    s.value.push_back(v);
  }
  return s;
}

}  // namespace kirman::csv
