#include "kirman/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "kirman/error.hpp"

namespace kirman::config {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view want) {
  fail(ErrorCode::Config,
       std::string(key) + ": expected " + std::string(want) + ", got '" + std::string(value) + "'");
}

double to_double(std::string_view key, std::string_view text) {
  const auto t = trim(text);
  double v = 0.0;
  if (t == "inf") return std::numeric_limits<double>::infinity();
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) bad_value(key, text, "a number");
  return v;
}

}  // namespace

KeyValues KeyValues::parse(std::string_view text, std::string_view origin) {
  KeyValues kv;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) {
      if (end == text.size()) break;
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      fail(ErrorCode::Config, std::string(origin) + ":" + std::to_string(line_no) +
                                  ": expected 'key = value'");
    }
    const auto key = trim(line.substr(0, eq));
    if (key.empty()) {
      fail(ErrorCode::Config, std::string(origin) + ":" + std::to_string(line_no) + ": empty key");
    }
    kv.set(std::string(key), std::string(trim(line.substr(eq + 1))));
    if (end == text.size()) break;
  }
  return kv;
}

KeyValues KeyValues::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Config, "cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string());
}

void KeyValues::set(std::string key, std::string value) {
  if (auto it = index_.find(key); it != index_.end()) {
    entries_[it->second].second = std::move(value);
    return;
  }
  index_.emplace(key, entries_.size());
  entries_.emplace_back(std::move(key), std::move(value));
}

bool KeyValues::contains(std::string_view key) const { return index_.find(key) != index_.end(); }

std::optional<std::string> KeyValues::get(std::string_view key) const {
  const auto it = index_.find(key);
  if (it == index_.end()) return std::nullopt;
  return entries_[it->second].second;
}

std::string KeyValues::get_string(std::string_view key, std::string fallback) const {
  auto v = get(key);
  return v ? *v : std::move(fallback);
}

double KeyValues::get_double(std::string_view key, double fallback) const {
  const auto v = get(key);
  return v ? to_double(key, *v) : fallback;
}

long KeyValues::get_long(std::string_view key, long fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  long out = 0;
  const auto t = trim(*v);
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
    // Accept integral values written in floating notation, e.g. 1e6.
    const double d = to_double(key, t);
    if (d != std::floor(d) || std::abs(d) > 9e18) bad_value(key, *v, "an integer");
    return static_cast<long>(d);
  }
  return out;
}

std::uint64_t KeyValues::get_u64(std::string_view key, std::uint64_t fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  std::uint64_t out = 0;
  const auto t = trim(*v);
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) bad_value(key, *v, "an unsigned integer");
  return out;
}

bool KeyValues::get_bool(std::string_view key, bool fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1" || *v == "yes" || *v == "on") return true;
  if (*v == "false" || *v == "0" || *v == "no" || *v == "off") return false;
  bad_value(key, *v, "a boolean");
}

std::vector<double> KeyValues::get_doubles(std::string_view key, std::vector<double> fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  std::vector<double> out;
  std::string_view rest = *v;
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    const auto item = trim(rest.substr(0, comma));
    if (!item.empty()) out.push_back(to_double(key, item));
    if (comma == std::string_view::npos) break;
    rest = rest.substr(comma + 1);
  }
  if (out.empty()) bad_value(key, *v, "a comma separated list of numbers");
  return out;
}

void KeyValues::reject_unknown(const std::vector<std::string>& known) const {
  for (const auto& [key, value] : entries_) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      fail(ErrorCode::Config, key + ": unknown configuration key");
    }
  }
}

void KeyValues::merge(const KeyValues& other) {
  for (const auto& [key, value] : other.entries_) set(key, value);
}

std::string KeyValues::dump() const {
  std::string out;
  for (const auto& [key, value] : entries_) out += key + " = " + value + "\n";
  return out;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace kirman::config
