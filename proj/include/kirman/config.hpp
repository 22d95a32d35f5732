#pragma once

// Flat "dotted.key = value" configuration text.
//
//   # comment
//   model.kind = return_y
//   model.alpha = 1
//
// Keys keep their first-seen order so dumps are stable.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace kirman::config {

class KeyValues {
 public:
  /// `origin` names the source in error messages.
  static KeyValues parse(std::string_view text, std::string_view origin = "<config>");
  static KeyValues load(const std::filesystem::path& path);

  void set(std::string key, std::string value);
  bool contains(std::string_view key) const;
  std::optional<std::string> get(std::string_view key) const;

  std::string get_string(std::string_view key, std::string fallback) const;
  double get_double(std::string_view key, double fallback) const;
  long get_long(std::string_view key, long fallback) const;
  std::uint64_t get_u64(std::string_view key, std::uint64_t fallback) const;
  bool get_bool(std::string_view key, bool fallback) const;
  /// Comma separated list of numbers.
  std::vector<double> get_doubles(std::string_view key, std::vector<double> fallback) const;

  /// Throws Config naming the first key not in `known`.
  void reject_unknown(const std::vector<std::string>& known) const;

  /// Overlays `other` on top of this.
  void merge(const KeyValues& other);

  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }
  std::string dump() const;

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

/// Shortest text that parses back to the same double.
std::string format_double(double v);

}  // namespace kirman::config
