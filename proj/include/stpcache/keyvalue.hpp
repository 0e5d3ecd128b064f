#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

// Minimal reader/writer for the flat TOML-style files used by experiment
// configs and placement files: `[section]` headers, `key = value` lines,
// `#` comments. Values are numbers, "strings", or [lists] of either.

namespace stpcache::kv {

struct Entry {
  std::string section;
  std::string key;
  std::string value;  // raw text after '=' with surrounding blanks removed
  int line = 0;
};

class Document {
 public:
  static Document parse(std::string_view text);

  [[nodiscard]] const Entry* find(std::string_view section, std::string_view key) const;
  [[nodiscard]] const std::vector<Entry>& entries() const noexcept { return entries_; }

 private:
  std::vector<Entry> entries_;
};

/// Error message prefix naming the offending field, e.g. "network.alpha".
std::string field_name(const Entry& entry);

double to_number(const Entry& entry);
/// Parses one token (e.g. a list element); errors name `entry`.
double to_number(std::string_view token, const Entry& entry);
long long to_integer(const Entry& entry);
long long to_integer(std::string_view token, const Entry& entry);
/// Exact for the full 64-bit range, unlike to_integer.
std::uint64_t to_u64(const Entry& entry);
std::string to_string(const Entry& entry);

/// Accepts "10dB", "-3.5 dB" (converted to linear) or a bare linear number.
double to_linear_threshold(std::string_view token, const Entry& entry);

/// Threshold in dB: "10dB" is taken as is, a bare number as linear.
double to_decibels(std::string_view token, const Entry& entry);

/// Splits "[a, b, c]" into trimmed tokens. A bare scalar becomes a one-element list.
std::vector<std::string> to_list(const Entry& entry);

std::string trim(std::string_view s);

/// Shortest decimal text that round-trips to the same double.
std::string format_number(double value);

}  // namespace stpcache::kv
