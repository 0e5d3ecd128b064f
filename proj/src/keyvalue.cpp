#include "stpcache/keyvalue.hpp"

#include <charconv>
#include <cmath>
#include <stdexcept>

namespace stpcache::kv {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

namespace {

// Strips a trailing '#' comment that is not inside a quoted string.
std::string_view strip_comment(std::string_view line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') quoted = !quoted;
    if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

[[noreturn]] void fail(const Entry& entry, const std::string& what) {
  throw std::invalid_argument(field_name(entry) + " (line " + std::to_string(entry.line) + "): " + what);
}

double parse_double(std::string_view token, const Entry& entry) {
  const std::string t = trim(token);
  double value = 0.0;
  const auto* begin = t.data();
  const auto* end = t.data() + t.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end || t.empty()) fail(entry, "expected a number, got '" + t + "'");
  return value;
}

}  // namespace

Document Document::parse(std::string_view text) {
  Document doc;
  std::string section;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    const auto raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;

    const std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) {
        throw std::invalid_argument("line " + std::to_string(line_no) + ": malformed section header '" + line + "'");
      }
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("line " + std::to_string(line_no) + ": expected 'key = value', got '" + line + "'");
    }
    Entry entry{section, trim(std::string_view(line).substr(0, eq)), trim(std::string_view(line).substr(eq + 1)),
                line_no};
    if (entry.key.empty()) throw std::invalid_argument("line " + std::to_string(line_no) + ": empty key");
    if (doc.find(entry.section, entry.key) != nullptr) fail(entry, "duplicate key");
    doc.entries_.push_back(std::move(entry));
  }
  return doc;
}

const Entry* Document::find(std::string_view section, std::string_view key) const {
  for (const auto& e : entries_) {
    if (e.section == section && e.key == key) return &e;
  }
  return nullptr;
}

std::string field_name(const Entry& entry) {
  return entry.section.empty() ? entry.key : entry.section + "." + entry.key;
}

double to_number(const Entry& entry) { return parse_double(entry.value, entry); }

double to_number(std::string_view token, const Entry& entry) { return parse_double(token, entry); }

long long to_integer(std::string_view token, const Entry& entry) {
  const double v = parse_double(token, entry);
  if (std::floor(v) != v || std::abs(v) > 9.0e15) fail(entry, "expected an integer, got '" + trim(token) + "'");
  return static_cast<long long>(v);
}

long long to_integer(const Entry& entry) { return to_integer(entry.value, entry); }

std::uint64_t to_u64(const Entry& entry) {
  const std::string t = trim(entry.value);
  std::uint64_t value = 0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec != std::errc{} || ptr != t.data() + t.size() || t.empty()) {
    fail(entry, "expected an unsigned 64-bit integer, got '" + t + "'");
  }
  return value;
}

std::string to_string(const Entry& entry) {
  const auto& v = entry.value;
  if (v.size() < 2 || v.front() != '"' || v.back() != '"') fail(entry, "expected a quoted string");
  return v.substr(1, v.size() - 2);
}

double to_linear_threshold(std::string_view token, const Entry& entry) {
  std::string t = trim(token);
  if (t.size() >= 2 && (t.ends_with("dB") || t.ends_with("db"))) {
    const double db = parse_double(std::string_view(t).substr(0, t.size() - 2), entry);
    return std::pow(10.0, db / 10.0);
  }
  return parse_double(t, entry);
}

double to_decibels(std::string_view token, const Entry& entry) {
  std::string t = trim(token);
  if (t.size() >= 2 && (t.ends_with("dB") || t.ends_with("db"))) {
    return parse_double(std::string_view(t).substr(0, t.size() - 2), entry);
  }
  const double linear = parse_double(t, entry);
  if (!(linear > 0.0)) fail(entry, "a linear threshold must be > 0, got '" + t + "'");
  return 10.0 * std::log10(linear);
}

std::vector<std::string> to_list(const Entry& entry) {
  std::string v = entry.value;
  if (v.empty()) fail(entry, "empty value");
  if (v.front() != '[') return {v};
  if (v.back() != ']') fail(entry, "unterminated list");
  std::vector<std::string> out;
  const std::string body = trim(std::string_view(v).substr(1, v.size() - 2));
  if (body.empty()) return out;
  std::size_t start = 0;
  while (true) {
    const auto comma = body.find(',', start);
    out.push_back(trim(std::string_view(body).substr(start, comma == std::string::npos ? std::string::npos
                                                                                       : comma - start)));
    if (out.back().empty()) fail(entry, "empty list element");
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string format_number(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc{}) throw std::runtime_error("format_number failed");
  return std::string(buf, ptr);
}

}  // namespace stpcache::kv
