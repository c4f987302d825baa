#pragma once

// Flat key = value run configuration. Grammar and keys: docs/config.md.

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "ratingxva/csv.hpp"
#include "ratingxva/error.hpp"

namespace ratingxva::app {

/// Raw key/value pairs with their source line numbers. Every key must be
/// consumed by a typed getter; check_all_used() reports the rest as unknown.
class Config {
 public:
  Config() = default;

  static Config parse(std::istream& in, const std::string& source = "<config>") {
    Config c;
    c.source_ = source;
    std::string raw;
    std::size_t number = 0;
    while (std::getline(in, raw)) {
      ++number;
      const auto hash = raw.find('#');
      const auto line = csv::trim(std::string_view(raw).substr(0, hash));
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string_view::npos) throw ParseError(source, number, 1, "expected 'key = value'");
      const std::string key(csv::trim(line.substr(0, eq)));
      const std::string value(csv::trim(line.substr(eq + 1)));
      if (key.empty()) throw ParseError(source, number, 1, "empty key");
      for (char ch : key)
        if (!((ch >= 'a' && ch <= 'z') || (ch >= '0' && ch <= '9') || ch == '_' || ch == '.'))
          throw ParseError(source, number, 1, "invalid character in key '" + key + "'");
      if (c.entries_.count(key)) throw ParseError(source, number, 1, "duplicate key '" + key + "'");
      c.entries_[key] = {value, number};
    }
    return c;
  }

  static Config parse_string(const std::string& text, const std::string& source = "<config>") {
    std::istringstream in(text);
    return parse(in, source);
  }

  static Config load(const std::string& path) {
    auto in = csv::open_input(path);
    Config c = parse(in, path);
    c.base_ = std::filesystem::path(path).parent_path();
    return c;
  }

  const std::string& source() const noexcept { return source_; }
  bool has(const std::string& key) const { return entries_.count(key) > 0; }
  void set(const std::string& key, const std::string& value) { entries_[key] = {value, 0}; }

  std::optional<std::string> text(const std::string& key) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    used_.insert(key);
    return it->second.value;
  }

  std::string text(const std::string& key, const std::string& fallback) const { return text(key).value_or(fallback); }

  /// Number; accepts "inf" and simple fractions such as "1/12".
  std::optional<double> number(const std::string& key) const {
    const auto t = text(key);
    if (!t) return std::nullopt;
    return to_number(key, *t);
  }
  double number(const std::string& key, double fallback) const { return number(key).value_or(fallback); }

  std::optional<std::int64_t> integer(const std::string& key) const {
    const auto t = text(key);
    if (!t) return std::nullopt;
    std::int64_t v = 0;
    const auto res = std::from_chars(t->data(), t->data() + t->size(), v);
    if (t->empty() || res.ec != std::errc() || res.ptr != t->data() + t->size())
      throw error(key, "expected an integer, got '" + *t + "'");
    return v;
  }
  std::int64_t integer(const std::string& key, std::int64_t fallback) const { return integer(key).value_or(fallback); }

  std::optional<std::uint64_t> unsigned_integer(const std::string& key) const {
    const auto t = text(key);
    if (!t) return std::nullopt;
    std::uint64_t v = 0;
    const auto res = std::from_chars(t->data(), t->data() + t->size(), v);
    if (t->empty() || res.ec != std::errc() || res.ptr != t->data() + t->size())
      throw error(key, "expected a nonnegative integer, got '" + *t + "'");
    return v;
  }

  std::optional<bool> boolean(const std::string& key) const {
    const auto t = text(key);
    if (!t) return std::nullopt;
    if (*t == "true" || *t == "1" || *t == "yes") return true;
    if (*t == "false" || *t == "0" || *t == "no") return false;
    throw error(key, "expected true or false, got '" + *t + "'");
  }
  bool boolean(const std::string& key, bool fallback) const { return boolean(key).value_or(fallback); }

  std::optional<std::vector<std::string>> list(const std::string& key) const {
    const auto t = text(key);
    if (!t) return std::nullopt;
    if (t->empty()) return std::vector<std::string>{};
    return csv::split(*t);
  }

  std::optional<std::vector<double>> numbers(const std::string& key) const {
    const auto l = list(key);
    if (!l) return std::nullopt;
    std::vector<double> out;
    for (const auto& s : *l) out.push_back(to_number(key, s));
    return out;
  }

  /// Path relative to the config file's directory unless absolute.
  std::optional<std::string> path(const std::string& key) const {
    const auto t = text(key);
    if (!t) return std::nullopt;
    const std::filesystem::path p(*t);
    return (p.is_absolute() || base_.empty() ? p : base_ / p).lexically_normal().string();
  }

  void check_all_used() const {
    for (const auto& [key, entry] : entries_)
      if (!used_.count(key)) throw ValidationError(where(key) + "unknown key '" + key + "'");
  }

  ValidationError error(const std::string& key, const std::string& what) const { return ValidationError(where(key) + key + ": " + what); }

 private:
  struct Entry {
    std::string value;
    std::size_t line;
  };

  std::string where(const std::string& key) const {
    const auto it = entries_.find(key);
    if (it == entries_.end() || it->second.line == 0) return source_ + ": ";
    return source_ + ":" + std::to_string(it->second.line) + ": ";
  }

  double to_number(const std::string& key, const std::string& s) const {
    const auto slash = s.find('/');
    if (slash != std::string::npos) {
      const auto num = csv::parse_number(std::string_view(s).substr(0, slash));
      const auto den = csv::parse_number(std::string_view(s).substr(slash + 1));
      if (!num || !den || *den == 0.0) throw error(key, "invalid fraction '" + s + "'");
      return *num / *den;
    }
    const auto v = csv::parse_number(s);
    if (!v) throw error(key, "expected a number, got '" + s + "'");
    return *v;
  }

  std::string source_ = "<config>";
  std::filesystem::path base_;
  std::map<std::string, Entry> entries_;
  mutable std::set<std::string> used_;
};

}  // namespace ratingxva::app
