#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace radon::config {

/// Minimal TOML-style key = value reader: scalars (string, number, bool)
/// and single-line string arrays. '#' starts a comment.
class KvFile {
 public:
  static KvFile parse(const std::string& path);
  static KvFile parse_text(const std::string& text, const std::string& origin = "<string>");

  bool has(const std::string& key) const { return values_.count(key) || lists_.count(key); }

  std::string get_string(const std::string& key) const;
  std::string get_string_or(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double_or(const std::string& key, double fallback) const;
  int64_t get_int_or(const std::string& key, int64_t fallback) const;
  bool get_bool_or(const std::string& key, bool fallback) const;
  std::vector<std::string> get_string_list(const std::string& key) const;

 private:
  std::string origin_;
  std::map<std::string, std::string> values_;
  std::map<std::string, std::vector<std::string>> lists_;
};

}  // namespace radon::config
