#include "radon/config.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "radon/errors.hpp"

namespace radon::config {

namespace {
std::string trim(const std::string& s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::string unquote(const std::string& s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
  return s;
}

[[noreturn]] void fail(const std::string& origin, size_t line, const std::string& what) {
  std::ostringstream os;
  os << "config: " << what << " at " << origin << ":" << line;
  throw BadInput(os.str());
}
}  // namespace

KvFile KvFile::parse(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw BadInput("config: cannot open: " + path);
  std::ostringstream buf;
  buf << is.rdbuf();
  return parse_text(buf.str(), path);
}

KvFile KvFile::parse_text(const std::string& text, const std::string& origin) {
  KvFile kv;
  kv.origin_ = origin;
  std::istringstream is(text);
  std::string line;
  size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    // strip comments outside quotes
    bool in_quote = false;
    for (size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') in_quote = !in_quote;
      if (line[i] == '#' && !in_quote) {
        line = line.substr(0, i);
        break;
      }
    }
    line = trim(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos) fail(origin, lineno, "missing '='");
    const std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    if (key.empty()) fail(origin, lineno, "empty key");
    if (kv.has(key)) fail(origin, lineno, "duplicate key '" + key + "'");

    if (!val.empty() && val.front() == '[') {
      if (val.back() != ']') fail(origin, lineno, "unterminated array");
      std::vector<std::string> items;
      std::string body = val.substr(1, val.size() - 2);
      std::string cur;
      bool q = false;
      for (char c : body) {
        if (c == '"') { q = !q; cur.push_back(c); continue; }
        if (c == ',' && !q) {
          const std::string item = trim(cur);
          if (!item.empty()) items.push_back(unquote(item));
          cur.clear();
          continue;
        }
        cur.push_back(c);
      }
      const std::string item = trim(cur);
      if (!item.empty()) items.push_back(unquote(item));
      kv.lists_[key] = std::move(items);
    } else {
      kv.values_[key] = unquote(val);
    }
  }
  return kv;
}

std::string KvFile::get_string(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw BadInput("config: missing key '" + key + "' in " + origin_);
  return it->second;
}

std::string KvFile::get_string_or(const std::string& key, const std::string& fallback) const {
  auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

double KvFile::get_double(const std::string& key) const {
  const std::string s = get_string(key);
  try {
    size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw BadInput("config: key '" + key + "' is not a number in " + origin_);
  }
}

double KvFile::get_double_or(const std::string& key, double fallback) const {
  return values_.count(key) ? get_double(key) : fallback;
}

int64_t KvFile::get_int_or(const std::string& key, int64_t fallback) const {
  if (!values_.count(key)) return fallback;
  const std::string s = get_string(key);
  try {
    size_t pos = 0;
    const int64_t v = std::stoll(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw BadInput("config: key '" + key + "' is not an integer in " + origin_);
  }
}

bool KvFile::get_bool_or(const std::string& key, bool fallback) const {
  if (!values_.count(key)) return fallback;
  const std::string s = get_string(key);
  if (s == "true") return true;
  if (s == "false") return false;
  throw BadInput("config: key '" + key + "' is not a bool in " + origin_);
}

std::vector<std::string> KvFile::get_string_list(const std::string& key) const {
  auto it = lists_.find(key);
  if (it == lists_.end()) {
    if (values_.count(key)) return {values_.at(key)};
    return {};
  }
  return it->second;
}

}  // namespace radon::config
