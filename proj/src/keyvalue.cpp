#include "auxiva/keyvalue.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace auxiva {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

KeyValueFile KeyValueFile::parse(const std::string& text, const std::string& origin) {
  KeyValueFile kv;
  kv.origin_ = origin;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
    }
    kv.entries_[key] = Entry{trim(line.substr(eq + 1)), lineno};
  }
  return kv;
}

KeyValueFile KeyValueFile::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open config file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path);
}

void KeyValueFile::fail(const std::string& key, const std::string& message) const {
  const auto it = entries_.find(key);
  const std::string where =
      it != entries_.end() && it->second.line > 0 ? origin_ + ":" + std::to_string(it->second.line) : origin_;
  throw ConfigError(where + ": " + key + ": " + message);
}

std::string KeyValueFile::get(const std::string& key, const std::string& fallback) const {
  const auto it = entries_.find(key);
  return it == entries_.end() ? fallback : it->second.value;
}

double KeyValueFile::get_double(const std::string& key, double fallback) const {
  if (!has(key)) return fallback;
  const std::string v = get(key);
  std::size_t used = 0;
  double d = 0.0;
  try {
    d = std::stod(v, &used);
  } catch (const std::logic_error&) {
    fail(key, "expected a number, got '" + v + "'");
  }
  if (used != v.size()) fail(key, "trailing characters in number '" + v + "'");
  return d;
}

long KeyValueFile::get_long(const std::string& key, long fallback) const {
  if (!has(key)) return fallback;
  const std::string v = get(key);
  long out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    fail(key, "expected an integer, got '" + v + "'");
  }
  return out;
}

std::vector<std::string> KeyValueFile::get_list(const std::string& key) const {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(get(key));
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<double> KeyValueFile::get_doubles(const std::string& key) const {
  std::vector<double> out;
  std::string v = get(key);
  for (char& c : v)
    if (c == ',' || c == ';') c = ' ';
  std::istringstream in(v);
  std::string tok;
  while (in >> tok) {
    std::size_t used = 0;
    try {
      out.push_back(std::stod(tok, &used));
    } catch (const std::logic_error&) {
      fail(key, "bad number '" + tok + "'");
    }
    if (used != tok.size()) fail(key, "bad number '" + tok + "'");
  }
  return out;
}

void KeyValueFile::check_keys(const std::set<std::string>& allowed,
                              const std::vector<std::string>& prefixes) const {
  for (const auto& [key, entry] : entries_) {
    if (allowed.count(key)) continue;
    bool ok = false;
    for (const auto& p : prefixes) ok = ok || key.rfind(p, 0) == 0;
    if (!ok) fail(key, "unknown key");
  }
}

std::vector<std::string> KeyValueFile::keys_with_prefix(const std::string& prefix) const {
  std::vector<std::string> out;
  for (const auto& [key, entry] : entries_)
    if (key.rfind(prefix, 0) == 0) out.push_back(key);
  return out;
}

}  // namespace auxiva
