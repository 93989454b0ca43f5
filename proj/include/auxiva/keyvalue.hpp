#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "auxiva/errors.hpp"

namespace auxiva {

/// Invalid configuration text; the message carries origin and line number.
class ConfigError : public ContractViolation {
 public:
  using ContractViolation::ContractViolation;
};

/// Flat `key = value` text with `#` comments. Later keys override earlier
/// ones.
class KeyValueFile {
 public:
  static KeyValueFile parse(const std::string& text, const std::string& origin = "<string>");
  static KeyValueFile load(const std::string& path);

  bool has(const std::string& key) const { return entries_.count(key) != 0; }
  const std::string& origin() const noexcept { return origin_; }

  std::string get(const std::string& key, const std::string& fallback = {}) const;
  double get_double(const std::string& key, double fallback) const;
  long get_long(const std::string& key, long fallback) const;
  std::vector<double> get_doubles(const std::string& key) const;
  std::vector<std::string> get_list(const std::string& key) const;

  void set(const std::string& key, const std::string& value) { entries_[key] = {value, 0}; }

  /// Rejects keys that are neither in `allowed` nor match an allowed prefix.
  void check_keys(const std::set<std::string>& allowed,
                  const std::vector<std::string>& prefixes = {}) const;

  std::vector<std::string> keys_with_prefix(const std::string& prefix) const;

  [[noreturn]] void fail(const std::string& key, const std::string& message) const;

 private:
  struct Entry {
    std::string value;
    int line = 0;
  };
  std::string origin_;
  std::map<std::string, Entry> entries_;
};

}  // namespace auxiva
