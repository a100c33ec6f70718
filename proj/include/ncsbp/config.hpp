#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

namespace ncsbp {

/// Flat `key = value` run configuration. `[section]` headers prefix later keys with
/// "section."; `#` starts a comment; strings may be quoted; lists use [a, b, c].
class KeyValueConfig {
 public:
  static KeyValueConfig parse(const std::string& text);
  static KeyValueConfig load(const std::string& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  long get_int(const std::string& key, long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<long> get_int_list(const std::string& key, const std::vector<long>& fallback) const;

  /// Keys present in the file that were never read.
  std::vector<std::string> unused_keys() const;

 private:
  const std::string* lookup(const std::string& key) const;

  std::map<std::string, std::string> values_;
  std::map<std::string, int> lines_;
  mutable std::set<std::string> used_;
};

}  // namespace ncsbp
