#include "ncsbp/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ncsbp {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) {
    return {};
  }
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string strip_comment(const std::string& line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') {
      quoted = !quoted;
    } else if (line[i] == '#' && !quoted) {
      return line.substr(0, i);
    }
  }
  return line;
}

std::string unquote(const std::string& v) {
  if (v.size() >= 2 && v.front() == '"' && v.back() == '"') {
    return v.substr(1, v.size() - 2);
  }
  return v;
}

}  // namespace

KeyValueConfig KeyValueConfig::parse(const std::string& text) {
  KeyValueConfig cfg;
  std::istringstream in(text);
  std::string raw;
  std::string section;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const std::string line = trim(strip_comment(raw));
    if (line.empty()) {
      continue;
    }
    if (line.front() == '[' && line.back() == ']' && line.find('=') == std::string::npos) {
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error("config line " + std::to_string(lineno) + ": expected key = value");
    }
    std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw std::runtime_error("config line " + std::to_string(lineno) + ": empty key or value");
    }
    if (!section.empty()) {
      key = section + "." + key;
    }
    if (cfg.values_.count(key) != 0) {
      throw std::runtime_error("config line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    }
    cfg.values_[key] = value;
    cfg.lines_[key] = lineno;
  }
  return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open config file " + path);
  }
  std::ostringstream s;
  s << in.rdbuf();
  return parse(s.str());
}

const std::string* KeyValueConfig::lookup(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) {
    return nullptr;
  }
  used_.insert(key);
  return &it->second;
}

std::string KeyValueConfig::get_string(const std::string& key, const std::string& fallback) const {
  const std::string* v = lookup(key);
  return v == nullptr ? fallback : unquote(*v);
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
  const std::string* v = lookup(key);
  if (v == nullptr) {
    return fallback;
  }
  try {
    std::size_t used = 0;
    const double d = std::stod(*v, &used);
    if (used != v->size()) {
      throw std::invalid_argument(*v);
    }
    return d;
  } catch (const std::exception&) {
    throw std::runtime_error("config key '" + key + "': expected a number, got '" + *v + "'");
  }
}

long KeyValueConfig::get_int(const std::string& key, long fallback) const {
  const std::string* v = lookup(key);
  if (v == nullptr) {
    return fallback;
  }
  long out = 0;
  const auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
  if (ec != std::errc() || ptr != v->data() + v->size()) {
    throw std::runtime_error("config key '" + key + "': expected an integer, got '" + *v + "'");
  }
  return out;
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) const {
  const std::string* v = lookup(key);
  if (v == nullptr) {
    return fallback;
  }
  if (*v == "true" || *v == "on" || *v == "1") {
    return true;
  }
  if (*v == "false" || *v == "off" || *v == "0") {
    return false;
  }
  throw std::runtime_error("config key '" + key + "': expected true/false, got '" + *v + "'");
}

std::vector<long> KeyValueConfig::get_int_list(const std::string& key, const std::vector<long>& fallback) const {
  const std::string* v = lookup(key);
  if (v == nullptr) {
    return fallback;
  }
  std::string body = *v;
  if (body.size() >= 2 && body.front() == '[' && body.back() == ']') {
    body = body.substr(1, body.size() - 2);
  }
  std::vector<long> out;
  std::istringstream in(body);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (item.empty()) {
      continue;
    }
    long x = 0;
    const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), x);
    if (ec != std::errc() || ptr != item.data() + item.size()) {
      throw std::runtime_error("config key '" + key + "': bad list entry '" + item + "'");
    }
    out.push_back(x);
  }
  return out;
}

std::vector<std::string> KeyValueConfig::unused_keys() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : values_) {
    if (used_.count(k) == 0) {
      out.push_back(k);
    }
  }
  return out;
}

}  // namespace ncsbp
