#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace cfgnn {

/// Flat key-value configuration with section-prefixed keys
/// ("trainer.c_min = 2"). Lines starting with '#' and blank lines are
/// ignored. Keys read through the typed getters are marked consumed so a
/// caller can reject unknown entries afterwards.
class KeyValueConfig {
 public:
  KeyValueConfig() = default;

  static KeyValueConfig from_string(const std::string& text, const std::string& origin = "<string>") {
    KeyValueConfig cfg;
    cfg.origin_ = origin;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      const std::string trimmed = trim(line);
      if (trimmed.empty() || trimmed[0] == '#') continue;
      const auto eq = trimmed.find('=');
      if (eq == std::string::npos)
        throw std::runtime_error(origin + ":" + std::to_string(line_no) + ": expected 'key = value'");
      const std::string key = trim(trimmed.substr(0, eq));
      const std::string value = trim(trimmed.substr(eq + 1));
      if (key.empty()) throw std::runtime_error(origin + ":" + std::to_string(line_no) + ": empty key");
      if (cfg.entries_.count(key))
        throw std::runtime_error(origin + ":" + std::to_string(line_no) + ": duplicate key '" + key + "'");
      cfg.entries_[key] = value;
    }
    return cfg;
  }

  static KeyValueConfig from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_string(buf.str(), path);
  }

  bool has(const std::string& key) const { return entries_.count(key) > 0; }

  std::string get_string(const std::string& key, const std::string& fallback) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    consumed_.insert(key);
    return it->second;
  }

  double get_double(const std::string& key, double fallback) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    consumed_.insert(key);
    return parse_double(key, it->second);
  }

  int get_int(const std::string& key, int fallback) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    consumed_.insert(key);
    return parse_int(key, it->second);
  }

  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    consumed_.insert(key);
    std::size_t pos = 0;
    std::uint64_t v = 0;
    try {
      v = std::stoull(it->second, &pos);
    } catch (const std::exception&) {
      throw std::runtime_error(bad_value(key, it->second));
    }
    if (pos != it->second.size()) throw std::runtime_error(bad_value(key, it->second));
    return v;
  }

  bool get_bool(const std::string& key, bool fallback) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    consumed_.insert(key);
    const std::string& v = it->second;
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw std::runtime_error(bad_value(key, v));
  }

  std::vector<int> get_int_list(const std::string& key, const std::vector<int>& fallback) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    consumed_.insert(key);
    std::vector<int> out;
    std::istringstream ss(it->second);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_int(key, trim(item)));
    if (out.empty()) throw std::runtime_error(bad_value(key, it->second));
    return out;
  }

  /// Throws on any entry never read through a getter; catches config typos.
  void check_all_consumed() const {
    for (const auto& [key, value] : entries_) {
      if (!consumed_.count(key))
        throw std::runtime_error(origin_ + ": unknown configuration key '" + key + "'");
    }
  }

  const std::map<std::string, std::string>& entries() const { return entries_; }

 private:
  static std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
  }

  std::string bad_value(const std::string& key, const std::string& value) const {
    return origin_ + ": invalid value '" + value + "' for key '" + key + "'";
  }

  double parse_double(const std::string& key, const std::string& value) const {
    std::size_t pos = 0;
    double v = 0.0;
    try {
      v = std::stod(value, &pos);
    } catch (const std::exception&) {
      throw std::runtime_error(bad_value(key, value));
    }
    if (pos != value.size()) throw std::runtime_error(bad_value(key, value));
    return v;
  }

  int parse_int(const std::string& key, const std::string& value) const {
    std::size_t pos = 0;
    int v = 0;
    try {
      v = std::stoi(value, &pos);
    } catch (const std::exception&) {
      throw std::runtime_error(bad_value(key, value));
    }
    if (pos != value.size()) throw std::runtime_error(bad_value(key, value));
    return v;
  }

  std::string origin_ = "<empty>";
  std::map<std::string, std::string> entries_;
  mutable std::set<std::string> consumed_;
};

}  // namespace cfgnn
