#pragma once

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "uvloss/numfmt.hpp"

namespace uvloss {

/// Sectioned key/value configuration ("[section]" headers, "key = value"
/// lines, "#" comments). Lookups are tracked so unknown fields can be
/// reported by name after a command has consumed everything it understands.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::istream& in, const std::string& origin) {
    KeyValueConfig cfg;
    cfg.origin_ = origin;
    std::string line;
    std::string section;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto comment = line.find('#');
      if (comment != std::string::npos) line.erase(comment);
      const std::string trimmed = trim(line);
      if (trimmed.empty()) continue;
      if (trimmed.front() == '[') {
        if (trimmed.back() != ']') {
          throw std::invalid_argument(origin + ":" + std::to_string(lineno) +
                                      ": unterminated section header");
        }
        section = trim(trimmed.substr(1, trimmed.size() - 2));
        if (section.empty()) {
          throw std::invalid_argument(origin + ":" + std::to_string(lineno) + ": empty section name");
        }
        continue;
      }
      const auto eq = trimmed.find('=');
      if (eq == std::string::npos) {
        throw std::invalid_argument(origin + ":" + std::to_string(lineno) +
                                    ": expected 'key = value', got '" + trimmed + "'");
      }
      const std::string key = trim(trimmed.substr(0, eq));
      const std::string value = trim(trimmed.substr(eq + 1));
      if (key.empty()) {
        throw std::invalid_argument(origin + ":" + std::to_string(lineno) + ": empty key");
      }
      if (!cfg.entries_[section].emplace(key, value).second) {
        throw std::invalid_argument(origin + ":" + std::to_string(lineno) + ": duplicate key '" +
                                    key + "' in section [" + section + "]");
      }
      cfg.key_order_[section].push_back(key);
    }
    return cfg;
  }

  static KeyValueConfig parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    return parse(in, path);
  }

  static KeyValueConfig parse_string(const std::string& text, const std::string& origin = "<config>") {
    std::istringstream in(text);
    return parse(in, origin);
  }

  bool has(const std::string& section, const std::string& key) const {
    const auto s = entries_.find(section);
    return s != entries_.end() && s->second.count(key) > 0;
  }

  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback) const {
    mark_consumed(section, key);
    const auto s = entries_.find(section);
    if (s == entries_.end()) return fallback;
    const auto k = s->second.find(key);
    return k == s->second.end() ? fallback : k->second;
  }

  double get_double(const std::string& section, const std::string& key, double fallback) const {
    if (!has(section, key)) {
      mark_consumed(section, key);
      return fallback;
    }
    return parse_double(get_string(section, key, ""), field_name(section, key));
  }

  int64_t get_int(const std::string& section, const std::string& key, int64_t fallback) const {
    if (!has(section, key)) {
      mark_consumed(section, key);
      return fallback;
    }
    return parse_int(get_string(section, key, ""), field_name(section, key));
  }

  bool get_bool(const std::string& section, const std::string& key, bool fallback) const {
    if (!has(section, key)) {
      mark_consumed(section, key);
      return fallback;
    }
    const std::string v = get_string(section, key, "");
    if (v == "true") return true;
    if (v == "false") return false;
    throw std::invalid_argument(field_name(section, key) + ": expected true or false, got '" + v +
                                "'");
  }

  std::vector<double> get_double_list(const std::string& section, const std::string& key,
                                      const std::vector<double>& fallback) const {
    if (!has(section, key)) {
      mark_consumed(section, key);
      return fallback;
    }
    std::vector<double> out;
    for (const std::string& item : split_list(get_string(section, key, ""))) {
      out.push_back(parse_double(item, field_name(section, key)));
    }
    return out;
  }

  std::vector<std::string> get_string_list(const std::string& section, const std::string& key,
                                           const std::vector<std::string>& fallback) const {
    if (!has(section, key)) {
      mark_consumed(section, key);
      return fallback;
    }
    return split_list(get_string(section, key, ""));
  }

  /// Key/value pairs of one section in file order (for free-form sections
  /// such as weight tables). Consumes the whole section.
  std::vector<std::pair<std::string, std::string>> section_items(const std::string& section) const {
    std::vector<std::pair<std::string, std::string>> out;
    const auto s = entries_.find(section);
    if (s == entries_.end()) return out;
    const auto& order = key_order_.at(section);
    for (const std::string& key : order) {
      mark_consumed(section, key);
      out.emplace_back(key, s->second.at(key));
    }
    return out;
  }

  bool has_section(const std::string& section) const { return entries_.count(section) > 0; }

  /// Throws for the first field that no lookup touched, naming it.
  void reject_unconsumed() const {
    for (const auto& [section, keys] : entries_) {
      for (const auto& order_key : key_order_.at(section)) {
        (void)keys;
        if (!consumed_.count(field_name(section, order_key))) {
          throw std::invalid_argument(origin_ + ": unknown config field '" + order_key +
                                      "' in section [" + section + "]");
        }
      }
    }
  }

  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
  }

  static std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, ',')) {
      const std::string t = trim(item);
      if (!t.empty()) out.push_back(t);
    }
    return out;
  }

 private:
  static std::string field_name(const std::string& section, const std::string& key) {
    return "[" + section + "] " + key;
  }

  void mark_consumed(const std::string& section, const std::string& key) const {
    consumed_.insert(field_name(section, key));
  }

  std::string origin_;
  std::map<std::string, std::map<std::string, std::string>> entries_;
  std::map<std::string, std::vector<std::string>> key_order_;
  mutable std::set<std::string> consumed_;
};

}  // namespace uvloss
