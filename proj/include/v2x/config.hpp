#pragma once

#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "v2x/common.hpp"

namespace v2x {

// INI-style config: [section] headers, key = value lines, '#' or ';' comments.
// List values are comma separated.
class IniFile {
 public:
  static IniFile parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_string(ss.str(), path);
  }

  static IniFile parse_string(const std::string& text, const std::string& origin = "<string>") {
    IniFile ini;
    std::istringstream in(text);
    std::string line;
    std::string section;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      std::string s = strip_comment(line);
      s = trim(s);
      if (s.empty()) continue;
      if (s.front() == '[') {
        if (s.back() != ']')
          throw ParseError(origin + ":" + std::to_string(lineno) + ": unterminated section header");
        section = trim(s.substr(1, s.size() - 2));
        if (section.empty())
          throw ParseError(origin + ":" + std::to_string(lineno) + ": empty section name");
        ini.sections_[section];
        continue;
      }
      auto eq = s.find('=');
      if (eq == std::string::npos)
        throw ParseError(origin + ":" + std::to_string(lineno) + ": expected key = value");
      std::string key = trim(s.substr(0, eq));
      std::string value = trim(s.substr(eq + 1));
      if (key.empty())
        throw ParseError(origin + ":" + std::to_string(lineno) + ": empty key");
      ini.sections_[section][key] = value;
    }
    return ini;
  }

  bool has(const std::string& section, const std::string& key) const {
    auto s = sections_.find(section);
    return s != sections_.end() && s->second.count(key) > 0;
  }

  std::optional<std::string> get(const std::string& section, const std::string& key) const {
    auto s = sections_.find(section);
    if (s == sections_.end()) return std::nullopt;
    auto k = s->second.find(key);
    if (k == s->second.end()) return std::nullopt;
    return k->second;
  }

  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& def) const {
    auto v = get(section, key);
    return v ? *v : def;
  }

  double get_double(const std::string& section, const std::string& key, double def) const {
    auto v = get(section, key);
    if (!v) return def;
    try {
      std::size_t pos = 0;
      double d = std::stod(*v, &pos);
      if (pos != v->size()) throw std::invalid_argument("trailing");
      return d;
    } catch (const std::exception&) {
      throw ConfigError("[" + section + "] " + key + ": not a number: " + *v);
    }
  }

  long long get_int(const std::string& section, const std::string& key, long long def) const {
    auto v = get(section, key);
    if (!v) return def;
    try {
      std::size_t pos = 0;
      long long i = std::stoll(*v, &pos);
      if (pos != v->size()) throw std::invalid_argument("trailing");
      return i;
    } catch (const std::exception&) {
      throw ConfigError("[" + section + "] " + key + ": not an integer: " + *v);
    }
  }

  bool get_bool(const std::string& section, const std::string& key, bool def) const {
    auto v = get(section, key);
    if (!v) return def;
    if (*v == "true" || *v == "1" || *v == "yes") return true;
    if (*v == "false" || *v == "0" || *v == "no") return false;
    throw ConfigError("[" + section + "] " + key + ": not a boolean: " + *v);
  }

  std::vector<double> get_double_list(const std::string& section, const std::string& key,
                                      std::vector<double> def = {}) const {
    auto v = get(section, key);
    if (!v) return def;
    return parse_double_list(*v, "[" + section + "] " + key);
  }

  std::vector<std::string> get_string_list(const std::string& section,
                                           const std::string& key,
                                           std::vector<std::string> def = {}) const {
    auto v = get(section, key);
    if (!v) return def;
    std::vector<std::string> out;
    for (const auto& item : split(*v, ',')) {
      auto t = trim(item);
      if (!t.empty()) out.push_back(t);
    }
    return out;
  }

  static std::vector<double> parse_double_list(const std::string& text,
                                               const std::string& context) {
    std::vector<double> out;
    for (const auto& item : split(text, ',')) {
      auto t = trim(item);
      if (t.empty()) continue;
      try {
        out.push_back(std::stod(t));
      } catch (const std::exception&) {
        throw ConfigError(context + ": not a number: " + t);
      }
    }
    return out;
  }

  static std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
      if (c == sep) {
        out.push_back(cur);
        cur.clear();
      } else {
        cur.push_back(c);
      }
    }
    out.push_back(cur);
    return out;
  }

  static std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
  }

 private:
  static std::string strip_comment(const std::string& s) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] == '#' || s[i] == ';') return s.substr(0, i);
    }
    return s;
  }

  std::map<std::string, std::map<std::string, std::string>> sections_;
};

}  // namespace v2x
