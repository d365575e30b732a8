#pragma once

#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace myodyn {

// Minimal "key = value" sections format used for configs and manifests.
// Section and key order is preserved so dumps are stable and diffable.
struct IniDoc {
  struct Section {
    std::string name;
    std::vector<std::pair<std::string, std::string>> entries;

    const std::string* find(const std::string& key) const {
      for (const auto& [k, v] : entries)
        if (k == key) return &v;
      return nullptr;
    }
    void set(const std::string& key, const std::string& value) {
      for (auto& [k, v] : entries)
        if (k == key) {
          v = value;
          return;
        }
      entries.emplace_back(key, value);
    }
  };

  std::vector<Section> sections;

  Section* find(const std::string& name) {
    for (auto& s : sections)
      if (s.name == name) return &s;
    return nullptr;
  }
  const Section* find(const std::string& name) const {
    for (const auto& s : sections)
      if (s.name == name) return &s;
    return nullptr;
  }
  Section& at(const std::string& name) {
    if (auto* s = find(name)) return *s;
    sections.push_back({name, {}});
    return sections.back();
  }
};

namespace ini {

inline std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

inline IniDoc parse(const std::string& text, const std::string& origin = "<string>") {
  IniDoc doc;
  IniDoc::Section* current = nullptr;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']')
        throw std::invalid_argument(origin + ":" + std::to_string(lineno) +
                                    ": unterminated section header");
      doc.sections.push_back({trim(t.substr(1, t.size() - 2)), {}});
      current = &doc.sections.back();
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument(origin + ":" + std::to_string(lineno) +
                                  ": expected 'key = value'");
    if (!current)
      throw std::invalid_argument(origin + ":" + std::to_string(lineno) +
                                  ": entry before any [section]");
    current->entries.emplace_back(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
  return doc;
}

inline IniDoc parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path);
}

inline std::string to_string(const IniDoc& doc) {
  std::ostringstream out;
  bool first = true;
  for (const auto& s : doc.sections) {
    if (!first) out << "\n";
    first = false;
    out << "[" << s.name << "]\n";
    for (const auto& [k, v] : s.entries) out << k << " = " << v << "\n";
  }
  return out.str();
}

inline void write_file(const IniDoc& doc, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << to_string(doc);
}

// Formats a double so that parsing recovers the exact bits.
inline std::string format_double(double v) {
  char buf[32];
  snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string format_list(const std::vector<double>& v) {
  std::string out;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += format_double(v[i]);
  }
  return out;
}

inline double parse_double(const std::string& s, const std::string& what) {
  try {
    size_t pos = 0;
    const std::string t = trim(s);
    if (t == "inf") return std::numeric_limits<double>::infinity();
    const double v = std::stod(t, &pos);
    if (pos != t.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("cannot parse number for " + what + ": '" + s + "'");
  }
}

inline std::vector<double> parse_list(const std::string& s, const std::string& what) {
  std::vector<double> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) out.push_back(parse_double(item, what));
  if (out.empty()) throw std::invalid_argument("empty list for " + what);
  return out;
}

}  // namespace ini
}  // namespace myodyn
