#include "pdmp/config.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace pdmp {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

}  // namespace

ConfigFile ConfigFile::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  return parse(in, path);
}

ConfigFile ConfigFile::parse(std::istream& in, const std::string& name) {
  ConfigFile cfg;
  cfg.origin = name;
  std::string line;
  std::string section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto comment = line.find_first_of("#;");
    if (comment != std::string::npos) line = line.substr(0, comment);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError(name + ":" + std::to_string(line_no) + ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty())
        throw ConfigError(name + ":" + std::to_string(line_no) + ": empty section name");
      cfg.sections_[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(name + ":" + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw ConfigError(name + ":" + std::to_string(line_no) + ": empty key");
    if (section.empty())
      throw ConfigError(name + ":" + std::to_string(line_no) + ": key outside any section");
    auto [it, inserted] = cfg.sections_[section].emplace(key, Entry{value, line_no, false});
    if (!inserted)
      throw ConfigError(name + ":" + std::to_string(line_no) + ": duplicate key '" + key + "'");
  }
  return cfg;
}

bool ConfigFile::has_section(const std::string& section) const {
  return sections_.count(section) > 0;
}

bool ConfigFile::has(const std::string& section, const std::string& key) const {
  return find(section, key) != nullptr;
}

const ConfigFile::Entry* ConfigFile::find(const std::string& section,
                                          const std::string& key) const {
  auto sit = sections_.find(section);
  if (sit == sections_.end()) return nullptr;
  auto kit = sit->second.find(key);
  if (kit == sit->second.end()) return nullptr;
  return &kit->second;
}

std::string ConfigFile::get_string(const std::string& section, const std::string& key) {
  const Entry* e = find(section, key);
  if (!e) throw ConfigError(origin + ": missing required key [" + section + "] " + key);
  e->consumed = true;
  return e->value;
}

std::string ConfigFile::get_string(const std::string& section, const std::string& key,
                                   const std::string& fallback) {
  const Entry* e = find(section, key);
  if (!e) return fallback;
  e->consumed = true;
  return e->value;
}

double ConfigFile::get_double(const std::string& section, const std::string& key) {
  const std::string raw = get_string(section, key);
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(raw.c_str(), &end);
  if (errno != 0 || end == raw.c_str() || *end != '\0')
    throw ConfigError(origin + ": [" + section + "] " + key + " is not a number: '" + raw + "'");
  return v;
}

double ConfigFile::get_double(const std::string& section, const std::string& key,
                              double fallback) {
  if (!has(section, key)) return fallback;
  return get_double(section, key);
}

std::int64_t ConfigFile::get_int(const std::string& section, const std::string& key,
                                 std::int64_t fallback) {
  if (!has(section, key)) return fallback;
  const std::string raw = get_string(section, key);
  errno = 0;
  char* end = nullptr;
  const long long v = std::strtoll(raw.c_str(), &end, 10);
  if (errno != 0 || end == raw.c_str() || *end != '\0')
    throw ConfigError(origin + ": [" + section + "] " + key + " is not an integer: '" + raw + "'");
  return v;
}

std::uint64_t ConfigFile::get_u64(const std::string& section, const std::string& key,
                                  std::uint64_t fallback) {
  if (!has(section, key)) return fallback;
  const std::string raw = get_string(section, key);
  errno = 0;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(raw.c_str(), &end, 10);
  if (errno != 0 || end == raw.c_str() || *end != '\0')
    throw ConfigError(origin + ": [" + section + "] " + key + " is not an integer: '" + raw + "'");
  return v;
}

void ConfigFile::check_consumed(const std::string& section) const {
  auto sit = sections_.find(section);
  if (sit == sections_.end()) return;
  for (const auto& [key, entry] : sit->second)
    if (!entry.consumed)
      throw ConfigError(origin + ":" + std::to_string(entry.line) + ": unknown key '" + key +
                        "' in section [" + section + "]");
}

void ConfigFile::check_all_consumed() const {
  for (const auto& [section, entries] : sections_)
    for (const auto& [key, entry] : entries)
      if (!entry.consumed)
        throw ConfigError(origin + ":" + std::to_string(entry.line) + ": unknown key '" + key +
                          "' in section [" + section + "]");
}

std::map<std::string, std::string> ConfigFile::section(const std::string& name) {
  std::map<std::string, std::string> view;
  auto sit = sections_.find(name);
  if (sit == sections_.end()) return view;
  for (const auto& [key, entry] : sit->second) {
    entry.consumed = true;
    view[key] = entry.value;
  }
  return view;
}

}  // namespace pdmp
