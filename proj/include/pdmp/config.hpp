#ifndef PDMP_CONFIG_HPP
#define PDMP_CONFIG_HPP

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <string>

#include "pdmp/errors.hpp"

namespace pdmp {

// key = value sections; '#' and ';' start comments. Unknown keys are a
// hard error, enforced by the typed getters plus finish_section().
class ConfigFile {
 public:
  static ConfigFile parse_file(const std::string& path);
  static ConfigFile parse(std::istream& in, const std::string& name);

  bool has_section(const std::string& section) const;
  bool has(const std::string& section, const std::string& key) const;

  std::string get_string(const std::string& section, const std::string& key);
  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback);
  double get_double(const std::string& section, const std::string& key);
  double get_double(const std::string& section, const std::string& key, double fallback);
  std::int64_t get_int(const std::string& section, const std::string& key, std::int64_t fallback);
  std::uint64_t get_u64(const std::string& section, const std::string& key,
                        std::uint64_t fallback);

  // Throws ConfigError if the section holds keys that were never read.
  void check_consumed(const std::string& section) const;
  void check_all_consumed() const;

  // Raw access for forwarding whole sections (e.g. model parameters);
  // marks every key in the section as consumed.
  std::map<std::string, std::string> section(const std::string& name);

  std::string origin;

 private:
  struct Entry {
    std::string value;
    int line = 0;
    mutable bool consumed = false;
  };
  std::map<std::string, std::map<std::string, Entry>> sections_;
  const Entry* find(const std::string& section, const std::string& key) const;
};

}  // namespace pdmp

#endif
