#pragma once

#include <map>
#include <string>
#include <vector>

namespace mmloco {

// Sectioned key = value configuration text:
//
//   [section]
//   key = value        # comment
//
// Values are fetched typed; unknown keys are detectable so the trainer can
// reject typos instead of silently ignoring them.
class ConfigFile {
 public:
  ConfigFile() = default;

  static ConfigFile parse_file(const std::string& path);
  static ConfigFile parse_string(const std::string& text);

  bool has(const std::string& section, const std::string& key) const;

  double get_double(const std::string& section, const std::string& key, double fallback) const;
  int get_int(const std::string& section, const std::string& key, int fallback) const;
  bool get_bool(const std::string& section, const std::string& key, bool fallback) const;
  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback) const;
  // Comma-separated list.
  std::vector<std::string> get_list(const std::string& section, const std::string& key,
                                    const std::vector<std::string>& fallback) const;
  std::vector<double> get_double_list(const std::string& section, const std::string& key,
                                      const std::vector<double>& fallback) const;

  // Keys present in the file but never fetched; used for config validation.
  std::vector<std::string> unused_keys() const;

 private:
  const std::string* find(const std::string& section, const std::string& key) const;

  std::map<std::string, std::string> values_;  // "section.key" -> raw value
  mutable std::map<std::string, bool> touched_;
};

}  // namespace mmloco
