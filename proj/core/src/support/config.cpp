#include "mmloco/support/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace mmloco {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

}  // namespace

ConfigFile ConfigFile::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_string(ss.str());
}

ConfigFile ConfigFile::parse_string(const std::string& text) {
  ConfigFile cfg;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw std::runtime_error("config line " + std::to_string(line_no) + ": unterminated section");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config line " + std::to_string(line_no) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw std::runtime_error("config line " + std::to_string(line_no) + ": empty key");
    cfg.values_[section + "." + key] = value;
  }
  return cfg;
}

const std::string* ConfigFile::find(const std::string& section, const std::string& key) const {
  auto it = values_.find(section + "." + key);
  if (it == values_.end()) return nullptr;
  touched_[it->first] = true;
  return &it->second;
}

bool ConfigFile::has(const std::string& section, const std::string& key) const {
  return values_.count(section + "." + key) > 0;
}

double ConfigFile::get_double(const std::string& section, const std::string& key,
                              double fallback) const {
  const std::string* raw = find(section, key);
  if (!raw) return fallback;
  try {
    std::size_t pos = 0;
    double v = std::stod(*raw, &pos);
    if (pos != raw->size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error("config " + section + "." + key + ": not a number: " + *raw);
  }
}

int ConfigFile::get_int(const std::string& section, const std::string& key, int fallback) const {
  const std::string* raw = find(section, key);
  if (!raw) return fallback;
  try {
    std::size_t pos = 0;
    int v = std::stoi(*raw, &pos);
    if (pos != raw->size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error("config " + section + "." + key + ": not an integer: " + *raw);
  }
}

bool ConfigFile::get_bool(const std::string& section, const std::string& key, bool fallback) const {
  const std::string* raw = find(section, key);
  if (!raw) return fallback;
  std::string v = *raw;
  std::transform(v.begin(), v.end(), v.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw std::runtime_error("config " + section + "." + key + ": not a boolean: " + *raw);
}

std::string ConfigFile::get_string(const std::string& section, const std::string& key,
                                   const std::string& fallback) const {
  const std::string* raw = find(section, key);
  return raw ? *raw : fallback;
}

std::vector<std::string> ConfigFile::get_list(const std::string& section, const std::string& key,
                                              const std::vector<std::string>& fallback) const {
  const std::string* raw = find(section, key);
  if (!raw) return fallback;
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(*raw);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<double> ConfigFile::get_double_list(const std::string& section, const std::string& key,
                                                const std::vector<double>& fallback) const {
  const std::string* raw = find(section, key);
  if (!raw) return fallback;
  std::vector<double> out;
  std::string item;
  std::istringstream in(*raw);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    out.push_back(std::stod(item));
  }
  return out;
}

std::vector<std::string> ConfigFile::unused_keys() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : values_) {
    (void)v;
    if (!touched_.count(k)) out.push_back(k);
  }
  return out;
}

}  // namespace mmloco
