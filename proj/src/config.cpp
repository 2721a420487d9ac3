#include "stackgame/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace stackgame::config {

namespace {

std::string trim(const std::string& s) {
  const std::size_t first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const std::size_t last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

KeyValueFile KeyValueFile::parse(std::istream& in) {
  KeyValueFile file;
  std::string line;
  std::string section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw std::runtime_error("config line " + std::to_string(line_no) +
                                 ": malformed section header");
      }
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) {
        throw std::runtime_error("config line " + std::to_string(line_no) +
                                 ": empty section name");
      }
      file.sections_[section];
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error("config line " + std::to_string(line_no) +
                               ": expected key = value");
    }
    if (section.empty()) {
      throw std::runtime_error("config line " + std::to_string(line_no) +
                               ": key outside any [section]");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw std::runtime_error("config line " + std::to_string(line_no) +
                               ": empty key");
    }
    file.sections_[section][key] = value;
  }
  return file;
}

KeyValueFile KeyValueFile::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  return parse(in);
}

void KeyValueFile::set(const std::string& dotted_key, const std::string& value) {
  const std::size_t dot = dotted_key.find('.');
  if (dot == std::string::npos || dot == 0 || dot + 1 == dotted_key.size()) {
    throw std::runtime_error("override must be section.key=value, got: " +
                             dotted_key);
  }
  sections_[dotted_key.substr(0, dot)][dotted_key.substr(dot + 1)] = value;
}

bool KeyValueFile::has(const std::string& section, const std::string& key) const {
  const auto sit = sections_.find(section);
  if (sit == sections_.end()) return false;
  const auto kit = sit->second.find(key);
  return kit != sit->second.end() && !kit->second.empty();
}

std::string KeyValueFile::get(const std::string& section, const std::string& key,
                              const std::string& fallback) const {
  if (!has(section, key)) return fallback;
  return sections_.at(section).at(key);
}

long KeyValueFile::get_long(const std::string& section, const std::string& key,
                            long fallback) const {
  if (!has(section, key)) return fallback;
  const std::string v = sections_.at(section).at(key);
  try {
    std::size_t pos = 0;
    const long out = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw std::runtime_error("config: " + section + "." + key +
                             " is not an integer: " + v);
  }
}

double KeyValueFile::get_double(const std::string& section,
                                const std::string& key, double fallback) const {
  if (!has(section, key)) return fallback;
  const std::string v = sections_.at(section).at(key);
  try {
    std::size_t pos = 0;
    const double out = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw std::runtime_error("config: " + section + "." + key +
                             " is not a number: " + v);
  }
}

bool KeyValueFile::get_bool(const std::string& section, const std::string& key,
                            bool fallback) const {
  if (!has(section, key)) return fallback;
  const std::string v = sections_.at(section).at(key);
  if (v == "on" || v == "true" || v == "1") return true;
  if (v == "off" || v == "false" || v == "0") return false;
  throw std::runtime_error("config: " + section + "." + key +
                           " must be on/off, got: " + v);
}

std::vector<double> KeyValueFile::get_list(const std::string& section,
                                           const std::string& key) const {
  std::vector<double> out;
  if (!has(section, key)) return out;
  std::istringstream iss(sections_.at(section).at(key));
  double v;
  while (iss >> v) out.push_back(v);
  if (!iss.eof()) {
    throw std::runtime_error("config: " + section + "." + key +
                             " is not a list of numbers");
  }
  return out;
}

}  // namespace stackgame::config
