#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace stackgame::config {

// Flat key-value configuration text: '#' comments, [section] headers,
// `key = value` lines. Unknown sections or keys are rejected by the loaders
// so typos fail loudly. Grammar documented in the README.
class KeyValueFile {
 public:
  static KeyValueFile parse(std::istream& in);         // throws std::runtime_error
  static KeyValueFile parse_file(const std::string& path);

  // Applies a `section.key=value` override (command line beats file).
  void set(const std::string& dotted_key, const std::string& value);

  bool has(const std::string& section, const std::string& key) const;
  std::string get(const std::string& section, const std::string& key,
                  const std::string& fallback) const;
  long get_long(const std::string& section, const std::string& key,
                long fallback) const;
  double get_double(const std::string& section, const std::string& key,
                    double fallback) const;
  bool get_bool(const std::string& section, const std::string& key,
                bool fallback) const;
  std::vector<double> get_list(const std::string& section,
                               const std::string& key) const;

  const std::map<std::string, std::map<std::string, std::string>>& sections()
      const noexcept {
    return sections_;
  }

 private:
  std::map<std::string, std::map<std::string, std::string>> sections_;
};

}  // namespace stackgame::config
