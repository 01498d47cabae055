#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>

namespace caaas {

// Plain `key = value` configuration. Blank lines and lines starting with '#'
// are ignored; later duplicates override earlier ones.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::string_view text);
  // Throws Error{IoError} when the file cannot be read.
  static KeyValueConfig load(const std::string& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  // Throws Error{ConfigError} when missing or malformed.
  const std::string& get(const std::string& key) const;
  double get_double(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;

  double get_double_or(const std::string& key, double fallback) const;
  std::uint64_t get_u64_or(const std::string& key, std::uint64_t fallback) const;

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace caaas
