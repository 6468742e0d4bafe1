#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "qkdfs/log_prob.hpp"

namespace qkdfs {

/// Malformed or incomplete run configuration. `line` is 0 when the problem is
/// not tied to a line (missing keys, command-line overrides).
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& message, int line, std::string key);
  int line() const { return line_; }
  const std::string& key() const { return key_; }

 private:
  int line_;
  std::string key_;
};

enum class ValueType { real, integer, boolean, choice, epsilon };

struct KeySpec {
  std::string name;  // "section.key"
  ValueType type;
  std::string default_value;
  std::vector<std::string> choices;  // choice type only
  std::string doc;
};

/// Every accepted key with its type, default and unit.
const std::vector<KeySpec>& config_schema();
const KeySpec* find_key(std::string_view name);

/// Sectioned key = value document:
///
///   # comment
///   [channel]
///   loss_db = 25        # trailing comments are allowed
///   [epsilon]
///   eps_pa = log2:-34   # epsilon keys take a probability or a log2 value
///
/// Values are checked against the schema while parsing.
class RunConfig {
 public:
  static RunConfig parse(std::string_view text);
  static RunConfig load(const std::string& path);

  bool has(std::string_view name) const;
  /// Overrides or adds a value, with the same checks as parsing.
  void set(std::string_view name, const std::string& value);
  /// Throws ConfigError naming the first absent key.
  void require(const std::vector<std::string>& names) const;

  double real(std::string_view name) const;
  std::int64_t integer(std::string_view name) const;
  bool boolean(std::string_view name) const;
  std::string choice(std::string_view name) const;
  LogProb epsilon(std::string_view name) const;
  /// Line the key was read from, 0 when absent or overridden.
  int line_of(std::string_view name) const;

 private:
  struct Entry {
    std::string value;
    int line = 0;
  };
  const std::string& raw(std::string_view name, const KeySpec& spec) const;
  std::map<std::string, Entry, std::less<>> entries_;
};

/// Parsing helpers shared with the command line. All are locale-independent.
double parse_real(std::string_view text);
std::int64_t parse_integer(std::string_view text);
LogProb parse_epsilon(std::string_view text);

}  // namespace qkdfs
