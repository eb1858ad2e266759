#pragma once

#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace hypercone::kv {

/// Plain-text key = value configuration. '#' starts a comment; blank lines
/// are ignored. Parse errors carry the 1-based line number.
class Config {
 public:
  static Config parse(std::istream& in, const std::string& source_name = "<config>");
  static Config parse_string(const std::string& text, const std::string& source_name = "<config>");
  static Config parse_file(const std::string& path);
  /// Assemble a config directly (used for command-line overrides).
  static Config from_values(std::map<std::string, std::string> values,
                            const std::string& source_name = "<override>");

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string get(const std::string& key) const;
  std::string get_or(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double_or(const std::string& key, double fallback) const;
  long get_int(const std::string& key) const;
  long get_int_or(const std::string& key, long fallback) const;
  bool get_bool_or(const std::string& key, bool fallback) const;
  /// Whitespace-separated list of doubles.
  std::vector<double> get_doubles(const std::string& key) const;
  /// Whitespace-separated list of words.
  std::vector<std::string> get_words(const std::string& key) const;

  const std::map<std::string, std::string>& values() const { return values_; }
  const std::string& source() const { return source_; }
  int line_of(const std::string& key) const;

 private:
  [[noreturn]] void fail(const std::string& key, const std::string& what) const;

  std::map<std::string, std::string> values_;
  std::map<std::string, int> lines_;
  std::string source_;
};

}  // namespace hypercone::kv
