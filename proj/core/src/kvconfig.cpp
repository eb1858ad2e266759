#include "hypercone/kvconfig.hpp"

#include <fstream>

namespace hypercone::kv {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

Config Config::parse(std::istream& in, const std::string& source_name) {
  Config cfg;
  cfg.source_ = source_name;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      std::ostringstream msg;
      msg << source_name << ":" << lineno << ": expected 'key = value', got '" << body << "'";
      throw std::runtime_error(msg.str());
    }
    const std::string key = trim(body.substr(0, eq));
    const std::string value = trim(body.substr(eq + 1));
    if (key.empty()) {
      std::ostringstream msg;
      msg << source_name << ":" << lineno << ": empty key";
      throw std::runtime_error(msg.str());
    }
    if (cfg.values_.count(key)) {
      std::ostringstream msg;
      msg << source_name << ":" << lineno << ": duplicate key '" << key
          << "' (first set on line " << cfg.lines_[key] << ")";
      throw std::runtime_error(msg.str());
    }
    cfg.values_[key] = value;
    cfg.lines_[key] = lineno;
  }
  return cfg;
}

Config Config::parse_string(const std::string& text, const std::string& source_name) {
  std::istringstream in(text);
  return parse(in, source_name);
}

Config Config::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path + ": cannot open");
  return parse(in, path);
}

Config Config::from_values(std::map<std::string, std::string> values,
                           const std::string& source_name) {
  Config cfg;
  cfg.values_ = std::move(values);
  cfg.source_ = source_name;
  return cfg;
}

std::string Config::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) fail(key, "missing required key");
  return it->second;
}

std::string Config::get_or(const std::string& key, const std::string& fallback) const {
  auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

double Config::get_double(const std::string& key) const {
  const std::string raw = get(key);
  try {
    std::size_t used = 0;
    const double v = std::stod(raw, &used);
    if (used != raw.size()) fail(key, "trailing characters after number");
    return v;
  } catch (const std::invalid_argument&) {
    fail(key, "expected a number, got '" + raw + "'");
  } catch (const std::out_of_range&) {
    fail(key, "number out of range: '" + raw + "'");
  }
}

double Config::get_double_or(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

long Config::get_int(const std::string& key) const {
  const std::string raw = get(key);
  try {
    std::size_t used = 0;
    const long v = std::stol(raw, &used);
    if (used != raw.size()) fail(key, "trailing characters after integer");
    return v;
  } catch (const std::invalid_argument&) {
    fail(key, "expected an integer, got '" + raw + "'");
  } catch (const std::out_of_range&) {
    fail(key, "integer out of range: '" + raw + "'");
  }
}

long Config::get_int_or(const std::string& key, long fallback) const {
  return has(key) ? get_int(key) : fallback;
}

bool Config::get_bool_or(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const std::string raw = get(key);
  if (raw == "true" || raw == "1" || raw == "yes") return true;
  if (raw == "false" || raw == "0" || raw == "no") return false;
  fail(key, "expected a boolean, got '" + raw + "'");
}

std::vector<double> Config::get_doubles(const std::string& key) const {
  std::istringstream in(get(key));
  std::vector<double> out;
  std::string word;
  while (in >> word) {
    try {
      out.push_back(std::stod(word));
    } catch (...) {
      fail(key, "expected numbers, got '" + word + "'");
    }
  }
  if (out.empty()) fail(key, "expected at least one number");
  return out;
}

std::vector<std::string> Config::get_words(const std::string& key) const {
  std::istringstream in(get(key));
  std::vector<std::string> out;
  std::string word;
  while (in >> word) out.push_back(word);
  return out;
}

int Config::line_of(const std::string& key) const {
  auto it = lines_.find(key);
  return it == lines_.end() ? 0 : it->second;
}

void Config::fail(const std::string& key, const std::string& what) const {
  std::ostringstream msg;
  msg << source_ << ":" << line_of(key) << ": key '" << key << "': " << what;
  throw std::runtime_error(msg.str());
}

}  // namespace hypercone::kv
