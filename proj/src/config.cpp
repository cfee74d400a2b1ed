#include "kdvctrl/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

namespace kdvctrl {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace

Config Config::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_text(text, path);
}

Config Config::parse_text(const std::string& text, const std::string& origin) {
  Config c;
  c.origin_ = origin;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(lineno) +
                        ": expected `key = value`, got `" + line + "`");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
    if (c.entries_.count(key))
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": duplicate key `" + key + "`");
    c.entries_[key] = Entry{value, lineno};
    c.order_.push_back(key);
  }
  return c;
}

void Config::fail(const std::string& key, const std::string& what) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) throw ConfigError(origin_ + ": missing required key `" + key + "`");
  throw ConfigError(origin_ + ":" + std::to_string(it->second.line) + ": field `" + key + "`: " +
                    what + " (value `" + it->second.value + "`)");
}

std::string Config::get_string(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) fail(key, "missing");
  return it->second.value;
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
  const auto it = entries_.find(key);
  return it == entries_.end() ? fallback : it->second.value;
}

double Config::get_double(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) fail(key, "missing");
  try {
    size_t pos = 0;
    const double v = std::stod(it->second.value, &pos);
    if (pos != it->second.value.size()) fail(key, "not a number");
    return v;
  } catch (const ConfigError&) {
    throw;
  } catch (...) {
    fail(key, "not a number");
  }
}

double Config::get_double(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

long Config::get_int(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) fail(key, "missing");
  try {
    size_t pos = 0;
    const long v = std::stol(it->second.value, &pos);
    if (pos != it->second.value.size()) fail(key, "not an integer");
    return v;
  } catch (const ConfigError&) {
    throw;
  } catch (...) {
    fail(key, "not an integer");
  }
}

long Config::get_int(const std::string& key, long fallback) const {
  return has(key) ? get_int(key) : fallback;
}

std::vector<std::string> Config::get_string_list(const std::string& key) const {
  const std::string raw = get_string(key);
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(raw);
  while (std::getline(in, cur, ',')) {
    cur = trim(cur);
    if (!cur.empty()) out.push_back(cur);
  }
  if (out.empty()) fail(key, "empty list");
  return out;
}

std::vector<double> Config::get_double_list(const std::string& key) const {
  std::vector<double> out;
  for (const auto& tok : get_string_list(key)) {
    try {
      size_t pos = 0;
      out.push_back(std::stod(tok, &pos));
      if (pos != tok.size()) fail(key, "list entry `" + tok + "` is not a number");
    } catch (const ConfigError&) {
      throw;
    } catch (...) {
      fail(key, "list entry `" + tok + "` is not a number");
    }
  }
  return out;
}

std::string Config::canonical_text() const {
  std::vector<std::string> keys;
  for (const auto& [k, e] : entries_) {
    (void)e;
    keys.push_back(k);
  }
  std::sort(keys.begin(), keys.end());
  std::string out;
  for (const auto& k : keys) out += k + " = " + entries_.at(k).value + "\n";
  return out;
}

void Config::check_known_keys(const std::vector<std::string>& allowed) const {
  for (const auto& [k, e] : entries_) {
    if (std::find(allowed.begin(), allowed.end(), k) == allowed.end())
      throw ConfigError(origin_ + ":" + std::to_string(e.line) + ": unknown key `" + k + "`");
  }
}

int Config::line_of(const std::string& key) const {
  const auto it = entries_.find(key);
  return it == entries_.end() ? 0 : it->second.line;
}

void Config::set(const std::string& key, const std::string& value) {
  if (!entries_.count(key)) order_.push_back(key);
  entries_[key] = Entry{value, 0};
}

}  // namespace kdvctrl
