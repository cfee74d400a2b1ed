#pragma once

#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace kdvctrl {

/// Raised on schema violations; carries line/field diagnostics.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Flat dotted-key configuration: one `key = value` per line, `#` comments,
/// no programmable logic.
class Config {
 public:
  static Config parse_file(const std::string& path);
  static Config parse_text(const std::string& text, const std::string& origin = "<text>");

  bool has(const std::string& key) const { return entries_.count(key) > 0; }

  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  long get_int(const std::string& key) const;
  long get_int(const std::string& key, long fallback) const;
  std::vector<double> get_double_list(const std::string& key) const;
  std::vector<std::string> get_string_list(const std::string& key) const;

  /// Keys in first-seen order (canonical echo order).
  const std::vector<std::string>& ordered_keys() const { return order_; }

  /// Canonical text: sorted keys, one per line, normalized spacing.
  std::string canonical_text() const;

  /// Throws ConfigError when a present key is outside the allowed set.
  void check_known_keys(const std::vector<std::string>& allowed) const;

  int line_of(const std::string& key) const;
  void set(const std::string& key, const std::string& value);

 private:
  struct Entry {
    std::string value;
    int line = 0;
  };
  std::map<std::string, Entry> entries_;
  std::vector<std::string> order_;
  std::string origin_;

  [[noreturn]] void fail(const std::string& key, const std::string& what) const;
};

}  // namespace kdvctrl
