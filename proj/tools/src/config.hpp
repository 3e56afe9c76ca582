#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ambitlab::cli {

/// Invalid configuration; the message carries the file and line (or the override text).
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

enum class ValueType { real, integer, text, choice, boolean, real_list };

/// One admissible key. Numeric bounds are inclusive unless the open flags are set;
/// `auto_allowed` admits the literal "auto" in place of a number.
struct KeySpec {
  std::string section;
  std::string key;
  ValueType type = ValueType::real;
  std::string fallback;
  double lo = -1e300;
  double hi = 1e300;
  bool lo_open = false;
  bool hi_open = false;
  bool auto_allowed = false;
  std::vector<std::string> choices;
  std::string help;

  std::string qualified() const { return section + "." + key; }
};

const std::vector<KeySpec>& schema();
const std::vector<std::string>& experiment_names();

/// Parsed and validated configuration. Grammar, one statement per line:
///   # comment          ; comment
///   [section]
///   key = value        (an inline comment starts at " #" or " ;")
/// Keys before the first section header, unknown sections or keys, duplicate
/// keys and out-of-range values are rejected with the offending line.
class Config {
public:
  static Config parse_text(const std::string& text, const std::string& origin);
  static Config load(const std::string& path);

  /// Applies "section.key=value", or "key=value" when the key is unique across sections.
  void apply_override(const std::string& assignment);
  void set(const std::string& qualified, const std::string& value, const std::string& where);

  bool has(const std::string& qualified) const;
  bool is_auto(const std::string& qualified) const;
  std::string text(const std::string& qualified) const;
  double real(const std::string& qualified) const;
  std::int64_t integer(const std::string& qualified) const;
  std::uint64_t unsigned_integer(const std::string& qualified) const;
  bool boolean(const std::string& qualified) const;
  std::vector<double> reals(const std::string& qualified) const;

  /// Effective key=value lines (defaults filled in), sorted, excluding keys that
  /// do not affect results: run.seed, run.workers, run.outdir.
  std::string canonical() const;
  /// 16 hex digits of a 64-bit FNV-1a hash of canonical().
  std::string hash() const;

private:
  std::map<std::string, std::string> values_;  // qualified key -> raw text
};

/// Number parsing shared with the CLI flags; throws ConfigError naming `where`.
double parse_real(const std::string& text, const std::string& where);
std::int64_t parse_integer(const std::string& text, const std::string& where);

}  // namespace ambitlab::cli
