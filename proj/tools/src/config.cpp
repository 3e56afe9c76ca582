#include "config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "ambitlab/rng.hpp"

namespace ambitlab::cli {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

KeySpec real_key(std::string section, std::string key, std::string fallback, double lo, double hi,
                 bool lo_open, bool hi_open, std::string help, bool auto_allowed = false) {
  KeySpec k;
  k.section = std::move(section);
  k.key = std::move(key);
  k.type = ValueType::real;
  k.fallback = std::move(fallback);
  k.lo = lo;
  k.hi = hi;
  k.lo_open = lo_open;
  k.hi_open = hi_open;
  k.auto_allowed = auto_allowed;
  k.help = std::move(help);
  return k;
}

KeySpec int_key(std::string section, std::string key, std::string fallback, double lo, double hi,
                std::string help, bool auto_allowed = false) {
  KeySpec k = real_key(std::move(section), std::move(key), std::move(fallback), lo, hi, false,
                       false, std::move(help), auto_allowed);
  k.type = ValueType::integer;
  return k;
}

KeySpec text_key(std::string section, std::string key, std::string fallback, std::string help) {
  KeySpec k;
  k.section = std::move(section);
  k.key = std::move(key);
  k.type = ValueType::text;
  k.fallback = std::move(fallback);
  k.help = std::move(help);
  return k;
}

KeySpec choice_key(std::string section, std::string key, std::string fallback,
                   std::vector<std::string> choices, std::string help) {
  KeySpec k = text_key(std::move(section), std::move(key), std::move(fallback), std::move(help));
  k.type = ValueType::choice;
  k.choices = std::move(choices);
  return k;
}

KeySpec bool_key(std::string section, std::string key, std::string fallback, std::string help) {
  KeySpec k = text_key(std::move(section), std::move(key), std::move(fallback), std::move(help));
  k.type = ValueType::boolean;
  return k;
}

KeySpec list_key(std::string section, std::string key, std::string fallback, double lo, double hi,
                 bool lo_open, std::string help, bool auto_allowed = false) {
  KeySpec k = real_key(std::move(section), std::move(key), std::move(fallback), lo, hi, lo_open,
                       false, std::move(help), auto_allowed);
  k.type = ValueType::real_list;
  return k;
}

std::vector<KeySpec> build_schema() {
  std::vector<KeySpec> s;
  // [run]
  s.push_back(choice_key("run", "experiment", "", experiment_names(), "experiment to run"));
  s.push_back(int_key("run", "seed", "0", 0, 9.007199254740992e15, "master seed"));
  s.push_back(int_key("run", "n_paths", "1000", 2, 1e8, "Monte Carlo paths or draws"));
  s.push_back(int_key("run", "workers", "0", 0, 4096, "worker threads (0: AMBITLAB_WORKERS, otherwise 1)"));
  s.push_back(text_key("run", "outdir", ".", "existing output directory"));
  // [noise]
  s.push_back(choice_key("noise", "kind", "white", {"white", "riesz", "exponential"}, "spatial covariance"));
  s.push_back(int_key("noise", "d", "1", 1, 3, "spatial dimension"));
  s.push_back(real_key("noise", "beta", "0.5", 0, 3, true, true, "Riesz exponent, 0 < beta < min(2, d)"));
  s.push_back(real_key("noise", "ell", "1", 0, inf, true, true, "exponential correlation length"));
  s.push_back(real_key("noise", "cutoff", "inf", 0, inf, true, false, "spectral cutoff"));
  // [spde]
  s.push_back(choice_key("spde", "operator", "heat", {"heat", "wave"}, "differential operator"));
  s.push_back(int_key("spde", "m", "256", 8, 1 << 20, "grid points per axis (power of two)"));
  s.push_back(real_key("spde", "lbox", "4", 0, inf, true, true, "periodic box length"));
  s.push_back(real_key("spde", "t_end", "0.1", 0, inf, true, true, "final time"));
  s.push_back(real_key("spde", "dt", "auto", 0, inf, true, true, "time step (auto: heat t/ceil(t/dx^2), wave t/ceil(t/dx))", true));
  s.push_back(text_key("spde", "sigma", "const:1", "diffusion coefficient (const:a, linear:l, affine:a,b, sine:a,b)"));
  s.push_back(text_key("spde", "b", "const:0", "drift coefficient"));
  s.push_back(real_key("spde", "u0", "0", -inf, inf, true, true, "initial value"));
  s.push_back(real_key("spde", "v0", "0", -inf, inf, true, true, "initial velocity (wave)"));
  s.push_back(real_key("spde", "eps_min", "0.001", 0, inf, true, true, "smallest eps of the variance fits"));
  s.push_back(real_key("spde", "eps_max", "0.1", 0, inf, true, true, "largest eps of the variance fits"));
  s.push_back(int_key("spde", "eps_points", "8", 6, 200, "eps points of the variance fits"));
  s.push_back(real_key("spde", "lag_min", "auto", 0, inf, true, true, "smallest time lag (auto: heat 64 dt, wave 2 dt)", true));
  s.push_back(real_key("spde", "lag_max", "auto", 0, inf, true, true, "largest time lag (auto: heat 0.4 t_end, wave 16 dt)", true));
  s.push_back(int_key("spde", "lag_points", "8", 4, 200, "time lags of the delta fit"));
  s.push_back(bool_key("spde", "approximation", "false", "also fit E|u - u^eps|^2 against eps"));
  s.push_back(real_key("spde", "approx_eps_min", "auto", 0, inf, true, true, "smallest eps of the approximation fit (auto: t_end/128)", true));
  s.push_back(real_key("spde", "approx_eps_max", "auto", 0, inf, true, true, "largest eps of the approximation fit (auto: t_end/4)", true));
  s.push_back(int_key("spde", "approx_points", "6", 4, 200, "eps points of the approximation fit"));
  // [levy]
  s.push_back(real_key("levy", "alpha", "1", 0, 2, true, true, "stability index"));
  s.push_back(real_key("levy", "c_plus", "1", 0, inf, false, true, "positive jump intensity"));
  s.push_back(real_key("levy", "c_minus", "1", 0, inf, false, true, "negative jump intensity"));
  s.push_back(real_key("levy", "lambda", "1", 0, inf, true, true, "control measure weight"));
  s.push_back(list_key("levy", "gammas", "auto", 0, 2, true, "moment orders (auto: alpha + 0.2 and 2)", true));
  s.push_back(real_key("levy", "a_min", "0.001", 0, inf, true, true, "smallest truncation level"));
  s.push_back(real_key("levy", "a_max", "1000", 0, inf, true, true, "largest truncation level"));
  s.push_back(int_key("levy", "a_points", "20", 2, 1000, "truncation levels"));
  s.push_back(real_key("levy", "xi_min", "1", 0, inf, true, true, "smallest frequency of the exponent fit"));
  s.push_back(real_key("levy", "xi_max", "100", 0, inf, true, true, "largest frequency of the exponent fit"));
  s.push_back(int_key("levy", "xi_points", "12", 4, 1000, "frequencies of the exponent fit"));
  s.push_back(real_key("levy", "slab_t", "0.5", 0, inf, true, true, "time extent of the test slab"));
  s.push_back(real_key("levy", "slab_halfwidth", "1", 0, inf, true, true, "space half-width of the test slab"));
  s.push_back(bool_key("levy", "sampling", "false", "compare the empirical cf of run.n_paths draws with exp(-Re Psi)"));
  s.push_back(list_key("levy", "cf_xi", "0.5,1,2", 0, inf, true, "frequencies of the sampling check"));
  s.push_back(real_key("levy", "variance_target", "0.001", 0, inf, true, true, "small-jump variance budget of the sampler"));
  // [ambit]
  s.push_back(real_key("ambit", "t", "1", 0, inf, true, true, "evaluation time"));
  s.push_back(real_key("ambit", "x", "0", -inf, inf, true, true, "evaluation point"));
  s.push_back(real_key("ambit", "x0", "0", -inf, inf, true, true, "initial value"));
  s.push_back(real_key("ambit", "A_c", "1", 0, inf, true, true, "ambit cone width"));
  s.push_back(real_key("ambit", "A_zeta", "1", 0, inf, false, true, "ambit cone exponent (0: slab)"));
  s.push_back(real_key("ambit", "B_c", "1", 0, inf, true, true, "drift cone width"));
  s.push_back(real_key("ambit", "B_zeta", "1", 0, inf, false, true, "drift cone exponent"));
  s.push_back(text_key("ambit", "g", "const:1", "noise kernel (const:a, power:a,theta, gauss:a,ell)"));
  s.push_back(text_key("ambit", "h", "const:0", "drift kernel"));
  s.push_back(text_key("ambit", "sigma", "const:1", "volatility field (const:a, fbm:l,s,h1,h2, expfbm:l,s,h1,h2)"));
  s.push_back(text_key("ambit", "b", "const:0", "drift field"));
  s.push_back(real_key("ambit", "delta1", "0.5", 0, 1, true, false, "time Holder exponent of sigma and b"));
  s.push_back(real_key("ambit", "delta2", "0.5", 0, 1, true, false, "space Holder exponent of sigma and b"));
  s.push_back(real_key("ambit", "beta", "auto", 0, 2, true, true, "moment order (auto: alpha/2 + 0.45 min(alpha, 1))", true));
  s.push_back(real_key("ambit", "gamma", "auto", 0, 2, true, false, "integrability order (auto: min(2, alpha + 0.5))", true));
  s.push_back(real_key("ambit", "eps_min", "auto", 0, inf, true, true, "smallest eps (auto: 2 t / time_cells)", true));
  s.push_back(real_key("ambit", "eps_max", "auto", 0, inf, true, true, "largest eps (auto: 32 t / time_cells)", true));
  s.push_back(int_key("ambit", "eps_points", "5", 4, 200, "eps points"));
  s.push_back(int_key("ambit", "time_cells", "128", 1, 1 << 16, "time rows of the simulation grid"));
  s.push_back(int_key("ambit", "space_cells", "64", 2, 1 << 16, "space columns (even)"));
  s.push_back(real_key("ambit", "jumps_per_row", "32", 0, 1e7, true, false, "expected jumps above the row truncation"));
  // [besov]
  s.push_back(int_key("besov", "n", "1", 1, 8, "finite-difference order"));
  s.push_back(list_key("besov", "frequencies", "0.5,1,2,4,8", 0, inf, true, "fixed test frequencies"));
  s.push_back(bool_key("besov", "include_resonant", "true", "add the test function exp(i pi x / h)"));
  s.push_back(real_key("besov", "holder_order", "0.5", 0, 1, true, false, "Holder order of the test functions"));
  s.push_back(int_key("besov", "h_points", "16", 4, 52, "dyadic h values 1, 1/2, ..."));
  s.push_back(choice_key("besov", "sample", "normal", {"normal", "dirac", "uniform", "cauchy"}, "law of the besov-stat sample"));
  return s;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) {
    return {};
  }
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

const KeySpec* find_key(const std::string& qualified) {
  for (const auto& k : schema()) {
    if (k.qualified() == qualified) {
      return &k;
    }
  }
  return nullptr;
}

std::string range_text(const KeySpec& k) {
  std::ostringstream os;
  os << (k.lo_open ? '(' : '[') << k.lo << ", " << k.hi << (k.hi_open ? ')' : ']');
  return os.str();
}

void check_number(const KeySpec& k, double v, const std::string& where) {
  const bool lo_ok = k.lo_open ? v > k.lo : v >= k.lo;
  const bool hi_ok = k.hi_open ? v < k.hi : v <= k.hi;
  if (std::isnan(v) || !lo_ok || !hi_ok) {
    throw ConfigError(where + ": " + k.qualified() + " = " + std::to_string(v) +
                      " is outside " + range_text(k));
  }
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    out.push_back(trim(item));
  }
  return out;
}

void validate_value(const KeySpec& k, const std::string& value, const std::string& where) {
  if (k.auto_allowed && value == "auto") {
    return;
  }
  switch (k.type) {
    case ValueType::real:
      check_number(k, parse_real(value, where + ": " + k.qualified()), where);
      break;
    case ValueType::integer:
      check_number(k, static_cast<double>(parse_integer(value, where + ": " + k.qualified())), where);
      break;
    case ValueType::text:
      if (value.empty()) {
        throw ConfigError(where + ": " + k.qualified() + " must not be empty");
      }
      break;
    case ValueType::choice:
      if (std::find(k.choices.begin(), k.choices.end(), value) == k.choices.end()) {
        std::string all;
        for (const auto& c : k.choices) {
          all += (all.empty() ? "" : ", ") + c;
        }
        throw ConfigError(where + ": " + k.qualified() + " = '" + value + "' is not one of " + all);
      }
      break;
    case ValueType::boolean:
      if (value != "true" && value != "false") {
        throw ConfigError(where + ": " + k.qualified() + " must be true or false");
      }
      break;
    case ValueType::real_list: {
      const auto items = split_list(value);
      if (items.empty()) {
        throw ConfigError(where + ": " + k.qualified() + " needs at least one value");
      }
      for (const auto& item : items) {
        check_number(k, parse_real(item, where + ": " + k.qualified()), where);
      }
      break;
    }
  }
}

}  // namespace

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{"spde-exponents", "spde-density",   "levy-check",
                                              "ambit-exponents", "ambit-decay",   "ambit-density",
                                              "besov-stat"};
  return names;
}

const std::vector<KeySpec>& schema() {
  static const std::vector<KeySpec> s = build_schema();
  return s;
}

double parse_real(const std::string& text, const std::string& where) {
  const std::string t = trim(text);
  if (t == "inf" || t == "+inf") {
    return std::numeric_limits<double>::infinity();
  }
  if (t == "-inf") {
    return -std::numeric_limits<double>::infinity();
  }
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(t, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (t.empty() || used != t.size() || std::isnan(v)) {
    throw ConfigError(where + ": '" + text + "' is not a number");
  }
  return v;
}

std::int64_t parse_integer(const std::string& text, const std::string& where) {
  const std::string t = trim(text);
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(t, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (t.empty() || used != t.size()) {
    throw ConfigError(where + ": '" + text + "' is not an integer");
  }
  return v;
}

Config Config::parse_text(const std::string& text, const std::string& origin) {
  Config cfg;
  std::istringstream in(text);
  std::string raw;
  std::string section;
  std::set<std::string> sections;
  for (const auto& k : schema()) {
    sections.insert(k.section);
  }
  std::set<std::string> seen;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string where = origin + ":" + std::to_string(line_no);
    std::string line = raw;
    for (const char* marker : {" #", " ;", "\t#", "\t;"}) {
      const auto pos = line.find(marker);
      if (pos != std::string::npos) {
        line = line.substr(0, pos);
      }
    }
    line = trim(line);
    if (line.empty() || line[0] == '#' || line[0] == ';') {
      continue;
    }
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ConfigError(where + ": malformed section header '" + line + "'");
      }
      section = trim(line.substr(1, line.size() - 2));
      if (!sections.count(section)) {
        throw ConfigError(where + ": unknown section [" + section + "]");
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(where + ": expected key = value, got '" + line + "'");
    }
    if (section.empty()) {
      throw ConfigError(where + ": key outside of a [section]");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const std::string qualified = section + "." + key;
    if (!seen.insert(qualified).second) {
      throw ConfigError(where + ": duplicate key " + qualified);
    }
    cfg.set(qualified, value, where);
  }
  return cfg;
}

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError(path + ": cannot read config file");
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_text(ss.str(), path);
}

void Config::set(const std::string& qualified, const std::string& value, const std::string& where) {
  const KeySpec* k = find_key(qualified);
  if (!k) {
    throw ConfigError(where + ": unknown key " + qualified);
  }
  validate_value(*k, value, where);
  values_[qualified] = value;
}

void Config::apply_override(const std::string& assignment) {
  const std::string where = "override '" + assignment + "'";
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw ConfigError(where + ": expected key=value");
  }
  std::string key = trim(assignment.substr(0, eq));
  const std::string value = trim(assignment.substr(eq + 1));
  if (key.find('.') == std::string::npos) {
    std::vector<std::string> matches;
    for (const auto& k : schema()) {
      if (k.key == key) {
        matches.push_back(k.qualified());
      }
    }
    if (matches.empty()) {
      throw ConfigError(where + ": unknown key " + key);
    }
    if (matches.size() > 1) {
      std::string all;
      for (const auto& m : matches) {
        all += (all.empty() ? "" : ", ") + m;
      }
      throw ConfigError(where + ": key '" + key + "' is ambiguous (" + all + ")");
    }
    key = matches.front();
  }
  set(key, value, where);
}

bool Config::has(const std::string& qualified) const { return values_.count(qualified) > 0; }

std::string Config::text(const std::string& qualified) const {
  const auto it = values_.find(qualified);
  if (it != values_.end()) {
    return it->second;
  }
  const KeySpec* k = find_key(qualified);
  if (!k) {
    throw std::logic_error("Config: no schema entry for " + qualified);
  }
  return k->fallback;
}

bool Config::is_auto(const std::string& qualified) const { return text(qualified) == "auto"; }

double Config::real(const std::string& qualified) const {
  return parse_real(text(qualified), qualified);
}

std::int64_t Config::integer(const std::string& qualified) const {
  return parse_integer(text(qualified), qualified);
}

std::uint64_t Config::unsigned_integer(const std::string& qualified) const {
  return static_cast<std::uint64_t>(integer(qualified));
}

bool Config::boolean(const std::string& qualified) const { return text(qualified) == "true"; }

std::vector<double> Config::reals(const std::string& qualified) const {
  std::vector<double> out;
  for (const auto& item : split_list(text(qualified))) {
    out.push_back(parse_real(item, qualified));
  }
  return out;
}

std::string Config::canonical() const {
  std::vector<std::string> lines;
  for (const auto& k : schema()) {
    const std::string q = k.qualified();
    if (q == "run.seed" || q == "run.workers" || q == "run.outdir") {
      continue;
    }
    lines.push_back(q + "=" + text(q));
  }
  std::sort(lines.begin(), lines.end());
  std::string out;
  for (const auto& l : lines) {
    out += l + "\n";
  }
  return out;
}

std::string Config::hash() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(hash_name(canonical())));
  return buf;
}

}  // namespace ambitlab::cli
