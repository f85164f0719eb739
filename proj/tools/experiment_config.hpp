#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "aniso/aniso.hpp"

namespace aniso::cli {

/// Flat `key = value` text with '#' comments. Values stay raw until a typed getter reads them,
/// so every conversion error can name the line it came from.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::istream& in) {
    KeyValueConfig c;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
      line = trim(line);
      if (line.empty()) continue;
      auto eq = line.find('=');
      if (eq == std::string::npos) throw ParseError("expected 'key = value'", lineno);
      std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
      if (key.empty()) throw ParseError("missing key before '='", lineno);
      if (value.empty()) throw ParseError("missing value for '" + key + "'", lineno);
      if (auto it = c.entries_.find(key); it != c.entries_.end())
        throw ParseError("duplicate key '" + key + "' (first set on line " + std::to_string(it->second.line) + ")",
                         lineno);
      c.entries_[key] = {value, lineno};
    }
    return c;
  }

  static KeyValueConfig parse_text(const std::string& text) {
    std::istringstream in(text);
    return parse(in);
  }

  static KeyValueConfig load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open config file '" + path.string() + "'", 0);
    auto c = parse(in);
    c.dir_ = path.parent_path();
    return c;
  }

  bool has(const std::string& key) const { return entries_.count(key) > 0; }
  int line_of(const std::string& key) const { return has(key) ? entries_.at(key).line : 0; }
  const std::filesystem::path& directory() const noexcept { return dir_; }

  std::string text(const std::string& key) const { return entry(key).value; }
  std::string text(const std::string& key, const std::string& fallback) const {
    return has(key) ? text(key) : fallback;
  }

  double number(const std::string& key) const {
    const auto& e = entry(key);
    return to_number(e.value, key, e.line);
  }
  double number(const std::string& key, double fallback) const { return has(key) ? number(key) : fallback; }

  long long integer(const std::string& key) const {
    const auto& e = entry(key);
    return to_integer(e.value, key, e.line);
  }
  long long integer(const std::string& key, long long fallback) const { return has(key) ? integer(key) : fallback; }

  bool flag(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const auto& e = entry(key);
    if (e.value == "true" || e.value == "yes" || e.value == "1") return true;
    if (e.value == "false" || e.value == "no" || e.value == "0") return false;
    throw ParseError("'" + key + "' must be true or false, got '" + e.value + "'", e.line);
  }

  std::vector<std::string> words(const std::string& key) const {
    const auto& e = entry(key);
    std::vector<std::string> out;
    std::stringstream ss(e.value);
    for (std::string w; std::getline(ss, w, ',');) {
      w = trim(w);
      if (w.empty()) throw ParseError("empty entry in list '" + key + "'", e.line);
      out.push_back(w);
    }
    return out;
  }

  std::vector<double> numbers(const std::string& key) const {
    std::vector<double> out;
    for (const auto& w : words(key)) out.push_back(to_number(w, key, line_of(key)));
    return out;
  }

  std::vector<long long> integers(const std::string& key) const {
    std::vector<long long> out;
    for (const auto& w : words(key)) out.push_back(to_integer(w, key, line_of(key)));
    return out;
  }

  static double to_number(std::string w, const std::string& key, int line) {
    w = trim(w);
    if (w == "inf") return std::numeric_limits<double>::infinity();
    try {
      std::size_t used = 0;
      double v = std::stod(w, &used);
      if (used == w.size() && std::isfinite(v)) return v;
    } catch (const std::logic_error&) {
    }
    try {
      return to_double(parse_rational(w));
    } catch (const ParseError&) {
      throw ParseError("'" + key + "' expects a number, got '" + w + "'", line);
    }
  }

  /// Keys never read by a getter; a typo in a config should not pass silently.
  std::vector<std::string> unused() const {
    std::vector<std::string> out;
    for (const auto& [k, e] : entries_)
      if (!read_.count(k)) out.push_back(k);
    return out;
  }

 private:
  struct Entry {
    std::string value;
    int line = 0;
  };

  const Entry& entry(const std::string& key) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) throw ParseError("missing required key '" + key + "'", 0);
    read_.insert(key);
    return it->second;
  }

  static std::string trim(const std::string& s) {
    auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
  }

  static long long to_integer(const std::string& w, const std::string& key, int line) {
    try {
      std::size_t used = 0;
      long long v = std::stoll(w, &used);
      if (used == w.size()) return v;
    } catch (const std::logic_error&) {
    }
    throw ParseError("'" + key + "' expects an integer, got '" + w + "'", line);
  }

  std::map<std::string, Entry> entries_;
  mutable std::set<std::string> read_;
  std::filesystem::path dir_;
};

struct FieldSpec {
  std::string kind = "trig";  // trig | radial | axis_power | polynomial
  std::vector<double> freq, phase;
  std::vector<double> center;   // radial: one point
  std::vector<double> centers;  // axis_power: one family member per entry
  int axis = 0;
  double power = 1;
  std::vector<fields::Polynomial::Term> terms;
  bool normalize = false;  // divide each member by its Nikolskii norm on the domain
};

struct ExperimentConfig {
  std::filesystem::path domain_path;
  DomainSpec domain = DomainSpec::unit_cube(1);
  AnisoProfile profile{std::vector<double>{1.0}};
  double p = 2, q = 2, s = 2, theta = 2;
  MultiIndex lambda;
  std::optional<MultiIndex> m;
  long long k_min = 2, k_max = 6;
  std::uint64_t seed = 1;
  QuadratureConfig quadrature;
  int error_nodes = 4, extra_levels = 2;
  FieldSpec field;
  std::string operator_name = "quasi_interpolant";  // approx-rate: quasi_interpolant | stepped
  std::string mode = "narrow";                      // check-domain: narrow | wide
  std::vector<double> rho;                          // stechkin budgets; empty = derived
  int rho_count = 5;
  long long rho_level = 4;
  int probes = 32;
  double extension_pad = 0.25;
  int residual_samples = 1000;

  MultiIndex spline_order() const { return m.value_or(default_spline_order(profile)); }
  SpaceParams space() const { return SpaceParams{p, theta, profile}; }
};

namespace detail {

inline MultiIndex to_multi_index(const std::vector<long long>& v, const KeyValueConfig& c, const std::string& key,
                                 int d) {
  if (static_cast<int>(v.size()) != d)
    throw ParseError("'" + key + "' needs " + std::to_string(d) + " entries", c.line_of(key));
  MultiIndex out(d);
  for (int j = 0; j < d; ++j) {
    if (v[j] < 0) throw ParseError("'" + key + "' entries must be non-negative", c.line_of(key));
    out[j] = v[j];
  }
  return out;
}

inline void require_size(const std::vector<double>& v, std::size_t n, const KeyValueConfig& c,
                         const std::string& key) {
  if (v.size() != n) throw ParseError("'" + key + "' needs " + std::to_string(n) + " entries", c.line_of(key));
}

/// Terms as coefficient:exponents, e.g. "1:2 0, -0.5:0 2" for x^2 - 0.5 y^2.
inline std::vector<fields::Polynomial::Term> parse_terms(const KeyValueConfig& c, int d) {
  std::vector<fields::Polynomial::Term> out;
  for (const auto& w : c.words("terms")) {
    auto colon = w.find(':');
    if (colon == std::string::npos) throw ParseError("polynomial term '" + w + "' lacks ':'", c.line_of("terms"));
    double coef = KeyValueConfig::to_number(w.substr(0, colon), "terms", c.line_of("terms"));
    std::istringstream es(w.substr(colon + 1));
    std::vector<long long> e;
    for (long long x; es >> x;) e.push_back(x);
    if (!es.eof()) throw ParseError("bad exponents in term '" + w + "'", c.line_of("terms"));
    out.push_back({to_multi_index(e, c, "terms", d), coef});
  }
  return out;
}

}  // namespace detail

/// Builds and range-checks an experiment from parsed text. The domain path is resolved
/// against the config file's directory.
inline ExperimentConfig make_experiment(const KeyValueConfig& c) {
  ExperimentConfig e;
  auto dom = std::filesystem::path(c.text("domain"));
  e.domain_path = dom.is_absolute() ? dom : c.directory() / dom;
  try {
    e.domain = DomainSpec::load(e.domain_path.string());
  } catch (const ParseError& err) {
    throw ParseError(e.domain_path.string() + ": " + err.what(), c.line_of("domain"));
  }
  const int d = e.domain.dim();

  auto alpha_words = c.words("alpha");
  if (static_cast<int>(alpha_words.size()) != d)
    throw ParseError("'alpha' needs " + std::to_string(d) + " entries", c.line_of("alpha"));
  try {
    if (c.flag("exact_alpha", true)) {
      std::vector<Rational> a;
      for (const auto& w : alpha_words) a.push_back(parse_rational(w));
      e.profile = AnisoProfile::exact(a);
    } else {
      e.profile = AnisoProfile(c.numbers("alpha"));
    }
  } catch (const Error& err) {
    throw ParseError(std::string("alpha: ") + err.what(), c.line_of("alpha"));
  }

  e.p = c.number("p", 2);
  e.q = c.number("q", 2);
  e.s = c.number("s", 2);
  e.theta = c.number("theta", 2);
  for (const char* key : {"p", "q", "s", "theta"})
    if (c.has(key) && !(c.number(key) >= 1))
      throw ParseError(std::string("'") + key + "' must be at least 1", c.line_of(key));

  e.lambda = c.has("lambda") ? detail::to_multi_index(c.integers("lambda"), c, "lambda", d) : MultiIndex(d);
  if (c.has("m")) e.m = detail::to_multi_index(c.integers("m"), c, "m", d);
  e.k_min = c.integer("k_min", e.k_min);
  e.k_max = c.integer("k_max", e.k_max);
  e.seed = static_cast<std::uint64_t>(c.integer("seed", 1));

  e.quadrature.nodes = static_cast<int>(c.integer("quad_nodes", e.quadrature.nodes));
  e.quadrature.shift_nodes = static_cast<int>(c.integer("quad_shift_nodes", e.quadrature.shift_nodes));
  e.quadrature.sup_shifts = static_cast<int>(c.integer("quad_sup_shifts", e.quadrature.sup_shifts));
  e.quadrature.t_level_max = static_cast<int>(c.integer("quad_t_level_max", e.quadrature.t_level_max));
  if (c.has("quad_level")) {
    auto v = c.integers("quad_level");
    if (static_cast<int>(v.size()) != d)
      throw ParseError("'quad_level' needs " + std::to_string(d) + " entries", c.line_of("quad_level"));
    e.quadrature.level = LevelVector(v);
  }
  try {
    e.quadrature.validate();
  } catch (const PreconditionError& err) {
    throw ParseError(err.what(), 0);
  }
  e.error_nodes = static_cast<int>(c.integer("error_nodes", e.error_nodes));
  e.extra_levels = static_cast<int>(c.integer("extra_levels", e.extra_levels));

  auto& f = e.field;
  f.kind = c.text("field", f.kind);
  f.normalize = c.flag("normalize", false);
  if (f.kind == "trig") {
    f.freq = c.numbers("freq");
    detail::require_size(f.freq, d, c, "freq");
    f.phase = c.has("phase") ? c.numbers("phase") : std::vector<double>(d, 0.0);
    detail::require_size(f.phase, d, c, "phase");
  } else if (f.kind == "radial") {
    f.center = c.numbers("center");
    detail::require_size(f.center, d, c, "center");
    f.power = c.number("power");
  } else if (f.kind == "axis_power") {
    f.axis = static_cast<int>(c.integer("axis", 0));
    if (f.axis < 0 || f.axis >= d) throw ParseError("'axis' out of range", c.line_of("axis"));
    f.centers = c.numbers("centers");
    f.power = c.number("power");
  } else if (f.kind == "polynomial") {
    f.terms = detail::parse_terms(c, d);
  } else {
    throw ParseError("unknown field kind '" + f.kind + "' (trig, radial, axis_power, polynomial)",
                     c.line_of("field"));
  }

  e.operator_name = c.text("operator", e.operator_name);
  if (e.operator_name != "quasi_interpolant" && e.operator_name != "stepped")
    throw ParseError("'operator' must be quasi_interpolant or stepped", c.line_of("operator"));
  e.mode = c.text("mode", e.mode);
  if (e.mode != "narrow" && e.mode != "wide")
    throw ParseError("'mode' must be narrow or wide", c.line_of("mode"));
  if (c.has("rho")) {
    e.rho = c.numbers("rho");
    for (double r : e.rho)
      if (!(r > 0)) throw ParseError("'rho' entries must be positive", c.line_of("rho"));
  }
  e.rho_count = static_cast<int>(c.integer("rho_count", e.rho_count));
  e.rho_level = c.integer("rho_level", e.rho_level);
  e.probes = static_cast<int>(c.integer("probes", e.probes));
  e.extension_pad = c.number("extension_pad", e.extension_pad);
  e.residual_samples = static_cast<int>(c.integer("residual_samples", e.residual_samples));
  if (e.rho_count < 2) throw ParseError("'rho_count' must be at least 2", c.line_of("rho_count"));
  if (e.probes < 1) throw ParseError("'probes' must be positive", c.line_of("probes"));
  if (e.residual_samples < 1) throw ParseError("'residual_samples' must be positive", c.line_of("residual_samples"));

  if (auto extra = c.unused(); !extra.empty()) throw ParseError("unknown key '" + extra.front() + "'", c.line_of(extra.front()));
  return e;
}

/// The configured field family (a single member unless the field lists several centres).
inline std::vector<ScalarField> make_family(const ExperimentConfig& e) {
  const auto& f = e.field;
  std::vector<ScalarField> out;
  if (f.kind == "trig") {
    out.push_back(fields::trig_product(f.freq, f.phase));
  } else if (f.kind == "radial") {
    Point c(static_cast<int>(f.center.size()));
    for (int j = 0; j < c.dim(); ++j) c[j] = f.center[j];
    out.push_back(fields::radial_power(c, f.power));
  } else if (f.kind == "axis_power") {
    for (double c : f.centers) out.push_back(fields::axis_power(f.axis, c, f.power));
  } else {
    out.push_back(fields::Polynomial(f.terms).field());
  }
  if (f.normalize)
    for (auto& g : out) g = class_normalized(g, e.domain, e.space(), e.quadrature);
  return out;
}

}  // namespace aniso::cli
