#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <vector>

#include "aniso/domain.hpp"
#include "aniso/field.hpp"
#include "aniso/quadrature.hpp"

namespace aniso {

struct QuadratureConfig {
  int nodes = 8;                     // Gauss nodes per axis per quadrature cell
  std::optional<LevelVector> level;  // dyadic quadrature grid; unset = domain pieces only
  int shift_nodes = 16;              // Gauss nodes per shift subinterval
  int sup_shifts = 32;               // shift samples per octave and sign, times 4
  int t_level_max = 10;              // finest dyadic scale 2^{-t_level_max} of the t-grid

  void validate() const {
    if (nodes < 2 || shift_nodes < 2 || sup_shifts < 2)
      throw PreconditionError("quadrature counts must be at least 2");
    if (nodes > kMaxGaussNodes || shift_nodes > kMaxGaussNodes)
      throw PreconditionError("too many Gauss nodes requested");
    if (t_level_max < 0) throw PreconditionError("t_level_max must be non-negative");
  }
  int shifts_per_octave() const { return std::max(2, sup_shifts / 4); }
};

struct SpaceParams {
  double p = 2.0;
  double theta = 2.0;
  AnisoProfile profile;
};

namespace detail {

/// Composite 1-D Gauss rule on [a, b], split at the dyadic points of `level`. With
/// `with_ends` the subinterval endpoints are added at weight zero (for maxima).
inline std::vector<std::pair<double, double>> composite_rule(double a, double b, long long level, int n,
                                                             bool with_ends = false) {
  std::vector<double> cuts{a};
  if (level >= 0) {
    double h = std::ldexp(1.0, -static_cast<int>(level));
    for (double c = (std::floor(a / h) + 1) * h; c < b; c += h) cuts.push_back(c);
  }
  cuts.push_back(b);
  const GaussRule& g = gauss_legendre(n);
  std::vector<std::pair<double, double>> out;
  out.reserve((cuts.size() - 1) * n);
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    double w = cuts[i + 1] - cuts[i];
    if (!(w > 0)) continue;
    if (with_ends) out.emplace_back(cuts[i], 0.0);
    for (int q = 0; q < n; ++q) out.emplace_back(cuts[i] + w * g.nodes[q], w * g.weights[q]);
  }
  if (with_ends && !out.empty()) out.emplace_back(b, 0.0);
  return out;
}

inline void check_finite(double v, const Point& x) {
  if (!std::isfinite(v)) {
    std::ostringstream os;
    os << "non-finite value at " << x;
    throw QuadratureError(os.str());
  }
}

/// Calls fn(x, w) for every tensor quadrature node of the given boxes.
template <class F>
void for_each_node(const std::vector<Box>& boxes, const QuadratureConfig& cfg, bool with_ends, F&& fn) {
  for (const auto& b : boxes) {
    const int d = b.dim();
    std::array<std::vector<std::pair<double, double>>, kMaxDim> axis;
    for (int j = 0; j < d; ++j)
      axis[j] = composite_rule(b.lo[j], b.hi[j], cfg.level ? (*cfg.level)[j] : -1, cfg.nodes, with_ends);
    MultiIndex top(d);
    bool empty = false;
    for (int j = 0; j < d; ++j) {
      if (axis[j].empty()) empty = true;
      else top[j] = static_cast<long long>(axis[j].size()) - 1;
    }
    if (empty) continue;
    Point x(d);
    for_each_in_box(MultiIndex(d), top, [&](const MultiIndex& i) {
      double w = 1;
      for (int j = 0; j < d; ++j) {
        x[j] = axis[j][i[j]].first;
        w *= axis[j][i[j]].second;
      }
      fn(x, w);
    });
  }
}

/// int |g|^p over the boxes, or max |g| for p = inf.
template <class G>
double power_integral(const std::vector<Box>& boxes, double p, const QuadratureConfig& cfg, G&& g) {
  double acc = 0;
  const bool sup = std::isinf(p);
  for_each_node(boxes, cfg, sup, [&](const Point& x, double w) {
    double v = g(x);
    check_finite(v, x);
    if (sup) acc = std::max(acc, std::abs(v));
    else acc += w * std::pow(std::abs(v), p);
  });
  return acc;
}

inline double difference(const ScalarField& f, int axis, double h, int l, const Point& x) {
  double s = 0;
  Point y = x;
  for (int k = 0; k <= l; ++k) {
    y[axis] = x[axis] + k * h;
    double c = static_cast<double>(binomial(l, k));
    s += ((l - k) % 2 ? -c : c) * f(y);
  }
  return s;
}

}  // namespace detail

inline double lp_norm(const ScalarField& f, const DomainSpec& D, double p, const QuadratureConfig& cfg = {}) {
  if (!(p >= 1.0)) throw PreconditionError("p must lie in [1, inf]");
  cfg.validate();
  double s = detail::power_integral(D.pieces(), p, cfg, f);
  return std::isinf(p) ? s : std::pow(s, 1.0 / p);
}

/// sum_k C(l,k) (-1)^{l-k} f(x + k h).
inline double finite_difference(const ScalarField& f, const Point& h, int l, const Point& x) {
  if (l < 0) throw PreconditionError("difference order must be non-negative");
  double s = 0;
  Point y(x.dim());
  for (int k = 0; k <= l; ++k) {
    for (int j = 0; j < x.dim(); ++j) y[j] = x[j] + k * h[j];
    double c = static_cast<double>(binomial(l, k));
    s += ((l - k) % 2 ? -c : c) * f(y);
  }
  return s;
}

/// As above, requiring every evaluation point to lie in D.
inline double finite_difference(const ScalarField& f, const DomainSpec& D, const Point& h, int l, const Point& x) {
  Point y(x.dim());
  for (int k = 0; k <= l; ++k) {
    for (int j = 0; j < x.dim(); ++j) y[j] = x[j] + k * h[j];
    if (!D.contains(y)) {
      std::ostringstream os;
      os << "difference point " << y << " lies outside the domain";
      throw OutOfDomainError(os.str());
    }
  }
  return finite_difference(f, h, l, x);
}

/// int over D_{l xi e_j} of |Delta^l_{xi e_j} f|^p (max for p = inf).
inline double difference_power(const ScalarField& f, const DomainSpec& D, int axis, int l, double xi, double p,
                               const QuadratureConfig& cfg) {
  if (l == 0 || xi == 0.0) {
    if (l > 0) return 0.0;
    return detail::power_integral(D.pieces(), p, cfg, f);
  }
  auto pieces = D.shrunk_pieces(axis, l * xi);
  return detail::power_integral(pieces, p, cfg, [&](const Point& x) { return detail::difference(f, axis, xi, l, x); });
}

namespace detail {

/// Breakpoints in (0, t) where D_{l xi e_j} changes topology.
inline std::vector<double> shift_breaks(const DomainSpec& D, int axis, int l, double a, double b) {
  std::vector<double> c{a};
  for (double w : D.run_lengths(axis)) {
    double z = w / l;
    if (z > a && z < b) c.push_back(z);
  }
  c.push_back(b);
  std::sort(c.begin(), c.end());
  return c;
}

/// int_{a <= |xi| <= b} difference_power(xi) dxi.
inline double shell_integral(const ScalarField& f, const DomainSpec& D, int axis, int l, double a, double b,
                             double p, const QuadratureConfig& cfg) {
  const GaussRule& g = gauss_legendre(cfg.shift_nodes);
  auto cuts = shift_breaks(D, axis, l, a, b);
  double s = 0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    double w = cuts[i + 1] - cuts[i];
    for (int q = 0; q < cfg.shift_nodes; ++q) {
      double xi = cuts[i] + w * g.nodes[q];
      s += w * g.weights[q] * (difference_power(f, D, axis, l, xi, p, cfg) + difference_power(f, D, axis, l, -xi, p, cfg));
    }
  }
  return s;
}

}  // namespace detail

/// Averaged modulus ((2t)^{-1} int_{|xi|<=t} ||Delta^l_{xi e_j} f||^p_{L_p(D_{l xi e_j})} dxi)^{1/p}.
inline double averaged_modulus(const ScalarField& f, const DomainSpec& D, int axis, int l, double t, double p,
                               const QuadratureConfig& cfg = {}) {
  if (!(t > 0)) throw PreconditionError("modulus scale t must be positive");
  if (!(p >= 1.0) || std::isinf(p)) throw PreconditionError("averaged modulus needs 1 <= p < inf");
  cfg.validate();
  if (l == 0) return std::pow(detail::power_integral(D.pieces(), p, cfg, f), 1.0 / p);
  return std::pow(detail::shell_integral(f, D, axis, l, 0.0, t, p, cfg) / (2 * t), 1.0 / p);
}

/// Shift samples of the sup-modulus: a fixed geometric grid 2^{s/P} (P per octave) above the
/// floor 2^{-(t_level_max+2)}, so sample sets are nested in t. Below the floor only +-t is used.
inline std::vector<double> sup_shift_samples(double t, const QuadratureConfig& cfg) {
  const int P = cfg.shifts_per_octave();
  const int floor_level = cfg.t_level_max + 2;
  const double floor = std::ldexp(1.0, -floor_level);
  if (t < floor) return {t};
  std::vector<double> out;
  long long top = static_cast<long long>(std::floor(P * std::log2(t) + 1e-9));
  for (long long s = top; s >= -static_cast<long long>(floor_level) * P; --s) {
    double h = std::exp2(static_cast<double>(s) / P);
    if (h <= t) out.push_back(h);
  }
  return out;
}

/// Lower approximation of sup_{|h|<=t} ||Delta^l_{h e_j} f||_{L_p(D_{l h e_j})} over a finite shift grid.
inline double sup_modulus(const ScalarField& f, const DomainSpec& D, int axis, int l, double t, double p,
                          const QuadratureConfig& cfg = {}) {
  if (!(t > 0)) throw PreconditionError("modulus scale t must be positive");
  if (!(p >= 1.0)) throw PreconditionError("p must lie in [1, inf]");
  cfg.validate();
  double best = 0;
  for (double h : sup_shift_samples(t, cfg))
    for (double s : {h, -h}) best = std::max(best, difference_power(f, D, axis, l, s, p, cfg));
  return std::isinf(p) ? best : std::pow(best, 1.0 / p);
}

// ---------------------------------------------------------------------------
// Moduli on the dyadic t-grid t_i = 2^{-i}, i = i_lo..i_hi

struct ModulusProfile {
  int i_lo = 0, i_hi = 0;
  std::vector<double> values;  // values[i - i_lo] at t = 2^{-i}

  double t(int i) const { return std::ldexp(1.0, -i); }
  double at(int i) const { return values.at(i - i_lo); }
};

namespace detail {

/// Coarsest grid index: t = 2^{-i_lo} is at least 4 and beyond every run length / l,
/// so the moduli are in their flat regime there.
inline int coarse_index(const DomainSpec& D, int axis, int l) {
  double top = 4.0;
  for (double w : D.run_lengths(axis)) top = std::max(top, w / std::max(l, 1));
  return -static_cast<int>(std::ceil(std::log2(top) - 1e-12));
}

}  // namespace detail

/// Averaged moduli at every grid scale, sharing the shift integrals between scales.
inline ModulusProfile averaged_modulus_profile(const ScalarField& f, const DomainSpec& D, int axis, int l, double p,
                                               const QuadratureConfig& cfg = {}) {
  if (!(p >= 1.0) || std::isinf(p)) throw PreconditionError("averaged modulus needs 1 <= p < inf");
  cfg.validate();
  ModulusProfile prof;
  prof.i_lo = detail::coarse_index(D, axis, l);
  prof.i_hi = cfg.t_level_max;
  const int n = prof.i_hi - prof.i_lo + 1;
  prof.values.assign(n, 0.0);
  if (l == 0) {
    double v = std::pow(detail::power_integral(D.pieces(), p, cfg, f), 1.0 / p);
    std::fill(prof.values.begin(), prof.values.end(), v);
    return prof;
  }
  double cum = detail::shell_integral(f, D, axis, l, 0.0, prof.t(prof.i_hi), p, cfg);
  for (int i = prof.i_hi; i >= prof.i_lo; --i) {
    if (i < prof.i_hi) cum += detail::shell_integral(f, D, axis, l, prof.t(i + 1), prof.t(i), p, cfg);
    prof.values[i - prof.i_lo] = std::pow(cum / (2 * prof.t(i)), 1.0 / p);
  }
  return prof;
}

/// Sup-moduli at every grid scale as a running maximum over the nested shift samples.
inline ModulusProfile sup_modulus_profile(const ScalarField& f, const DomainSpec& D, int axis, int l, double p,
                                          const QuadratureConfig& cfg = {}) {
  if (!(p >= 1.0)) throw PreconditionError("p must lie in [1, inf]");
  cfg.validate();
  ModulusProfile prof;
  prof.i_lo = detail::coarse_index(D, axis, l);
  prof.i_hi = cfg.t_level_max;
  prof.values.assign(prof.i_hi - prof.i_lo + 1, 0.0);
  auto samples = sup_shift_samples(prof.t(prof.i_lo), cfg);  // descending
  double best = 0;
  std::size_t next = samples.size();
  for (int i = prof.i_hi; i >= prof.i_lo; --i) {
    double t = prof.t(i);
    while (next > 0 && samples[next - 1] <= t) {
      double h = samples[--next];
      for (double s : {h, -h}) best = std::max(best, difference_power(f, D, axis, l, s, p, cfg));
    }
    prof.values[i - prof.i_lo] = std::isinf(p) ? best : std::pow(best, 1.0 / p);
  }
  return prof;
}

namespace detail {

/// (int_0^inf t^{-1-theta a} omega(t)^theta dt)^{1/theta} from grid values: midpoint rule in log t,
/// a closed-form tail above the grid assuming omega(t) ~ t^{-decay} there, and a geometric tail
/// below the grid from the last ratio (dropped if the integrand is not decaying).
inline double besov_seminorm(const ModulusProfile& prof, double a, double theta, double decay) {
  const double ln2 = std::numbers::ln2;
  double sum = 0;
  std::vector<double> g;
  for (int i = prof.i_lo; i <= prof.i_hi; ++i) {
    double v = std::pow(prof.t(i), -theta * a) * std::pow(prof.at(i), theta);
    g.push_back(v);
    sum += ln2 * v;
  }
  double T = prof.t(prof.i_lo);
  double start = T * std::numbers::sqrt2;
  double expo = theta * (a + decay);
  sum += std::pow(prof.at(prof.i_lo), theta) * std::pow(T, theta * decay) * std::pow(start, -expo) / expo;
  if (g.size() >= 2 && g[g.size() - 2] > 0) {
    double r = g.back() / g[g.size() - 2];
    if (r < 1.0) sum += ln2 * g.back() * r / (1 - r);
  }
  return std::pow(sum, 1.0 / theta);
}

inline double nikolskii_seminorm(const ModulusProfile& prof, double a) {
  double s = 0;
  for (int i = prof.i_lo; i <= prof.i_hi; ++i) s = std::max(s, std::pow(prof.t(i), -a) * prof.at(i));
  return s;
}

inline void check_params(const SpaceParams& sp, int d) {
  if (!(sp.p >= 1.0) || std::isinf(sp.p)) throw PreconditionError("space norms need 1 <= p < inf");
  if (!(sp.theta >= 1.0)) throw PreconditionError("theta must lie in [1, inf]");
  if (sp.profile.dim() != d) throw PreconditionError("profile dimension differs from the domain");
}

}  // namespace detail

/// max(||f||_p, max_j sup_t t^{-alpha_j} averaged modulus of order l_j).
inline double nikolskii_norm(const ScalarField& f, const DomainSpec& D, const SpaceParams& sp,
                             const QuadratureConfig& cfg = {}) {
  detail::check_params(sp, D.dim());
  double v = lp_norm(f, D, sp.p, cfg);
  for (int j = 0; j < D.dim(); ++j) {
    int l = static_cast<int>(sp.profile.l()[j]);
    v = std::max(v, detail::nikolskii_seminorm(averaged_modulus_profile(f, D, j, l, sp.p, cfg), sp.profile.alpha(j)));
  }
  return v;
}

/// Besov norm built on averaged moduli; theta = inf gives the Nikolskii norm.
inline double besov_norm(const ScalarField& f, const DomainSpec& D, const SpaceParams& sp,
                         const QuadratureConfig& cfg = {}) {
  detail::check_params(sp, D.dim());
  if (std::isinf(sp.theta)) return nikolskii_norm(f, D, sp, cfg);
  double v = lp_norm(f, D, sp.p, cfg);
  for (int j = 0; j < D.dim(); ++j) {
    int l = static_cast<int>(sp.profile.l()[j]);
    auto prof = averaged_modulus_profile(f, D, j, l, sp.p, cfg);
    v = std::max(v, detail::besov_seminorm(prof, sp.profile.alpha(j), sp.theta, 1.0 / sp.p));
  }
  return v;
}

/// Besov norm built on sup-moduli of the lbar-th partial derivatives, with the W_p^lbar norm
/// max(||f||_p, max_j ||D_j^lbar_j f||_p) as the lower-order part.
inline double besov_lbar_norm(const ScalarField& f, const DomainSpec& D, const SpaceParams& sp,
                              const QuadratureConfig& cfg = {}) {
  detail::check_params(sp, D.dim());
  const int d = D.dim();
  double v = lp_norm(f, D, sp.p, cfg);
  for (int j = 0; j < d; ++j) {
    MultiIndex lam(d);
    lam[j] = sp.profile.lbar()[j];
    ScalarField g = f.derivative_field(lam);
    if (lam[j] > 0) v = std::max(v, lp_norm(g, D, sp.p, cfg));
    int order = static_cast<int>(sp.profile.l()[j] - lam[j]);
    double a = sp.profile.alpha(j) - static_cast<double>(lam[j]);
    auto prof = sup_modulus_profile(g, D, j, order, sp.p, cfg);
    v = std::max(v, std::isinf(sp.theta) ? detail::nikolskii_seminorm(prof, a)
                                         : detail::besov_seminorm(prof, a, sp.theta, 0.0));
  }
  return v;
}

/// x -> f(x0 + delta x), with derivatives by the chain rule.
inline ScalarField scale_field(const ScalarField& f, const ScaleMap& map) {
  ScalarField::DerivativeFn dv;
  if (f.has_derivatives())
    dv = [f, map](const MultiIndex& lam, const Point& x) {
      double c = 1;
      for (int j = 0; j < map.dim(); ++j) c *= std::pow(map.delta(j), static_cast<double>(lam[j]));
      return c * f.derivative(lam, map.apply(x));
    };
  return ScalarField([f, map](const Point& x) { return f(map.apply(x)); }, "scaled " + f.name(), f.smoothness(), dv);
}

}  // namespace aniso
