#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "aniso/approx.hpp"

namespace aniso {

// ---------------------------------------------------------------------------
// Sampling grid

/// Point samples on the interior cells of one level: l_j nodes per axis in each cell, at
/// 2^{-kappa}(nu + 1/4 + mu / (2 l)).
struct SampleSet {
  LevelVector kappa;
  MultiIndex per_axis;              // l(alpha)
  std::vector<SignedIndex> cells;   // interior cells, lexicographic
  std::vector<Point> nodes;         // cell by cell, mu lexicographic within a cell
  std::vector<double> values;       // NaN marks an absent sample

  std::size_t count() const noexcept { return nodes.size(); }
  std::size_t per_cell() const { return index_count(node_degree()); }
  MultiIndex node_degree() const {
    MultiIndex deg = per_axis;
    for (int j = 0; j < deg.dim(); ++j) deg[j] -= 1;
    return deg;
  }
  /// Lower corner of the node lattice in cell i.
  Point origin(std::size_t i) const { return nodes[i * per_cell()]; }
  /// Lattice spacing 2^{-kappa_j} / (2 l_j).
  std::vector<double> spacing() const {
    std::vector<double> h(kappa.dim());
    for (int j = 0; j < kappa.dim(); ++j) h[j] = std::ldexp(1.0, -static_cast<int>(kappa[j])) / (2.0 * per_axis[j]);
    return h;
  }
};

inline SampleSet sample_points(const DomainSpec& D, const AnisoProfile& profile, long long k) {
  const int d = D.dim();
  if (profile.dim() != d) throw PreconditionError("profile and domain dimensions differ");
  SampleSet s;
  s.kappa = level_vector(k, profile);
  s.per_axis = profile.l();
  auto grid = classify_cells(D, s.kappa, MultiIndex(d), false);
  if (!grid.has_interior())
    throw EmptyInteriorError("level " + std::to_string(k) + " has no interior cell to sample on");
  s.cells = grid.interior();
  const auto mus = index_range(s.node_degree());
  s.nodes.reserve(s.cells.size() * mus.size());
  for (const auto& nu : s.cells) {
    for (const auto& mu : mus) {
      Point x(d);
      for (int j = 0; j < d; ++j) {
        double off = 0.25 + static_cast<double>(mu[j]) / (2.0 * static_cast<double>(s.per_axis[j]));
        x[j] = std::ldexp(static_cast<double>(nu[j]) + off, -static_cast<int>(s.kappa[j]));
      }
      s.nodes.push_back(x);
    }
  }
  s.values.assign(s.nodes.size(), std::numeric_limits<double>::quiet_NaN());
  return s;
}

/// The sampling map: values of f at every node.
inline SampleSet take_samples(SampleSet s, const ScalarField& f) {
  for (std::size_t i = 0; i < s.nodes.size(); ++i) {
    double v = f(s.nodes[i]);
    detail::check_finite(v, s.nodes[i]);
    s.values[i] = v;
  }
  return s;
}

// ---------------------------------------------------------------------------
// Recovery

/// D^lambda of the blended cellwise Lagrange interpolants of a sample set.
class Recovery {
 public:
  Recovery(BlendedPiecewise blend, MultiIndex lambda) : blend_(std::move(blend)), lambda_(std::move(lambda)) {}

  const BlendedPiecewise& blend() const noexcept { return blend_; }
  const MultiIndex& lambda() const noexcept { return lambda_; }

  double value(const Point& x) const { return blend_.derivative(lambda_, x); }
  double operator()(const Point& x) const { return value(x); }

  ScalarField field(std::string name = "recovered") const {
    auto self = std::make_shared<const Recovery>(*this);
    return ScalarField([self](const Point& x) { return self->value(x); }, std::move(name), Smoothness::piecewise);
  }

 private:
  BlendedPiecewise blend_;
  MultiIndex lambda_;
};

inline Recovery recover(const SampleSet& samples, const DomainSpec& D, const AnisoProfile& profile,
                        const MultiIndex& m, const MultiIndex& lambda) {
  const int d = D.dim();
  if (m.dim() != d || lambda.dim() != d || samples.kappa.dim() != d)
    throw PreconditionError("recovery dimension mismatch");
  if (!all_le(lambda, m)) throw DegreeError("derivative order " + to_string(lambda) + " exceeds blend order " + to_string(m));
  if (!(samples.per_axis == profile.l())) throw PreconditionError("sample set was built for a different profile");
  if (samples.values.size() != samples.nodes.size())
    throw PreconditionError("sample set has " + std::to_string(samples.values.size()) + " values for " +
                            std::to_string(samples.nodes.size()) + " nodes");
  std::vector<std::size_t> absent;
  for (std::size_t i = 0; i < samples.values.size(); ++i)
    if (std::isnan(samples.values[i])) absent.push_back(i);
  if (!absent.empty()) {
    std::ostringstream msg;
    msg << absent.size() << " missing sample(s):";
    for (std::size_t i = 0; i < absent.size() && i < 8; ++i) msg << " #" << absent[i] << " at " << samples.nodes[absent[i]];
    if (absent.size() > 8) msg << " ...";
    throw PreconditionError(msg.str());
  }

  auto grid = classify_cells(D, samples.kappa, m, false);
  if (grid.interior() != samples.cells) throw PreconditionError("sample set does not match the domain's interior cells");

  const MultiIndex deg = samples.node_degree();
  const std::size_t per = samples.per_cell();
  const auto h = samples.spacing();
  std::map<SignedIndex, PolyCell> interp;
  for (std::size_t i = 0; i < samples.cells.size(); ++i) {
    std::span<const double> vals(samples.values.data() + i * per, per);
    auto p = lagrange_from_values(vals, deg, Box::frame(samples.origin(i), h));
    interp.emplace(samples.cells[i], reframe(p, cell_box(samples.kappa, samples.cells[i])));
  }
  std::vector<CellMap::Item> items;
  items.reserve(grid.support().size());
  for (const auto& nu : grid.support()) items.emplace_back(nu, interp.at(grid.nearest_interior(nu)));
  return Recovery(BlendedPiecewise(samples.kappa, m, deg, CellMap(std::move(items))), lambda);
}

/// 1 - (alpha^{-1}, e/p).
inline double embedding_margin(const AnisoProfile& profile, double p) {
  std::vector<double> w(profile.dim(), 1.0 / p);
  return 1.0 - profile.inverse_dot(w);
}

/// Worst error over the family of ||D^lambda f - recover(samples of f)||_{L_q(D)} per level,
/// fitted against log2 n.
inline RateReport recovery_experiment(std::span<const ScalarField> family, const DomainSpec& D,
                                      const AnisoProfile& profile, const RateOptions& opt) {
  const int d = D.dim();
  if (family.empty()) throw PreconditionError("recovery experiment needs at least one field");
  if (opt.k_min < 0 || opt.k_max < opt.k_min) throw PreconditionError("invalid level range");
  MultiIndex lambda = opt.lambda.dim() == d ? opt.lambda : MultiIndex(d);
  MultiIndex m = opt.m.value_or(default_spline_order(profile));
  RateReport r;
  r.against_count = true;
  const double loss = loss_exponent(profile, lambda, opt.p, opt.q);
  r.predicted_exponent = -(1 - loss) / profile.inverse_sum();
  std::string notes;
  if (!(embedding_margin(profile, opt.p) > 0)) notes = "(1.3.66) violated";
  if (!(1 - loss > 0)) notes += std::string(notes.empty() ? "" : "; ") + "(1.3.62) violated";
  r.condition_holds = notes.empty();
  QuadratureConfig cfg;
  cfg.nodes = opt.nodes;
  std::vector<ScalarField> targets;
  for (const auto& f : family) targets.push_back(f.derivative_field(lambda));
  for (long long k = opt.k_min; k <= opt.k_max; ++k) {
    auto skeleton = sample_points(D, profile, k);
    LevelVector qlev = skeleton.kappa;
    for (int j = 0; j < d; ++j) qlev[j] += opt.extra_levels;
    cfg.level = qlev;
    double worst = 0;
    for (std::size_t i = 0; i < family.size(); ++i) {
      auto rec = recover(take_samples(skeleton, family[i]), D, profile, m, lambda);
      const auto& target = targets[i];
      ScalarField e([&](const Point& x) { return target(x) - rec(x); });
      worst = std::max(worst, lp_norm(e, D, opt.q, cfg));
    }
    r.points.push_back({k, static_cast<double>(skeleton.count()), worst});
  }
  fit_report(r);
  if (!r.condition_holds) r.note = notes + ": rate not guaranteed" + (r.note.empty() ? "" : "; " + r.note);
  return r;
}

inline RateReport recovery_experiment(const ScalarField& f, const DomainSpec& D, const AnisoProfile& profile,
                                      const RateOptions& opt) {
  return recovery_experiment(std::span<const ScalarField>(&f, 1), D, profile, opt);
}

// ---------------------------------------------------------------------------
// Operator-norm budget tradeoff

struct StechkinPoint {
  double rho;         // operator-norm budget
  long long k;        // largest level whose norm proxy fits the budget
  double norm_proxy;  // measured proxy at level k
  double error;       // worst error over the field family at level k
};

struct StechkinOptions {
  MultiIndex lambda;
  double p = 2, q = 2, s = 2;
  long long k_min = 1, k_max = 8;
  std::optional<MultiIndex> m;
  std::uint64_t seed = 1;
  int probes = 32;
  int nodes = 4;
  int extra_levels = 2;
};

struct StechkinReport {
  std::vector<StechkinPoint> points;
  std::vector<std::pair<long long, double>> proxies;  // (k, norm proxy) over the level range
  double gamma = 0, tau = 0;
  double predicted_slope = 0;  // -gamma / tau
  double fitted_slope = std::numeric_limits<double>::quiet_NaN();
  double fit_residual = std::numeric_limits<double>::quiet_NaN();
};

/// gamma = 1 - (alpha^{-1}, lambda + (1/p - 1/q)_+ e), tau = (alpha^{-1}, lambda + (1/s - 1/q)_+ e).
inline std::pair<double, double> stechkin_exponents(const AnisoProfile& profile, const MultiIndex& lambda, double p,
                                                    double q, double s) {
  return {1 - loss_exponent(profile, lambda, p, q), loss_exponent(profile, lambda, s, q)};
}

/// Largest k whose proxy does not exceed rho; proxies are (k, value) pairs.
inline std::optional<long long> select_level(std::span<const std::pair<long long, double>> proxies, double rho) {
  std::optional<long long> best;
  for (const auto& [k, v] : proxies)
    if (v <= rho && (!best || k > *best)) best = k;
  return best;
}

namespace detail {

/// Uniform in [-1, 1] from the top 53 bits; independent of the standard library's distributions.
inline double unit_symmetric(std::mt19937_64& rng) { return std::ldexp(static_cast<double>(rng() >> 11), -52) - 1.0; }

}  // namespace detail

/// Probe functions for the level-k norm proxy: tensor sines at frequencies 2^{kappa_j + s},
/// s in {-1, 0, 1}, followed by random stepped polynomials of degree l - e on the level-k cells.
inline std::vector<ScalarField> probe_family(const DomainSpec& D, const AnisoProfile& profile, long long k,
                                             std::uint64_t seed, int count) {
  const int d = D.dim();
  if (count < 1) throw PreconditionError("probe count must be positive");
  std::mt19937_64 rng(seed ^ (0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(k + 1)));
  LevelVector kappa = level_vector(k, profile);
  std::vector<ScalarField> out;
  for (int s = -1; s <= 1 && static_cast<int>(out.size()) < count; ++s) {
    std::vector<double> freq(d), phase(d);
    for (int j = 0; j < d; ++j) {
      freq[j] = std::ldexp(1.0, static_cast<int>(kappa[j]) + s);
      phase[j] = std::numbers::pi * 0.5 * (detail::unit_symmetric(rng) + 1.0);
    }
    out.push_back(fields::trig_product(freq, phase, "probe-sine"));
  }
  auto grid = classify_cells(D, kappa, MultiIndex(d), false);
  const MultiIndex deg = approximation_degree(profile);
  while (static_cast<int>(out.size()) < count) {
    std::vector<CellMap::Item> items;
    for (const auto& nu : grid.meets()) {
      std::vector<double> c(index_count(deg));
      for (double& v : c) v = detail::unit_symmetric(rng);
      items.emplace_back(nu, PolyCell(deg, cell_box(kappa, nu), std::move(c)));
    }
    out.push_back(SteppedPiecewise(kappa, deg, CellMap(std::move(items))).field("probe-stepped"));
  }
  return out;
}

/// max over the probe family of ||D^lambda E_k g||_{L_q(D)} / ||g||_{L_s(D)}.
inline double norm_proxy(const DomainSpec& D, const AnisoProfile& profile, const MultiIndex& m,
                         const MultiIndex& lambda, double q, double s, long long k, std::uint64_t seed,
                         int probes = 32, int nodes = 4, int extra_levels = 2) {
  const int d = D.dim();
  QuadratureConfig cfg;
  cfg.nodes = nodes;
  LevelVector qlev = level_vector(k, profile);
  for (int j = 0; j < d; ++j) qlev[j] += extra_levels;
  cfg.level = qlev;
  double best = 0;
  for (const auto& g : probe_family(D, profile, k, seed, probes)) {
    double den = lp_norm(g, D, s, cfg);
    if (!(den > 0)) continue;
    auto e = quasi_interpolant(g, D, profile, m, k);
    ScalarField dg([&](const Point& x) { return e.derivative(lambda, x); });
    best = std::max(best, lp_norm(dg, D, q, cfg) / den);
  }
  return best;
}

/// For each budget rho: the largest level k in range with proxy(k) <= rho, and the worst error
/// ||D^lambda f - D^lambda E_k f||_{L_q(D)} over the family. The slope of log error against
/// log rho is compared with -gamma / tau.
inline StechkinReport stechkin_experiment(std::span<const ScalarField> family, const DomainSpec& D,
                                          const AnisoProfile& profile, std::span<const double> rhos,
                                          const StechkinOptions& opt) {
  const int d = D.dim();
  if (family.empty()) throw PreconditionError("Stechkin experiment needs at least one field");
  if (opt.k_min < 0 || opt.k_max < opt.k_min) throw PreconditionError("invalid level range");
  MultiIndex lambda = opt.lambda.dim() == d ? opt.lambda : MultiIndex(d);
  MultiIndex m = opt.m.value_or(default_spline_order(profile));
  if (!all_le(lambda, m)) throw DegreeError("derivative order exceeds the blend order");
  StechkinReport r;
  std::tie(r.gamma, r.tau) = stechkin_exponents(profile, lambda, opt.p, opt.q, opt.s);
  if (!(r.gamma > 0)) throw PreconditionError("(1.3.62) violated: gamma = " + std::to_string(r.gamma) + " <= 0");
  if (!(r.tau > 0)) throw PreconditionError("tau = " + std::to_string(r.tau) + " <= 0: the operator is bounded");
  r.predicted_slope = -r.gamma / r.tau;

  for (long long k = opt.k_min; k <= opt.k_max; ++k)
    r.proxies.emplace_back(k, norm_proxy(D, profile, m, lambda, opt.q, opt.s, k, opt.seed, opt.probes, opt.nodes,
                                         opt.extra_levels));

  std::vector<ScalarField> targets;
  for (const auto& f : family) targets.push_back(f.derivative_field(lambda));
  std::map<long long, double> errors;
  auto error_at = [&](long long k) {
    if (auto it = errors.find(k); it != errors.end()) return it->second;
    QuadratureConfig cfg;
    cfg.nodes = opt.nodes;
    LevelVector qlev = level_vector(k, profile);
    for (int j = 0; j < d; ++j) qlev[j] += opt.extra_levels;
    cfg.level = qlev;
    double worst = 0;
    for (std::size_t i = 0; i < family.size(); ++i) {
      auto e = quasi_interpolant(family[i], D, profile, m, k);
      const auto& target = targets[i];
      ScalarField diff([&](const Point& x) { return target(x) - e.derivative(lambda, x); });
      worst = std::max(worst, lp_norm(diff, D, opt.q, cfg));
    }
    return errors[k] = worst;
  };

  std::vector<double> x, y;
  for (double rho : rhos) {
    auto k = select_level(r.proxies, rho);
    if (!k)
      throw PreconditionError("budget " + std::to_string(rho) + " is below the norm proxy of every level in range");
    double proxy = 0;
    for (const auto& [kk, v] : r.proxies)
      if (kk == *k) proxy = v;
    double err = error_at(*k);
    r.points.push_back({rho, *k, proxy, err});
    if (err > 0) {
      x.push_back(std::log2(rho));
      y.push_back(std::log2(err));
    }
  }
  std::tie(r.fitted_slope, r.fit_residual) = detail::fit_line(x, y);
  return r;
}

/// f divided by its Nikolskii norm.
inline ScalarField class_normalized(const ScalarField& f, const DomainSpec& D, const SpaceParams& sp,
                                    const QuadratureConfig& cfg = {}) {
  double n = nikolskii_norm(f, D, sp, cfg);
  if (!(n > 0) || !std::isfinite(n)) throw PreconditionError("field has no finite positive class norm");
  return f.scaled(1.0 / n);
}

}  // namespace aniso
