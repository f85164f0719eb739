#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "aniso/bspline.hpp"
#include "aniso/domain.hpp"
#include "aniso/polyspace.hpp"
#include "aniso/spaces.hpp"

namespace aniso {

// ---------------------------------------------------------------------------
// Cell storage

/// Polynomials keyed by cell index, iterated lexicographically, with O(1) lookup through a
/// dense slot table over the bounding box of the keys.
class CellMap {
 public:
  using Item = std::pair<SignedIndex, PolyCell>;

  CellMap() = default;
  explicit CellMap(std::vector<Item> items) : items_(std::move(items)) {
    std::sort(items_.begin(), items_.end(), [](const Item& a, const Item& b) { return a.first < b.first; });
    for (std::size_t i = 1; i < items_.size(); ++i)
      if (items_[i].first == items_[i - 1].first) throw PreconditionError("duplicate cell " + to_string(items_[i].first));
    index();
  }
  explicit CellMap(std::map<SignedIndex, PolyCell> m) : CellMap(std::vector<Item>(m.begin(), m.end())) {}

  std::size_t size() const noexcept { return items_.size(); }
  bool empty() const noexcept { return items_.empty(); }
  auto begin() const noexcept { return items_.begin(); }
  auto end() const noexcept { return items_.end(); }
  const std::vector<Item>& items() const noexcept { return items_; }

  const PolyCell* find(const SignedIndex& nu) const {
    if (items_.empty()) return nullptr;
    std::size_t s = 0;
    for (int j = 0; j < d_; ++j) {
      long long o = nu[j] - lo_[j];
      if (o < 0 || o >= ext_[j]) return nullptr;
      s = s * static_cast<std::size_t>(ext_[j]) + static_cast<std::size_t>(o);
    }
    int i = slot_[s];
    return i < 0 ? nullptr : &items_[i].second;
  }

 private:
  void index() {
    if (items_.empty()) return;
    d_ = items_.front().first.dim();
    for (int j = 0; j < d_; ++j) {
      lo_[j] = std::numeric_limits<long long>::max();
      long long hi = std::numeric_limits<long long>::min();
      for (const auto& [nu, p] : items_) {
        lo_[j] = std::min(lo_[j], nu[j]);
        hi = std::max(hi, nu[j]);
      }
      ext_[j] = hi - lo_[j] + 1;
    }
    std::size_t total = 1;
    for (int j = 0; j < d_; ++j) total *= static_cast<std::size_t>(ext_[j]);
    if (total > (std::size_t{1} << 28)) throw PreconditionError("cell map bounding box too large");
    slot_.assign(total, -1);
    for (std::size_t i = 0; i < items_.size(); ++i) {
      std::size_t s = 0;
      for (int j = 0; j < d_; ++j) s = s * static_cast<std::size_t>(ext_[j]) + static_cast<std::size_t>(items_[i].first[j] - lo_[j]);
      slot_[s] = static_cast<int>(i);
    }
  }

  std::vector<Item> items_;
  int d_ = 0;
  std::array<long long, kMaxDim> lo_{}, ext_{};
  std::vector<int> slot_;
};

inline Box cell_box(const LevelVector& kappa, const SignedIndex& nu) { return Box::of(DyadicCell{kappa, nu}); }

/// Default blend order: m = l(alpha).
inline MultiIndex default_spline_order(const AnisoProfile& profile) { return profile.l(); }

/// l(alpha) - e.
inline MultiIndex approximation_degree(const AnisoProfile& profile) {
  MultiIndex deg = profile.l();
  for (int j = 0; j < deg.dim(); ++j) deg[j] -= 1;
  return deg;
}

// ---------------------------------------------------------------------------
// Blended piecewise polynomials

/// x -> sum_nu p_nu(x) g_{kappa,nu}(x) over the stored cells.
class BlendedPiecewise {
 public:
  BlendedPiecewise(LevelVector kappa, MultiIndex m, MultiIndex degree, CellMap cells)
      : kappa_(std::move(kappa)), m_(std::move(m)), degree_(std::move(degree)), cells_(std::move(cells)) {
    if (kappa_.dim() != m_.dim() || m_.dim() != degree_.dim()) throw PreconditionError("blended piecewise dimension mismatch");
    for (int j = 0; j < dim(); ++j)
      if (m_[j] > kMaxSplineOrder) throw PreconditionError("spline order too large");
  }

  int dim() const noexcept { return kappa_.dim(); }
  const LevelVector& kappa() const noexcept { return kappa_; }
  const MultiIndex& m() const noexcept { return m_; }
  const MultiIndex& degree() const noexcept { return degree_; }
  const CellMap& cells() const noexcept { return cells_; }

  double value(const Point& x) const { return derivative(MultiIndex(dim()), x); }
  double operator()(const Point& x) const { return value(x); }

  /// D^lambda by the Leibniz rule over the blends that are nonzero at x.
  double derivative(const MultiIndex& lambda, const Point& x) const {
    if (!all_le(lambda, m_)) throw DegreeError("derivative order " + to_string(lambda) + " exceeds blend order " + to_string(m_));
    const int d = dim();
    if (cells_.empty()) return 0.0;
    // spl[j][r][i]: r-th derivative of the i-th blend along axis j, blend index base_j - m_j + i
    std::array<std::array<std::array<double, kMaxSplineOrder + 1>, kMaxSplineOrder + 1>, kMaxDim> spl;
    std::array<long long, kMaxDim> first{};
    for (int j = 0; j < d; ++j) {
      const int k = static_cast<int>(kappa_[j]);
      const int mj = static_cast<int>(m_[j]);
      const auto& table = SplineTable::get(mj);
      double y = std::ldexp(x[j], k);
      long long base = static_cast<long long>(std::floor(y));
      first[j] = base - mj;
      for (int i = 0; i <= mj; ++i) {
        double u = y - static_cast<double>(first[j] + i);
        for (int r = 0; r <= lambda[j]; ++r) spl[j][r][i] = std::ldexp(table.derivative(r, u), k * r);
      }
    }
    const bool plain = lambda.sum() == 0;
    double total = 0;
    SignedIndex nu(d);
    for_each_in_box(MultiIndex(d), m_, [&](const MultiIndex& i) {
      for (int j = 0; j < d; ++j) nu[j] = first[j] + i[j];
      const PolyCell* p = cells_.find(nu);
      if (!p) return;
      if (plain) {
        double w = 1;
        for (int j = 0; j < d; ++j) w *= spl[j][0][i[j]];
        if (w != 0.0) total += w * p->value(x);
        return;
      }
      for_each_in_box(MultiIndex(d), lambda, [&](const MultiIndex& mu) {
        double w = 1;
        for (int j = 0; j < d; ++j) {
          w *= spl[j][lambda[j] - mu[j]][i[j]] * static_cast<double>(binomial(lambda[j], mu[j]));
        }
        if (w != 0.0) total += w * p->derivative(mu, x);
      });
    });
    return total;
  }

  /// Union of the blend supports.
  Box support_box() const {
    const int d = dim();
    Point lo(d, std::numeric_limits<double>::infinity()), hi(d, -std::numeric_limits<double>::infinity());
    for (const auto& [nu, p] : cells_) {
      Box b = Blend{kappa_, nu, m_}.support();
      for (int j = 0; j < d; ++j) {
        lo[j] = std::min(lo[j], b.lo[j]);
        hi[j] = std::max(hi[j], b.hi[j]);
      }
    }
    return Box(lo, hi);
  }

  ScalarField field(std::string name = "blended") const {
    auto self = std::make_shared<const BlendedPiecewise>(*this);
    return ScalarField([self](const Point& x) { return self->value(x); }, std::move(name), Smoothness::piecewise,
                       [self](const MultiIndex& l, const Point& x) { return self->derivative(l, x); });
  }

 private:
  LevelVector kappa_;
  MultiIndex m_;
  MultiIndex degree_;
  CellMap cells_;
};

inline double derivative_eval(const BlendedPiecewise& g, const MultiIndex& lambda, const Point& x) {
  return g.derivative(lambda, x);
}

/// a * ca + b * cb at a common level; each cell is written in the frame of its own dyadic cell.
inline BlendedPiecewise combine(const BlendedPiecewise& a, double ca, const BlendedPiecewise& b, double cb) {
  if (!(a.kappa() == b.kappa()) || !(a.m() == b.m()) || !(a.degree() == b.degree()))
    throw PreconditionError("combine needs equal level, order and degree");
  std::map<SignedIndex, PolyCell> out;
  auto add = [&](const BlendedPiecewise& g, double c) {
    for (const auto& [nu, p] : g.cells()) {
      auto it = out.find(nu);
      if (it == out.end()) it = out.emplace(nu, PolyCell(g.degree(), cell_box(g.kappa(), nu))).first;
      it->second.add_scaled(reframe(p, it->second.frame()), c);
    }
  };
  add(a, ca);
  add(b, cb);
  return BlendedPiecewise(a.kappa(), a.m(), a.degree(), CellMap(std::move(out)));
}

/// Interior-cell projections of f, one per interior cell that is the nearest cell of some blend.
inline BlendedPiecewise quasi_interpolant_at(const ScalarField& f, const DomainGrid& grid, const MultiIndex& degree) {
  grid.require_interior();
  std::map<SignedIndex, PolyCell> proj;
  std::vector<CellMap::Item> items;
  items.reserve(grid.support().size());
  for (const auto& nu : grid.support()) {
    SignedIndex c = grid.nearest_interior(nu);
    auto it = proj.find(c);
    if (it == proj.end()) it = proj.emplace(c, project_L2(f, cell_box(grid.kappa(), c), degree)).first;
    items.emplace_back(nu, it->second);
  }
  return BlendedPiecewise(grid.kappa(), grid.m(), degree, CellMap(std::move(items)));
}

/// E_k f: blends at level kappa(k, alpha) carrying degree l - e projections from the nearest
/// interior cells.
inline BlendedPiecewise quasi_interpolant(const ScalarField& f, const DomainSpec& D, const AnisoProfile& profile,
                                          const MultiIndex& m, long long k) {
  auto grid = classify_cells(D, level_vector(k, profile), m, false);
  if (!grid.has_interior())
    throw EmptyInteriorError("level " + std::to_string(k) + " is too coarse: no cell of level " +
                             to_string(grid.kappa()) + " lies inside the domain");
  return quasi_interpolant_at(f, grid, approximation_degree(profile));
}

namespace detail {

inline BlendedPiecewise subdivide_onto(const BlendedPiecewise& g, const LevelVector& fine,
                                       const std::vector<SignedIndex>& targets) {
  auto st = subdivision_stencil(g.kappa(), fine, g.m(), targets);
  std::vector<CellMap::Item> items;
  for (const auto& nu : targets) {
    PolyCell acc(g.degree(), cell_box(fine, nu));
    bool any = false;
    for (const auto& e : st.row(nu)) {
      const PolyCell* p = g.cells().find(e.source);
      if (!p) continue;
      acc.add_scaled(reframe(*p, acc.frame()), e.weight);
      any = true;
    }
    if (any) items.emplace_back(nu, std::move(acc));
  }
  return BlendedPiecewise(fine, g.m(), g.degree(), CellMap(std::move(items)));
}

inline void check_refinement(const BlendedPiecewise& g, const LevelVector& fine) {
  if (fine.dim() != g.dim()) throw PreconditionError("subdivision dimension mismatch");
  if (!all_le(g.kappa(), fine)) throw LevelOrderError("subdivision needs coarse <= fine componentwise");
}

}  // namespace detail

/// Rewrites g at a finer level with the subdivision stencil, keeping every fine blend that
/// receives a coefficient; the result equals g on all of R^d.
inline BlendedPiecewise subdivide(const BlendedPiecewise& g, const LevelVector& fine) {
  const int d = g.dim();
  detail::check_refinement(g, fine);
  if (fine == g.kappa()) return g;
  std::set<SignedIndex> targets;
  for (const auto& [nu, p] : g.cells()) {
    SignedIndex lo(d), hi(d);
    for (int j = 0; j < d; ++j) {
      long long s = 1LL << (fine[j] - g.kappa()[j]);
      lo[j] = s * nu[j];
      hi[j] = s * nu[j] + (g.m()[j] + 1) * (s - 1);
    }
    for_each_in_box(lo, hi, [&](const SignedIndex& t) { targets.insert(t); });
  }
  return detail::subdivide_onto(g, fine, std::vector<SignedIndex>(targets.begin(), targets.end()));
}

/// The subdivision operator onto the blends of `fine` whose supports meet the domain. The
/// result equals g on the domain only.
inline BlendedPiecewise subdivide(const BlendedPiecewise& g, const DomainGrid& fine) {
  detail::check_refinement(g, fine.kappa());
  if (!(fine.m() == g.m())) throw PreconditionError("subdivision needs the grid's blend order");
  return detail::subdivide_onto(g, fine.kappa(), fine.support());
}

/// Telescoping increment E_k f - H(E_{k-1} f) as one blended object at level kappa(k, alpha).
inline BlendedPiecewise telescope(const ScalarField& f, const DomainSpec& D, const AnisoProfile& profile,
                                  const MultiIndex& m, long long k) {
  if (k < 1) throw PreconditionError("telescoping increment needs k >= 1");
  auto grid = classify_cells(D, level_vector(k, profile), m, false);
  auto fine = quasi_interpolant(f, D, profile, m, k);
  auto coarse = quasi_interpolant(f, D, profile, m, k - 1);
  return combine(fine, 1.0, subdivide(coarse, grid), -1.0);
}

// ---------------------------------------------------------------------------
// Extension

/// E_{K0} f + sum_{k=K0+1}^{k_max} (telescoping increments), truncated at k_max.
struct ExtensionResult {
  BlendedPiecewise base;
  std::vector<BlendedPiecewise> increments;
  long long K0 = 0;
  long long k_max = 0;

  double value(const Point& x) const {
    double s = base.value(x);
    for (const auto& g : increments) s += g.value(x);
    return s;
  }
  double derivative(const MultiIndex& lambda, const Point& x) const {
    double s = base.derivative(lambda, x);
    for (const auto& g : increments) s += g.derivative(lambda, x);
    return s;
  }
  double operator()(const Point& x) const { return value(x); }

  Box support_box() const {
    Box b = base.support_box();
    for (const auto& g : increments) {
      Box c = g.support_box();
      for (int j = 0; j < b.dim(); ++j) {
        b.lo[j] = std::min(b.lo[j], c.lo[j]);
        b.hi[j] = std::max(b.hi[j], c.hi[j]);
      }
    }
    return b;
  }

  ScalarField field(std::string name = "extension") const {
    auto self = std::make_shared<const ExtensionResult>(*this);
    return ScalarField([self](const Point& x) { return self->value(x); }, std::move(name), Smoothness::piecewise,
                       [self](const MultiIndex& l, const Point& x) { return self->derivative(l, x); });
  }
};

inline ExtensionResult extend(const ScalarField& f, const DomainSpec& D, const AnisoProfile& profile,
                              const MultiIndex& m, long long k_max, const AlphaTypeReport& certificate) {
  if (!certificate.passes) throw PreconditionError("domain is not certified as alpha-type: " + certificate.witness);
  if (certificate.mode != AlphaMode::narrow) throw PreconditionError("extension needs a narrow-sense certificate");
  if (k_max < certificate.K0) throw PreconditionError("k_max is below the certified K0");
  ExtensionResult r{quasi_interpolant(f, D, profile, m, certificate.K0), {}, certificate.K0, k_max};
  auto prev = r.base;
  for (long long k = certificate.K0 + 1; k <= k_max; ++k) {
    auto cur = quasi_interpolant(f, D, profile, m, k);
    auto grid = classify_cells(D, cur.kappa(), m, false);
    r.increments.push_back(combine(cur, 1.0, subdivide(prev, grid), -1.0));
    prev = std::move(cur);
  }
  return r;
}

// ---------------------------------------------------------------------------
// Rate exponents

/// (alpha^{-1}, lambda + (1/p - 1/q)_+ e).
inline double loss_exponent(const AnisoProfile& profile, const MultiIndex& lambda, double p, double q) {
  double gap = std::max(0.0, 1.0 / p - (std::isinf(q) ? 0.0 : 1.0 / q));
  std::vector<double> w(profile.dim());
  for (int j = 0; j < profile.dim(); ++j) w[j] = static_cast<double>(lambda[j]) + gap;
  return profile.inverse_dot(w);
}

struct KFunctionalValue {
  double value;
  double stencil_constant;  // c in the moduli arguments c * t^{1/alpha_j}
};

/// t^{-(loss exponent) - 1} sum_j averaged moduli of order l_j at c t^{1/alpha_j}, c = max_j (m_j + 1).
inline KFunctionalValue k_functional(const ScalarField& f, const DomainSpec& D, const AnisoProfile& profile,
                                     const MultiIndex& m, const MultiIndex& lambda, double p, double q, double t,
                                     const QuadratureConfig& cfg = {}) {
  if (!(t > 0 && t <= 1)) throw PreconditionError("K-functional needs t in (0, 1]");
  double c = 0;
  for (int j = 0; j < m.dim(); ++j) c = std::max(c, static_cast<double>(m[j] + 1));
  double s = 0;
  for (int j = 0; j < D.dim(); ++j)
    s += averaged_modulus(f, D, j, static_cast<int>(profile.l()[j]), c * std::pow(t, 1.0 / profile.alpha(j)), p, cfg);
  return {std::pow(t, -loss_exponent(profile, lambda, p, q) - 1) * s, c};
}

// ---------------------------------------------------------------------------
// Stepped piecewise polynomials

/// x -> p_nu(x) on the half-open cell containing x, 0 off the stored cells.
class SteppedPiecewise {
 public:
  SteppedPiecewise(LevelVector kappa, MultiIndex degree, CellMap cells)
      : kappa_(std::move(kappa)), degree_(std::move(degree)), cells_(std::move(cells)) {}

  int dim() const noexcept { return kappa_.dim(); }
  const LevelVector& kappa() const noexcept { return kappa_; }
  const MultiIndex& degree() const noexcept { return degree_; }
  const CellMap& cells() const noexcept { return cells_; }

  double value(const Point& x) const {
    const PolyCell* p = cells_.find(cell_index(kappa_, x));
    return p ? p->value(x) : 0.0;
  }
  double operator()(const Point& x) const { return value(x); }
  double derivative(const MultiIndex& lambda, const Point& x) const {
    const PolyCell* p = cells_.find(cell_index(kappa_, x));
    return p ? p->derivative(lambda, x) : 0.0;
  }

  ScalarField field(std::string name = "stepped") const {
    auto self = std::make_shared<const SteppedPiecewise>(*this);
    return ScalarField([self](const Point& x) { return self->value(x); }, std::move(name), Smoothness::piecewise,
                       [self](const MultiIndex& l, const Point& x) { return self->derivative(l, x); });
  }

 private:
  LevelVector kappa_;
  MultiIndex degree_;
  CellMap cells_;
};

/// ||f||_{L_p(R^d)}, cell by cell.
inline double stepped_lp_norm(const SteppedPiecewise& f, double p) {
  double s = 0;
  for (const auto& [nu, poly] : f.cells()) {
    double v = poly_lp_norm(poly, cell_box(f.kappa(), nu), p);
    s = std::isinf(p) ? std::max(s, v) : s + std::pow(v, p);
  }
  return std::isinf(p) ? s : std::pow(s, 1.0 / p);
}

/// Cells meeting D, each carrying the projection of `field` on its nearest interior cell.
inline SteppedPiecewise stepped_project_at(const ScalarField& field, const DomainGrid& grid, const MultiIndex& degree) {
  grid.require_interior();
  std::map<SignedIndex, PolyCell> proj;
  std::vector<CellMap::Item> items;
  for (const auto& nu : grid.meets()) {
    SignedIndex c = grid.nearest_interior(nu);
    auto it = proj.find(c);
    if (it == proj.end()) it = proj.emplace(c, project_L2(field, cell_box(grid.kappa(), c), degree)).first;
    items.emplace_back(nu, it->second);
  }
  return SteppedPiecewise(grid.kappa(), degree, CellMap(std::move(items)));
}

inline SteppedPiecewise stepped_project(const ScalarField& field, const DomainSpec& D, const AnisoProfile& profile,
                                        const MultiIndex& degree, long long k) {
  auto grid = classify_cells(D, level_vector(k, profile), MultiIndex(D.dim()), false);
  if (!grid.has_interior())
    throw EmptyInteriorError("level " + std::to_string(k) + " is too coarse: no interior cell");
  return stepped_project_at(field, grid, degree);
}

/// Fine cells of `fine` copy the polynomial of their coarse parent.
inline SteppedPiecewise regrid_stepped(const SteppedPiecewise& f, const DomainGrid& fine) {
  const int d = f.dim();
  if (!all_le(f.kappa(), fine.kappa())) throw LevelOrderError("regridding needs coarse <= fine componentwise");
  std::vector<CellMap::Item> items;
  for (const auto& nu : fine.meets()) {
    SignedIndex parent(d);
    for (int j = 0; j < d; ++j) parent[j] = nu[j] >> (fine.kappa()[j] - f.kappa()[j]);
    if (const PolyCell* p = f.cells().find(parent)) items.emplace_back(nu, *p);
  }
  return SteppedPiecewise(fine.kappa(), f.degree(), CellMap(std::move(items)));
}

/// a * ca + b * cb cellwise at a common level.
inline SteppedPiecewise combine(const SteppedPiecewise& a, double ca, const SteppedPiecewise& b, double cb) {
  if (!(a.kappa() == b.kappa()) || !(a.degree() == b.degree()))
    throw PreconditionError("combine needs equal level and degree");
  std::map<SignedIndex, PolyCell> out;
  auto add = [&](const SteppedPiecewise& g, double c) {
    for (const auto& [nu, p] : g.cells()) {
      auto it = out.find(nu);
      if (it == out.end()) it = out.emplace(nu, PolyCell(g.degree(), cell_box(g.kappa(), nu))).first;
      it->second.add_scaled(reframe(p, it->second.frame()), c);
    }
  };
  add(a, ca);
  add(b, cb);
  return SteppedPiecewise(a.kappa(), a.degree(), CellMap(std::move(out)));
}

/// Stepped projection at level k minus the regridded projection at level k - 1.
inline SteppedPiecewise v_step(const ScalarField& field, const DomainSpec& D, const AnisoProfile& profile,
                               const MultiIndex& degree, long long k) {
  if (k < 1) throw PreconditionError("v_step needs k >= 1");
  auto fine_grid = classify_cells(D, level_vector(k, profile), MultiIndex(D.dim()), false);
  auto coarse_grid = classify_cells(D, level_vector(k - 1, profile), MultiIndex(D.dim()), false);
  if (!coarse_grid.has_interior())
    throw EmptyInteriorError("level " + std::to_string(k - 1) + " is too coarse: no interior cell");
  auto fine = stepped_project_at(field, fine_grid, degree);
  auto coarse = regrid_stepped(stepped_project_at(field, coarse_grid, degree), fine_grid);
  return combine(fine, 1.0, coarse, -1.0);
}

struct Discretization {
  std::vector<double> values;  // cells lexicographic, nodes lexicographic within a cell
  double scaled_norm;          // 2^{-(kappa,e)/p} * ||values||_p
};

/// Cell polynomial values at the nodes 2^{-kappa}(nu + lambda), lambda <= degree.
inline Discretization discretize(const SteppedPiecewise& f, double p) {
  if (!(p >= 1.0)) throw PreconditionError("p must lie in [1, inf]");
  Discretization out{{}, 0.0};
  for (const auto& [nu, poly] : f.cells()) {
    auto v = lagrange_iso(reframe(poly, cell_box(f.kappa(), nu)));
    out.values.insert(out.values.end(), v.begin(), v.end());
  }
  double s = 0;
  for (double v : out.values) s = std::isinf(p) ? std::max(s, std::abs(v)) : s + std::pow(std::abs(v), p);
  if (std::isinf(p)) {
    out.scaled_norm = s;
  } else {
    out.scaled_norm = std::pow(s, 1.0 / p) * std::exp2(-static_cast<double>(f.kappa().sum()) / p);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Rate experiments

enum class RateOperator { quasi_interpolant, stepped };

struct RatePoint {
  long long k;
  double n;  // sample count for recovery reports, else the number of active cells
  double error;
};

struct RateReport {
  std::vector<RatePoint> points;
  bool against_count = false;  // slope of log2 error versus log2 n instead of k
  double fitted_slope = std::numeric_limits<double>::quiet_NaN();
  double fit_residual = std::numeric_limits<double>::quiet_NaN();
  double predicted_exponent = 0;
  bool condition_holds = true;
  bool exact = false;
  std::string note;
};

struct RateOptions {
  MultiIndex lambda;
  double p = 2, q = 2;
  RateOperator op = RateOperator::quasi_interpolant;
  long long k_min = 2, k_max = 6;
  std::optional<MultiIndex> m;  // default l(alpha)
  int nodes = 4;                // Gauss nodes per axis per error cell
  int extra_levels = 2;         // error grid is this many levels finer than the operator's
};

namespace detail {

/// Least-squares slope and RMS residual of y against x.
inline std::pair<double, double> fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const std::size_t n = x.size();
  if (n < 2) return {nan, nan};
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0) return {nan, nan};
  double slope = sxy / sxx;
  double r = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double e = y[i] - (my + slope * (x[i] - mx));
    r += e * e;
  }
  return {slope, std::sqrt(r / n)};
}

}  // namespace detail

/// Fits the report's slope, skipping errors at the floating-point floor.
inline void fit_report(RateReport& r) {
  const double floor = 1e3 * std::numeric_limits<double>::epsilon();
  std::vector<double> x, y;
  r.exact = !r.points.empty();
  for (const auto& pt : r.points) {
    if (pt.error > 1e-10) r.exact = false;
    if (pt.error <= floor) continue;
    x.push_back(r.against_count ? std::log2(pt.n) : static_cast<double>(pt.k));
    y.push_back(std::log2(pt.error));
  }
  std::tie(r.fitted_slope, r.fit_residual) = detail::fit_line(x, y);
  if (r.exact) {
    r.fitted_slope = std::numeric_limits<double>::quiet_NaN();
    r.note = "exact: all errors at or below 1e-10";
  }
}

/// Worst error over the family of ||D^lambda f - D^lambda(op_k f)||_{L_q(D)} for k in the range,
/// with the slope of log2 error per level.
inline RateReport rate_experiment(std::span<const ScalarField> family, const DomainSpec& D,
                                  const AnisoProfile& profile, const RateOptions& opt) {
  const int d = D.dim();
  if (family.empty()) throw PreconditionError("rate experiment needs at least one field");
  MultiIndex lambda = opt.lambda.dim() == d ? opt.lambda : MultiIndex(d);
  MultiIndex m = opt.m.value_or(default_spline_order(profile));
  if (opt.k_min < 0 || opt.k_max < opt.k_min) throw PreconditionError("invalid level range");
  RateReport r;
  double loss = loss_exponent(profile, lambda, opt.p, opt.q);
  r.predicted_exponent = -(1 - loss);
  r.condition_holds = 1 - loss > 0;
  MultiIndex deg = approximation_degree(profile);
  for (int j = 0; j < d; ++j) {
    if (opt.op == RateOperator::stepped && lambda[j] > deg[j])
      throw DegreeError("derivative order exceeds the approximation degree");
    if (opt.op == RateOperator::stepped) deg[j] -= lambda[j];
  }
  std::vector<ScalarField> targets;
  for (const auto& f : family) targets.push_back(f.derivative_field(lambda));
  QuadratureConfig cfg;
  cfg.nodes = opt.nodes;
  for (long long k = opt.k_min; k <= opt.k_max; ++k) {
    LevelVector qlev = level_vector(k, profile);
    for (int j = 0; j < d; ++j) qlev[j] += opt.extra_levels;
    cfg.level = qlev;
    double worst = 0, n = 0;
    for (std::size_t i = 0; i < family.size(); ++i) {
      const auto& target = targets[i];
      if (opt.op == RateOperator::quasi_interpolant) {
        auto g = quasi_interpolant(family[i], D, profile, m, k);
        n = static_cast<double>(g.cells().size());
        ScalarField e([&](const Point& x) { return target(x) - g.derivative(lambda, x); });
        worst = std::max(worst, lp_norm(e, D, opt.q, cfg));
      } else {
        auto g = stepped_project(target, D, profile, deg, k);
        n = static_cast<double>(g.cells().size());
        ScalarField e([&](const Point& x) { return target(x) - g.value(x); });
        worst = std::max(worst, lp_norm(e, D, opt.q, cfg));
      }
    }
    r.points.push_back({k, n, worst});
  }
  fit_report(r);
  if (!r.condition_holds) r.note = "(1.3.62) violated: rate not guaranteed" + (r.note.empty() ? "" : "; " + r.note);
  return r;
}

inline RateReport rate_experiment(const ScalarField& f, const DomainSpec& D, const AnisoProfile& profile,
                                  const RateOptions& opt) {
  return rate_experiment(std::span<const ScalarField>(&f, 1), D, profile, opt);
}

}  // namespace aniso
