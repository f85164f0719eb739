#pragma once

#include <cmath>
#include <map>
#include <mutex>
#include <vector>

#include "aniso/grid.hpp"

namespace aniso {

inline constexpr int kMaxSplineOrder = 12;

/// Cardinal B-spline of order m supported on [0, m+1], stored as one polynomial per
/// unit knot interval in the local variable u = x - i.
class SplineTable {
 public:
  static const SplineTable& get(int m) {
    if (m < 0 || m > kMaxSplineOrder)
      throw PreconditionError("spline order must be in 0.." + std::to_string(kMaxSplineOrder));
    static const std::vector<SplineTable> tables = [] {
      std::vector<SplineTable> t;
      t.reserve(kMaxSplineOrder + 1);
      for (int k = 0; k <= kMaxSplineOrder; ++k) t.push_back(SplineTable(k, t.empty() ? nullptr : &t.back()));
      return t;
    }();
    return tables[m];
  }

  int order() const noexcept { return m_; }

  /// Exact coefficients (ascending powers of u) on [i, i+1].
  const std::vector<Rational>& exact_piece(int i) const { return exact_.at(i); }

  double value(double x) const { return derivative(0, x); }

  /// r-th derivative. Breakpoints take the right-hand piece; for r = m this is the
  /// a.e. derivative. For m = 0 the value at breakpoints is 0.
  double derivative(int r, double x) const {
    if (r < 0) throw PreconditionError("negative derivative order");
    if (r > m_) throw DegreeError("derivative order exceeds spline order");
    if (m_ == 0) return (x > 0.0 && x < 1.0) ? 1.0 : 0.0;
    if (!(x >= 0.0) || x >= static_cast<double>(m_ + 1)) return 0.0;
    int i = std::min(static_cast<int>(std::floor(x)), m_);
    double u = x - i;
    const auto& c = dcoef_[i];
    double acc = 0;
    for (int n = m_; n >= r; --n) acc = acc * u + c[n] * falling_[r][n];
    return acc;
  }

 private:
  SplineTable(int m, const SplineTable* prev) : m_(m) {
    if (m == 0) {
      exact_ = {{Rational(1)}};
    } else {
      // psi_m(i+u) = [P_{i-1}(1) - P_{i-1}(u)] + P_i(u), P_j the antiderivative of piece j of psi_{m-1}.
      auto antiderivative = [&](int j) {
        std::vector<Rational> a(m + 1, Rational(0));
        if (j < 0 || j >= m) return a;
        const auto& q = prev->exact_[j];
        for (std::size_t n = 0; n < q.size(); ++n) a[n + 1] = q[n] / static_cast<long long>(n + 1);
        return a;
      };
      exact_.resize(m + 1);
      for (int i = 0; i <= m; ++i) {
        auto left = antiderivative(i - 1);
        auto here = antiderivative(i);
        Rational left_at_one(0);
        for (const auto& c : left) left_at_one += c;
        std::vector<Rational> piece(m + 1, Rational(0));
        piece[0] = left_at_one;
        for (int n = 0; n <= m; ++n) piece[n] += here[n] - left[n];
        exact_[i] = std::move(piece);
      }
    }
    dcoef_.resize(exact_.size());
    for (std::size_t i = 0; i < exact_.size(); ++i)
      for (const auto& c : exact_[i]) dcoef_[i].push_back(to_double(c));
    falling_.assign(m + 1, std::vector<double>(m + 1, 0.0));
    for (int r = 0; r <= m; ++r)
      for (int n = r; n <= m; ++n) {
        double f = 1;
        for (int t = 0; t < r; ++t) f *= (n - t);
        falling_[r][n] = f;
      }
  }

  int m_;
  std::vector<std::vector<Rational>> exact_;
  std::vector<std::vector<double>> dcoef_;
  std::vector<std::vector<double>> falling_;
};

inline double bspline_eval(int m, double x) { return SplineTable::get(m).value(x); }

inline double bspline_derivative(int m, int r, double x) { return SplineTable::get(m).derivative(r, x); }

/// Two-scale coefficients 2^{-m} C(m+1, mu), mu = 0..m+1.
inline std::vector<double> refinement_coeffs(int m) {
  if (m < 0 || m > 60) throw PreconditionError("refinement order out of range");
  std::vector<double> a(m + 2);
  for (int mu = 0; mu <= m + 1; ++mu) a[mu] = std::ldexp(static_cast<double>(binomial(m + 1, mu)), -m);
  return a;
}

/// Tensor-product blend psi^m(2^kappa x - nu).
struct Blend {
  LevelVector kappa;
  SignedIndex nu;
  MultiIndex m;

  int dim() const noexcept { return kappa.dim(); }

  /// Closed support 2^{-kappa}(nu + (m+1)[0,1]^d).
  Box support() const {
    Point lo(dim()), hi(dim());
    for (int j = 0; j < dim(); ++j) {
      int k = static_cast<int>(kappa[j]);
      lo[j] = std::ldexp(static_cast<double>(nu[j]), -k);
      hi[j] = std::ldexp(static_cast<double>(nu[j] + m[j] + 1), -k);
    }
    return Box(lo, hi);
  }

  double value(const Point& x) const {
    double v = 1;
    for (int j = 0; j < dim() && v != 0.0; ++j) {
      int k = static_cast<int>(kappa[j]);
      v *= SplineTable::get(static_cast<int>(m[j])).value(std::ldexp(x[j], k) - static_cast<double>(nu[j]));
    }
    return v;
  }

  double derivative(const MultiIndex& lambda, const Point& x) const {
    if (!all_le(lambda, m)) throw DegreeError("blend derivative order exceeds spline order");
    double v = 1;
    for (int j = 0; j < dim() && v != 0.0; ++j) {
      int k = static_cast<int>(kappa[j]);
      int r = static_cast<int>(lambda[j]);
      v *= std::ldexp(SplineTable::get(static_cast<int>(m[j]))
                          .derivative(r, std::ldexp(x[j], k) - static_cast<double>(nu[j])),
                      k * r);
    }
    return v;
  }
};

inline double blend_eval(const Blend& b, const Point& x) { return b.value(x); }
inline double blend_derivative(const Blend& b, const MultiIndex& lambda, const Point& x) {
  return b.derivative(lambda, x);
}

// ---------------------------------------------------------------------------
// Subdivision

struct StencilEntry {
  SignedIndex source;
  double weight;
};

/// Coefficients expressing blends of a fine level through those of a coarse level:
/// the fine coefficient at `nu` is the weighted sum of coarse coefficients at the sources.
struct SubdivisionStencil {
  LevelVector coarse;
  LevelVector fine;
  MultiIndex m;
  std::map<SignedIndex, std::vector<StencilEntry>> rows;

  const std::vector<StencilEntry>& row(const SignedIndex& nu) const { return rows.at(nu); }
};

/// One axis of the stencil: sources at `steps` coarser levels for fine index `nu`,
/// composed one dyadic level at a time with equal sources merged.
inline std::vector<std::pair<long long, double>> stencil_1d(long long nu, long long steps, int m) {
  if (steps < 0) throw LevelOrderError("coarse level exceeds fine level");
  const auto a = refinement_coeffs(m);
  std::map<long long, double> cur{{nu, 1.0}};
  for (long long s = 0; s < steps; ++s) {
    std::map<long long, double> next;
    for (auto [n, w] : cur)
      for (int mu = 0; mu <= m + 1; ++mu) {
        long long diff = n - mu;
        if (diff % 2 != 0) continue;
        next[diff / 2] += w * a[mu];
      }
    cur = std::move(next);
  }
  return {cur.begin(), cur.end()};
}

inline SubdivisionStencil subdivision_stencil(const LevelVector& coarse, const LevelVector& fine,
                                              const MultiIndex& m,
                                              std::span<const SignedIndex> targets) {
  const int d = fine.dim();
  if (coarse.dim() != d || m.dim() != d) throw PreconditionError("stencil dimension mismatch");
  if (!all_le(coarse, fine)) throw LevelOrderError("subdivision needs coarse <= fine componentwise");
  SubdivisionStencil st{coarse, fine, m, {}};
  for (const auto& nu : targets) {
    std::vector<StencilEntry> row{{SignedIndex(d), 1.0}};
    for (int j = 0; j < d; ++j) {
      auto axis = stencil_1d(nu[j], fine[j] - coarse[j], static_cast<int>(m[j]));
      std::vector<StencilEntry> next;
      next.reserve(row.size() * axis.size());
      for (const auto& e : row)
        for (auto [n, w] : axis) {
          StencilEntry f = e;
          f.source[j] = n;
          f.weight *= w;
          next.push_back(f);
        }
      row = std::move(next);
    }
    st.rows.emplace(nu, std::move(row));
  }
  return st;
}

}  // namespace aniso
