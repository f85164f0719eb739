#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <limits>
#include <sstream>
#include <vector>

#include "aniso/grid.hpp"
#include "aniso/quadrature.hpp"

namespace aniso {

template <class F>
concept PointFunction = requires(const F& f, const Point& x) {
  { f(x) } -> std::convertible_to<double>;
};

namespace legendre {

/// Orthonormal shifted Legendre polynomials L_0..L_n on [0,1] and their r-th derivatives in u.
inline void derivatives(int n, int r, double u, double* out) {
  const double s = 2 * u - 1;
  std::array<double, 32> prev{}, cur{};
  for (int k = 0; k <= n; ++k) prev[k] = 0;
  prev[0] = 1;
  if (n >= 1) prev[1] = s;
  for (int k = 1; k < n; ++k) prev[k + 1] = ((2.0 * k + 1) * s * prev[k] - k * prev[k - 1]) / (k + 1);
  for (int q = 1; q <= r; ++q) {
    cur.fill(0.0);
    if (n >= 1 && q == 1) cur[1] = 1;
    for (int k = 1; k < n; ++k)
      cur[k + 1] = ((2.0 * k + 1) * (s * cur[k] + q * prev[k]) - k * cur[k - 1]) / (k + 1);
    std::swap(prev, cur);
  }
  const double scale = std::ldexp(1.0, r);
  for (int k = 0; k <= n; ++k) out[k] = std::sqrt(2.0 * k + 1) * scale * prev[k];
}

inline void values(int n, double u, double* out) {
  const double s = 2 * u - 1;
  double pm = 1, p = s;
  out[0] = 1;
  if (n >= 1) out[1] = std::sqrt(3.0) * s;
  for (int k = 1; k < n; ++k) {
    double pn = ((2.0 * k + 1) * s * p - k * pm) / (k + 1);
    pm = p;
    p = pn;
    out[k + 1] = std::sqrt(2.0 * k + 3) * pn;
  }
}

}  // namespace legendre

/// Polynomial of coordinate degree <= `degree` in the tensor orthonormal shifted-Legendre
/// basis of its frame box. Coefficients are ordered like `index_range(degree)`.
class PolyCell {
 public:
  PolyCell() = default;
  PolyCell(MultiIndex degree, Box frame)
      : degree_(std::move(degree)), frame_(std::move(frame)), coef_(index_count(degree_), 0.0) {
    if (degree_.dim() != frame_.dim()) throw PreconditionError("degree and frame dimensions differ");
    if (frame_.empty()) throw PreconditionError("polynomial frame must have positive widths");
  }
  PolyCell(MultiIndex degree, Box frame, std::vector<double> coef)
      : PolyCell(std::move(degree), std::move(frame)) {
    if (coef.size() != coef_.size()) throw PreconditionError("coefficient count does not match degree");
    coef_ = std::move(coef);
  }

  static PolyCell constant(double c, const Box& frame) {
    PolyCell p(MultiIndex(frame.dim()), frame);
    p.coef_[0] = c;
    return p;
  }

  int dim() const noexcept { return degree_.dim(); }
  const MultiIndex& degree() const noexcept { return degree_; }
  const Box& frame() const noexcept { return frame_; }
  std::span<const double> coeffs() const noexcept { return coef_; }
  std::span<double> coeffs() noexcept { return coef_; }

  std::size_t flat(const MultiIndex& lambda) const {
    std::size_t f = 0;
    for (int j = 0; j < dim(); ++j) f = f * static_cast<std::size_t>(degree_[j] + 1) + lambda[j];
    return f;
  }
  double coeff(const MultiIndex& lambda) const { return coef_[flat(lambda)]; }

  double operator()(const Point& x) const { return value(x); }

  double value(const Point& x) const {
    std::array<std::array<double, 32>, kMaxDim> basis{};
    for (int j = 0; j < dim(); ++j)
      legendre::values(static_cast<int>(degree_[j]), (x[j] - frame_.lo[j]) / frame_.width(j), basis[j].data());
    return contract(basis);
  }

  /// D^lambda evaluated at x; zero when lambda exceeds the degree on some axis.
  double derivative(const MultiIndex& lambda, const Point& x) const {
    std::array<std::array<double, 32>, kMaxDim> basis{};
    for (int j = 0; j < dim(); ++j) {
      int n = static_cast<int>(degree_[j]);
      int r = static_cast<int>(lambda[j]);
      if (r > n) return 0.0;
      legendre::derivatives(n, r, (x[j] - frame_.lo[j]) / frame_.width(j), basis[j].data());
      double s = std::pow(frame_.width(j), -r);
      for (int k = 0; k <= n; ++k) basis[j][k] *= s;
    }
    return contract(basis);
  }

  PolyCell& operator*=(double c) {
    for (auto& v : coef_) v *= c;
    return *this;
  }

  /// this += c * other. Requires identical frame and degree.
  PolyCell& add_scaled(const PolyCell& other, double c) {
    if (!(other.degree_ == degree_) || !(other.frame_ == frame_))
      throw PreconditionError("add_scaled needs matching frame and degree; reframe first");
    for (std::size_t i = 0; i < coef_.size(); ++i) coef_[i] += c * other.coef_[i];
    return *this;
  }

  bool is_zero(double tol = 0.0) const {
    return std::all_of(coef_.begin(), coef_.end(), [tol](double v) { return std::abs(v) <= tol; });
  }

 private:
  double contract(const std::array<std::array<double, 32>, kMaxDim>& basis) const {
    const int d = dim();
    if (d == 1) {
      double s = 0;
      for (long long a = 0; a <= degree_[0]; ++a) s += coef_[a] * basis[0][a];
      return s;
    }
    double s = 0;
    std::size_t f = 0;
    if (d == 2) {
      for (long long a = 0; a <= degree_[0]; ++a) {
        double inner = 0;
        for (long long b = 0; b <= degree_[1]; ++b) inner += coef_[f++] * basis[1][b];
        s += inner * basis[0][a];
      }
      return s;
    }
    for (long long a = 0; a <= degree_[0]; ++a) {
      double mid = 0;
      for (long long b = 0; b <= degree_[1]; ++b) {
        double inner = 0;
        for (long long c = 0; c <= degree_[2]; ++c) inner += coef_[f++] * basis[2][c];
        mid += inner * basis[1][b];
      }
      s += mid * basis[0][a];
    }
    return s;
  }

  MultiIndex degree_;
  Box frame_;
  std::vector<double> coef_;
};

inline constexpr int kMaxPolyDegree = 30;

inline void check_degree(const MultiIndex& l) {
  for (int j = 0; j < l.dim(); ++j)
    if (l[j] > kMaxPolyDegree) throw PreconditionError("polynomial degree too large");
}

namespace detail {

/// Applies a square matrix along one axis of a coefficient tensor with per-axis extents n_j.
inline void apply_axis(std::vector<double>& data, const std::array<int, kMaxDim>& n, int d, int axis,
                       const std::vector<std::vector<double>>& mat, int out_extent,
                       std::array<int, kMaxDim>& out_n, std::vector<double>& out) {
  out_n = n;
  out_n[axis] = out_extent;
  std::size_t inner = 1, outer = 1;
  for (int j = axis + 1; j < d; ++j) inner *= n[j];
  for (int j = 0; j < axis; ++j) outer *= n[j];
  out.assign(outer * out_extent * inner, 0.0);
  for (std::size_t o = 0; o < outer; ++o)
    for (int r = 0; r < out_extent; ++r)
      for (int c = 0; c < n[axis]; ++c) {
        double m = mat[r][c];
        if (m == 0.0) continue;
        const double* src = &data[(o * n[axis] + c) * inner];
        double* dst = &out[(o * out_extent + r) * inner];
        for (std::size_t i = 0; i < inner; ++i) dst[i] += m * src[i];
      }
}

inline std::vector<std::vector<double>> invert(std::vector<std::vector<double>> a) {
  const int n = static_cast<int>(a.size());
  std::vector<std::vector<double>> inv(n, std::vector<double>(n, 0.0));
  for (int i = 0; i < n; ++i) inv[i][i] = 1;
  for (int c = 0; c < n; ++c) {
    int piv = c;
    for (int r = c + 1; r < n; ++r)
      if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
    if (a[piv][c] == 0.0) throw PreconditionError("singular interpolation matrix");
    std::swap(a[c], a[piv]);
    std::swap(inv[c], inv[piv]);
    double s = 1 / a[c][c];
    for (int k = 0; k < n; ++k) {
      a[c][k] *= s;
      inv[c][k] *= s;
    }
    for (int r = 0; r < n; ++r) {
      if (r == c || a[r][c] == 0.0) continue;
      double f = a[r][c];
      for (int k = 0; k < n; ++k) {
        a[r][k] -= f * a[c][k];
        inv[r][k] -= f * inv[c][k];
      }
    }
  }
  return inv;
}

}  // namespace detail

/// L2(box)-orthogonal projection of f onto polynomials of coordinate degree <= l.
/// Gauss nodes per axis: max_j l_j + 1 + q_extra.
template <PointFunction F>
PolyCell project_L2(const F& f, const Box& box, const MultiIndex& l, int q_extra = 4) {
  check_degree(l);
  if (q_extra < 0) throw PreconditionError("q_extra must be non-negative");
  const int d = box.dim();
  PolyCell p(l, box);
  const int nq = static_cast<int>(l.max()) + 1 + q_extra;
  const GaussRule& g = gauss_legendre(nq);
  // basis values at nodes, per axis
  std::array<std::vector<double>, kMaxDim> B;
  for (int j = 0; j < d; ++j) {
    int n = static_cast<int>(l[j]);
    B[j].assign(static_cast<std::size_t>(nq) * (n + 1), 0.0);
    for (int i = 0; i < nq; ++i) legendre::values(n, g.nodes[i], &B[j][i * (n + 1)]);
  }
  auto coef = p.coeffs();
  MultiIndex top(d, nq - 1);
  std::array<double, kMaxDim> u{};
  for_each_in_box(MultiIndex(d), top, [&](const MultiIndex& node) {
    double w = 1;
    for (int j = 0; j < d; ++j) {
      u[j] = g.nodes[node[j]];
      w *= g.weights[node[j]];
    }
    Point x = box.from_unit(std::span<const double>(u.data(), d));
    double v = f(x);
    if (!std::isfinite(v)) {
      std::ostringstream os;
      os << "non-finite field value at " << x;
      throw QuadratureError(os.str());
    }
    std::size_t k = 0;
    for_each_in_box(MultiIndex(d), l, [&](const MultiIndex& lam) {
      double b = w * v;
      for (int j = 0; j < d; ++j) b *= B[j][node[j] * (l[j] + 1) + lam[j]];
      coef[k++] += b;
    });
  });
  return p;
}

/// The same polynomial written in the basis of another frame.
inline PolyCell reframe(const PolyCell& p, const Box& target) {
  if (p.frame() == target) return p;
  return project_L2([&p](const Point& x) { return p.value(x); }, target, p.degree(), 0);
}

/// Exact derivative; degree drops to (l - lambda)_+.
inline PolyCell poly_derivative(const PolyCell& p, const MultiIndex& lambda) {
  const int d = p.dim();
  MultiIndex out_deg(d);
  for (int j = 0; j < d; ++j) out_deg[j] = std::max<long long>(0, p.degree()[j] - lambda[j]);
  std::array<int, kMaxDim> n{};
  for (int j = 0; j < d; ++j) n[j] = static_cast<int>(p.degree()[j]) + 1;
  std::vector<double> data(p.coeffs().begin(), p.coeffs().end());
  for (int j = 0; j < d; ++j) {
    int r = static_cast<int>(lambda[j]);
    if (r == 0) continue;
    int deg = static_cast<int>(p.degree()[j]);
    std::vector<std::vector<double>> D(deg + 1, std::vector<double>(deg + 1, 0.0));
    for (int col = 0; col <= deg; ++col)
      for (int row = 0; row < col; ++row)
        if ((col - row) % 2 == 1)
          D[row][col] = 2 * std::sqrt((2.0 * col + 1) * (2.0 * row + 1)) / p.frame().width(j);
    for (int step = 0; step < r; ++step) {
      std::array<int, kMaxDim> n2{};
      std::vector<double> out;
      detail::apply_axis(data, n, d, j, D, deg + 1, n2, out);
      data = std::move(out);
    }
    // truncate axis j to the new degree
    std::vector<std::vector<double>> T(out_deg[j] + 1, std::vector<double>(deg + 1, 0.0));
    for (int k = 0; k <= out_deg[j]; ++k) T[k][k] = r > deg ? 0.0 : 1.0;
    std::array<int, kMaxDim> n2{};
    std::vector<double> out;
    detail::apply_axis(data, n, d, j, T, static_cast<int>(out_deg[j]) + 1, n2, out);
    data = std::move(out);
    n = n2;
  }
  return PolyCell(out_deg, p.frame(), std::move(data));
}

/// Values at the node grid frame.lo + width * lambda, lambda in Z_+^d(l), lexicographic.
inline std::vector<double> lagrange_iso(const PolyCell& p) {
  std::vector<double> out;
  const int d = p.dim();
  for (const auto& lam : index_range(p.degree())) {
    Point x(d);
    for (int j = 0; j < d; ++j) x[j] = p.frame().lo[j] + p.frame().width(j) * static_cast<double>(lam[j]);
    out.push_back(p.value(x));
  }
  return out;
}

/// Inverse of lagrange_iso: the unique polynomial of degree <= l with the given node values.
inline PolyCell lagrange_from_values(std::span<const double> values, const MultiIndex& l, const Box& frame) {
  check_degree(l);
  const int d = l.dim();
  if (values.size() != index_count(l))
    throw PreconditionError("value grid size does not match the degree bounds");
  std::array<int, kMaxDim> n{};
  for (int j = 0; j < d; ++j) n[j] = static_cast<int>(l[j]) + 1;
  std::vector<double> data(values.begin(), values.end());
  for (int j = 0; j < d; ++j) {
    int deg = static_cast<int>(l[j]);
    std::vector<std::vector<double>> V(deg + 1, std::vector<double>(deg + 1));
    for (int i = 0; i <= deg; ++i) legendre::values(deg, static_cast<double>(i), V[i].data());
    auto Vinv = detail::invert(V);
    std::array<int, kMaxDim> n2{};
    std::vector<double> out;
    detail::apply_axis(data, n, d, j, Vinv, deg + 1, n2, out);
    data = std::move(out);
  }
  return PolyCell(l, frame, std::move(data));
}

/// ||p||_{L_q(box)}. Finite q uses Gauss quadrature (exact for even integer q); q = inf uses
/// dense sampling plus one Newton step per axis from the best sample.
inline double poly_lp_norm(const PolyCell& p, const Box& box, double q, int samples = 64) {
  const int d = p.dim();
  if (std::isinf(q)) {
    double best = -1;
    Point arg(d);
    MultiIndex top(d, samples - 1);
    std::array<double, kMaxDim> u{};
    for_each_in_box(MultiIndex(d), top, [&](const MultiIndex& s) {
      for (int j = 0; j < d; ++j) u[j] = static_cast<double>(s[j]) / (samples - 1);
      Point x = box.from_unit(std::span<const double>(u.data(), d));
      double v = std::abs(p.value(x));
      if (v > best) {
        best = v;
        arg = x;
      }
    });
    Point y = arg;
    for (int j = 0; j < d; ++j) {
      MultiIndex e1(d), e2(d);
      e1[j] = 1;
      e2[j] = 2;
      double g1 = p.derivative(e1, y), g2 = p.derivative(e2, y);
      if (g2 != 0.0) y[j] = std::clamp(y[j] - g1 / g2, box.lo[j], box.hi[j]);
    }
    return std::max(best, std::abs(p.value(y)));
  }
  const int nq = std::min(kMaxGaussNodes, static_cast<int>(p.degree().max()) * static_cast<int>(std::ceil(q)) + 8);
  const GaussRule& g = gauss_legendre(nq);
  double s = 0;
  MultiIndex top(d, nq - 1);
  std::array<double, kMaxDim> u{};
  for_each_in_box(MultiIndex(d), top, [&](const MultiIndex& node) {
    double w = 1;
    for (int j = 0; j < d; ++j) {
      u[j] = g.nodes[node[j]];
      w *= g.weights[node[j]];
    }
    s += w * std::pow(std::abs(p.value(box.from_unit(std::span<const double>(u.data(), d)))), q);
  });
  return std::pow(s * box.volume(), 1.0 / q);
}

}  // namespace aniso
