#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <compare>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <boost/rational.hpp>

#include "aniso/error.hpp"

namespace aniso {

inline constexpr int kMaxDim = 3;

inline void check_dim(int d) {
  if (d < 1 || d > kMaxDim)
    throw PreconditionError("dimension must be in 1.." + std::to_string(kMaxDim) + ", got " +
                            std::to_string(d));
}

// ---------------------------------------------------------------------------
// Exact rationals

using Rational = boost::rational<long long>;

inline double to_double(const Rational& r) {
  return static_cast<double>(r.numerator()) / static_cast<double>(r.denominator());
}

inline long long floor_of(const Rational& r) {
  long long q = r.numerator() / r.denominator();
  if (r.numerator() % r.denominator() != 0 && r.numerator() < 0) --q;
  return q;
}

inline long long ceil_of(const Rational& r) { return -floor_of(-r); }

/// Parses "3", "-1.25", "7/4" or "2.5e-1" into an exact rational.
inline Rational parse_rational(std::string_view text) {
  auto fail = [&] { throw ParseError("not a rational number: '" + std::string(text) + "'", 0); };
  std::string s(text);
  s.erase(std::remove_if(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); }),
          s.end());
  if (s.empty()) fail();
  try {
    if (auto slash = s.find('/'); slash != std::string::npos) {
      std::size_t used = 0;
      long long num = std::stoll(s.substr(0, slash), &used);
      if (used != slash) fail();
      std::string den_text = s.substr(slash + 1);
      long long den = std::stoll(den_text, &used);
      if (used != den_text.size() || den == 0) fail();
      return Rational(num, den);
    }
    bool negative = false;
    std::size_t i = 0;
    if (s[i] == '+' || s[i] == '-') negative = s[i++] == '-';
    long long num = 0, den = 1;
    bool digits = false, dot = false;
    constexpr long long kLimit = std::numeric_limits<long long>::max() / 10;
    for (; i < s.size(); ++i) {
      char c = s[i];
      if (c >= '0' && c <= '9') {
        if (num > kLimit || (dot && den > kLimit)) fail();
        num = num * 10 + (c - '0');
        if (dot) den *= 10;
        digits = true;
      } else if (c == '.' && !dot) {
        dot = true;
      } else {
        break;
      }
    }
    if (!digits) fail();
    Rational r(negative ? -num : num, den);
    if (i < s.size()) {
      if (s[i] != 'e' && s[i] != 'E') fail();
      std::size_t used = 0;
      std::string exp_text = s.substr(i + 1);
      int e = std::stoi(exp_text, &used);
      if (used != exp_text.size() || std::abs(e) > 18) fail();
      long long scale = 1;
      for (int k = 0; k < std::abs(e); ++k) scale *= 10;
      r = e >= 0 ? r * scale : r / scale;
    }
    return r;
  } catch (const std::logic_error&) {  // also covers boost::bad_rational
    fail();
  }
  return {};
}

/// Exact rational value of a double; throws when it does not fit 64-bit numerator/denominator.
inline Rational exact_rational(double v) {
  if (!std::isfinite(v)) throw PreconditionError("non-finite value has no rational form");
  if (v == 0.0) return Rational(0);
  int e = 0;
  double mant = std::frexp(v, &e);  // v = mant * 2^e, 0.5 <= |mant| < 1
  long long m = static_cast<long long>(std::ldexp(mant, 53));
  int shift = e - 53;
  while (shift < 0 && (m % 2) == 0) {
    m /= 2;
    ++shift;
  }
  if (shift >= 0) {
    if (shift > 62 - 53) throw PreconditionError("value too large for exact rational form");
    return Rational(m << shift);
  }
  if (-shift > 62) throw PreconditionError("value too small for exact rational form");
  return Rational(m, 1LL << (-shift));
}

inline Rational dyadic(long long numerator, long long level) {
  if (level < 0 || level > 62) throw PreconditionError("dyadic level out of range");
  return Rational(numerator, 1LL << level);
}

// ---------------------------------------------------------------------------
// Points

/// A point of R^d, d <= 3.
class Point {
 public:
  Point() = default;
  explicit Point(int d, double fill = 0.0) : d_(d) {
    check_dim(d);
    for (int j = 0; j < d; ++j) x_[j] = fill;
  }
  Point(std::initializer_list<double> v) : d_(static_cast<int>(v.size())) {
    check_dim(d_);
    std::copy(v.begin(), v.end(), x_.begin());
  }

  int dim() const noexcept { return d_; }
  double operator[](int j) const noexcept { return x_[j]; }
  double& operator[](int j) noexcept { return x_[j]; }
  std::span<const double> coords() const noexcept { return {x_.data(), std::size_t(d_)}; }

  friend bool operator==(const Point&, const Point&) = default;

 private:
  std::array<double, kMaxDim> x_{};
  int d_ = 0;
};

inline std::ostream& operator<<(std::ostream& os, const Point& x) {
  os << '(';
  for (int j = 0; j < x.dim(); ++j) os << (j ? "," : "") << x[j];
  return os << ')';
}

// ---------------------------------------------------------------------------
// Integer tuples

struct MultiTag {
  static constexpr bool non_negative = true;
};
struct SignedTag {
  static constexpr bool non_negative = false;
};
struct LevelTag {
  static constexpr bool non_negative = true;
};

/// Fixed-capacity integer tuple. The tag decides whether negative entries are allowed
/// and keeps multi-indices, cell indices and levels from mixing silently.
template <class Tag>
class BasicIndex {
 public:
  BasicIndex() = default;
  explicit BasicIndex(int d, long long fill = 0) : d_(d) {
    check_dim(d);
    for (int j = 0; j < d; ++j) v_[j] = fill;
    validate();
  }
  BasicIndex(std::initializer_list<long long> v) : d_(static_cast<int>(v.size())) {
    check_dim(d_);
    std::copy(v.begin(), v.end(), v_.begin());
    validate();
  }
  explicit BasicIndex(std::span<const long long> v) : d_(static_cast<int>(v.size())) {
    check_dim(d_);
    std::copy(v.begin(), v.end(), v_.begin());
    validate();
  }

  int dim() const noexcept { return d_; }
  long long operator[](int j) const noexcept { return v_[j]; }
  long long& operator[](int j) noexcept { return v_[j]; }
  std::span<const long long> entries() const noexcept { return {v_.data(), std::size_t(d_)}; }

  long long sum() const noexcept {
    long long s = 0;
    for (int j = 0; j < d_; ++j) s += v_[j];
    return s;
  }
  long long max() const noexcept { return *std::max_element(v_.begin(), v_.begin() + d_); }

  /// Lexicographic order (first coordinate most significant).
  friend auto operator<=>(const BasicIndex&, const BasicIndex&) = default;
  friend bool operator==(const BasicIndex&, const BasicIndex&) = default;

 private:
  void validate() const {
    if constexpr (Tag::non_negative) {
      for (int j = 0; j < d_; ++j)
        if (v_[j] < 0) throw PreconditionError("negative entry in a non-negative index");
    }
  }

  std::array<long long, kMaxDim> v_{};
  int d_ = 0;
};

using MultiIndex = BasicIndex<MultiTag>;
using SignedIndex = BasicIndex<SignedTag>;
using LevelVector = BasicIndex<LevelTag>;

template <class To, class From>
To index_cast(const From& from) {
  return To(from.entries());
}

template <class Tag>
std::ostream& operator<<(std::ostream& os, const BasicIndex<Tag>& v) {
  os << '(';
  for (int j = 0; j < v.dim(); ++j) os << (j ? "," : "") << v[j];
  return os << ')';
}

template <class Tag>
std::string to_string(const BasicIndex<Tag>& v) {
  std::string s = "(";
  for (int j = 0; j < v.dim(); ++j) s += (j ? "," : "") + std::to_string(v[j]);
  return s + ")";
}

/// Componentwise a <= b.
template <class A, class B>
bool all_le(const A& a, const B& b) {
  for (int j = 0; j < a.dim(); ++j)
    if (a[j] > b[j]) return false;
  return true;
}

inline SignedIndex operator+(SignedIndex a, const SignedIndex& b) {
  for (int j = 0; j < a.dim(); ++j) a[j] += b[j];
  return a;
}
inline SignedIndex operator-(SignedIndex a, const SignedIndex& b) {
  for (int j = 0; j < a.dim(); ++j) a[j] -= b[j];
  return a;
}

inline long long linf_distance(const SignedIndex& a, const SignedIndex& b) {
  long long r = 0;
  for (int j = 0; j < a.dim(); ++j) r = std::max(r, std::llabs(a[j] - b[j]));
  return r;
}

inline SignedIndex unit_step(int d, int axis, int sign) {
  SignedIndex e(d);
  e[axis] = sign;
  return e;
}

/// Enumerates the integer box lo..hi (inclusive) in lexicographic order.
template <class Tag, class F>
void for_each_in_box(const BasicIndex<Tag>& lo, const BasicIndex<Tag>& hi, F&& fn) {
  const int d = lo.dim();
  for (int j = 0; j < d; ++j)
    if (hi[j] < lo[j]) return;
  BasicIndex<Tag> cur = lo;
  while (true) {
    fn(static_cast<const BasicIndex<Tag>&>(cur));
    int j = d - 1;
    while (j >= 0 && cur[j] == hi[j]) {
      cur[j] = lo[j];
      --j;
    }
    if (j < 0) return;
    ++cur[j];
  }
}

/// All lambda with 0 <= lambda <= l, lexicographic.
inline std::vector<MultiIndex> index_range(const MultiIndex& l) {
  std::vector<MultiIndex> out;
  std::size_t n = 1;
  for (int j = 0; j < l.dim(); ++j) n *= static_cast<std::size_t>(l[j] + 1);
  out.reserve(n);
  for_each_in_box(MultiIndex(l.dim()), l, [&](const MultiIndex& v) { out.push_back(v); });
  return out;
}

inline std::size_t index_count(const MultiIndex& l) {
  std::size_t n = 1;
  for (int j = 0; j < l.dim(); ++j) n *= static_cast<std::size_t>(l[j] + 1);
  return n;
}

inline long long binomial(long long n, long long k) {
  if (k < 0 || k > n) return 0;
  long long r = 1;
  for (long long i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// ---------------------------------------------------------------------------
// Anisotropy profile and levels

/// Per-axis smoothness orders alpha with the derived difference orders.
/// `l()` is the least integer above alpha, `lbar()` the greatest non-negative integer below it.
class AnisoProfile {
 public:
  explicit AnisoProfile(std::vector<double> alpha) : alpha_(std::move(alpha)) {
    check_dim(dim());
    for (double a : alpha_)
      if (!(a > 0.0) || !std::isfinite(a)) throw PreconditionError("alpha entries must be positive");
    derive();
  }

  /// Exact profile; levels are then computed in rational arithmetic.
  static AnisoProfile exact(std::vector<Rational> alpha) {
    std::vector<double> approx;
    for (const auto& a : alpha) {
      if (a <= 0) throw PreconditionError("alpha entries must be positive");
      approx.push_back(to_double(a));
    }
    AnisoProfile p(std::move(approx));
    p.exact_ = std::move(alpha);
    p.derive();
    return p;
  }

  static AnisoProfile parse(const std::vector<std::string>& entries) {
    std::vector<Rational> a;
    for (const auto& s : entries) a.push_back(parse_rational(s));
    return exact(std::move(a));
  }

  int dim() const noexcept { return static_cast<int>(alpha_.size()); }
  double alpha(int j) const { return alpha_.at(j); }
  const std::vector<double>& alpha() const noexcept { return alpha_; }
  bool is_exact() const noexcept { return !exact_.empty(); }
  const std::vector<Rational>& exact_alpha() const noexcept { return exact_; }
  const MultiIndex& l() const noexcept { return l_; }
  const MultiIndex& lbar() const noexcept { return lbar_; }
  bool is_integer(int j) const noexcept { return integer_[j]; }

  /// (alpha^{-1}, w) for a weight vector w.
  double inverse_dot(std::span<const double> w) const {
    double s = 0;
    for (int j = 0; j < dim(); ++j) s += w[j] / alpha_[j];
    return s;
  }
  double inverse_sum() const {
    std::vector<double> e(dim(), 1.0);
    return inverse_dot(e);
  }

 private:
  static bool near_integer(double q) {
    return std::abs(q - std::nearbyint(q)) <= 1e-12 * std::max(1.0, std::abs(q));
  }

  void derive() {
    const int d = dim();
    l_ = MultiIndex(d);
    lbar_ = MultiIndex(d);
    integer_.assign(d, false);
    for (int j = 0; j < d; ++j) {
      long long fl;
      if (is_exact()) {
        integer_[j] = exact_[j].denominator() == 1;
        fl = floor_of(exact_[j]);
      } else {
        integer_[j] = near_integer(alpha_[j]);
        fl = integer_[j] ? static_cast<long long>(std::nearbyint(alpha_[j]))
                         : static_cast<long long>(std::floor(alpha_[j]));
      }
      l_[j] = fl + 1;
      lbar_[j] = integer_[j] ? fl - 1 : fl;
    }
  }

  std::vector<double> alpha_;
  std::vector<Rational> exact_;
  std::vector<bool> integer_;
  MultiIndex l_, lbar_;
};

/// kappa(k, alpha)_j = [k / alpha_j].
inline LevelVector level_vector(long long k, const AnisoProfile& profile) {
  if (k < 0) throw PreconditionError("level must be non-negative");
  LevelVector kappa(profile.dim());
  for (int j = 0; j < profile.dim(); ++j) {
    if (profile.is_exact()) {
      kappa[j] = floor_of(Rational(k) / profile.exact_alpha()[j]);
    } else {
      double q = static_cast<double>(k) / profile.alpha(j);
      double r = std::nearbyint(q);
      kappa[j] = std::abs(q - r) <= 1e-12 * std::max(1.0, std::abs(q))
                     ? static_cast<long long>(r)
                     : static_cast<long long>(std::floor(q));
    }
  }
  return kappa;
}

// ---------------------------------------------------------------------------
// Dyadic cells

/// Open cell 2^{-kappa} (nu + (0,1)^d).
struct DyadicCell {
  LevelVector kappa;
  SignedIndex nu;

  int dim() const noexcept { return kappa.dim(); }
  double side(int j) const { return std::ldexp(1.0, -static_cast<int>(kappa[j])); }
  double lower(int j) const { return std::ldexp(static_cast<double>(nu[j]), -static_cast<int>(kappa[j])); }
  double upper(int j) const {
    return std::ldexp(static_cast<double>(nu[j] + 1), -static_cast<int>(kappa[j]));
  }
  Point lower_corner() const {
    Point x(dim());
    for (int j = 0; j < dim(); ++j) x[j] = lower(j);
    return x;
  }
  Point center() const {
    Point x(dim());
    for (int j = 0; j < dim(); ++j) x[j] = lower(j) + 0.5 * side(j);
    return x;
  }
  bool contains(const Point& x) const {
    for (int j = 0; j < dim(); ++j)
      if (!(x[j] > lower(j) && x[j] < upper(j))) return false;
    return true;
  }
};

/// Index of the half-open cell [2^{-kappa}nu, 2^{-kappa}(nu+1)) containing x.
inline SignedIndex cell_index(const LevelVector& kappa, const Point& x) {
  SignedIndex nu(kappa.dim());
  for (int j = 0; j < kappa.dim(); ++j)
    nu[j] = static_cast<long long>(std::floor(std::ldexp(x[j], static_cast<int>(kappa[j]))));
  return nu;
}


// ---------------------------------------------------------------------------
// Axis-aligned boxes with floating corners

/// Box lo + (hi - lo) * [0,1]^d. Used both as integration region and as polynomial frame.
struct Box {
  Point lo, hi;

  Box() = default;
  Box(Point lower, Point upper) : lo(lower), hi(upper) {
    if (lo.dim() != hi.dim()) throw PreconditionError("box corner dimensions differ");
  }
  static Box of(const DyadicCell& c) {
    Point hi(c.dim());
    for (int j = 0; j < c.dim(); ++j) hi[j] = c.upper(j);
    return Box(c.lower_corner(), hi);
  }
  /// Box x0 + delta * [0,1]^d.
  static Box frame(const Point& x0, std::span<const double> delta) {
    Point hi(x0.dim());
    for (int j = 0; j < x0.dim(); ++j) hi[j] = x0[j] + delta[j];
    return Box(x0, hi);
  }

  int dim() const noexcept { return lo.dim(); }
  double width(int j) const { return hi[j] - lo[j]; }
  double volume() const {
    double v = 1;
    for (int j = 0; j < dim(); ++j) v *= width(j);
    return v;
  }
  bool empty() const {
    for (int j = 0; j < dim(); ++j)
      if (!(hi[j] > lo[j])) return true;
    return false;
  }
  bool contains_closed(const Point& x) const {
    for (int j = 0; j < dim(); ++j)
      if (x[j] < lo[j] || x[j] > hi[j]) return false;
    return true;
  }
  Point from_unit(std::span<const double> u) const {
    Point x(dim());
    for (int j = 0; j < dim(); ++j) x[j] = lo[j] + width(j) * u[j];
    return x;
  }

  friend bool operator==(const Box&, const Box&) = default;
};

// ---------------------------------------------------------------------------
// Affine scaling maps x -> x0 + delta * x

class ScaleMap {
 public:
  ScaleMap(std::span<const double> delta, const Point& x0) : d_(x0.dim()) {
    check_dim(d_);
    if (static_cast<int>(delta.size()) != d_) throw PreconditionError("scale map dimension mismatch");
    for (int j = 0; j < d_; ++j) {
      if (!(delta[j] > 0.0)) throw PreconditionError("scale factors must be positive");
      delta_[j] = exact_rational(delta[j]);
      x0_[j] = exact_rational(x0[j]);
    }
  }
  ScaleMap(std::initializer_list<double> delta, const Point& x0)
      : ScaleMap(std::span<const double>(delta.begin(), delta.size()), x0) {}

  int dim() const noexcept { return d_; }
  double delta(int j) const { return to_double(delta_[j]); }
  double offset(int j) const { return to_double(x0_[j]); }
  const Rational& exact_delta(int j) const { return delta_[j]; }
  const Rational& exact_offset(int j) const { return x0_[j]; }
  Point x0() const {
    Point p(d_);
    for (int j = 0; j < d_; ++j) p[j] = offset(j);
    return p;
  }
  /// Product of the scale factors.
  double jacobian() const {
    double v = 1;
    for (int j = 0; j < d_; ++j) v *= delta(j);
    return v;
  }

  Point apply(const Point& x) const {
    Point y(d_);
    for (int j = 0; j < d_; ++j) y[j] = offset(j) + delta(j) * x[j];
    return y;
  }

  ScaleMap inverse() const {
    ScaleMap m = *this;
    for (int j = 0; j < d_; ++j) {
      m.delta_[j] = 1 / delta_[j];
      m.x0_[j] = -x0_[j] / delta_[j];
    }
    return m;
  }

  friend bool operator==(const ScaleMap& a, const ScaleMap& b) {
    if (a.d_ != b.d_) return false;
    for (int j = 0; j < a.d_; ++j)
      if (a.delta_[j] != b.delta_[j] || a.x0_[j] != b.x0_[j]) return false;
    return true;
  }

 private:
  std::array<Rational, kMaxDim> delta_{}, x0_{};
  int d_ = 0;
};

inline Point scale_apply(const ScaleMap& m, const Point& x) { return m.apply(x); }
inline ScaleMap scale_invert(const ScaleMap& m) { return m.inverse(); }

}  // namespace aniso

template <class Tag>
struct std::hash<aniso::BasicIndex<Tag>> {
  std::size_t operator()(const aniso::BasicIndex<Tag>& v) const noexcept {
    std::size_t h = static_cast<std::size_t>(v.dim());
    for (int j = 0; j < v.dim(); ++j)
      h = h * 1000003u ^ static_cast<std::size_t>(v[j] + 0x9e3779b97f4a7c15ULL);
    return h;
  }
};
