#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "aniso/grid.hpp"

namespace aniso {

enum class Smoothness { analytic, finite, piecewise, unknown };

/// A real function on R^d with optional partial derivatives.
class ScalarField {
 public:
  using ValueFn = std::function<double(const Point&)>;
  using DerivativeFn = std::function<double(const MultiIndex&, const Point&)>;

  ScalarField() = default;
  explicit ScalarField(ValueFn value, std::string name = "field",
                       Smoothness tag = Smoothness::unknown, DerivativeFn derivative = {})
      : value_(std::move(value)),
        derivative_(std::move(derivative)),
        name_(std::move(name)),
        tag_(tag) {}

  double operator()(const Point& x) const { return value_(x); }

  /// Partial derivative; order zero is plain evaluation.
  double derivative(const MultiIndex& lambda, const Point& x) const {
    if (lambda.sum() == 0) return value_(x);
    if (!derivative_) throw DegreeError("field '" + name_ + "' provides no derivatives");
    return derivative_(lambda, x);
  }

  bool has_derivatives() const noexcept { return static_cast<bool>(derivative_); }
  const std::string& name() const noexcept { return name_; }
  Smoothness smoothness() const noexcept { return tag_; }

  /// The field x -> D^lambda f(x). Its own derivatives compose orders.
  ScalarField derivative_field(const MultiIndex& lambda) const {
    if (lambda.sum() == 0) return *this;
    if (!derivative_) throw DegreeError("field '" + name_ + "' provides no derivatives");
    auto self = *this;
    ScalarField g(
        [self, lambda](const Point& x) { return self.derivative_(lambda, x); },
        "D" + to_string(lambda) + " " + name_, tag_,
        [self, lambda](const MultiIndex& mu, const Point& x) {
          MultiIndex sum = lambda;
          for (int j = 0; j < sum.dim(); ++j) sum[j] += mu[j];
          return self.derivative_(sum, x);
        });
    return g;
  }

  ScalarField scaled(double c) const {
    auto self = *this;
    DerivativeFn dv;
    if (derivative_) dv = [self, c](const MultiIndex& l, const Point& x) { return c * self.derivative_(l, x); };
    return ScalarField([self, c](const Point& x) { return c * self.value_(x); }, name_, tag_, dv);
  }

 private:
  ValueFn value_;
  DerivativeFn derivative_;
  std::string name_ = "field";
  Smoothness tag_ = Smoothness::unknown;
};

namespace fields {

inline ScalarField constant(double c) {
  return ScalarField([c](const Point&) { return c; }, "constant", Smoothness::analytic,
                     [](const MultiIndex&, const Point&) { return 0.0; });
}

/// Sum of monomials coef * x^power.
class Polynomial {
 public:
  struct Term {
    MultiIndex power;
    double coef;
  };
  explicit Polynomial(std::vector<Term> terms) : terms_(std::move(terms)) {}

  double derivative(const MultiIndex& lambda, const Point& x) const {
    double s = 0;
    for (const auto& t : terms_) {
      double v = t.coef;
      for (int j = 0; j < x.dim() && v != 0.0; ++j) {
        long long n = t.power[j], r = lambda[j];
        if (r > n) {
          v = 0;
          break;
        }
        for (long long q = 0; q < r; ++q) v *= static_cast<double>(n - q);
        v *= std::pow(x[j], static_cast<double>(n - r));
      }
      s += v;
    }
    return s;
  }

  ScalarField field(std::string name = "polynomial") const {
    auto self = *this;
    return ScalarField(
        [self](const Point& x) { return self.derivative(MultiIndex(x.dim()), x); }, std::move(name),
        Smoothness::analytic, [self](const MultiIndex& l, const Point& x) { return self.derivative(l, x); });
  }

 private:
  std::vector<Term> terms_;
};

/// prod_j sin(pi * freq_j * x_j + phase_j).
inline ScalarField trig_product(std::vector<double> freq, std::vector<double> phase,
                                std::string name = "trig") {
  auto eval = [freq, phase](const MultiIndex& lambda, const Point& x) {
    double v = 1;
    for (int j = 0; j < x.dim(); ++j) {
      double w = std::numbers::pi * freq[j];
      double arg = w * x[j] + phase[j] + 0.5 * std::numbers::pi * static_cast<double>(lambda[j]);
      v *= std::pow(w, static_cast<double>(lambda[j])) * std::sin(arg);
    }
    return v;
  };
  return ScalarField([eval](const Point& x) { return eval(MultiIndex(x.dim()), x); }, std::move(name),
                     Smoothness::analytic, eval);
}

/// |x_axis - c|^s along one axis; derivatives of any order away from c.
inline ScalarField axis_power(int axis, double c, double s, std::string name = "axis-power") {
  auto eval = [axis, c, s](const MultiIndex& lambda, const Point& x) {
    for (int j = 0; j < x.dim(); ++j)
      if (j != axis && lambda[j] > 0) return 0.0;
    long long r = lambda[axis];
    double z = x[axis] - c;
    double a = std::abs(z);
    if (a == 0.0) return (r == 0 || s > static_cast<double>(r)) ? 0.0 : std::numeric_limits<double>::infinity();
    double coef = 1;
    for (long long q = 0; q < r; ++q) coef *= s - static_cast<double>(q);
    double sign = (z < 0 && r % 2 == 1) ? -1.0 : 1.0;
    return sign * coef * std::pow(a, s - static_cast<double>(r));
  };
  return ScalarField([eval](const Point& x) { return eval(MultiIndex(x.dim()), x); }, std::move(name),
                     Smoothness::finite, eval);
}

/// |x - c|^s (Euclidean); value only.
inline ScalarField radial_power(Point c, double s, std::string name = "radial-power") {
  return ScalarField(
      [c, s](const Point& x) {
        double r2 = 0;
        for (int j = 0; j < x.dim(); ++j) r2 += (x[j] - c[j]) * (x[j] - c[j]);
        return std::pow(r2, 0.5 * s);
      },
      std::move(name), Smoothness::finite);
}

}  // namespace fields
}  // namespace aniso
