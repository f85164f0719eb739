#include <catch_amalgamated.hpp>

#include <random>

#include "aniso/polyspace.hpp"
#include "oracles.hpp"

using namespace aniso;
using Catch::Approx;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

Box unit(int d) { return Box(Point(d, 0.0), Point(d, 1.0)); }

Box dyadic_box(int d, long long k, long long shift) {
  SignedIndex nu(d, shift);
  return Box::of(DyadicCell{LevelVector(d, k), nu});
}

PolyCell random_poly(std::mt19937_64& rng, const MultiIndex& l, const Box& frame) {
  std::normal_distribution<double> N;
  PolyCell p(l, frame);
  for (auto& c : p.coeffs()) c = N(rng);
  return p;
}

// Plain tensor midpoint rule; independent of the library quadrature.
double midpoint_lp(const std::function<double(const Point&)>& f, const Box& b, double p, int n) {
  const int d = b.dim();
  double s = 0, mx = 0;
  MultiIndex top(d, n - 1);
  for_each_in_box(MultiIndex(d), top, [&](const MultiIndex& i) {
    Point x(d);
    for (int j = 0; j < d; ++j) x[j] = b.lo[j] + b.width(j) * (i[j] + 0.5) / n;
    double v = std::abs(f(x));
    mx = std::max(mx, v);
    s += std::pow(v, p);
  });
  if (std::isinf(p)) return mx;
  return std::pow(s * b.volume() / std::pow(n, d), 1 / p);
}

}  // namespace

TEST_CASE("L2 projection", "[polyspace]") {
  SECTION("affine function reproduced") {
    auto p = project_L2([](const Point& x) { return 3 * x[0] + 1; }, unit(1), MultiIndex{1});
    for (double x : {0.0, 0.2, 0.9, 1.0}) CHECK(p.value(Point{x}) == Approx(3 * x + 1).margin(1e-12));
    // coefficients in the orthonormal basis: <3x+1, 1> = 2.5, <3x+1, sqrt3(2x-1)> = sqrt3/2
    CHECK(p.coeffs()[0] == Approx(2.5).margin(1e-12));
    CHECK(p.coeffs()[1] == Approx(std::sqrt(3.0) / 2).margin(1e-12));
  }
  SECTION("x^2 projects to x - 1/6") {
    auto p = project_L2([](const Point& x) { return x[0] * x[0]; }, unit(1), MultiIndex{1});
    for (double x : {0.0, 0.3, 1.0}) CHECK(p.value(Point{x}) == Approx(x - 1.0 / 6).margin(1e-12));
  }
  SECTION("constants") {
    Box b(Point{-3.0, 0.25}, Point{-2.5, 2.0});
    auto p = project_L2([](const Point&) { return -4.5; }, b, MultiIndex{2, 3});
    CHECK(p.value(Point{-2.7, 1.1}) == Approx(-4.5).margin(1e-12));
  }
  SECTION("polynomials of the target degree reproduced in 3-D") {
    Box b(Point{0.5, -1.0, 2.0}, Point{0.75, -0.5, 3.0});
    auto f = [](const Point& x) { return 1 + x[0] * x[1] - 2 * x[2] * x[2] * x[0] + x[1] * x[1] * x[2]; };
    auto p = project_L2(f, b, MultiIndex{1, 2, 2});
    CHECK(p.value(Point{0.6, -0.8, 2.9}) == Approx(f(Point{0.6, -0.8, 2.9})).margin(1e-11));
  }
  SECTION("non-finite samples") {
    CHECK_THROWS_AS(project_L2([](const Point& x) { return 1 / (x[0] - x[0]); }, unit(1), MultiIndex{1}),
                    QuadratureError);
  }
  SECTION("orthogonality of the residual") {
    auto f = [](const Point& x) { return std::exp(x[0]) * std::sin(3 * x[1]); };
    Box b(Point{0.0, 0.0}, Point{0.5, 0.25});
    auto p = project_L2(f, b, MultiIndex{1, 2}, 12);
    for (const auto& q : index_range(MultiIndex{1, 2})) {
      PolyCell basis(MultiIndex{1, 2}, b);
      basis.coeffs()[basis.flat(q)] = 1;
      double ip = 0;
      const int n = 400;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          Point x{0.5 * (i + 0.5) / n, 0.25 * (j + 0.5) / n};
          ip += (f(x) - p.value(x)) * basis.value(x);
        }
      CHECK(std::abs(ip / (n * n)) < 1e-5);
    }
  }
}

TEST_CASE("exact derivatives", "[polyspace]") {
  auto sq = project_L2([](const Point& x) { return x[0] * x[0]; }, unit(1), MultiIndex{2});
  auto d1 = poly_derivative(sq, MultiIndex{1});
  CHECK(d1.degree() == MultiIndex{1});
  for (double x : {0.0, 0.4, 1.0}) CHECK(d1.value(Point{x}) == Approx(2 * x).margin(1e-12));

  auto c = PolyCell::constant(2.0, unit(2));
  CHECK(poly_derivative(c, MultiIndex{1, 0}).is_zero(1e-15));

  auto xy = project_L2([](const Point& x) { return x[0] * x[1]; }, unit(2), MultiIndex{1, 1});
  auto dxy = poly_derivative(xy, MultiIndex{1, 1});
  CHECK(dxy.value(Point{0.3, 0.8}) == Approx(1.0).margin(1e-12));

  SECTION("point derivatives agree with the derivative polynomial") {
    std::mt19937_64 rng(4);
    Box b(Point{0.25, 1.0}, Point{0.375, 1.5});
    auto p = random_poly(rng, MultiIndex{3, 2}, b);
    for (const auto& lam : index_range(MultiIndex{4, 3})) {
      auto dp = poly_derivative(p, lam);
      Point x{0.3, 1.2};
      CHECK(p.derivative(lam, x) == Approx(dp.value(x)).margin(1e-8 * std::pow(8.0, lam[0]) * std::pow(2.0, lam[1])));
    }
  }
  SECTION("finite-difference check in a small frame") {
    Box b(Point{0.5}, Point{0.5 + 1.0 / 64});
    auto p = project_L2([](const Point& x) { return std::cos(7 * x[0]); }, b, MultiIndex{4});
    double x = 0.505, h = 1e-6;
    double fd = (p.value(Point{x + h}) - p.value(Point{x - h})) / (2 * h);
    CHECK(p.derivative(MultiIndex{1}, Point{x}) == Approx(fd).epsilon(1e-6));
  }
}

TEST_CASE("Lagrange isomorphism", "[polyspace]") {
  auto sq = project_L2([](const Point& x) { return x[0] * x[0]; }, unit(1), MultiIndex{2});
  auto v = lagrange_iso(sq);
  REQUIRE(v.size() == 3);
  CHECK(v[0] == Approx(0).margin(1e-12));
  CHECK(v[1] == Approx(1).margin(1e-12));
  CHECK(v[2] == Approx(4).margin(1e-12));
  auto back = lagrange_from_values(v, MultiIndex{2}, unit(1));
  CHECK(back.value(Point{0.7}) == Approx(0.49).margin(1e-12));

  auto one = PolyCell::constant(1.0, unit(2));
  for (double x : lagrange_iso(one)) CHECK(x == Approx(1.0));

  auto s = project_L2([](const Point& x) { return x[0] + x[1]; }, unit(2), MultiIndex{1, 1});
  auto vs = lagrange_iso(s);
  std::vector<double> expect{0, 1, 1, 2};
  for (int i = 0; i < 4; ++i) CHECK(vs[i] == Approx(expect[i]).margin(1e-12));

  SECTION("round trip on random polynomials") {
    std::mt19937_64 rng(9);
    for (int t = 0; t < 50; ++t) {
      MultiIndex l{static_cast<long long>(rng() % 4), static_cast<long long>(rng() % 3)};
      Box frame(Point{0.1, -0.3}, Point{0.1 + 1.0 / 16, -0.3 + 1.0 / 32});
      auto p = random_poly(rng, l, frame);
      auto q = lagrange_from_values(lagrange_iso(p), l, frame);
      for (std::size_t i = 0; i < p.coeffs().size(); ++i) CHECK(q.coeffs()[i] == Approx(p.coeffs()[i]).margin(1e-10));
    }
  }
  CHECK_THROWS_AS(lagrange_from_values(std::vector<double>{1, 2}, MultiIndex{2}, unit(1)), PreconditionError);
}

TEST_CASE("reframing is exact", "[polyspace]") {
  std::mt19937_64 rng(21);
  auto p = random_poly(rng, MultiIndex{2, 3}, Box(Point{0.0, 0.0}, Point{0.25, 0.5}));
  Box other(Point{1.0, -2.0}, Point{1.125, -1.0});
  auto q = reframe(p, other);
  for (Point x : {Point{0.1, 0.2}, Point{1.05, -1.5}, Point{-0.3, 0.9}})
    CHECK(q.value(x) == Approx(p.value(x)).margin(1e-9));
}

TEST_CASE("inverse inequality constant is level independent", "[polyspace]") {
  std::mt19937_64 rng(31);
  const MultiIndex l{2, 1};
  const MultiIndex lambda{1, 1};
  for (auto [p, q] : {std::pair{2.0, 2.0}, std::pair{1.0, 2.0}, std::pair{2.0, kInf}}) {
    std::vector<std::vector<double>> coef(200);
    for (auto& c : coef) {
      std::normal_distribution<double> N;
      c.resize(index_count(l));
      for (auto& v : c) v = N(rng);
    }
    std::vector<double> max_ratio;
    for (long long k = 0; k <= 5; ++k) {
      Box cell = dyadic_box(2, k, 1);
      double delta = cell.width(0);
      double best = 0;
      for (const auto& c : coef) {
        PolyCell f(l, cell, c);
        double num = poly_lp_norm(poly_derivative(f, lambda), cell, q);
        double den = std::pow(delta, -2.0 - 2.0 / p + (std::isinf(q) ? 0.0 : 2.0 / q)) * poly_lp_norm(f, cell, p);
        best = std::max(best, num / den);
      }
      max_ratio.push_back(best);
    }
    auto [lo, hi] = std::minmax_element(max_ratio.begin(), max_ratio.end());
    CHECK(*hi / *lo < 1.05);
  }
}

TEST_CASE("sup over a box is controlled by node values", "[polyspace]") {
  std::mt19937_64 rng(12);
  const MultiIndex l{2};
  const double rho = 0.5;
  std::vector<double> C;
  for (long long k = 0; k <= 5; ++k) {
    double delta = std::ldexp(1.0, -static_cast<int>(k));
    Point x0{0.3};
    Box frame(x0, Point{x0[0] + rho * delta});
    Box big(Point{x0[0] - delta}, Point{x0[0] + 2 * delta});
    // Lebesgue function sup_x sum_i |L_i(x)| on the enlarged box
    std::vector<PolyCell> basis;
    for (std::size_t i = 0; i < index_count(l); ++i) {
      std::vector<double> e(index_count(l), 0.0);
      e[i] = 1.0;
      basis.push_back(lagrange_from_values(e, l, frame));
    }
    double lebesgue = 0;
    for (int s = 0; s <= 3000; ++s) {
      Point x{big.lo[0] + big.width(0) * s / 3000.0};
      double acc = 0;
      for (const auto& b : basis) acc += std::abs(b.value(x));
      lebesgue = std::max(lebesgue, acc);
    }
    C.push_back(lebesgue);
    for (int t = 0; t < 50; ++t) {
      auto f = random_poly(rng, l, frame);
      double node_max = 0;
      for (double v : lagrange_iso(f)) node_max = std::max(node_max, std::abs(v));
      CHECK(poly_lp_norm(f, big, kInf, 512) <= lebesgue * node_max * (1 + 1e-6));
    }
  }
  auto [lo, hi] = std::minmax_element(C.begin(), C.end());
  CHECK(*hi / *lo < 1 + 1e-9);
  CHECK(*hi < 1e4);
}

TEST_CASE("projection is bounded in L_p uniformly in the level", "[polyspace]") {
  const MultiIndex l{1, 1};
  for (double p : {1.0, 2.0, kInf}) {
    std::vector<double> worst;
    for (long long k = 0; k <= 4; ++k) {
      Box cell = dyadic_box(2, k, 0);
      double best = 0;
      for (int a = 1; a <= 6; ++a) {
        auto g = [&](const Point& x) {
          double u = (x[0] - cell.lo[0]) / cell.width(0), v = (x[1] - cell.lo[1]) / cell.width(1);
          return std::sin(a * 4.1 * u + 0.3) * (u < 0.37 ? 1.0 : -0.5) + v * v * a;
        };
        auto P = project_L2(g, cell, l, 40);
        double num = midpoint_lp([&](const Point& x) { return P.value(x); }, cell, p, 200);
        double den = midpoint_lp(g, cell, p, 200);
        best = std::max(best, num / den);
      }
      worst.push_back(best);
    }
    auto [lo, hi] = std::minmax_element(worst.begin(), worst.end());
    CHECK(*hi / *lo < 1.01);
    CHECK(*hi < 10);
  }
}
