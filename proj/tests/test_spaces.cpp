#include <catch_amalgamated.hpp>

#include <numbers>

#include "aniso/spaces.hpp"
#include "oracles.hpp"

using namespace aniso;
using Catch::Approx;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
const double kPi = std::numbers::pi;

ScalarField linear_x() {
  return fields::Polynomial({{MultiIndex{1}, 1.0}}).field("x");
}

ScalarField smooth_2d() {
  return fields::trig_product({1.0, 0.5}, {0.3, 0.2}, "trig");
}

}  // namespace

TEST_CASE("L_p norms", "[spaces]") {
  auto I = DomainSpec::unit_cube(1);
  CHECK(lp_norm(fields::constant(1.0), DomainSpec::unit_cube(2), 2) == Approx(1.0).epsilon(1e-12));
  CHECK(lp_norm(linear_x(), I, 2) == Approx(1 / std::sqrt(3.0)).epsilon(1e-10));
  CHECK(lp_norm(linear_x(), I, kInf) == Approx(1.0).margin(1e-6));
  CHECK(lp_norm(linear_x(), I, 1) == Approx(0.5).epsilon(1e-12));

  auto L = DomainSpec::parse_text("0 0 1 0.5\n0 0 0.5 1\n");
  auto f = smooth_2d();
  QuadratureConfig fine;
  fine.level = LevelVector{3, 3};
  double oracle = 0;
  for (auto [a, b, c, e] : {std::array{0.0, 1.0, 0.0, 0.5}, std::array{0.0, 0.5, 0.5, 1.0}})
    oracle += oracle::simpson([&](double x) { return oracle::simpson([&](double y) { auto v = f(Point{x, y}); return v * v; }, c, e, 200); }, a, b, 200);
  CHECK(lp_norm(f, L, 2) == Approx(std::sqrt(oracle)).epsilon(1e-9));
  CHECK(lp_norm(f, L, 2, fine) == Approx(std::sqrt(oracle)).epsilon(1e-9));

  auto bad = ScalarField([](const Point& x) { return 1.0 / (x[0] - 0.5); });
  QuadratureConfig odd;
  odd.nodes = 3;  // the middle Gauss node hits 0.5
  CHECK_THROWS_AS(lp_norm(bad, I, 2, odd), QuadratureError);
  CHECK_THROWS_AS(lp_norm(linear_x(), I, 0.5), PreconditionError);
}

TEST_CASE("finite differences", "[spaces]") {
  auto sq = fields::Polynomial({{MultiIndex{2}, 1.0}}).field();
  for (double t : {0.1, 0.25, -0.3})
    for (double x : {0.0, 0.2, 0.7}) CHECK(finite_difference(sq, Point{t}, 2, Point{x}) == Approx(2 * t * t).margin(1e-14));
  CHECK(finite_difference(sq, Point{0.3}, 0, Point{0.4}) == Approx(0.16));
  auto lin = fields::Polynomial({{MultiIndex{1, 0}, 2.0}, {MultiIndex{0, 1}, -1.0}}).field();
  CHECK(finite_difference(lin, Point{0.1, 0.2}, 2, Point{0.3, 0.3}) == Approx(0.0).margin(1e-14));
  auto I = DomainSpec::unit_cube(1);
  CHECK_NOTHROW(finite_difference(sq, I, Point{0.2}, 2, Point{0.5}));
  CHECK_THROWS_AS(finite_difference(sq, I, Point{0.3}, 2, Point{0.5}), OutOfDomainError);
}

TEST_CASE("averaged modulus", "[spaces]") {
  auto I = DomainSpec::unit_cube(1);
  CHECK(averaged_modulus(fields::constant(3.0), I, 0, 2, 0.3, 2) == Approx(0.0).margin(1e-14));
  CHECK(averaged_modulus(linear_x(), I, 0, 1, 0.25, 1) == Approx(0.25 / 2 - 0.0625 / 3).margin(1e-6));
  for (double t : {0.1, 0.4, 0.9, 2.0}) {
    double closed = t <= 1 ? t / 2 - t * t / 3 : 1 / (6 * t);
    CHECK(averaged_modulus(linear_x(), I, 0, 1, t, 1) == Approx(closed).epsilon(1e-10));
  }

  SECTION("agrees with a nested Simpson oracle") {
    auto f = fields::trig_product({1.3}, {0.4});
    QuadratureConfig cfg;  // |Delta f|^p has kinks for odd p
    cfg.level = LevelVector{5};
    cfg.shift_nodes = 24;
    for (int l : {1, 2})
      for (double p : {1.0, 2.0, 3.0})
        for (double t : {0.05, 0.3, 0.7}) {
          double want = oracle::averaged_modulus_1d([&](double x) { return f(Point{x}); }, 0, 1, l, t, p);
          INFO("l=" << l << " p=" << p << " t=" << t);
          CHECK(averaged_modulus(f, I, 0, l, t, p, cfg) == Approx(want).epsilon(p == 2 ? 1e-8 : 1e-4));
        }
  }

  SECTION("profiles match pointwise evaluation") {
    auto L = DomainSpec::parse_text("0 0 1 0.5\n0 0 0.5 1\n");
    QuadratureConfig cfg;
    cfg.t_level_max = 5;
    cfg.nodes = 6;
    for (int j = 0; j < 2; ++j) {
      auto prof = averaged_modulus_profile(smooth_2d(), L, j, 2, 2.0, cfg);
      for (int i = prof.i_lo; i <= prof.i_hi; i += 2)
        CHECK(prof.at(i) == Approx(averaged_modulus(smooth_2d(), L, j, 2, prof.t(i), 2.0, cfg)).epsilon(1e-7));
    }
  }

  CHECK_THROWS_AS(averaged_modulus(linear_x(), I, 0, 1, 0.0, 1), PreconditionError);
}

TEST_CASE("sup modulus", "[spaces]") {
  auto I = DomainSpec::unit_cube(1);
  CHECK(sup_modulus(fields::constant(2.0), I, 0, 1, 0.3, 2) == Approx(0.0).margin(1e-14));
  CHECK(sup_modulus(linear_x(), I, 0, 1, 0.25, kInf) == Approx(0.25).margin(1e-6));

  auto f = fields::trig_product({2.1}, {0.2});
  QuadratureConfig cfg;
  cfg.t_level_max = 6;
  double prev = 0;
  for (double t : {0.011, 0.02, 0.033, 0.05, 0.09, 0.13, 0.2, 0.31, 0.5, 0.77, 1.2}) {
    double v = sup_modulus(f, I, 0, 2, t, 2, cfg);
    CHECK(prev <= v + 1e-12);
    prev = v;
  }

  SECTION("averaged modulus is bounded by the sup modulus") {
    auto L = DomainSpec::parse_text("0 0 1 0.5\n0 0 0.5 1\n");
    for (double t : {0.03, 0.125, 0.25, 0.5, 1.0})
      for (int j = 0; j < 2; ++j)
        for (double p : {1.0, 2.0}) {
          double avg = averaged_modulus(smooth_2d(), L, j, 2, t, p, cfg);
          double sup = sup_modulus(smooth_2d(), L, j, 2, t, p, cfg);
          CHECK(avg <= sup * (1 + 1e-9));
        }
  }

  SECTION("profile agrees with direct evaluation at grid scales") {
    auto prof = sup_modulus_profile(f, I, 0, 2, 2.0, cfg);
    for (int i = prof.i_lo; i <= prof.i_hi; ++i)
      CHECK(prof.at(i) == Approx(sup_modulus(f, I, 0, 2, prof.t(i), 2.0, cfg)).epsilon(1e-12));
  }
}

TEST_CASE("difference of order l+m is controlled by the derivative", "[spaces]") {
  auto L = DomainSpec::parse_text("0 0 1 0.5\n0 0 0.5 1\n");
  std::vector<ScalarField> family{
      smooth_2d(), fields::trig_product({2.0, 1.0}, {0.0, 0.7}),
      fields::Polynomial({{MultiIndex{3, 1}, 1.0}, {MultiIndex{0, 2}, -2.0}, {MultiIndex{4, 0}, 0.5}}).field()};
  for (const auto& f : family)
    for (int j = 0; j < 2; ++j)
      for (int l : {1, 2})
        for (int m : {0, 1})
          for (double xi : {0.05, -0.15, 0.3}) {
            MultiIndex lam(2);
            lam[j] = l;
            auto lhs = std::pow(difference_power(f, L, j, l + m, xi, 2.0, {}), 0.5);
            auto rhs = std::pow(std::abs(xi), l) * std::pow(difference_power(f.derivative_field(lam), L, j, m, xi, 2.0, {}), 0.5);
            CHECK(lhs <= rhs + 1e-6);
          }
}

TEST_CASE("Nikolskii and Besov norms", "[spaces]") {
  auto I = DomainSpec::unit_cube(1);
  QuadratureConfig cfg;
  cfg.t_level_max = 8;
  for (double c : {-2.5, 0.0, 1.0}) {
    SpaceParams sp{2.0, 2.0, AnisoProfile({1.5})};
    CHECK(nikolskii_norm(fields::constant(c), I, sp, cfg) == Approx(std::abs(c)).margin(1e-12));
    CHECK(besov_norm(fields::constant(c), I, sp, cfg) == Approx(std::abs(c)).margin(1e-12));
  }

  SpaceParams half{1.0, kInf, AnisoProfile({0.5})};
  auto prof = averaged_modulus_profile(linear_x(), I, 0, 1, 1.0, cfg);
  CHECK(detail::nikolskii_seminorm(prof, 0.5) == Approx(1 / (3 * std::sqrt(2.0))).epsilon(1e-8));
  CHECK(nikolskii_norm(linear_x(), I, half, cfg) == Approx(0.5).margin(1e-3));
  CHECK(besov_norm(linear_x(), I, half, cfg) == Approx(0.5).margin(1e-3));

  SECTION("Besov integral matches a closed form") {
    // f = x on I, l = 1, p = 1: the averaged modulus is t/2 - t^2/3 (t <= 1), 1/(6t) (t > 1)
    const double a = 0.5, theta = 2.0;
    auto w = [](double t) { return t <= 1 ? t / 2 - t * t / 3 : 1 / (6 * t); };
    auto g = [&](double u) {  // u = log t
      double t = std::exp(u);
      return std::pow(t, -theta * a) * std::pow(w(t), theta);
    };
    double exact = oracle::simpson(g, -40.0, 0.0, 20000) + oracle::simpson(g, 0.0, 40.0, 20000);
    SpaceParams sp{1.0, theta, AnisoProfile({a})};
    QuadratureConfig deep = cfg;
    deep.t_level_max = 14;
    auto prof14 = averaged_modulus_profile(linear_x(), I, 0, 1, 1.0, deep);
    CHECK(detail::besov_seminorm(prof14, a, theta, 1.0) == Approx(std::sqrt(exact)).epsilon(0.02));
  }

  SECTION("Nikolskii norm is bounded by c4 times the Besov norm") {
    auto L = DomainSpec::parse_text("0 0 1 0.5\n0 0 0.5 1\n");
    QuadratureConfig c2;
    c2.t_level_max = 6;
    c2.nodes = 5;
    c2.shift_nodes = 8;
    for (auto alpha : {std::vector<double>{1.5, 1.5}, std::vector<double>{0.7, 2.0}})
      for (double theta : {1.0, 2.0, 4.0}) {
        SpaceParams sp{2.0, theta, AnisoProfile(alpha)};
        double c4 = std::max(std::pow(2.0, 2 + alpha[0]), std::pow(2.0, 2 + alpha[1]));
        double h = nikolskii_norm(smooth_2d(), L, sp, c2);
        double b = besov_norm(smooth_2d(), L, sp, c2);
        CHECK(h <= c4 * b);
      }
  }

  SECTION("averaged Besov norm is bounded by the derivative-based one") {
    QuadratureConfig c1;
    c1.t_level_max = 8;
    for (auto alpha : {0.5, 1.5, 2.5})
      for (double theta : {1.0, 2.0, kInf}) {
        SpaceParams sp{2.0, theta, AnisoProfile({alpha})};
        for (const auto& f : {fields::trig_product({1.5}, {0.3}), fields::Polynomial({{MultiIndex{3}, 1.0}, {MultiIndex{1}, -0.5}}).field()}) {
          double prime = besov_norm(f, I, sp, c1);
          double lbar = besov_lbar_norm(f, I, sp, c1);
          CHECK(prime <= lbar + 1e-6);
        }
      }
  }
}

TEST_CASE("scaling covariances", "[spaces]") {
  auto f = smooth_2d();
  auto box = DomainSpec::parse_text("0.25 0 1 0.75\n");
  for (auto [dx, dy] : {std::pair{2.0, 4.0}, std::pair{0.5, 1.0}}) {
    ScaleMap map({dx, dy}, Point{0.1, -0.3});
    auto hf = scale_field(f, map);
    auto image = box.transformed(map);
    double jac = dx * dy;
    for (double p : {1.0, 2.0, 3.5}) {
      CHECK(lp_norm(hf, box, p) == Approx(std::pow(jac, -1 / p) * lp_norm(f, image, p)).epsilon(1e-6));
      for (int j = 0; j < 2; ++j)
        for (double t : {0.05, 0.2}) {
          double delta = j == 0 ? dx : dy;
          double lhs = averaged_modulus(hf, box, j, 2, t, p);
          double rhs = std::pow(jac, -1 / p) * averaged_modulus(f, image, j, 2, delta * t, p);
          CHECK(lhs == Approx(rhs).epsilon(1e-6));
        }
    }
    CHECK(lp_norm(hf, box, kInf) == Approx(lp_norm(f, image, kInf)).epsilon(1e-12));

    QuadratureConfig cfg;
    cfg.t_level_max = 6;
    cfg.nodes = 6;
    cfg.shift_nodes = 8;
    for (auto alpha : {std::vector<double>{1.5, 1.5}, std::vector<double>{0.8, 2.2}}) {
      SpaceParams sp{2.0, 2.0, AnisoProfile(alpha)};
      double c1 = std::pow(jac, -0.5) * std::max({1.0, std::pow(dx, alpha[0]), std::pow(dy, alpha[1])});
      CHECK(besov_norm(hf, box, sp, cfg) <= c1 * besov_norm(f, image, sp, cfg) * (1 + 1e-6));
    }
  }
  MultiIndex lam{1, 2};
  ScaleMap map({2.0, 0.5}, Point{0.0, 1.0});
  auto hf = scale_field(f, map);
  Point x{0.3, 0.4};
  CHECK(hf.derivative(lam, x) == Approx(2.0 * 0.25 * f.derivative(lam, map.apply(x))));
}
