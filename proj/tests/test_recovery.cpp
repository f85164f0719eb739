#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "aniso/recovery.hpp"
#include "test_support.hpp"

using namespace aniso;
using Catch::Approx;
using testing_support::kLShape;
using testing_support::points_in;

namespace {

ScalarField bilinear() {
  return fields::Polynomial({{MultiIndex{0, 0}, 0.5}, {MultiIndex{1, 0}, -2.0}, {MultiIndex{0, 1}, 1.5}, {MultiIndex{1, 1}, 3.0}}).field();
}

ScalarField affine_1d() { return fields::Polynomial({{MultiIndex{0}, 1.0}, {MultiIndex{1}, 3.0}}).field(); }

}  // namespace

TEST_CASE("sampling nodes", "[recovery]") {
  auto I = DomainSpec::unit_cube(1);
  AnisoProfile a({1.5});  // l = 2

  auto s0 = sample_points(I, a, 0);
  REQUIRE(s0.count() == 2);
  CHECK(s0.nodes[0][0] == 0.25);
  CHECK(s0.nodes[1][0] == 0.5);

  auto s1 = sample_points(I, a, 2);  // kappa = floor(2 / 1.5) = 1
  REQUIRE(s1.kappa == LevelVector{1});
  REQUIRE(s1.count() == 4);
  std::vector<double> want{0.125, 0.25, 0.625, 0.75};
  for (int i = 0; i < 4; ++i) CHECK(s1.nodes[i][0] == want[i]);

  auto L = DomainSpec::parse_text(kLShape);
  AnisoProfile b({1.5, 1.5});
  for (long long k = 2; k <= 5; ++k) {
    auto s = sample_points(L, b, k);
    CHECK(s.count() == 4 * s.cells.size());
    CHECK(std::is_sorted(s.cells.begin(), s.cells.end()));
    for (std::size_t i = 0; i < s.count(); ++i) {
      const auto& x = s.nodes[i];
      CHECK(L.contains(x));
      DyadicCell c{s.kappa, s.cells[i / s.per_cell()]};
      for (int j = 0; j < 2; ++j) {
        CHECK(x[j] > c.lower_corner()[j]);
        CHECK(x[j] < c.upper(j));
      }
    }
  }
  CHECK_THROWS_AS(sample_points(L, b, 1), EmptyInteriorError);
}

TEST_CASE("node count grows like 2^{k (alpha^{-1}, e)}", "[recovery]") {
  auto I2 = DomainSpec::unit_cube(2);
  for (auto alpha : {std::vector<double>{1.5, 1.5}, std::vector<double>{1.0, 2.0}}) {
    AnisoProfile a(alpha);
    std::vector<double> k, lg;
    for (long long kk = 1; kk <= 12; ++kk) {
      k.push_back(static_cast<double>(kk));
      lg.push_back(std::log2(static_cast<double>(sample_points(I2, a, kk).count())));
    }
    auto [slope, res] = detail::fit_line(k, lg);
    CHECK(slope == Approx(a.inverse_sum()).epsilon(0.10));
  }
}

TEST_CASE("local Lagrange basis is cardinal on the nodes", "[recovery]") {
  auto I2 = DomainSpec::unit_cube(2);
  AnisoProfile a({2.0, 3.0});  // l = (3, 4): 12 nodes per cell
  auto s = sample_points(I2, a, 3);
  const std::size_t per = s.per_cell();
  REQUIRE(per == 12);
  const std::size_t cell = s.cells.size() / 2;
  for (std::size_t mu = 0; mu < per; ++mu) {
    auto t = s;
    std::fill(t.values.begin(), t.values.end(), 0.0);
    t.values[cell * per + mu] = 1.0;
    auto rec = recover(t, I2, a, a.l(), MultiIndex(2));
    const PolyCell* p = rec.blend().cells().find(s.cells[cell]);
    REQUIRE(p != nullptr);
    for (std::size_t nu = 0; nu < per; ++nu)
      CHECK(p->value(s.nodes[cell * per + nu]) == Approx(mu == nu ? 1.0 : 0.0).margin(1e-12));
  }
}

TEST_CASE("recovery reproduces polynomials of degree l - e", "[recovery]") {
  SECTION("affine function on the interval") {
    auto I = DomainSpec::unit_cube(1);
    AnisoProfile a({2.0});
    auto f = affine_1d();
    for (long long k = 0; k <= 5; ++k) {
      auto s = take_samples(sample_points(I, a, k), f);
      auto r0 = recover(s, I, a, a.l(), MultiIndex{0});
      auto r1 = recover(s, I, a, a.l(), MultiIndex{1});
      for (const auto& x : points_in(I, 200, 7 + k)) {
        CHECK(r0(x) == Approx(f(x)).margin(1e-10));
        CHECK(r1(x) == Approx(3.0).margin(1e-10));
      }
    }
  }
  SECTION("bilinear function on the L-shape") {
    auto L = DomainSpec::parse_text(kLShape);
    AnisoProfile a({1.5, 1.5});
    auto f = bilinear();
    for (long long k = 2; k <= 5; ++k) {
      auto s = take_samples(sample_points(L, a, k), f);
      for (auto lam : {MultiIndex{0, 0}, MultiIndex{1, 0}, MultiIndex{1, 1}}) {
        auto r = recover(s, L, a, a.l(), lam);
        for (const auto& x : points_in(L, 250, 11 + k))
          CHECK(r(x) == Approx(f.derivative(lam, x)).margin(1e-10));
      }
    }
  }
}

TEST_CASE("recovery is linear in the samples", "[recovery]") {
  auto L = DomainSpec::parse_text(kLShape);
  AnisoProfile a({1.5, 1.5});
  auto skel = sample_points(L, a, 4);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  auto t1 = skel, t2 = skel, mix = skel, zero = skel;
  const double ca = 0.7, cb = -2.3;
  for (std::size_t i = 0; i < skel.count(); ++i) {
    t1.values[i] = u(rng);
    t2.values[i] = u(rng);
    mix.values[i] = ca * t1.values[i] + cb * t2.values[i];
    zero.values[i] = 0.0;
  }
  MultiIndex lam{1, 0};
  auto r1 = recover(t1, L, a, a.l(), lam), r2 = recover(t2, L, a, a.l(), lam), rm = recover(mix, L, a, a.l(), lam);
  auto rz = recover(zero, L, a, a.l(), MultiIndex(2));
  for (const auto& x : points_in(L, 100, 5)) {
    CHECK(rm(x) == Approx(ca * r1(x) + cb * r2(x)).margin(1e-10));
    CHECK(rz(x) == 0.0);
  }
}

TEST_CASE("recovery preconditions", "[recovery]") {
  auto I = DomainSpec::unit_cube(1);
  AnisoProfile a({2.0});
  auto s = take_samples(sample_points(I, a, 2), affine_1d());
  s.values[1] = std::numeric_limits<double>::quiet_NaN();
  s.values[3] = std::numeric_limits<double>::quiet_NaN();
  try {
    (void)recover(s, I, a, a.l(), MultiIndex{0});
    FAIL("expected an error");
  } catch (const PreconditionError& e) {
    std::string msg = e.what();
    CHECK(msg.find("2 missing") != std::string::npos);
    CHECK(msg.find("#1") != std::string::npos);
    CHECK(msg.find("#3") != std::string::npos);
  }
  auto full = take_samples(sample_points(I, a, 2), affine_1d());
  CHECK_THROWS_AS(recover(full, I, a, a.l(), MultiIndex{4}), DegreeError);
  CHECK_THROWS_AS(recover(full, DomainSpec::parse_text("0 0.5\n"), a, a.l(), MultiIndex{0}), PreconditionError);
}

TEST_CASE("recovery error tracks the quasi-interpolant error", "[recovery]") {
  auto I = DomainSpec::unit_cube(1);
  AnisoProfile a({2.0});
  auto f = fields::trig_product({1.3}, {0.3});
  RateOptions opt{.lambda = MultiIndex{1}, .k_min = 2, .k_max = 10};
  auto rec = recovery_experiment(f, I, a, opt);
  auto qi = rate_experiment(f, I, a, opt);
  double lo = INFINITY, hi = 0;
  for (std::size_t i = 0; i < rec.points.size(); ++i) {
    double r = rec.points[i].error / qi.points[i].error;
    lo = std::min(lo, r);
    hi = std::max(hi, r);
  }
  CHECK(hi / lo < 4.0);
}

TEST_CASE("recovery rate experiment", "[recovery]") {
  auto I = DomainSpec::unit_cube(1);
  AnisoProfile a({2.0});
  RateOptions opt{.lambda = MultiIndex{1}, .k_min = 2, .k_max = 10};

  auto exact = recovery_experiment(affine_1d(), I, a, opt);
  CHECK(exact.exact);
  CHECK(exact.against_count);

  auto fam = testing_support::kink_family(I, a);
  auto r = recovery_experiment(fam, I, a, opt);
  CHECK(r.condition_holds);
  CHECK(r.predicted_exponent == Approx(-1.0));
  CHECK(r.fitted_slope == Approx(-1.0).epsilon(0.2));
  for (std::size_t i = 1; i < r.points.size(); ++i) CHECK(r.points[i].n >= r.points[i - 1].n);

  AnisoProfile rough({0.8});
  RateOptions o1{.lambda = MultiIndex{0}, .p = 1, .q = 1, .k_min = 1, .k_max = 4};
  auto bad = recovery_experiment(fields::trig_product({1.0}, {0.2}), I, rough, o1);
  CHECK_FALSE(bad.condition_holds);
  CHECK(bad.note.find("(1.3.66) violated") != std::string::npos);
}

TEST_CASE("Stechkin exponents and level selection", "[recovery]") {
  auto [g, t] = stechkin_exponents(AnisoProfile({2.0}), MultiIndex{1}, 2, 2, 2);
  CHECK(g == Approx(0.5));
  CHECK(t == Approx(0.5));

  std::vector<std::pair<long long, double>> proxies;
  for (long long k = 0; k <= 10; ++k) proxies.emplace_back(k, std::exp2(static_cast<double>(k)));
  CHECK(select_level(proxies, 8.0) == 3);
  CHECK(select_level(proxies, 9.5) == 3);
  CHECK_FALSE(select_level(proxies, 0.5).has_value());

  auto I = DomainSpec::unit_cube(1);
  std::vector<ScalarField> fam{fields::trig_product({1.0}, {0.1})};
  std::vector<double> rhos{10.0};
  StechkinOptions opt{.lambda = MultiIndex{1}, .k_min = 1, .k_max = 3};
  CHECK_THROWS_AS(stechkin_experiment(fam, I, AnisoProfile({1.0}), rhos, opt), PreconditionError);
  StechkinOptions bounded{.lambda = MultiIndex{0}, .k_min = 1, .k_max = 3};
  CHECK_THROWS_AS(stechkin_experiment(fam, I, AnisoProfile({2.0}), rhos, bounded), PreconditionError);
}

TEST_CASE("norm proxy grows like 2^{k tau}", "[recovery]") {
  auto I = DomainSpec::unit_cube(1);
  AnisoProfile a({1.0});  // tau = 1 for lambda = 1, q = s
  std::vector<double> proxy;
  for (long long k = 2; k <= 6; ++k) proxy.push_back(norm_proxy(I, a, a.l(), MultiIndex{1}, 2, 2, k, 42));
  for (std::size_t i = 1; i < proxy.size(); ++i) CHECK(proxy[i] / proxy[i - 1] == Approx(2.0).epsilon(0.3));
  CHECK(norm_proxy(I, a, a.l(), MultiIndex{1}, 2, 2, 4, 42) == proxy[2]);
}

TEST_CASE("Stechkin tradeoff on the interval", "[recovery]") {
  auto I = DomainSpec::unit_cube(1);
  AnisoProfile a({2.0});
  auto fam = testing_support::kink_family(I, a);
  StechkinOptions opt{.lambda = MultiIndex{1}, .k_min = 2, .k_max = 12};
  double rho0 = norm_proxy(I, a, a.l(), MultiIndex{1}, 2, 2, 4, opt.seed) * 1.01;
  std::vector<double> rhos;
  for (int i = 0; i < 4; ++i) rhos.push_back(rho0 * std::exp2(i));
  auto r = stechkin_experiment(fam, I, a, rhos, opt);
  REQUIRE(r.points.size() == 4);
  for (const auto& pt : r.points) {
    CHECK(pt.norm_proxy <= pt.rho);
    for (const auto& [k, v] : r.proxies)
      if (k > pt.k) CHECK(v > pt.rho);
  }
  CHECK(r.predicted_slope == Approx(-1.0));
  CHECK(r.fitted_slope == Approx(-1.0).epsilon(0.25));
}
