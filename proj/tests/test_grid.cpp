#include <catch_amalgamated.hpp>

#include <random>

#include "aniso/grid.hpp"

using namespace aniso;
using Catch::Approx;

TEST_CASE("level vectors take the integer part of k / alpha", "[grid]") {
  CHECK(level_vector(0, AnisoProfile({1.5, 2.0})) == LevelVector{0, 0});
  CHECK(level_vector(3, AnisoProfile({1.0, 2.0})) == LevelVector{3, 1});
  CHECK(level_vector(5, AnisoProfile({2.5, 1.25})) == LevelVector{2, 4});

  SECTION("exact and floating paths agree on decimal profiles") {
    auto exact = AnisoProfile::parse({"1.1", "0.7", "2.3"});
    AnisoProfile approx({1.1, 0.7, 2.3});
    for (long long k = 0; k <= 200; ++k) {
      auto a = level_vector(k, exact);
      auto b = level_vector(k, approx);
      for (int j = 0; j < 3; ++j) {
        long long ref = (k * exact.exact_alpha()[j].denominator()) / exact.exact_alpha()[j].numerator();
        CHECK(a[j] == ref);
        CHECK(b[j] == ref);
      }
    }
  }

  SECTION("negative level rejected") { CHECK_THROWS_AS(level_vector(-1, AnisoProfile({1.0})), PreconditionError); }
}

TEST_CASE("level vectors are monotone with bounded increments", "[grid]") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> U(0.3, 4.0);
  for (int trial = 0; trial < 50; ++trial) {
    AnisoProfile p({U(rng), U(rng)});
    auto prev = level_vector(0, p);
    for (long long k = 1; k <= 60; ++k) {
      auto cur = level_vector(k, p);
      for (int j = 0; j < 2; ++j) {
        CHECK(cur[j] >= prev[j]);
        CHECK(static_cast<double>(cur[j] - prev[j]) <= 1 + 1 / p.alpha(j) + 1e-12);
      }
      prev = cur;
    }
  }
}

TEST_CASE("profile derives difference orders", "[grid]") {
  AnisoProfile p({1.5, 2.0, 0.25});
  CHECK(p.l() == MultiIndex{2, 3, 1});
  CHECK(p.lbar() == MultiIndex{1, 1, 0});
  for (int j = 0; j < 3; ++j) {
    CHECK(static_cast<double>(p.lbar()[j]) < p.alpha(j));
    CHECK(p.alpha(j) < static_cast<double>(p.l()[j]));
  }
  auto q = AnisoProfile::parse({"3", "7/2"});
  CHECK(q.l() == MultiIndex{4, 4});
  CHECK(q.lbar() == MultiIndex{2, 3});
  CHECK_THROWS_AS(AnisoProfile({0.0}), PreconditionError);
  CHECK_THROWS_AS(AnisoProfile({1, 1, 1, 1}), PreconditionError);
}

TEST_CASE("index_range enumerates the box lexicographically", "[grid]") {
  CHECK(index_range(MultiIndex{0, 0}) == std::vector<MultiIndex>{{0, 0}});
  CHECK(index_range(MultiIndex{1, 1}) == std::vector<MultiIndex>{{0, 0}, {0, 1}, {1, 0}, {1, 1}});
  CHECK(index_range(MultiIndex{2}) == std::vector<MultiIndex>{{0}, {1}, {2}});
  auto r = index_range(MultiIndex{2, 0, 3});
  CHECK(r.size() == 12);
  CHECK(std::is_sorted(r.begin(), r.end()));
}

TEST_CASE("strong index types", "[grid]") {
  CHECK_THROWS_AS(MultiIndex({1, -1}), PreconditionError);
  CHECK_NOTHROW(SignedIndex({1, -1}));
  CHECK(linf_distance(SignedIndex{0, 3}, SignedIndex{-2, 1}) == 2);
  CHECK(index_cast<SignedIndex>(MultiIndex{2, 5}) == SignedIndex{2, 5});
}

TEST_CASE("rational parsing", "[grid]") {
  CHECK(parse_rational("1.25") == Rational(5, 4));
  CHECK(parse_rational("-7/4") == Rational(-7, 4));
  CHECK(parse_rational("2.5e-1") == Rational(1, 4));
  CHECK(parse_rational("3") == Rational(3));
  CHECK_THROWS_AS(parse_rational("abc"), ParseError);
  CHECK_THROWS_AS(parse_rational("1/0"), ParseError);
  CHECK(exact_rational(0.375) == Rational(3, 8));
  CHECK(exact_rational(-12.0) == Rational(-12));
}

TEST_CASE("cells tile space", "[grid]") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(-3.0, 3.0);
  LevelVector kappa{2, 5};
  for (int t = 0; t < 1000; ++t) {
    Point x{U(rng), U(rng)};
    auto nu = cell_index(kappa, x);
    int hits = 0;
    for (long long a = -1; a <= 1; ++a)
      for (long long b = -1; b <= 1; ++b)
        hits += DyadicCell{kappa, SignedIndex{nu[0] + a, nu[1] + b}}.contains(x);
    CHECK(hits == 1);
  }
  DyadicCell c{LevelVector{1, 2}, SignedIndex{1, -1}};
  CHECK(c.lower(0) == 0.5);
  CHECK(c.lower(1) == -0.25);
  CHECK(c.side(1) == 0.25);
}

TEST_CASE("scale maps", "[grid]") {
  ScaleMap id({1.0, 1.0}, Point{0.0, 0.0});
  CHECK(scale_apply(id, Point{0.3, 0.7}) == Point{0.3, 0.7});

  ScaleMap m({2.0, 4.0}, Point{1.0, 1.0});
  CHECK(scale_apply(m, Point{0.5, 0.5}) == Point{2.0, 3.0});

  auto inv = scale_invert(m);
  CHECK(inv.delta(0) == 0.5);
  CHECK(inv.delta(1) == 0.25);
  CHECK(inv.offset(0) == -0.5);
  CHECK(inv.offset(1) == -0.25);
  CHECK(scale_invert(inv) == m);

  ScaleMap odd({3.0, 0.1}, Point{-0.7, 2.2});
  CHECK(scale_invert(scale_invert(odd)) == odd);
  Point x{0.123, -4.5};
  Point y = scale_apply(scale_invert(odd), scale_apply(odd, x));
  CHECK(y[0] == Approx(x[0]).epsilon(1e-14));
  CHECK(y[1] == Approx(x[1]).epsilon(1e-14));
  CHECK_THROWS_AS(ScaleMap({-1.0}, Point{0.0}), PreconditionError);
}
