#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "cws/errors.hpp"
#include "cws/interaction.hpp"
#include "oracles.hpp"

using namespace cws;

TEST_CASE("F basics") {
  CHECK(F(0.0, 2.0) == 0.0);
  CHECK(F(1.0, 2.0) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(F(-1.0, 2.0) == F(1.0, 2.0));
  CHECK_THROWS_AS(F(1.0, 0.0), DomainError);
}

TEST_CASE("R basics") {
  CHECK(R({0.0, 2.0, 6.8}) == 0.0);
  CHECK(R({1.0, 2.0, 4.0}) == doctest::Approx(1.0 / 48.0).epsilon(1e-15));
  CHECK(R({1.5, 2.0, 4.0}) == R({-1.5, 2.0, 4.0}));
  CHECK_THROWS_AS(R({1.0, 0.0, 4.0}), DomainError);
}

TEST_CASE("R_n values and ordering") {
  // denominator at (1,2,4), n=1: 512 + 1 + 64 = 577
  CHECK(R_n(1.0, {1.0, 2.0, 4.0}) == doctest::Approx(128.0 / (12.0 * 577.0)).epsilon(1e-15));
  CHECK(R_n(2.0, {1.0, 2.0, 4.0}) == doctest::Approx(128.0 / (12.0 * 578.0)).epsilon(1e-15));
  CHECK(R_n(2.0, {1.0, 2.0, 4.0}) < R_n(1.0, {1.0, 2.0, 4.0}));
  CHECK(R_n(12345.0, {0.0, 2.0, 4.0}) == 0.0);
}

TEST_CASE("H values") {
  CHECK(H(0.0, 1.0, 1.0) == 0.0);
  CHECK(H(0.0, 5.0, 2.0) == 0.0);
  CHECK(H(1.0, 2.0, 4.0) == doctest::Approx(0.25 + 128.0 / (12.0 * 577.0)).epsilon(1e-15));
  // sums-scale value used by the n = 2 enumeration oracle
  CHECK(H(2.0, 2.0, 2.0) == doctest::Approx(25.0 / 24.0).epsilon(1e-15));
}

TEST_CASE("scaling identity H - F = n R_n(./n) is exact algebra") {
  const auto points = sample_theta_star_points(1000, 99);
  CHECK(check_scaling_identity(1.0, points) == 0.0);
  for (double n : {7.0, 1e3, 1e6}) {
    CHECK(check_scaling_identity(n, points) <= 1e-12);
  }
  // large-n conditioning check at a specific point
  CHECK(check_scaling_identity(1e6, {TriplePoint{0.5, 1.0, 1.0}}) <= 1e-12);
}

TEST_CASE("monotonicity and bounds of R_n") {
  SUBCASE("single points") {
    auto rep = check_monotone_and_bounds({TriplePoint{1.0, 2.0, 4.0}}, 50);
    CHECK(rep.ok());
    for (int n = 1; n <= 50; ++n)
      CHECK(R_n(n, {1.0, 2.0, 4.0}) <= 2.0 / 12.0);
    rep = check_monotone_and_bounds({TriplePoint{0.0, 1.0, 1.0}}, 50);
    CHECK(rep.ok());
    CHECK(R_n(17.0, {0.0, 1.0, 1.0}) == 0.0);
  }
  SUBCASE("quasi-random Theta* sample has zero violations") {
    const auto rep = check_monotone_and_bounds(sample_theta_star_points(1000, 2718), 50);
    CHECK(rep.points_checked == 1000);
    CHECK(rep.ok());
  }
}

TEST_CASE("pointwise limit R_n -> 0 monotonically") {
  const TriplePoint p{0.7, 1.3, 2.5};
  double prev = R(p);
  for (int k = 0; k <= 40; ++k) {
    const double rn = R_n(std::pow(2.0, k), p);
    CHECK(rn <= prev * (1.0 + 1e-14));
    prev = rn;
  }
  CHECK(prev <= 1e-10);
}

TEST_CASE("evenness in x across the sampled domain") {
  for (const auto& p : sample_theta_star_points(200, 5)) {
    const TriplePoint q{-p.x, p.y, p.z};
    CHECK(F(p.x, p.y) == F(q.x, q.y));
    CHECK(R(p) == R(q));
    CHECK(R_n(13.0, p) == R_n(13.0, q));
    CHECK(H(p) == H(q));
  }
}

TEST_CASE("H <= F + R on Theta*") {
  for (const auto& p : sample_theta_star_points(500, 31)) {
    CHECK(H(p) <= F(p.x, p.y) + R(p) + 1e-15 * (1.0 + std::abs(H(p))));
  }
}

TEST_CASE("vanishing rate against the asymptote") {
  const MomentSet ms = moments(oracles::five_point_uniform());
  SUBCASE("x = 0 is exactly zero") {
    const auto r = vanishing_rate(1e6, 0.0, 0.0, 0.0, ms);
    CHECK(r.exact == 0.0);
    CHECK(r.asymptotic == 0.0);
  }
  SUBCASE("ratio tends to 1, within 5% at n = 1e9") {
    double prev_err = 1e300;
    for (double n : {1e3, 1e6, 1e9}) {
      const auto r = vanishing_rate(n, 1.0, 0.0, 0.0, ms);
      const double err = std::abs(r.exact / r.asymptotic - 1.0);
      CHECK(err < prev_err);
      prev_err = err;
    }
    const auto r9 = vanishing_rate(1e9, 1.0, 0.0, 0.0, ms);
    CHECK(std::abs(r9.exact / r9.asymptotic - 1.0) < 0.05);
  }
  SUBCASE("doubling n shrinks the exact rate by about 2^(-1/3)") {
    const double big = 1e10;
    const auto r1 = vanishing_rate(big, 1.0, 0.0, 0.0, ms);
    const auto r2 = vanishing_rate(2.0 * big, 1.0, 0.0, 0.0, ms);
    CHECK(r2.exact / r1.exact == doctest::Approx(std::pow(2.0, -1.0 / 3.0)).epsilon(1e-3));
  }
}

TEST_CASE("Theta* membership tolerance") {
  CHECK(in_theta_star({1.0, 1.0, 1.0}));          // boundary x^2 = y, y^2 = z
  CHECK(in_theta_star({0.0, 2.0, 6.8}));
  CHECK_FALSE(in_theta_star({2.0, 1.0, 1.0}));    // x^2 > y
  CHECK_FALSE(in_theta_star({0.5, 2.0, 1.0}));    // y^2 > z
  CHECK_FALSE(in_theta_star({0.0, 0.0, 1.0}));    // y = 0
  CHECK_FALSE(in_theta_star({0.0, -1.0, 1.0}));   // y < 0
}
