#include "tailcp/loss.hpp"
#include "tailcp/rng.hpp"

#include <doctest.h>

#include <cmath>

using namespace tailcp;

TEST_CASE("check loss matches hand values") {
  CHECK(check_loss(0.0, 0.3) == doctest::Approx(0.0));
  CHECK(check_loss(2.0, 0.5) == doctest::Approx(1.0));
  CHECK(check_loss(-1.0, 0.3) == doctest::Approx(0.7));
  CHECK_THROWS_AS(check_loss(1.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(check_loss(1.0, 1.0), std::invalid_argument);
}

TEST_CASE("check loss is nonnegative, zero only at zero, convex") {
  RngStream rng(7, {1});
  for (int trial = 0; trial < 500; ++trial) {
    const double tau = 0.05 + 0.9 * rng.uniform();
    const double a = 10.0 * (rng.uniform() - 0.5);
    const double b = 10.0 * (rng.uniform() - 0.5);
    CHECK(check_loss(a, tau) >= 0.0);
    if (a != 0.0) CHECK(check_loss(a, tau) > 0.0);
    // midpoint convexity
    const double mid = check_loss(0.5 * (a + b), tau);
    CHECK(mid <= 0.5 * check_loss(a, tau) + 0.5 * check_loss(b, tau) + 1e-12);
  }
}

TEST_CASE("weighted loss hand values") {
  WeightedLossSpec half(0.5, {0.5});
  Vector x = Vector::Zero(2);
  Vector beta = Vector::Zero(2);
  Vector b = Vector::Zero(1);

  // alpha = 1: quantile term vanishes
  WeightedLossSpec ls(1.0, {0.5});
  Vector b_off = Vector::Constant(1, 123.0);
  CHECK(weighted_loss(x, 3.0, ls, b_off, beta) == doctest::Approx(4.5));

  // alpha = 0, K = 1, tau = 0.5, y = 4 -> rho_{0.5}(4) = 2
  WeightedLossSpec cq(0.0, {0.5});
  CHECK(weighted_loss(x, 4.0, cq, b, beta) == doctest::Approx(2.0));

  // alpha = 0.5 mixes both: 0.5 * 1 + 0.25 * 4 = 1.5
  CHECK(weighted_loss(x, 2.0, half, b, beta) == doctest::Approx(1.5));
}

TEST_CASE("weighted loss is convex in (b, beta)") {
  RngStream rng(11, {2});
  const Index p = 4;
  WeightedLossSpec spec(0.3, {0.25, 0.5, 0.75});
  for (int trial = 0; trial < 200; ++trial) {
    Vector x(p), bu(3), bv(3), betau(p), betav(p);
    for (Index j = 0; j < p; ++j) {
      x[j] = rng.normal();
      betau[j] = rng.normal();
      betav[j] = rng.normal();
    }
    for (Index k = 0; k < 3; ++k) {
      bu[k] = rng.normal();
      bv[k] = rng.normal();
    }
    const double y = rng.normal();
    const double theta = rng.uniform();
    const double lhs = weighted_loss(x, y, spec, theta * bu + (1 - theta) * bv,
                                     theta * betau + (1 - theta) * betav);
    const double rhs = theta * weighted_loss(x, y, spec, bu, betau) +
                       (1 - theta) * weighted_loss(x, y, spec, bv, betav);
    CHECK(lhs <= rhs + 1e-12);
  }
}

TEST_CASE("score hand values and kink convention") {
  Vector x(2);
  x << 1.0, 2.0;
  Vector b = Vector::Zero(1);

  // alpha = 1: exactly -x (y - x'beta)
  WeightedLossSpec ls(1.0, {0.5});
  Vector beta(2);
  beta << 1.0, 0.0;
  Vector s = score(x, 3.0, ls, b, beta);
  CHECK(s[0] == doctest::Approx(-2.0));
  CHECK(s[1] == doctest::Approx(-4.0));

  // alpha = 0, positive residual: indicator is 0 -> -tau * x
  WeightedLossSpec cq(0.0, {0.5});
  s = score(x, 3.0, cq, b, beta);
  CHECK(s[0] == doctest::Approx(-0.5));
  CHECK(s[1] == doctest::Approx(-1.0));

  // alpha = 0.5 mixed value from the spec-level hand computation
  WeightedLossSpec half(0.5, {0.5});
  s = score(x, 3.0, half, b, beta);
  CHECK(s[0] == doctest::Approx(-1.25));
  CHECK(s[1] == doctest::Approx(-2.5));

  // at the kink the indicator evaluates to 1
  s = score(x, 1.0, half, b, beta);  // residual exactly 0
  // quantile part: 0.5 * x * (1 - 0.5) = 0.25 x; LS part zero
  CHECK(s[0] == doctest::Approx(0.25));
  CHECK(s[1] == doctest::Approx(0.5));
}

TEST_CASE("score is a subgradient of the weighted loss in beta") {
  RngStream rng(13, {3});
  const Index p = 5;
  WeightedLossSpec spec(0.4, {0.3, 0.6});
  for (int trial = 0; trial < 300; ++trial) {
    Vector x(p), beta(p), d(p), b(2);
    for (Index j = 0; j < p; ++j) {
      x[j] = rng.normal();
      beta[j] = rng.normal();
      d[j] = 0.5 * rng.normal();
    }
    b << rng.normal(), rng.normal();
    const double y = rng.normal();
    const Vector g = score(x, y, spec, b, beta);
    const double base = weighted_loss(x, y, spec, b, beta);
    const double moved = weighted_loss(x, y, spec, b, beta + d);
    CHECK(moved >= base + g.dot(d) - 1e-10);
  }
}

TEST_CASE("s0 norm hand values") {
  Vector v(4);
  v << 3.0, -4.0, 1.0, 0.0;
  CHECK(s0_norm(v, 2) == doctest::Approx(5.0));
  CHECK(s0_norm(v, 1) == doctest::Approx(4.0));
  CHECK(s0_norm(v, 4) == doctest::Approx(std::sqrt(26.0)));
  CHECK_THROWS_AS(s0_norm(v, 0), std::invalid_argument);
  CHECK_THROWS_AS(s0_norm(v, 5), std::invalid_argument);
}

TEST_CASE("s0 norm is a norm and monotone in s0") {
  RngStream rng(17, {4});
  const Index p = 12;
  for (int trial = 0; trial < 200; ++trial) {
    Vector a(p), b(p);
    for (Index j = 0; j < p; ++j) {
      a[j] = rng.normal();
      b[j] = rng.normal();
    }
    const int s0 = 1 + static_cast<int>(rng.uniform() * p) % static_cast<int>(p);
    const double c = 4.0 * (rng.uniform() - 0.5);
    CHECK(s0_norm(a + b, s0) <= s0_norm(a, s0) + s0_norm(b, s0) + 1e-12);
    CHECK(s0_norm(c * a, s0) == doctest::Approx(std::abs(c) * s0_norm(a, s0)));
    if (s0 < p) CHECK(s0_norm(a, s0) <= s0_norm(a, s0 + 1) + 1e-15);
  }
}
