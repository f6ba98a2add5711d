#include "greytensor/numerics.hpp"
#include "greytensor/psf.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace greytensor;

namespace {

// Fraction of the unit disk beyond the chord at distance t, as a closed form.
double segment_fraction(double t) {
  if (t <= -1.0) return 1.0;
  if (t >= 1.0) return 0.0;
  return (std::acos(t) - t * std::sqrt(1.0 - t * t)) / std::numbers::pi;
}

}  // namespace

TEST_CASE("gaussian profile values") {
  const Profile p(Psf::gaussian(2));
  CHECK(p.theta(0.0) == doctest::Approx(0.5).epsilon(1e-15));
  for (double t : {-2.5, -1.0, 0.3, 1.0, 2.0, 4.0})
    CHECK(p.theta(t) == doctest::Approx(oracle::normal_sf(t)).epsilon(1e-12));
  CHECK(p.theta(1.0) == doctest::Approx(0.158655).epsilon(1e-5));
  // The profile is the same in every dimension.
  CHECK(Profile(Psf::gaussian(3)).theta(0.7) == doctest::Approx(p.theta(0.7)).epsilon(1e-14));
}

TEST_CASE("ball indicator profile matches the segment area") {
  const Profile p(Psf::ball_indicator(2, 1.0));
  CHECK(p.theta(0.5) == doctest::Approx(0.19550).epsilon(1e-4));
  for (double t : {-0.9, -0.4, 0.0, 0.25, 0.5, 0.8})
    CHECK(p.theta(t) == doctest::Approx(segment_fraction(t)).epsilon(1e-10));
  CHECK(p.theta(1.5) == 0.0);
  CHECK(p.theta(-1.5) == 1.0);
  const Profile p4(Psf::ball_indicator(2, 4.0));
  CHECK(p4.theta(2.0) == doctest::Approx(segment_fraction(0.5)).epsilon(1e-10));
}

TEST_CASE("profile is non-increasing with matching derivative") {
  for (const Psf& psf : {Psf::gaussian(2), Psf::ball_indicator(2, 1.0), Psf::ball_indicator(3, 1.0)}) {
    const Profile p(psf);
    double prev = 1.0;
    for (double t = -3.0; t <= 3.0; t += 0.05) {
      const double v = p.theta(t);
      CHECK(v <= prev + 1e-15);
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
      prev = v;
    }
    for (double t : {-0.6, -0.1, 0.2, 0.55}) {
      const double h = 1e-6;
      const double fd = (p.theta(t + h) - p.theta(t - h)) / (2 * h);
      CHECK(p.theta_prime(t) == doctest::Approx(fd).epsilon(1e-6));
    }
  }
}

TEST_CASE("phi inverts theta") {
  const Profile g(Psf::gaussian(2));
  CHECK(g.phi(0.5) == doctest::Approx(0.0).scale(1.0).epsilon(1e-14));
  CHECK(g.phi(0.158655) == doctest::Approx(oracle::normal_sf_inverse(0.158655)).epsilon(1e-10));
  CHECK(g.phi(0.158655) == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(g.theta(g.phi(0.37)) == doctest::Approx(0.37).epsilon(1e-9));
  const Profile b(Psf::ball_indicator(2, 1.0));
  for (double v : {0.05, 0.37, 0.5, 0.93}) CHECK(b.theta(b.phi(v)) == doctest::Approx(v).epsilon(1e-9));
  CHECK_THROWS_AS((void)g.phi(0.0), DomainError);
  CHECK_THROWS_AS((void)g.phi(1.2), DomainError);
  CHECK_THROWS_AS((void)b.phi(1.0), DomainError);
}

TEST_CASE("validate_conditions") {
  const ConditionReport g = validate_conditions(Psf::gaussian(2), 0.1, 0.9, 1.5);
  CHECK(g.valid);
  CHECK(std::isinf(g.slack));
  const ConditionReport bad = validate_conditions(Psf::ball_indicator(2, 1.0), 0.1, 0.9, 1.5);
  CHECK_FALSE(bad.valid);
  CHECK_FALSE(bad.window_inside);
  CHECK_FALSE(bad.reason.empty());
  const ConditionReport good = validate_conditions(Psf::ball_indicator(2, 4.0), 0.3, 0.7, 1.0);
  CHECK(good.valid);
  CHECK(good.slack > 0.0);
}

TEST_CASE("regular values") {
  CHECK(regular_value_check(Profile(Psf::gaussian(2)), 0.25));
  const Profile b(Psf::ball_indicator(2, 1.0));
  CHECK(regular_value_check(b, 0.5));
  CHECK_FALSE(regular_value_check(b, 1.0 - 1e-12));
}

TEST_CASE("scaled density") {
  const Psf g = Psf::gaussian(2);
  const Vec zero = Vec::Zero(2);
  CHECK(scaled_density(g, 1.0, zero) == doctest::Approx(1.0 / (2 * std::numbers::pi)).epsilon(1e-14));
  CHECK(scaled_density(g, 0.5, zero) == doctest::Approx(4.0 / (2 * std::numbers::pi)).epsilon(1e-14));
  for (double a : {1.0, 0.25}) {
    // Polar midpoint quadrature of rho_a over the ball of radius 6a.
    const double mass = oracle::midpoint(
        [&](double r) { return 2 * std::numbers::pi * r * scaled_density(g, a, (Vec(2) << r, 0.0).finished()); }, 0.0,
        6 * a, 4000);
    CHECK(mass == doctest::Approx(1.0 - std::exp(-18.0)).epsilon(1e-6));
  }
  const Psf b = Psf::ball_indicator(2, 1.0);
  CHECK(b.density(zero) == doctest::Approx(1.0 / std::numbers::pi));
  CHECK(b.density((Vec(2) << 1.1, 0.0).finished()) == 0.0);
}

TEST_CASE("support radius bounds the tail") {
  const Psf g = Psf::gaussian(2);
  const double D = g.support_radius();
  CHECK(std::exp(-0.5 * D * D) <= Psf::kTailTolerance * (1 + 1e-9));
  CHECK(g.exact_cutoff() >= D);
  CHECK(Psf::ball_indicator(2, 2.0).support_radius() == doctest::Approx(2.0));
}

TEST_CASE("monotone window") {
  const Interval w = Profile(Psf::ball_indicator(2, 1.5)).monotone_window();
  CHECK(w.lo == doctest::Approx(-1.5));
  CHECK(w.hi == doctest::Approx(1.5));
  CHECK(std::isinf(Profile(Psf::gaussian(2)).monotone_window().hi));
}
