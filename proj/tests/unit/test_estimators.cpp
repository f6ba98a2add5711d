#include "greytensor/asymptotics.hpp"
#include "greytensor/estimators.hpp"
#include "greytensor/numerics.hpp"
#include "greytensor/shapes.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace greytensor;

namespace {

constexpr double kPi = std::numbers::pi;

Vec v2(double x, double y) { return (Vec(2) << x, y).finished(); }
IVec i2(long x, long y) { return (IVec(2) << x, y).finished(); }

WeightSpec counting_spec(double lo, double hi) {
  WeightSpec w;
  w.offsets = ConfigOffsets::forward(2);
  w.box.assign(3, Interval{lo, hi});
  w.q = 0;
  w.components = 2;
  w.weight = [](std::span<const double>, const Vec& x, std::span<double> out) {
    out[0] = 1.0;
    out[1] = x[0];
  };
  w.kinks.assign(3, {});
  w.to_tensor = [](std::span<const double> b) { return SymTensor::scalar(b[0], 2); };
  return w;
}

}  // namespace

TEST_CASE("local_sum matches exhaustive enumeration") {
  // 5x5 image: zero border, random interior.
  const Lattice L = Lattice::make(Mat::Identity(2, 2), 0.5, v2(0.25, 0.75));
  const Window w{i2(-2, 1), i2(5, 5)};
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::vector<double> vals(25, 0.0);
  for (long y = 1; y < 4; ++y)
    for (long x = 1; x < 4; ++x) vals[y * 5 + x] = U(rng);
  const GreyImage img(L, w, vals);
  const WeightSpec spec = counting_spec(0.2, 0.8);
  const auto got = local_sum(img, spec);

  double count = 0.0;
  double xsum = 0.0;
  for (long y = 0; y < 5; ++y)
    for (long x = 0; x < 5; ++x) {
      if (x + 1 >= 5 || y + 1 >= 5) continue;
      const double t0 = vals[y * 5 + x];
      const double t1 = vals[y * 5 + x + 1];
      const double t2 = vals[(y + 1) * 5 + x];
      if (t0 >= 0.2 && t0 <= 0.8 && t1 >= 0.2 && t1 <= 0.8 && t2 >= 0.2 && t2 <= 0.8) {
        count += 1.0;
        xsum += 0.5 * ((x - 2) + 0.25);
      }
    }
  CHECK(got[0] == count);
  CHECK(got[1] == doctest::Approx(xsum).epsilon(1e-14));
}

TEST_CASE("local_sum refuses clipped support and ignores empty support") {
  const Lattice L = Lattice::standard(2, 0.5);
  const Window w{i2(0, 0), i2(3, 3)};
  std::vector<double> vals(9, 0.0);
  const WeightSpec spec = counting_spec(0.2, 0.8);
  CHECK(local_sum(GreyImage(L, w, vals), spec)[0] == 0.0);
  vals[4] = 0.5;
  CHECK_NOTHROW((void)local_sum(GreyImage(L, w, vals), spec));
  vals[0] = 0.5;
  CHECK_THROWS_AS((void)local_sum(GreyImage(L, w, vals), spec), DomainError);
  // Volume weight on an empty image.
  const GreyImage empty(L, w, std::vector<double>(9, 0.0));
  CHECK(local_estimate(empty, volume_weight(2, 2, 0.5)).max_abs() == 0.0);
}

TEST_CASE("indicator local sum approaches the first-order limit") {
  const Psf psf = Psf::gaussian(2);
  const Profile p = psf.profile();
  const Shape circle = Shape::ball(Vec::Zero(2), 1.0);
  const WeightSpec spec = indicator_weight(2, 0.25, 0.75);
  const auto res = run_translations(circle, psf, Mat::Identity(2, 2), 1.0 / 64, 4, 32, 1,
                                    [&](const GreyImage& img) { return local_estimate(img, spec); });
  const double expect = (p.phi(0.25) - p.phi(0.75)) * 2 * kPi;
  CHECK(res.tensor[0] == doctest::Approx(expect).epsilon(0.01));
}

TEST_CASE("volume estimator") {
  const Psf psf = Psf::gaussian(2);
  const Shape disk = Shape::ball(Vec::Zero(2), 1.0);
  const auto m1 = volume_tensor_est(disk, psf, Mat::Identity(2, 2), 1.0 / 64, 1, 0.5, 3, 8);
  CHECK(m1.tensor.max_abs() < 0.02);
  CHECK(m1.translations == 8);
  CHECK(m1.per_translation.size() == 8);
  // The exact mean has second-order bias only.
  const double e16 = exact_mean_volume(disk, psf, 1.0 / 16, 0, 0.5)[0] - kPi;
  const double e32 = exact_mean_volume(disk, psf, 1.0 / 32, 0, 0.5)[0] - kPi;
  CHECK(std::abs(e32) < 0.3 * std::abs(e16));
}

TEST_CASE("surface estimators on the unit circle") {
  const Psf psf = Psf::gaussian(2);
  const Shape circle = Shape::ball(Vec::Zero(2), 1.0);
  const Mat B = Mat::Identity(2, 2);
  const Profile p = psf.profile();
  const double a = 1.0 / 32;
  CHECK(exact_mean_estimate(circle, psf, B, a, surface_weight2(p, B, 0, 1, 0.1, 0.9)).max_abs() < 0.05);
  CHECK(exact_mean_estimate(circle, psf, B, a, surface_weight3(p, B, 0, 1, 0.1, 0.01)).max_abs() < 1e-8);
  const SymTensor s2 = exact_mean_estimate(circle, psf, B, a, surface_weight2(p, B, 1, 1, 0.1, 0.9));
  const SymTensor s3 = exact_mean_estimate(circle, psf, B, a, surface_weight3(p, B, 1, 1, 0.1, 0.01));
  CHECK(s2.at({0, 0}) == doctest::Approx(1.0).epsilon(0.03));
  CHECK(s3.at({0, 0}) == doctest::Approx(1.0).epsilon(0.03));
  CHECK(s2.at({0, 0}) == doctest::Approx(s3.at({0, 0})).epsilon(0.03));

  const auto w3 = surface_weight3(p, B, 0, 0, 0.1, 0.01);
  const double b16 = std::abs(exact_mean_estimate(circle, psf, B, 1.0 / 16, w3)[0] - 2 * kPi);
  const double b32 = std::abs(exact_mean_estimate(circle, psf, B, 1.0 / 32, w3)[0] - 2 * kPi);
  CHECK(b32 / b16 < 0.35);
}

TEST_CASE("surface estimator on a sheared lattice") {
  const Psf psf = Psf::gaussian(2);
  const Shape circle = Shape::ball(Vec::Zero(2), 1.0);
  Mat B(2, 2);
  B << 1, 0.5, 0, 1;
  const auto est = surface_tensor_est2(circle, psf, B, 1.0 / 32, 0, 0, 0.1, 0.9, 5, 16);
  CHECK(est.tensor[0] == doctest::Approx(2 * kPi).epsilon(0.03));
}

TEST_CASE("surface estimators refuse invalid profiles") {
  const Psf narrow = Psf::ball_indicator(2, 1.0);
  CHECK_THROWS((require_surface_conditions(narrow, 0.1, 0.9, 1.5)));
  CHECK_NOTHROW((require_surface_conditions(Psf::ball_indicator(2, 4.0), 0.3, 0.7, 1.0)));
  CHECK_THROWS((void)surface_tensor_est2(Shape::ball(Vec::Zero(2), 1.0), narrow, Mat::Identity(2, 2), 1.0 / 16, 0, 0,
                                         0.1, 0.9, 1, 1));
}

TEST_CASE("compute_Ig") {
  const Profile p = Psf::gaussian(2).profile();
  CHECK(compute_Ig(p, GFunction::zero(0.1), 0.1) == 0.0);
  const double lin = compute_Ig(p, GFunction::linear(0.1), 0.1);
  CHECK(lin < 0.0);
  const double T = oracle::normal_sf_inverse(0.1);
  const double lin_ref = oracle::midpoint([](double t) { return t * (oracle::normal_sf(t) - 0.5); }, -T, T, 20000);
  CHECK(lin == doctest::Approx(lin_ref).epsilon(1e-6));
  const double step_ref = oracle::midpoint([](double t) { return std::abs(t); }, -T, T, 20000);
  CHECK(compute_Ig(p, GFunction::step(0.1), 0.1) == doctest::Approx(step_ref).epsilon(1e-6));
  GFunction even{GFunction::Kind::custom, 0.1, [](double v) { return v; }};
  CHECK_THROWS_AS((void)compute_Ig(p, even, 0.1), ConfigError);
}

TEST_CASE("g functions") {
  const GFunction g = GFunction::linear(0.1);
  for (double v : {0.05, 0.1, 0.3, 0.5, 0.77, 0.95}) CHECK(g(v) == doctest::Approx(-g(1 - v)).scale(1.0).epsilon(1e-15));
  CHECK(g(0.05) == 0.0);
  CHECK(g(0.3) == doctest::Approx(-0.2));
  const GFunction s = GFunction::step(0.1);
  CHECK(s(0.3) == 1.0);
  CHECK(s(0.7) == -1.0);
  CHECK(GFunction::from_name("linear", 0.1).name() == g.name());
  CHECK_THROWS_AS((void)GFunction::from_name("cubic", 0.1), ConfigError);
}

TEST_CASE("curvature calibration and estimation") {
  const Psf psf = Psf::gaussian(2);
  const std::vector<double> as{1.0 / 16, 1.0 / 32, 1.0 / 64};
  const Shape unit = Shape::ball(Vec::Zero(2), 1.0);
  CHECK_THROWS_AS((void)calibrate_curvature(unit, psf, GFunction::zero(0.1), 0.1, as), DomainError);

  const auto cal = calibrate_curvature(unit, psf, GFunction::linear(0.1), 0.1, as);
  CHECK(std::isfinite(cal.C_g));
  CHECK(cal.C_g != 0.0);
  CHECK(cal.samples.size() == as.size());
  CHECK(cal.C_g == doctest::Approx(2 * kPi * cal.I_g).epsilon(1e-4));

  const SymTensor c = exact_mean_curvature(Shape::ball(v2(0.5, 0.0), 1.0), psf, 1.0 / 64, 1, cal);
  CHECK(c.at({0}) == doctest::Approx(0.5).epsilon(0.05));
  CHECK(std::abs(c.at({1})) < 0.025);

  SymTensor raw(2, 0);
  raw[0] = 1.0;
  CurvatureCalibration zero = cal;
  zero.C_g = 0.0;
  CHECK_THROWS((void)curvature_tensor_est(raw, 0, zero, SymTensor(2, 0)));
}
