#include "greytensor/numerics.hpp"
#include "greytensor/shapes.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace greytensor;

namespace {

constexpr double kPi = std::numbers::pi;

Vec v2(double x, double y) { return (Vec(2) << x, y).finished(); }

double weight_sum(const std::vector<BoundaryPanel>& panels) {
  double s = 0.0;
  for (const auto& p : panels) s += p.weight;
  return s;
}

}  // namespace

TEST_CASE("boundary quadrature") {
  const Shape circle = Shape::ball(Vec::Zero(2), 1.0);
  const auto panels = boundary_quadrature(circle, 4096);
  CHECK(weight_sum(panels) == doctest::Approx(2 * kPi).epsilon(1e-6));
  for (const auto& p : panels) {
    CHECK(p.u.norm() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(p.kappa[0] == 1.0);
    CHECK(p.x.norm() == doctest::Approx(1.0).epsilon(1e-14));
  }
  const Shape box = Shape::rounded_box(Vec::Zero(2), v2(1, 1), 0.25);
  CHECK(weight_sum(boundary_quadrature(box, 256)) == doctest::Approx(8 * 0.75 + 2 * kPi * 0.25).epsilon(1e-6));
  // Ellipse perimeter through the complete elliptic integral of the second kind.
  const Shape ell = Shape::ellipse(Vec::Zero(2), 1.2, 0.7);
  const double e2 = 1.0 - 0.7 * 0.7 / (1.2 * 1.2);
  const double E = num::integrate([&](double t) { return std::sqrt(1.0 - e2 * std::sin(t) * std::sin(t)); }, 0.0,
                                  kPi / 2, 16);
  CHECK(weight_sum(boundary_quadrature(ell, 512)) == doctest::Approx(4 * 1.2 * E).epsilon(1e-8));
}

TEST_CASE("volume tensor oracle") {
  const Shape disk = Shape::ball(Vec::Zero(2), 1.0);
  CHECK(volume_tensor_oracle(disk, 0)[0] == doctest::Approx(kPi).epsilon(1e-10));
  const SymTensor v2t = volume_tensor_oracle(disk, 2);
  CHECK(v2t.at({0, 0}) == doctest::Approx(kPi / 8).epsilon(1e-10));
  CHECK(std::abs(v2t.at({0, 1})) < 1e-12);
  CHECK(volume_tensor_oracle(disk, 1).max_abs() < 1e-12);
  CHECK(volume_tensor_oracle(disk, 3).max_abs() < 1e-12);
  // Translation moves the first moment to the area times the center.
  const SymTensor m = volume_tensor_oracle(Shape::ball(v2(0.3, -0.2), 1.0), 1);
  CHECK(m.at({0}) == doctest::Approx(0.3 * kPi).epsilon(1e-10));
  CHECK(m.at({1}) == doctest::Approx(-0.2 * kPi).epsilon(1e-10));
  CHECK(volume_tensor_oracle(Shape::ellipse(Vec::Zero(2), 1.2, 0.7), 0)[0] == doctest::Approx(kPi * 1.2 * 0.7).epsilon(1e-10));
  const double area_box = 4 * 1.0 * 0.6 - (4 - kPi) * 0.3 * 0.3;
  CHECK(volume_tensor_oracle(Shape::rounded_box(Vec::Zero(2), v2(1.0, 0.6), 0.3), 0)[0] ==
        doctest::Approx(area_box).epsilon(1e-10));
}

TEST_CASE("surface tensor oracle") {
  const Shape circle = Shape::ball(Vec::Zero(2), 1.0);
  CHECK(surface_tensor_oracle(circle, 0, 0)[0] == doctest::Approx(2 * kPi).epsilon(1e-10));
  CHECK(surface_tensor_oracle(circle, 0, 2).at({0, 0}) == doctest::Approx(0.25).epsilon(1e-10));
  CHECK(surface_tensor_oracle(circle, 1, 1).at({0, 0}) == doctest::Approx(1.0).epsilon(1e-10));
  for (const Shape& s : {circle, Shape::ellipse(v2(0.1, 0.2), 1.2, 0.7), Shape::rounded_box(v2(0.1, 0.0), v2(1.0, 0.6), 0.3)})
    CHECK(surface_tensor_oracle(s, 0, 1).max_abs() < 1e-10);
}

TEST_CASE("curvature tensor oracle") {
  for (const Shape& s : {Shape::ball(v2(0.3, 0.1), 0.7), Shape::ellipse(Vec::Zero(2), 1.2, 0.7),
                         Shape::rounded_box(Vec::Zero(2), v2(1.0, 0.6), 0.3)})
    CHECK(curvature_tensor_oracle(s, 0)[0] == doctest::Approx(1.0).epsilon(1e-9));
  for (double R : {0.7, 1.0, 2.0})
    CHECK(curvature_tensor_oracle(Shape::ball(Vec::Zero(2), R), 2).at({0, 0}) == doctest::Approx(R * R / 4).epsilon(1e-10));
  const SymTensor c = curvature_tensor_oracle(Shape::ball(v2(0.5, -0.25), 1.0), 1);
  CHECK(c.at({0}) == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(c.at({1}) == doctest::Approx(-0.25).epsilon(1e-10));
}

TEST_CASE("oracles converge under panel refinement") {
  const Shape ell = Shape::ellipse(v2(0.1, 0.0), 1.2, 0.7);
  const SymTensor fine = surface_tensor_oracle(ell, 2, 0, 1024);
  CHECK(max_abs_diff(surface_tensor_oracle(ell, 2, 0, 64), fine) < 1e-10);
  CHECK(max_abs_diff(curvature_tensor_oracle(ell, 2, 64), curvature_tensor_oracle(ell, 2, 1024)) < 1e-10);
}

TEST_CASE("shape geometry") {
  const Shape disk = Shape::ball(v2(0.5, 0.0), 1.0);
  CHECK(disk.signed_distance(v2(0.5, 0.0)) == doctest::Approx(-1.0));
  CHECK(disk.signed_distance(v2(2.5, 0.0)) == doctest::Approx(1.0));
  CHECK(disk.regularity_radius() == doctest::Approx(1.0));
  // {2 x1 <= 0.5} is {x1 <= 0.25}.
  const Shape h = Shape::halfspace(v2(2.0, 0.0), 0.5);
  CHECK_FALSE(h.bounded());
  CHECK(h.signed_distance(v2(1.0, 7.0)) == doctest::Approx(0.75));
  CHECK_THROWS((void)h.bounding_box());
  const Shape box = Shape::rounded_box(Vec::Zero(2), v2(1.0, 0.6), 0.3);
  CHECK(box.regularity_radius() == doctest::Approx(0.3));
  CHECK(box.signed_distance(v2(1.0, 0.6)) == doctest::Approx(std::sqrt(2.0) * 0.3 - 0.3).epsilon(1e-12));
  const auto chord = disk.chord(0, v2(0.0, 0.6));
  REQUIRE(chord.has_value());
  CHECK(chord->lo == doctest::Approx(0.5 - 0.8));
  CHECK(chord->hi == doctest::Approx(0.5 + 0.8));
  CHECK_FALSE(disk.chord(0, v2(0.0, 1.5)).has_value());
  CHECK_THROWS_AS((void)Shape::ball(Vec::Zero(2), -1.0), ConfigError);
  CHECK_THROWS_AS((void)Shape::rounded_box(Vec::Zero(2), v2(1.0, 0.6), 0.8), ConfigError);
}
