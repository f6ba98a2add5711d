#include "greytensor/numerics.hpp"

#include <doctest.h>

#include <atomic>
#include <cmath>
#include <numbers>
#include <stdexcept>

using namespace greytensor;

TEST_CASE("Gauss-Legendre is exact for polynomials of degree 2n-1") {
  for (int n : {8, 16, 20, 32}) {
    const int deg = 2 * n - 1;
    const double v = num::integrate([&](double x) { return std::pow(x, deg - 1) + 1.0; }, 0.0, 1.0, 1, n);
    CHECK(v == doctest::Approx(1.0 / deg + 1.0).epsilon(1e-13));
  }
}

TEST_CASE("adaptive quadrature") {
  CHECK(num::integrate_adaptive([](double x) { return std::exp(-x * x); }, -8, 8) ==
        doctest::Approx(std::sqrt(std::numbers::pi)).epsilon(1e-12));
  const auto v = num::integrate_adaptive_vec(
      [](double x, std::span<double> out) {
        out[0] = std::sin(x);
        out[1] = std::sqrt(x);
      },
      2, 0.0, 1.0);
  CHECK(v[0] == doctest::Approx(1.0 - std::cos(1.0)).epsilon(1e-12));
  CHECK(v[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-9));
}

TEST_CASE("roots and extrapolation") {
  CHECK(num::find_root([](double x) { return x * x - 2; }, 0, 2) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
  const std::vector<double> h{0.1, 0.05, 0.025};
  std::vector<double> y;
  for (double x : h) y.push_back(3.0 + 2 * x - 5 * x * x);
  CHECK(num::extrapolate_to_zero(h, y) == doctest::Approx(3.0).epsilon(1e-12));
  std::vector<double> p;
  for (double x : h) p.push_back(0.7 * std::pow(x, 1.5));
  CHECK(num::loglog_slope(h, p) == doctest::Approx(1.5).epsilon(1e-12));
}

TEST_CASE("counter-based generator") {
  for (std::uint64_t i = 0; i < 1000; ++i) {
    const double u = num::uniform01(42, i);
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    CHECK(u == num::uniform01(42, i));
  }
  CHECK(num::uniform01(42, 0) != num::uniform01(43, 0));
}

TEST_CASE("statistics and summation") {
  const std::vector<double> v{1, 2, 3, 4};
  const auto ms = num::mean_stderr(v);
  CHECK(ms.mean == doctest::Approx(2.5));
  CHECK(ms.stderr_ == doctest::Approx(std::sqrt(5.0 / 3.0 / 4.0)));
  std::vector<double> many(10001, 0.1);
  CHECK(num::pairwise_sum(many) == doctest::Approx(1000.1).epsilon(1e-14));
}

TEST_CASE("parallel_chunks covers the range and rethrows") {
  std::vector<std::atomic<int>> hits(1000);
  num::parallel_chunks(hits.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) ++hits[i];
  }, 4);
  for (const auto& h : hits) CHECK(h.load() == 1);
  CHECK_THROWS_AS(num::parallel_chunks(10, [](std::size_t, std::size_t) { throw std::runtime_error("x"); }, 3),
                  std::runtime_error);
}

TEST_CASE("sphere constants") {
  CHECK(num::sphere_area(1) == doctest::Approx(2.0));
  CHECK(num::sphere_area(2) == doctest::Approx(2 * std::numbers::pi));
  CHECK(num::sphere_area(3) == doctest::Approx(4 * std::numbers::pi));
  CHECK(num::ball_volume(3) == doctest::Approx(4.0 / 3.0 * std::numbers::pi));
}
