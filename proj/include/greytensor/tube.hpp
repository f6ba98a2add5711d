#pragma once

#include "greytensor/psf.hpp"
#include "greytensor/shapes.hpp"

#include <functional>
#include <span>
#include <vector>

namespace greytensor {

/// Unit-scale intensity P(lambda) of a disk of radius rho at center distance
/// lambda. For the 2D Gaussian it is tabulated as piecewise Chebyshev series on
/// [lambda_lo, lambda_hi]; other cases and out-of-range arguments use the
/// closed form or direct quadrature.
class RadialIntensity {
 public:
  RadialIntensity(const Psf& psf, double rho, double lambda_lo, double lambda_hi);

  [[nodiscard]] double operator()(double lambda) const;
  [[nodiscard]] double rho() const { return rho_; }

 private:
  static constexpr int kNodes = 22;
  static constexpr double kPieceWidth = 0.5;

  const Psf* psf_;
  double rho_;
  double lo_ = 0.0;
  double hi_ = 0.0;
  bool tabulated_ = false;
  std::vector<std::vector<double>> coeffs_;
};

/// Integral over a t-window around the boundary of a 2D disk, in polar
/// coordinates x = c + (R + a t) u(alpha):
///   int_0^{2 pi} int_{t_lo}^{t_hi} F(t, x, tuple) a (R + a t) dt dalpha,
/// with tuple_k = theta_a^X(x + a s_k). Breakpoints in t are located where a
/// tuple entry crosses one of `levels[k]`.
struct TubeProblem {
  double a = 0.0;
  /// Unit-scale physical offsets.
  std::vector<Vec> offsets;
  std::vector<std::vector<double>> levels;
  std::vector<double> t_breaks;
  Interval t_range;
  int components = 1;
  std::function<void(double t, const Vec& x, std::span<const double> tuple, std::span<double> out)> integrand;
};

struct TubeAccuracy {
  double abs_tol = 1e-11;
  double rel_tol = 1e-11;
  int max_depth = 12;
  double panels_per_unit = 2.0;
};

[[nodiscard]] std::vector<double> tube_integrate(const Shape& disk, const Psf& psf, const TubeProblem& problem,
                                                 const TubeAccuracy& accuracy);

}  // namespace greytensor
