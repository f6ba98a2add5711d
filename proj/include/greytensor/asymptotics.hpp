#pragma once

#include "greytensor/estimators.hpp"
#include "greytensor/psf.hpp"
#include "greytensor/shapes.hpp"

#include <vector>

namespace greytensor {

// Both sides of the first- and second-order limits of a local weight f on
// S with box A, for a set X observed through rho_a:
//   a^{-1} int f(Theta_a^X(x; aS), x) dx -> int_{dX} int f(Theta_u(t; S), x) dt dH
// and the a^{-2} bracket after subtracting the first-order term.

/// Unit-scale halfspace tuple Theta_u(t; S)_k = theta(t + <s_k, u>).
[[nodiscard]] std::vector<double> halfspace_tuple(const Profile& profile, double t, std::span<const Vec> offsets,
                                                  const Vec& u);

/// Physical unit-scale offsets B s for the spec's lattice offsets.
[[nodiscard]] std::vector<Vec> physical_offsets(const WeightSpec& spec, const Mat& basis);

/// Right-hand side of the first-order limit, by boundary panel quadrature.
/// Throws DomainError if f does not vanish for large |t|.
[[nodiscard]] SymTensor first_order_rhs(const Shape& shape, const Psf& psf, const Mat& basis, const WeightSpec& spec,
                                        int n_panels = 128);

struct RiemannOptions {
  int subgrid = 8;
  std::size_t max_points = std::size_t{1} << 28;
};

/// a^{q-d} int f(Theta_a^X(x; aS), x) dx by a midpoint sum with spacing a / subgrid.
/// Throws DomainError when the point budget is exceeded.
[[nodiscard]] SymTensor first_order_lhs(const Shape& shape, const Psf& psf, const Mat& basis, const WeightSpec& spec,
                                        double a, const RiemannOptions& options = {});

/// Quadratic-approximation correction theta^Q(t, s) in d = 2 for a boundary of
/// curvature kappa; s = (s_u, s_e) along the normal and the tangent.
/// Closed form for the Gaussian: -(kappa/2) phi_N(t + s_u) (1 + s_e^2).
[[nodiscard]] double theta_Q(double t, double s_u, double s_e, double kappa, const Psf& psf);
/// The defining tangent-line integral -(kappa/2) int tau^2 rho(tau - s_e, -(t + s_u)) dtau.
[[nodiscard]] double theta_Q_quadrature(double t, double s_u, double s_e, double kappa, const Psf& psf);

struct SecondOrderTerms {
  double t0 = 0.0;
  double t1 = 0.0;
  double psi0 = 0.0;
  double psi1 = 0.0;
  std::vector<double> curvature_term;
  std::vector<double> gradient_term;
  std::vector<double> boundary_term;

  [[nodiscard]] std::vector<double> total() const;
};

/// Window [t0, t1] of t with Theta_u(t; S) in A, and the boundary shifts psi0,
/// psi1 of the curved problem (d = 2). Throws DomainError if the window is empty.
[[nodiscard]] SecondOrderTerms t_bounds_psi(const WeightSpec& spec, std::span<const Vec> offsets, const Vec& u,
                                            double kappa, const Psf& psf);

/// Second-order limit on a 2D disk, the three terms summed over the boundary.
/// t0, t1, psi0, psi1 of the result are those at the first boundary node.
[[nodiscard]] SecondOrderTerms second_order_rhs_disk(const Shape& disk, const Psf& psf, const Mat& basis,
                                                     const WeightSpec& spec, int n_panels = 64);

struct SecondOrderEmpirical {
  std::vector<double> a_schedule;
  /// Bracket a^{-2} int f - a^{-1} rhs1 per a (component 0).
  std::vector<double> brackets;
  double extrapolated = 0.0;
  /// False when successive brackets do not approach the extrapolated value.
  bool converging = true;
};

/// Evaluates the bracket from exact mean integrals on a 2D disk and extrapolates to a = 0.
[[nodiscard]] SecondOrderEmpirical second_order_empirical(const Shape& disk, const Psf& psf, const Mat& basis,
                                                          const WeightSpec& spec, const std::vector<double>& a_schedule,
                                                          double rhs1, const TubeOptions& options = {});

/// C^2 bump in theta: quintic smoothstep shoulders of width `width` on [lo, hi].
[[nodiscard]] double smooth_bump(double theta, double lo, double hi, double width);
[[nodiscard]] double smooth_bump_derivative(double theta, double lo, double hi, double width);

/// f(Theta, x) = bump(theta_0) on S = {0} with analytic gradient; q = d - 1.
[[nodiscard]] WeightSpec bump_weight(int dim, double lo, double hi, double width);
/// f(Theta, x) = 1_[lo, hi](theta_0) on S = {0}; q = d - 1.
[[nodiscard]] WeightSpec indicator_weight(int dim, double lo, double hi);

}  // namespace greytensor
