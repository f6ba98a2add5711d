#pragma once

#include "greytensor/types.hpp"

#include <iosfwd>
#include <limits>
#include <string>

namespace greytensor {

enum class PsfKind { gaussian, ball_indicator };

[[nodiscard]] std::string to_string(PsfKind kind);
[[nodiscard]] PsfKind psf_kind_from_string(const std::string& name);

class Profile;

/// Rotation-invariant point spread function rho on R^d with unit mass.
class Psf {
 public:
  /// Mass allowed outside support_radius().
  static constexpr double kTailTolerance = 1e-9;
  /// Mass allowed outside exact_cutoff(); beyond it intensities are exactly 0 or 1.
  static constexpr double kExactTolerance = 1e-17;

  /// Standard Gaussian (2 pi)^{-d/2} exp(-|x|^2 / 2).
  static Psf gaussian(int dim);
  /// Normalized indicator of the ball of radius `radius` (d = 2 or 3).
  static Psf ball_indicator(int dim, double radius);

  [[nodiscard]] PsfKind kind() const { return kind_; }
  [[nodiscard]] int dim() const { return dim_; }
  [[nodiscard]] double ball_radius() const { return ball_radius_; }
  [[nodiscard]] bool rotation_invariant() const { return true; }

  [[nodiscard]] double radial_density(double r) const;
  [[nodiscard]] double density(const Vec& x) const;

  /// D_eff: mass outside this radius is below kTailTolerance.
  [[nodiscard]] double support_radius() const { return support_radius_; }
  [[nodiscard]] double exact_cutoff() const { return exact_cutoff_; }

  /// Integral of rho(z1, z2) over z2 in [lo, hi] (d = 2 only).
  [[nodiscard]] double column_mass(double z1, double lo, double hi) const;

  [[nodiscard]] Profile profile() const;

  friend bool operator==(const Psf&, const Psf&) = default;

 private:
  Psf(PsfKind kind, int dim, double ball_radius);

  PsfKind kind_ = PsfKind::gaussian;
  int dim_ = 2;
  double ball_radius_ = 0.0;
  double support_radius_ = 0.0;
  double exact_cutoff_ = 0.0;
  double ball_norm_ = 0.0;
};

/// rho_a(x) = a^{-d} rho(x / a).
[[nodiscard]] double scaled_density(const Psf& psf, double a, const Vec& x);

/// Blurred halfspace profile theta(t) = intensity at signed distance t from the
/// boundary of a halfspace, with its derivative and inverse phi.
class Profile {
 public:
  explicit Profile(Psf psf) : psf_(psf) {}

  [[nodiscard]] const Psf& psf() const { return psf_; }

  [[nodiscard]] double theta(double t) const;
  [[nodiscard]] double theta_prime(double t) const;
  /// Inverse of theta on (0, 1). Throws DomainError outside the invertible range.
  [[nodiscard]] double phi(double v) const;

  /// Maximal open interval where theta is strictly decreasing; equals theta^{-1}((0,1)).
  [[nodiscard]] Interval monotone_window() const;

 private:
  Psf psf_;
};

[[nodiscard]] inline double theta(const Psf& psf, double t) { return Profile(psf).theta(t); }
[[nodiscard]] inline double phi(const Profile& profile, double v) { return profile.phi(v); }

struct ConditionReport {
  bool rotation_invariant = true;
  bool strictly_decreasing = true;
  bool window_inside = true;
  bool valid = true;
  /// Distance window [phi(omega) - V, phi(beta) + V] the estimators rely on.
  Interval window;
  /// Distance from the window to the edge of theta^{-1}((0,1)); +inf for unbounded profiles.
  double slack = std::numeric_limits<double>::infinity();
  std::string reason;
};

/// Checks the PSF conditions needed by the surface tensor estimators for
/// thresholds beta < omega and lattice diameter V.
[[nodiscard]] ConditionReport validate_conditions(const Psf& psf, double beta, double omega, double lattice_diameter);

/// True iff theta' < 0 at phi(v) and phi(v) is not numerically on the edge of
/// the support window.
[[nodiscard]] bool regular_value_check(const Profile& profile, double v);

/// Two-column table (t, theta(t)) on `samples` uniform points over the
/// monotone window (clipped to the effective support for unbounded profiles).
void write_profile_table(std::ostream& os, const Profile& profile, int samples);

}  // namespace greytensor
