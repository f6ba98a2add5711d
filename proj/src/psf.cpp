#include "greytensor/psf.hpp"

#include "greytensor/numerics.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/special_functions/erf.hpp>
#include <fmt/format.h>

#include <cmath>
#include <numbers>
#include <ostream>

namespace greytensor {

namespace {

double gaussian_tail_radius(int dim, double tail) {
  boost::math::chi_squared chi2(dim);
  return std::sqrt(boost::math::quantile(boost::math::complement(chi2, tail)));
}

// Fraction of the ball of radius R lying in {z1 <= -t}.
double ball_halfspace_fraction(int dim, double radius, double t) {
  if (t >= radius) return 0.0;
  if (t <= -radius) return 1.0;
  const double x = t / radius;
  if (dim == 2) {
    if (x < 0) return 1.0 - ball_halfspace_fraction(dim, radius, -t);
    return (std::acos(x) - x * std::sqrt(1.0 - x * x)) / std::numbers::pi;
  }
  const double h = 1.0 - x;
  return h * h * (3.0 - h) / 4.0;
}

double ball_halfspace_fraction_prime(int dim, double radius, double t) {
  if (t >= radius || t <= -radius) return 0.0;
  const double x = t / radius;
  if (dim == 2) return -2.0 * std::sqrt(1.0 - x * x) / (std::numbers::pi * radius);
  return -0.75 * (1.0 - x * x) / radius;
}

}  // namespace

std::string to_string(PsfKind kind) { return kind == PsfKind::gaussian ? "gaussian" : "ball_indicator"; }

PsfKind psf_kind_from_string(const std::string& name) {
  if (name == "gaussian") return PsfKind::gaussian;
  if (name == "ball_indicator" || name == "ball") return PsfKind::ball_indicator;
  throw ConfigError(fmt::format("unknown psf kind '{}'", name));
}

Psf::Psf(PsfKind kind, int dim, double ball_radius) : kind_(kind), dim_(dim), ball_radius_(ball_radius) {
  if (dim < 1 || dim > kMaxDim) throw ConfigError(fmt::format("psf dimension {} unsupported", dim));
  if (kind == PsfKind::gaussian) {
    support_radius_ = gaussian_tail_radius(dim, kTailTolerance);
    exact_cutoff_ = gaussian_tail_radius(dim, kExactTolerance);
  } else {
    if (dim != 2 && dim != 3) throw ConfigError("ball_indicator psf supports d = 2 and d = 3");
    if (!(ball_radius > 0.0)) throw ConfigError("ball_indicator radius must be positive");
    ball_norm_ = 1.0 / (num::ball_volume(dim) * std::pow(ball_radius, dim));
    support_radius_ = ball_radius;
    exact_cutoff_ = ball_radius;
  }
  // Unit mass, checked by radial quadrature.
  const double mass = num::sphere_area(dim) * num::integrate(
                                                  [&](double r) { return radial_density(r) * std::pow(r, dim - 1); },
                                                  0.0, exact_cutoff_, 64, 16);
  if (std::abs(mass - 1.0) > 1e-9) throw ConfigError(fmt::format("psf mass {} differs from 1", mass));
}

Psf Psf::gaussian(int dim) { return Psf(PsfKind::gaussian, dim, 0.0); }

Psf Psf::ball_indicator(int dim, double radius) { return Psf(PsfKind::ball_indicator, dim, radius); }

double Psf::radial_density(double r) const {
  if (kind_ == PsfKind::gaussian) return std::exp(-0.5 * r * r) / std::pow(2.0 * std::numbers::pi, 0.5 * dim_);
  return r <= ball_radius_ ? ball_norm_ : 0.0;
}

double Psf::density(const Vec& x) const {
  if (x.size() != dim_) throw DomainError("psf density: dimension mismatch");
  return radial_density(x.norm());
}

double Psf::column_mass(double z1, double lo, double hi) const {
  if (dim_ != 2) throw DomainError("column_mass is defined for d = 2");
  if (!(hi > lo)) return 0.0;
  if (kind_ == PsfKind::gaussian) {
    double mass;
    if (lo > 0.0) mass = num::normal_sf(lo) - num::normal_sf(hi);
    else if (hi < 0.0) mass = num::normal_cdf(hi) - num::normal_cdf(lo);
    else mass = 1.0 - num::normal_sf(hi) - num::normal_cdf(lo);
    return num::normal_pdf(z1) * mass;
  }
  if (std::abs(z1) >= ball_radius_) return 0.0;
  const double w = std::sqrt(ball_radius_ * ball_radius_ - z1 * z1);
  const double len = std::min(hi, w) - std::max(lo, -w);
  return len > 0.0 ? len * ball_norm_ : 0.0;
}

Profile Psf::profile() const { return Profile(*this); }

double scaled_density(const Psf& psf, double a, const Vec& x) {
  if (!(a > 0.0)) throw DomainError("scaled_density: resolution must be positive");
  return std::pow(a, -psf.dim()) * psf.density(x / a);
}

double Profile::theta(double t) const {
  if (psf_.kind() == PsfKind::gaussian) return num::normal_sf(t);
  return ball_halfspace_fraction(psf_.dim(), psf_.ball_radius(), t);
}

double Profile::theta_prime(double t) const {
  if (psf_.kind() == PsfKind::gaussian) return -num::normal_pdf(t);
  return ball_halfspace_fraction_prime(psf_.dim(), psf_.ball_radius(), t);
}

double Profile::phi(double v) const {
  if (!(v > 0.0 && v < 1.0)) throw DomainError(fmt::format("phi: intensity {} outside (0, 1)", v));
  if (psf_.kind() == PsfKind::gaussian) {
    double t = std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * v);
    // One Newton step polishes the inverse to round-off.
    const double d = theta_prime(t);
    if (d != 0.0) t -= (theta(t) - v) / d;
    return t;
  }
  // Symmetric profile: solve in the half with the better-conditioned residual.
  if (v > 0.5) return -phi(1.0 - v);
  if (v == 0.5) return 0.0;
  const double r = psf_.ball_radius();
  return num::find_root([&](double t) { return theta(t) - v; }, 0.0, r, 1e-15);
}

Interval Profile::monotone_window() const {
  if (psf_.kind() == PsfKind::gaussian)
    return {-std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  return {-psf_.ball_radius(), psf_.ball_radius()};
}

ConditionReport validate_conditions(const Psf& psf, double beta, double omega, double lattice_diameter) {
  if (!(beta > 0.0 && beta < omega && omega < 1.0))
    throw ConfigError(fmt::format("thresholds need 0 < beta < omega < 1 (beta={}, omega={})", beta, omega));
  if (!(lattice_diameter > 0.0)) throw ConfigError("lattice diameter V must be positive");
  const Profile profile = psf.profile();
  ConditionReport rep;
  rep.rotation_invariant = psf.rotation_invariant();
  rep.window = {profile.phi(omega) - lattice_diameter, profile.phi(beta) + lattice_diameter};
  const Interval mono = profile.monotone_window();
  rep.slack = std::min(mono.hi - rep.window.hi, rep.window.lo - mono.lo);
  rep.window_inside = rep.slack > 0.0;
  rep.strictly_decreasing = regular_value_check(profile, beta) && regular_value_check(profile, omega);
  rep.valid = rep.rotation_invariant && rep.strictly_decreasing && rep.window_inside;
  if (!rep.window_inside)
    rep.reason = fmt::format("distance window [{:.6g}, {:.6g}] leaves theta^-1((0,1)) = ({:.6g}, {:.6g})",
                             rep.window.lo, rep.window.hi, mono.lo, mono.hi);
  else if (!rep.strictly_decreasing)
    rep.reason = "threshold is not a regular value of the profile";
  return rep;
}

bool regular_value_check(const Profile& profile, double v) {
  if (!(v > 0.0 && v < 1.0)) return false;
  const double t = profile.phi(v);
  if (!(profile.theta_prime(t) < 0.0)) return false;
  const Interval mono = profile.monotone_window();
  if (std::isfinite(mono.hi)) {
    const double margin = 1e-6 * (mono.hi - mono.lo);
    if (t <= mono.lo + margin || t >= mono.hi - margin) return false;
  }
  return true;
}

void write_profile_table(std::ostream& os, const Profile& profile, int samples) {
  if (samples < 2) throw ConfigError("profile table needs at least two samples");
  Interval w = profile.monotone_window();
  const double d = profile.psf().support_radius();
  w.lo = std::max(w.lo, -d);
  w.hi = std::min(w.hi, d);
  for (int i = 0; i < samples; ++i) {
    const double t = w.lo + (w.hi - w.lo) * i / (samples - 1);
    os << fmt::format("{:.17g} {:.17g}\n", t, profile.theta(t));
  }
}

}  // namespace greytensor
