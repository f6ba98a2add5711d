#include "greytensor/asymptotics.hpp"

#include "greytensor/digitizer.hpp"
#include "greytensor/numerics.hpp"
#include "greytensor/tube.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>

namespace greytensor {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// phi extended to the closed unit interval.
double phi_ext(const Profile& profile, double v) {
  if (v >= 1.0) return -kInf;
  if (v <= 0.0) return kInf;
  return profile.phi(v);
}

double max_offset(std::span<const Vec> offsets) {
  double V = 0.0;
  for (const auto& s : offsets) V = std::max(V, s.norm());
  return V;
}

Vec tangent(const Vec& u) { return (Vec(2) << -u[1], u[0]).finished(); }

// Interior t-breakpoints where some tuple entry crosses a kink level.
std::vector<double> kink_breaks(const WeightSpec& spec, std::span<const Vec> offsets, const Vec& u,
                                const Profile& profile, double t0, double t1) {
  std::vector<double> out;
  for (std::size_t k = 0; k < spec.kinks.size(); ++k)
    for (double level : spec.kinks[k]) {
      if (!(level > 0.0 && level < 1.0)) continue;
      const double t = profile.phi(level) - offsets[k].dot(u);
      if (t > t0 && t < t1) out.push_back(t);
    }
  std::sort(out.begin(), out.end());
  return out;
}

// Analytic gradient when provided, otherwise central differences with step 1e-5.
void weight_gradient(const WeightSpec& spec, std::span<const double> tuple, const Vec& x, std::vector<double>& d_tuple,
                     std::vector<double>& d_x) {
  const int nc = spec.components;
  const std::size_t ns = tuple.size();
  const int d = static_cast<int>(x.size());
  d_tuple.assign(nc * ns, 0.0);
  d_x.assign(static_cast<std::size_t>(nc) * d, 0.0);
  if (spec.gradient) {
    spec.gradient(tuple, x, d_tuple, d_x);
    return;
  }
  constexpr double h = 1e-5;
  std::vector<double> tp(tuple.begin(), tuple.end());
  std::vector<double> fp(nc), fm(nc);
  for (std::size_t k = 0; k < ns; ++k) {
    std::fill(fp.begin(), fp.end(), 0.0);
    std::fill(fm.begin(), fm.end(), 0.0);
    tp[k] = tuple[k] + h;
    spec.weight(tp, x, fp);
    tp[k] = tuple[k] - h;
    spec.weight(tp, x, fm);
    tp[k] = tuple[k];
    for (int c = 0; c < nc; ++c) d_tuple[c * ns + k] = (fp[c] - fm[c]) / (2 * h);
  }
  Vec xp = x;
  for (int j = 0; j < d; ++j) {
    std::fill(fp.begin(), fp.end(), 0.0);
    std::fill(fm.begin(), fm.end(), 0.0);
    xp[j] = x[j] + h;
    spec.weight(tuple, xp, fp);
    xp[j] = x[j] - h;
    spec.weight(tuple, xp, fm);
    xp[j] = x[j];
    for (int c = 0; c < nc; ++c) d_x[c * d + j] = (fp[c] - fm[c]) / (2 * h);
  }
}

double quintic_step(double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  return x * x * x * (10.0 + x * (-15.0 + 6.0 * x));
}

double quintic_step_derivative(double x) {
  if (x <= 0.0 || x >= 1.0) return 0.0;
  return 30.0 * x * x * (1.0 - x) * (1.0 - x);
}

}  // namespace

std::vector<double> halfspace_tuple(const Profile& profile, double t, std::span<const Vec> offsets, const Vec& u) {
  std::vector<double> out(offsets.size());
  for (std::size_t k = 0; k < offsets.size(); ++k) out[k] = profile.theta(t + offsets[k].dot(u));
  return out;
}

std::vector<Vec> physical_offsets(const WeightSpec& spec, const Mat& basis) {
  std::vector<Vec> out;
  for (const auto& s : spec.offsets.offsets) out.push_back(basis * s.cast<double>());
  return out;
}

SymTensor first_order_rhs(const Shape& shape, const Psf& psf, const Mat& basis, const WeightSpec& spec, int n_panels) {
  const Profile profile = psf.profile();
  spec.validate(profile);
  const auto offsets = physical_offsets(spec, basis);
  const double reach = psf.support_radius() + max_offset(offsets);
  const auto panels = boundary_quadrature(shape, n_panels);
  const int nc = spec.components;
  std::vector<std::vector<double>> per_node(panels.size(), std::vector<double>(nc, 0.0));

  num::parallel_chunks(panels.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      const auto& p = panels[i];
      double t0 = -kInf;
      double t1 = kInf;
      for (std::size_t k = 0; k < offsets.size(); ++k) {
        const double su = offsets[k].dot(p.u);
        t0 = std::max(t0, phi_ext(profile, spec.box[k].hi) - su);
        t1 = std::min(t1, phi_ext(profile, spec.box[k].lo) - su);
      }
      if (!(t0 < t1)) continue;
      if (!std::isfinite(t0) || !std::isfinite(t1))
        throw DomainError("first_order_rhs: weight does not vanish far from the boundary");
      t0 = std::max(t0, -reach);
      t1 = std::min(t1, reach);
      std::vector<double> breaks{t0};
      for (double t : kink_breaks(spec, offsets, p.u, profile, t0, t1)) breaks.push_back(t);
      breaks.push_back(t1);
      std::vector<double> tmp(nc);
      auto inner = [&](double t, std::span<double> out) {
        const auto tuple = halfspace_tuple(profile, t, offsets, p.u);
        std::fill(tmp.begin(), tmp.end(), 0.0);
        spec.weight(tuple, p.x, tmp);
        std::copy(tmp.begin(), tmp.end(), out.begin());
      };
      for (std::size_t j = 0; j + 1 < breaks.size(); ++j) {
        if (!(breaks[j + 1] > breaks[j])) continue;
        const auto part = num::integrate_adaptive_vec(inner, nc, breaks[j], breaks[j + 1], 1e-13, 1e-12);
        for (int c = 0; c < nc; ++c) per_node[i][c] += p.weight * part[c];
      }
    }
  });

  std::vector<double> bundle(nc);
  std::vector<double> column(panels.size());
  for (int c = 0; c < nc; ++c) {
    for (std::size_t i = 0; i < panels.size(); ++i) column[i] = per_node[i][c];
    bundle[c] = num::pairwise_sum(column);
  }
  return spec.to_tensor(bundle);
}

SymTensor first_order_lhs(const Shape& shape, const Psf& psf, const Mat& basis, const WeightSpec& spec, double a,
                          const RiemannOptions& options) {
  if (!(a > 0.0)) throw DomainError("first_order_lhs: resolution must be positive");
  if (options.subgrid < 1) throw ConfigError("first_order_lhs: subgrid must be positive");
  const Profile profile = psf.profile();
  spec.validate(profile);
  const int d = shape.dim();
  const auto offsets = physical_offsets(spec, basis);
  const double V = max_offset(offsets);
  const int nc = spec.components;

  // Beyond the exact cutoff every tuple is all-ones or all-zeros.
  for (double v : {0.0, 1.0}) {
    const std::vector<double> sat(offsets.size(), v);
    if (spec.in_box(sat)) throw DomainError("first_order_lhs: weight does not vanish far from the boundary");
  }
  const double band = a * (psf.exact_cutoff() + V);

  const double h = a / options.subgrid;
  const auto [bb_lo, bb_hi] = shape.bounding_box();
  IVec n(d);
  Vec origin(d);
  std::size_t total = 1;
  for (int i = 0; i < d; ++i) {
    origin[i] = bb_lo[i] - band;
    n[i] = static_cast<long>(std::ceil((bb_hi[i] + band - origin[i]) / h));
    total *= static_cast<std::size_t>(n[i]);
    if (total > options.max_points)
      throw DomainError(fmt::format("first_order_lhs: point budget {} exceeded", options.max_points));
  }

  std::optional<RadialIntensity> radial;
  if (shape.kind() == ShapeKind::ball && d == 2) {
    const double rho = shape.extents()[0] / a;
    radial.emplace(psf, rho, rho - psf.exact_cutoff() - 2 * V, rho + psf.exact_cutoff() + 2 * V);
  }
  auto sample = [&](const Vec& y) {
    if (radial) return (*radial)((y - shape.center()).norm() / a);
    return intensity(shape, psf, a, y).value;
  };

  const std::size_t nrows = total / static_cast<std::size_t>(n[0]);
  std::vector<double> partial(nrows * nc, 0.0);
  num::parallel_chunks(nrows, [&](std::size_t b, std::size_t e) {
    std::vector<double> tuple(offsets.size());
    std::vector<double> tmp(nc);
    Vec x(d);
    for (std::size_t row = b; row < e; ++row) {
      std::size_t rem = row;
      for (int i = 1; i < d; ++i) {
        x[i] = origin[i] + (static_cast<double>(rem % n[i]) + 0.5) * h;
        rem /= n[i];
      }
      double* acc = partial.data() + row * nc;
      for (long i0 = 0; i0 < n[0]; ++i0) {
        x[0] = origin[0] + (i0 + 0.5) * h;
        if (std::abs(shape.signed_distance(x)) > band) continue;
        for (std::size_t k = 0; k < offsets.size(); ++k) tuple[k] = sample(x + a * offsets[k]);
        if (!spec.in_box(tuple)) continue;
        std::fill(tmp.begin(), tmp.end(), 0.0);
        spec.weight(tuple, x, tmp);
        for (int c = 0; c < nc; ++c) acc[c] += tmp[c];
      }
    }
  });

  const double scale = std::pow(a, spec.q - d) * std::pow(h, d);
  std::vector<double> bundle(nc);
  std::vector<double> column(nrows);
  for (int c = 0; c < nc; ++c) {
    for (std::size_t row = 0; row < nrows; ++row) column[row] = partial[row * nc + c];
    bundle[c] = scale * num::pairwise_sum(column);
  }
  return spec.to_tensor(bundle);
}

double theta_Q(double t, double s_u, double s_e, double kappa, const Psf& psf) {
  if (psf.dim() != 2) throw DomainError("theta_Q is implemented for d = 2");
  if (psf.kind() == PsfKind::gaussian) return -0.5 * kappa * num::normal_pdf(t + s_u) * (1.0 + s_e * s_e);
  return theta_Q_quadrature(t, s_u, s_e, kappa, psf);
}

double theta_Q_quadrature(double t, double s_u, double s_e, double kappa, const Psf& psf) {
  if (psf.dim() != 2) throw DomainError("theta_Q is implemented for d = 2");
  const double w = t + s_u;
  const double radius = psf.kind() == PsfKind::gaussian ? psf.exact_cutoff() : psf.ball_radius();
  if (std::abs(w) >= radius) return 0.0;
  const double half = std::sqrt(radius * radius - w * w);
  auto f = [&](double tau) {
    const Vec z = (Vec(2) << tau - s_e, -w).finished();
    return tau * tau * psf.density(z);
  };
  // Split at tau = 0 where tau^2 is smallest and the density peak region.
  std::vector<double> breaks{s_e - half, s_e + half};
  if (s_e - half < 0.0 && 0.0 < s_e + half) breaks.push_back(0.0);
  if (psf.kind() == PsfKind::gaussian) breaks.push_back(s_e);
  std::sort(breaks.begin(), breaks.end());
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i)
    if (breaks[i + 1] > breaks[i]) sum += num::integrate_adaptive(f, breaks[i], breaks[i + 1], 1e-13, 20);
  return -0.5 * kappa * sum;
}

std::vector<double> SecondOrderTerms::total() const {
  std::vector<double> out(curvature_term.size());
  for (std::size_t c = 0; c < out.size(); ++c) out[c] = curvature_term[c] + gradient_term[c] + boundary_term[c];
  return out;
}

SecondOrderTerms t_bounds_psi(const WeightSpec& spec, std::span<const Vec> offsets, const Vec& u, double kappa,
                              const Psf& psf) {
  if (offsets.size() != spec.box.size()) throw DomainError("t_bounds_psi: one box interval per offset required");
  const Profile profile = psf.profile();
  SecondOrderTerms out;
  out.t0 = -kInf;
  out.t1 = kInf;
  std::vector<double> lo_t(offsets.size()), hi_t(offsets.size());
  for (std::size_t k = 0; k < offsets.size(); ++k) {
    const double su = offsets[k].dot(u);
    lo_t[k] = phi_ext(profile, spec.box[k].hi) - su;
    hi_t[k] = phi_ext(profile, spec.box[k].lo) - su;
    out.t0 = std::max(out.t0, lo_t[k]);
    out.t1 = std::min(out.t1, hi_t[k]);
  }
  if (!(out.t0 <= out.t1)) throw DomainError("t_bounds_psi: the box is empty on the profile range");
  if (!std::isfinite(out.t0) || !std::isfinite(out.t1)) throw DomainError("t_bounds_psi: unbounded t window");
  const Vec e = tangent(u);
  auto ratio = [&](std::size_t k, double t) {
    const double su = offsets[k].dot(u);
    return -theta_Q(t, su, offsets[k].dot(e), kappa, psf) / profile.theta_prime(t + su);
  };
  const double tol = 1e-12 * (1.0 + std::abs(out.t0) + std::abs(out.t1));
  out.psi0 = -kInf;
  out.psi1 = kInf;
  for (std::size_t k = 0; k < offsets.size(); ++k) {
    if (std::abs(lo_t[k] - out.t0) <= tol) out.psi0 = std::max(out.psi0, ratio(k, out.t0));
    if (std::abs(hi_t[k] - out.t1) <= tol) out.psi1 = std::min(out.psi1, ratio(k, out.t1));
  }
  return out;
}

SecondOrderTerms second_order_rhs_disk(const Shape& disk, const Psf& psf, const Mat& basis, const WeightSpec& spec,
                                       int n_panels) {
  if (disk.kind() != ShapeKind::ball || disk.dim() != 2) throw DomainError("second_order_rhs_disk needs a 2D disk");
  const Profile profile = psf.profile();
  spec.validate(profile);
  const auto offsets = physical_offsets(spec, basis);
  const std::size_t ns = offsets.size();
  const int nc = spec.components;
  const auto panels = boundary_quadrature(disk, n_panels);
  // Per node: curvature, gradient and boundary terms.
  std::vector<std::vector<double>> terms(panels.size(), std::vector<double>(3 * nc, 0.0));
  std::vector<SecondOrderTerms> bounds(panels.size());

  num::parallel_chunks(panels.size(), [&](std::size_t b, std::size_t e) {
    std::vector<double> f(nc), d_tuple, d_x;
    for (std::size_t i = b; i < e; ++i) {
      const auto& p = panels[i];
      const double kappa = p.kappa[0];
      const Vec tang = tangent(p.u);
      const SecondOrderTerms tb = t_bounds_psi(spec, offsets, p.u, kappa, psf);
      bounds[i] = tb;
      std::vector<double> su(ns), se(ns);
      for (std::size_t k = 0; k < ns; ++k) {
        su[k] = offsets[k].dot(p.u);
        se[k] = offsets[k].dot(tang);
      }
      auto integrand = [&](double t, std::span<double> out) {
        const auto tuple = halfspace_tuple(profile, t, offsets, p.u);
        std::fill(f.begin(), f.end(), 0.0);
        spec.weight(tuple, p.x, f);
        weight_gradient(spec, tuple, p.x, d_tuple, d_x);
        for (int c = 0; c < nc; ++c) {
          double g1 = 0.0;
          for (std::size_t k = 0; k < ns; ++k) g1 += d_tuple[c * ns + k] * theta_Q(t, su[k], se[k], kappa, psf);
          double g2 = 0.0;
          for (int j = 0; j < 2; ++j) g2 += d_x[c * 2 + j] * p.u[j];
          out[c] = kappa * t * f[c];
          out[nc + c] = g1 + t * g2;
        }
      };
      std::vector<double> breaks{tb.t0};
      for (double t : kink_breaks(spec, offsets, p.u, profile, tb.t0, tb.t1)) breaks.push_back(t);
      breaks.push_back(tb.t1);
      for (std::size_t j = 0; j + 1 < breaks.size(); ++j) {
        if (!(breaks[j + 1] > breaks[j])) continue;
        const auto part = num::integrate_adaptive_vec(integrand, 2 * nc, breaks[j], breaks[j + 1], 1e-13, 1e-12);
        for (int c = 0; c < 2 * nc; ++c) terms[i][c] += p.weight * part[c];
      }
      // Boundary values are one-sided limits from inside the box.
      std::vector<double> f0(nc, 0.0), f1(nc, 0.0);
      spec.weight(halfspace_tuple(profile, tb.t0, offsets, p.u), p.x, f0);
      spec.weight(halfspace_tuple(profile, tb.t1, offsets, p.u), p.x, f1);
      for (int c = 0; c < nc; ++c) terms[i][2 * nc + c] = p.weight * (f1[c] * tb.psi1 - f0[c] * tb.psi0);
    }
  });

  SecondOrderTerms out = bounds.front();
  out.curvature_term.assign(nc, 0.0);
  out.gradient_term.assign(nc, 0.0);
  out.boundary_term.assign(nc, 0.0);
  std::vector<double> column(panels.size());
  for (int c = 0; c < 3 * nc; ++c) {
    for (std::size_t i = 0; i < panels.size(); ++i) column[i] = terms[i][c];
    const double v = num::pairwise_sum(column);
    if (c < nc)
      out.curvature_term[c] = v;
    else if (c < 2 * nc)
      out.gradient_term[c - nc] = v;
    else
      out.boundary_term[c - 2 * nc] = v;
  }
  return out;
}

SecondOrderEmpirical second_order_empirical(const Shape& disk, const Psf& psf, const Mat& basis,
                                            const WeightSpec& spec, const std::vector<double>& a_schedule,
                                            double rhs1, const TubeOptions& options) {
  if (a_schedule.size() < 2) throw ConfigError("second_order_empirical needs at least two resolutions");
  SecondOrderEmpirical out;
  out.a_schedule = a_schedule;
  const int d = disk.dim();
  for (double a : a_schedule) {
    // exact_mean_estimate returns a^{q-d} int f; rescale to a^{-2} int f.
    const double mean = exact_mean_estimate(disk, psf, basis, a, spec, options)[0];
    const double integral = mean * std::pow(a, d - spec.q);
    out.brackets.push_back(integral / (a * a) - rhs1 / a);
  }
  out.extrapolated = num::extrapolate_to_zero(a_schedule, out.brackets);
  for (std::size_t i = 1; i < out.brackets.size(); ++i)
    if (std::abs(out.brackets[i] - out.extrapolated) > std::abs(out.brackets[i - 1] - out.extrapolated))
      out.converging = false;
  return out;
}

double smooth_bump(double theta, double lo, double hi, double width) {
  if (theta <= lo || theta >= hi) return 0.0;
  return quintic_step((theta - lo) / width) * quintic_step((hi - theta) / width);
}

double smooth_bump_derivative(double theta, double lo, double hi, double width) {
  if (theta <= lo || theta >= hi) return 0.0;
  const double l = (theta - lo) / width;
  const double r = (hi - theta) / width;
  return (quintic_step_derivative(l) * quintic_step(r) - quintic_step(l) * quintic_step_derivative(r)) / width;
}

WeightSpec bump_weight(int dim, double lo, double hi, double width) {
  if (!(0.0 < lo && lo + 2 * width <= hi && hi < 1.0 && width > 0.0))
    throw ConfigError("bump weight needs 0 < lo, lo + 2 width <= hi < 1");
  WeightSpec spec;
  spec.offsets = ConfigOffsets::single(dim);
  spec.box = {{lo, hi}};
  spec.kinks = {{lo + width, hi - width}};
  spec.q = dim - 1;
  spec.components = 1;
  spec.weight = [=](std::span<const double> th, const Vec&, std::span<double> out) {
    out[0] = smooth_bump(th[0], lo, hi, width);
  };
  spec.gradient = [=](std::span<const double> th, const Vec&, std::span<double> d_tuple, std::span<double> d_x) {
    d_tuple[0] = smooth_bump_derivative(th[0], lo, hi, width);
    std::fill(d_x.begin(), d_x.end(), 0.0);
  };
  spec.to_tensor = [dim](std::span<const double> b) { return SymTensor::scalar(b[0], dim); };
  spec.label = fmt::format("bump [{}, {}] width {}", lo, hi, width);
  return spec;
}

WeightSpec indicator_weight(int dim, double lo, double hi) {
  if (!(0.0 < lo && lo < hi && hi < 1.0)) throw ConfigError("indicator weight needs 0 < lo < hi < 1");
  WeightSpec spec;
  spec.offsets = ConfigOffsets::single(dim);
  spec.box = {{lo, hi}};
  spec.q = dim - 1;
  spec.components = 1;
  spec.weight = [](std::span<const double>, const Vec&, std::span<double> out) { out[0] = 1.0; };
  spec.gradient = [](std::span<const double>, const Vec&, std::span<double> d_tuple, std::span<double> d_x) {
    std::fill(d_tuple.begin(), d_tuple.end(), 0.0);
    std::fill(d_x.begin(), d_x.end(), 0.0);
  };
  spec.to_tensor = [dim](std::span<const double> b) { return SymTensor::scalar(b[0], dim); };
  spec.label = fmt::format("indicator [{}, {}]", lo, hi);
  return spec;
}

}  // namespace greytensor
