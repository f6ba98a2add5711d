#include "greytensor/tube.hpp"

#include "greytensor/digitizer.hpp"
#include "greytensor/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace greytensor {

RadialIntensity::RadialIntensity(const Psf& psf, double rho, double lambda_lo, double lambda_hi)
    : psf_(&psf), rho_(rho) {
  if (!(rho > 0.0)) throw DomainError("RadialIntensity: radius must be positive");
  if (psf.kind() != PsfKind::gaussian || psf.dim() != 2 || !(lambda_hi > lambda_lo)) return;
  lo_ = std::max(0.0, lambda_lo);
  const int pieces = std::max(1, static_cast<int>(std::ceil((lambda_hi - lo_) / kPieceWidth)));
  hi_ = lo_ + pieces * kPieceWidth;
  coeffs_.assign(pieces, std::vector<double>(kNodes, 0.0));
  std::vector<double> values(kNodes);
  for (int p = 0; p < pieces; ++p) {
    const double mid = lo_ + (p + 0.5) * kPieceWidth;
    for (int j = 0; j < kNodes; ++j) {
      const double x = std::cos(std::numbers::pi * (j + 0.5) / kNodes);
      values[j] = ball_intensity(psf, mid + 0.5 * kPieceWidth * x, rho);
    }
    for (int k = 0; k < kNodes; ++k) {
      double s = 0.0;
      for (int j = 0; j < kNodes; ++j) s += values[j] * std::cos(std::numbers::pi * k * (j + 0.5) / kNodes);
      coeffs_[p][k] = 2.0 * s / kNodes;
    }
    coeffs_[p][0] *= 0.5;
  }
  tabulated_ = true;
}

double RadialIntensity::operator()(double lambda) const {
  if (!tabulated_ || lambda < lo_ || lambda >= hi_) return ball_intensity(*psf_, lambda, rho_);
  const int p = std::min(static_cast<int>((lambda - lo_) / kPieceWidth), static_cast<int>(coeffs_.size()) - 1);
  const double x = 2.0 * (lambda - (lo_ + p * kPieceWidth)) / kPieceWidth - 1.0;
  const auto& c = coeffs_[p];
  double b1 = 0.0;
  double b2 = 0.0;
  for (int k = kNodes - 1; k >= 1; --k) {
    const double b0 = 2.0 * x * b1 - b2 + c[k];
    b2 = b1;
    b1 = b0;
  }
  return std::clamp(x * b1 - b2 + c[0], 0.0, 1.0);
}

std::vector<double> tube_integrate(const Shape& disk, const Psf& psf, const TubeProblem& problem,
                                   const TubeAccuracy& accuracy) {
  if (disk.kind() != ShapeKind::ball || disk.dim() != 2 || psf.dim() != 2)
    throw DomainError("tube quadrature is implemented for 2D disks");
  if (!(problem.a > 0.0)) throw DomainError("tube quadrature: resolution must be positive");
  const std::size_t ns = problem.offsets.size();
  if (problem.levels.size() != ns) throw DomainError("tube quadrature: one level list per offset required");
  const double a = problem.a;
  const double R = disk.extents()[0];
  const Vec& c = disk.center();
  const double rho = R / a;
  const double t_lo = problem.t_range.lo;
  const double t_hi = problem.t_range.hi;
  if (!(t_hi > t_lo) || rho + t_lo <= 0.0) throw DomainError("tube quadrature: invalid t window");
  double V = 0.0;
  for (const auto& s : problem.offsets) V = std::max(V, s.norm());
  const RadialIntensity P(psf, rho, rho + t_lo - V - 1e-6, rho + t_hi + V + 1e-6);
  const auto& gl = num::gauss_legendre(16);
  const int nc = problem.components;

  auto radial_fn = [&](double alpha, std::span<double> out) {
    const Vec u = (Vec(2) << std::cos(alpha), std::sin(alpha)).finished();
    std::vector<double> tuple(ns);
    std::vector<double> tmp(nc);
    auto fill_tuple = [&](double t) {
      for (std::size_t k = 0; k < ns; ++k) tuple[k] = P(((rho + t) * u + problem.offsets[k]).norm());
    };
    auto eval = [&](double t) {
      fill_tuple(t);
      std::fill(tmp.begin(), tmp.end(), 0.0);
      const Vec x = c + (R + a * t) * u;
      problem.integrand(t, x, tuple, tmp);
    };
    for (double t_end : {t_lo, t_hi}) {
      eval(t_end);
      for (double v : tmp)
        if (v != 0.0) throw DomainError("tube quadrature: integrand does not vanish at the window ends");
    }
    std::vector<double> breaks{t_lo, t_hi};
    for (double b : problem.t_breaks)
      if (b > t_lo && b < t_hi) breaks.push_back(b);
    for (std::size_t k = 0; k < ns; ++k) {
      auto entry = [&](double t) { return P(((rho + t) * u + problem.offsets[k]).norm()); };
      const double e_lo = entry(t_lo);
      const double e_hi = entry(t_hi);
      for (double level : problem.levels[k]) {
        if (!(level > 0.0 && level < 1.0)) continue;
        if ((e_lo - level) * (e_hi - level) >= 0.0) continue;
        breaks.push_back(num::find_root([&](double t) { return entry(t) - level; }, t_lo, t_hi, 1e-14));
      }
    }
    std::sort(breaks.begin(), breaks.end());
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
      const double l = breaks[i];
      const double h = breaks[i + 1];
      if (!(h > l)) continue;
      const int panels = std::max(1, static_cast<int>(std::ceil((h - l) * accuracy.panels_per_unit)));
      const double w = (h - l) / panels;
      for (int p = 0; p < panels; ++p) {
        const double mid = l + (p + 0.5) * w;
        for (std::size_t n = 0; n < gl.nodes.size(); ++n) {
          const double t = mid + 0.5 * w * gl.nodes[n];
          eval(t);
          const double jac = 0.5 * w * gl.weights[n] * a * (R + a * t);
          for (int m = 0; m < nc; ++m) out[m] += jac * tmp[m];
        }
      }
    }
  };

  std::vector<double> total(nc, 0.0);
  constexpr int kSectors = 8;
  for (int sct = 0; sct < kSectors; ++sct) {
    const double lo = 2.0 * std::numbers::pi * sct / kSectors;
    const double hi = 2.0 * std::numbers::pi * (sct + 1) / kSectors;
    const auto part = num::integrate_adaptive_vec(radial_fn, nc, lo, hi, accuracy.abs_tol / kSectors,
                                                  accuracy.rel_tol, accuracy.max_depth);
    for (int m = 0; m < nc; ++m) total[m] += part[m];
  }
  return total;
}

}  // namespace greytensor
