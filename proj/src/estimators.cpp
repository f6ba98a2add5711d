#include "greytensor/estimators.hpp"

#include "greytensor/numerics.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace greytensor {

namespace {

std::size_t ipow(int base, int exp) {
  std::size_t v = 1;
  for (int i = 0; i < exp; ++i) v *= static_cast<std::size_t>(base);
  return v;
}

SymTensor tensor_from_bundle(int dim, int rank, std::span<const double> bundle) {
  SymTensor t(dim, rank);
  if (bundle.size() != t.size()) throw DomainError("bundle size does not match tensor");
  std::copy(bundle.begin(), bundle.end(), t.components().begin());
  return t;
}

void require_rank(int r, int s) {
  if (r < 0 || s < 0) throw ConfigError("tensor exponents must be non-negative");
  if (r + s > kOracleMaxRank) throw ConfigError(fmt::format("rank cap exceeded: r + s = {}", r + s));
}

// Fills the evaluation table prod_k <x, v_{i_k}> prod_l D_{i_l} over all index
// tuples (first index most significant).
void evaluation_table(int d, int r, int s, const double* px, const double* diff, double scale, std::span<double> out) {
  const int p = r + s;
  const std::size_t n = ipow(d, p);
  int digits[SymTensor::kMaxRank];
  for (std::size_t t = 0; t < n; ++t) {
    std::size_t rem = t;
    for (int k = p - 1; k >= 0; --k) {
      digits[k] = static_cast<int>(rem % d);
      rem /= d;
    }
    double v = scale;
    for (int k = 0; k < r; ++k) v *= px[digits[k]];
    for (int k = r; k < p; ++k) v *= diff[digits[k]];
    out[t] = v;
  }
}

Interval neighbor_window(const Profile& profile, double dist_lo, double dist_hi) {
  return {profile.theta(dist_hi), profile.theta(dist_lo)};
}

}  // namespace

bool WeightSpec::in_box(std::span<const double> tuple) const {
  for (std::size_t k = 0; k < box.size(); ++k)
    if (!box[k].contains(tuple[k])) return false;
  return true;
}

void WeightSpec::validate(const Profile& profile) const {
  if (offsets.offsets.empty() || offsets.offsets.front() != IVec::Zero(offsets.dim()))
    throw ConfigError("weight spec: the first offset must be 0");
  if (box.size() != offsets.size()) throw ConfigError("weight spec: one box interval per offset required");
  if (!kinks.empty() && kinks.size() != offsets.size()) throw ConfigError("weight spec: kinks must match offsets");
  if (components < 1 || !weight || !to_tensor) throw ConfigError("weight spec: incomplete");
  for (const auto& iv : box) {
    if (!(iv.lo <= iv.hi)) throw ConfigError("weight spec: empty box interval");
    for (double v : {iv.lo, iv.hi})
      if (v > 0.0 && v < 1.0 && !regular_value_check(profile, v))
        throw ConfigError(fmt::format("weight spec: box endpoint {} is not a regular value", v));
  }
}

std::vector<double> local_sum(const GreyImage& image, const WeightSpec& spec) {
  const Lattice& lat = image.lattice();
  const Window& win = image.window();
  const int d = lat.dim();
  if (spec.offsets.dim() != d) throw DomainError("local_sum: offset dimension differs from image");
  if (spec.box.size() != spec.offsets.size()) throw DomainError("local_sum: malformed box");
  const auto vals = image.values();
  const int nc = spec.components;

  std::vector<long> stride(d, 1);
  for (int i = 1; i < d; ++i) stride[i] = stride[i - 1] * win.size[i - 1];
  std::vector<long> off;
  IVec neg = IVec::Zero(d);
  IVec pos = IVec::Zero(d);
  long reach = 1;
  for (const auto& s : spec.offsets.offsets) {
    long o = 0;
    for (int i = 0; i < d; ++i) {
      o += s[i] * stride[i];
      neg[i] = std::max(neg[i], -s[i]);
      pos[i] = std::max(pos[i], s[i]);
      reach = std::max(reach, std::abs(s[i]));
    }
    off.push_back(o);
  }

  // Any configuration cut by the window edge has its base point within `reach`
  // of the edge; the sum is exact iff none of those base points is in the box.
  for (std::size_t lin = 0; lin < vals.size(); ++lin) {
    const IVec z = win.index(lin);
    bool edge = false;
    for (int i = 0; i < d && !edge; ++i)
      edge = z[i] - win.lo[i] < reach || win.lo[i] + win.size[i] - 1 - z[i] < reach;
    if (edge && spec.box[0].contains(vals[lin]))
      throw DomainError("local_sum: image window too small, the weight support would be clipped");
  }

  IVec zlo(d), zhi(d);
  for (int i = 0; i < d; ++i) {
    zlo[i] = win.lo[i] + neg[i];
    zhi[i] = win.lo[i] + win.size[i] - pos[i];
    if (zhi[i] <= zlo[i]) return std::vector<double>(nc, 0.0);
  }
  std::size_t nrows = 1;
  for (int i = 1; i < d; ++i) nrows *= static_cast<std::size_t>(zhi[i] - zlo[i]);
  std::vector<double> partial(nrows * nc, 0.0);

  auto do_rows = [&](std::size_t r0, std::size_t r1) {
    std::vector<double> tuple(off.size());
    std::vector<double> tmp(nc);
    IVec z(d);
    for (std::size_t row = r0; row < r1; ++row) {
      std::size_t rem = row;
      for (int i = 1; i < d; ++i) {
        const auto len = static_cast<std::size_t>(zhi[i] - zlo[i]);
        z[i] = zlo[i] + static_cast<long>(rem % len);
        rem /= len;
      }
      double* acc = partial.data() + row * nc;
      for (long z0 = zlo[0]; z0 < zhi[0]; ++z0) {
        z[0] = z0;
        long base = 0;
        for (int i = 0; i < d; ++i) base += (z[i] - win.lo[i]) * stride[i];
        for (std::size_t k = 0; k < off.size(); ++k) tuple[k] = vals[base + off[k]];
        if (!spec.in_box(tuple)) continue;
        std::fill(tmp.begin(), tmp.end(), 0.0);
        spec.weight(tuple, lat.position(z), tmp);
        for (int m = 0; m < nc; ++m) acc[m] += tmp[m];
      }
    }
  };

  num::parallel_chunks(nrows, do_rows);

  // Fixed-topology reduction over rows.
  std::vector<double> out(nc);
  std::vector<double> column(nrows);
  const double scale = std::pow(lat.a, spec.q);
  for (int m = 0; m < nc; ++m) {
    for (std::size_t row = 0; row < nrows; ++row) column[row] = partial[row * nc + m];
    out[m] = scale * num::pairwise_sum(column);
  }
  return out;
}

SymTensor local_estimate(const GreyImage& image, const WeightSpec& spec) {
  const auto bundle = local_sum(image, spec);
  return spec.to_tensor(bundle);
}

WeightSpec volume_weight(int dim, int r, double beta) {
  require_rank(r, 0);
  if (!(beta > 0.0 && beta < 1.0)) throw ConfigError("volume threshold beta must lie in (0, 1)");
  WeightSpec spec;
  spec.offsets = ConfigOffsets::single(dim);
  spec.box = {{beta, 1.0}};
  spec.q = dim;
  spec.components = static_cast<int>(SymTensor(dim, r).size());
  const double inv_fact = 1.0 / num::factorial(r);
  spec.weight = [r, inv_fact](std::span<const double>, const Vec& x, std::span<double> out) {
    const SymTensor p = sym_pow(x, r);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = inv_fact * p[i];
  };
  spec.to_tensor = [dim, r](std::span<const double> b) { return tensor_from_bundle(dim, r, b); };
  spec.label = fmt::format("volume r={} beta={}", r, beta);
  return spec;
}

WeightSpec surface_weight2(const Profile& profile, const Mat& basis, int r, int s, double beta, double omega) {
  require_rank(r, s);
  if (!(beta > 0.0 && beta < omega && omega < 1.0)) throw ConfigError("surface thresholds need 0 < beta < omega < 1");
  const int d = static_cast<int>(basis.cols());
  const double V = basis.colwise().norm().maxCoeff();
  const double phi_b = profile.phi(beta);
  const double phi_w = profile.phi(omega);
  WeightSpec spec;
  spec.offsets = ConfigOffsets::forward(d);
  spec.box = {{beta, omega}};
  const Interval nb = neighbor_window(profile, phi_w - V, phi_b + V);
  for (int i = 0; i < d; ++i) spec.box.push_back(nb);
  spec.q = d - 1;
  spec.components = static_cast<int>(ipow(d, r + s));
  const double scale = 2.0 / num::sphere_area(s + 1) / (num::factorial(r) * num::factorial(s)) / (phi_b - phi_w);
  spec.weight = [profile, basis, d, r, s, scale](std::span<const double> th, const Vec& x, std::span<double> out) {
    double px[kMaxDim];
    double diff[kMaxDim];
    const double p0 = s > 0 ? profile.phi(th[0]) : 0.0;
    for (int i = 0; i < d; ++i) {
      px[i] = r > 0 ? x.dot(basis.col(i)) : 0.0;
      diff[i] = s > 0 ? profile.phi(th[1 + i]) - p0 : 0.0;
    }
    evaluation_table(d, r, s, px, diff, scale, out);
  };
  spec.to_tensor = [basis, r, s](std::span<const double> b) { return from_basis_evaluations(b, r + s, basis); };
  spec.label = fmt::format("surface2 r={} s={} beta={} omega={}", r, s, beta, omega);
  return spec;
}

WeightSpec surface_weight3(const Profile& profile, const Mat& basis, int r, int s, double beta, double epsilon) {
  require_rank(r, s);
  if (!(beta > 0.0 && beta < 0.5)) throw ConfigError("surface threshold beta must lie in (0, 1/2)");
  if (!(epsilon >= 0.0)) throw ConfigError("epsilon must be non-negative");
  const int d = static_cast<int>(basis.cols());
  const double V = basis.colwise().norm().maxCoeff();
  const double omega = 1.0 - beta;
  const double phi_b = profile.phi(beta);
  const double phi_w = profile.phi(omega);
  WeightSpec spec;
  spec.offsets = ConfigOffsets::symmetric(d);
  spec.box = {{beta, omega}};
  const Interval nb = neighbor_window(profile, phi_w - V - epsilon, phi_b + V + epsilon);
  for (int i = 0; i < 2 * d; ++i) spec.box.push_back(nb);
  spec.q = d - 1;
  const int p = r + s;
  spec.components = static_cast<int>(ipow(d, p));
  const double scale = 2.0 / num::sphere_area(s + 1) / (num::factorial(r) * num::factorial(s)) / (phi_b - phi_w);
  spec.weight = [profile, basis, d, r, s, scale](std::span<const double> th, const Vec& x, std::span<double> out) {
    double px[kMaxDim];
    double fwd[kMaxDim];
    double bwd[kMaxDim];
    const double p0 = s > 0 ? profile.phi(th[0]) : 0.0;
    for (int i = 0; i < d; ++i) {
      px[i] = r > 0 ? x.dot(basis.col(i)) : 0.0;
      fwd[i] = s > 0 ? profile.phi(th[1 + 2 * i]) - p0 : 0.0;
      bwd[i] = s > 0 ? p0 - profile.phi(th[2 + 2 * i]) : 0.0;
    }
    std::vector<double> back(out.size());
    evaluation_table(d, r, s, px, fwd, 0.5 * scale, out);
    evaluation_table(d, r, s, px, bwd, 0.5 * scale, back);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += back[i];
  };
  spec.to_tensor = [basis, p](std::span<const double> b) { return from_basis_evaluations(b, p, basis); };
  spec.label = fmt::format("surface3 r={} s={} beta={} epsilon={}", r, s, beta, epsilon);
  return spec;
}

GFunction GFunction::from_name(const std::string& name, double beta) {
  if (name == "linear") return linear(beta);
  if (name == "step") return step(beta);
  if (name == "zero") return zero(beta);
  throw ConfigError(fmt::format("unknown g function '{}'", name));
}

double GFunction::operator()(double theta) const {
  if (theta < beta || theta > 1.0 - beta) return 0.0;
  switch (kind) {
    case Kind::zero: return 0.0;
    case Kind::linear: return theta - 0.5;
    case Kind::step: return theta < 0.5 ? 1.0 : (theta > 0.5 ? -1.0 : 0.0);
    case Kind::custom: return custom ? custom(theta) : 0.0;
  }
  return 0.0;
}

double GFunction::derivative(double theta) const {
  if (theta < beta || theta > 1.0 - beta) return 0.0;
  switch (kind) {
    case Kind::zero:
    case Kind::step: return 0.0;
    case Kind::linear: return 1.0;
    case Kind::custom: {
      const double h = 1e-5;
      return ((*this)(theta + h) - (*this)(theta - h)) / (2 * h);
    }
  }
  return 0.0;
}

std::string GFunction::name() const {
  switch (kind) {
    case Kind::zero: return "zero";
    case Kind::linear: return "linear";
    case Kind::step: return "step";
    case Kind::custom: return "custom";
  }
  return "g";
}

std::vector<double> GFunction::kinks() const {
  if (kind == Kind::step) return {0.5};
  return {};
}

WeightSpec curvature_weight(int dim, int r, const GFunction& g) {
  require_rank(r, 0);
  if (!(g.beta > 0.0 && g.beta < 0.5)) throw ConfigError("curvature threshold beta must lie in (0, 1/2)");
  WeightSpec spec;
  spec.offsets = ConfigOffsets::single(dim);
  spec.box = {{g.beta, 1.0 - g.beta}};
  spec.kinks = {g.kinks()};
  spec.q = dim - 2;
  spec.components = static_cast<int>(SymTensor(dim, r).size());
  spec.weight = [g, r](std::span<const double> th, const Vec& x, std::span<double> out) {
    const double gv = g(th[0]);
    if (gv == 0.0) return;
    const SymTensor p = sym_pow(x, r);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = gv * p[i];
  };
  spec.gradient = [g, r, dim](std::span<const double> th, const Vec& x, std::span<double> d_tuple,
                              std::span<double> d_x) {
    const SymTensor p = sym_pow(x, r);
    const double gv = g(th[0]);
    const double gd = g.derivative(th[0]);
    const auto& idx = p.indices();
    for (std::size_t c = 0; c < p.size(); ++c) {
      d_tuple[c] = gd * p[c];
      // d/dx_j of prod_k x_{i_k}.
      for (int j = 0; j < dim; ++j) {
        double sum = 0.0;
        for (int k = 0; k < r; ++k) {
          if (idx[c][k] != j) continue;
          double prod = 1.0;
          for (int m = 0; m < r; ++m)
            if (m != k) prod *= x[idx[c][m]];
          sum += prod;
        }
        d_x[c * dim + j] = gv * sum;
      }
    }
  };
  spec.to_tensor = [dim, r](std::span<const double> b) { return tensor_from_bundle(dim, r, b); };
  spec.label = fmt::format("curvature r={} g={} beta={}", r, g.name(), g.beta);
  return spec;
}

double compute_Ig(const Profile& profile, const GFunction& g, double beta) {
  if (!(beta > 0.0 && beta < 0.5)) throw ConfigError("I_g needs beta in (0, 1/2)");
  for (int i = 0; i <= 200; ++i) {
    const double x = beta + (0.5 - beta) * i / 200.0;
    if (std::abs(g(x) + g(1.0 - x)) > 1e-9)
      throw ConfigError(fmt::format("g fails g(x) = -g(1-x) at x = {}", x));
  }
  const double T = profile.phi(beta);
  std::vector<double> breaks{-T, 0.0, T};
  for (double k : g.kinks())
    if (k > beta && k < 1.0 - beta) breaks.push_back(profile.phi(k));
  std::sort(breaks.begin(), breaks.end());
  auto f = [&](double t) { return t * g(profile.theta(t)); };
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i)
    if (breaks[i + 1] > breaks[i]) total += num::integrate_adaptive(f, breaks[i], breaks[i + 1], 1e-13, 20);
  return total;
}

SymTensor curvature_tensor_est(const SymTensor& raw, int r, const CurvatureCalibration& calib,
                               const SymTensor& volume_rm2) {
  if (!(std::abs(calib.C_g) > 1e-12)) throw DomainError("curvature estimator: C_g vanishes, division unstable");
  SymTensor corrected = raw;
  const double rf = num::factorial(r);
  if (r >= 2) corrected -= (rf * calib.I_g) * sym_product(SymTensor::metric(raw.dim()), volume_rm2);
  return corrected * (1.0 / (rf * calib.C_g));
}

EstimateResult summarize(std::vector<SymTensor> per_translation, double a, std::uint64_t seed) {
  if (per_translation.empty()) throw DomainError("summarize: no translations");
  EstimateResult res;
  const SymTensor& first = per_translation.front();
  res.tensor = SymTensor(first.dim(), first.rank());
  res.stderr_ = SymTensor(first.dim(), first.rank());
  std::vector<double> column(per_translation.size());
  for (std::size_t c = 0; c < first.size(); ++c) {
    for (std::size_t i = 0; i < per_translation.size(); ++i) column[i] = per_translation[i][c];
    const auto ms = num::mean_stderr(column);
    res.tensor[c] = ms.mean;
    res.stderr_[c] = ms.stderr_;
  }
  res.a = a;
  res.seed = seed;
  res.translations = static_cast<int>(per_translation.size());
  res.per_translation = std::move(per_translation);
  return res;
}

EstimateResult run_translations(const Shape& shape, const Psf& psf, const Mat& basis, double a, std::uint64_t seed,
                                int translations, int block,
                                const std::function<SymTensor(const GreyImage&)>& estimator,
                                const RenderOptions& options) {
  if (translations < 1) throw ConfigError("at least one lattice translation is required");
  std::vector<SymTensor> values;
  bool degraded = false;
  for (int i = 0; i < translations; ++i) {
    const Lattice lat = Lattice::random_translation(basis, a, seed, static_cast<std::uint64_t>(i));
    const GreyImage img = render(shape, psf, lat, window_for(shape, psf, lat, block + 1), options);
    degraded = degraded || img.degraded;
    values.push_back(estimator(img));
  }
  EstimateResult res = summarize(std::move(values), a, seed);
  res.degraded = degraded;
  return res;
}

void require_surface_conditions(const Psf& psf, double beta, double omega, double lattice_diameter) {
  const ConditionReport rep = validate_conditions(psf, beta, omega, lattice_diameter);
  if (!rep.valid) throw ConfigError("surface estimator refused: " + rep.reason);
}

EstimateResult volume_tensor_est(const Shape& shape, const Psf& psf, const Mat& basis, double a, int r, double beta,
                                 std::uint64_t seed, int translations) {
  const WeightSpec spec = volume_weight(shape.dim(), r, beta);
  spec.validate(psf.profile());
  return run_translations(shape, psf, basis, a, seed, translations, spec.offsets.block,
                          [&](const GreyImage& img) { return local_estimate(img, spec); });
}

EstimateResult surface_tensor_est2(const Shape& shape, const Psf& psf, const Mat& basis, double a, int r, int s,
                                   double beta, double omega, std::uint64_t seed, int translations) {
  require_surface_conditions(psf, beta, omega, basis.colwise().norm().maxCoeff());
  const WeightSpec spec = surface_weight2(psf.profile(), basis, r, s, beta, omega);
  spec.validate(psf.profile());
  return run_translations(shape, psf, basis, a, seed, translations, spec.offsets.block,
                          [&](const GreyImage& img) { return local_estimate(img, spec); });
}

EstimateResult surface_tensor_est3(const Shape& shape, const Psf& psf, const Mat& basis, double a, int r, int s,
                                   double beta, double epsilon, std::uint64_t seed, int translations) {
  require_surface_conditions(psf, beta, 1.0 - beta, basis.colwise().norm().maxCoeff() + epsilon);
  const WeightSpec spec = surface_weight3(psf.profile(), basis, r, s, beta, epsilon);
  spec.validate(psf.profile());
  return run_translations(shape, psf, basis, a, seed, translations, spec.offsets.block,
                          [&](const GreyImage& img) { return local_estimate(img, spec); });
}

EstimateResult curvature_tensor_est_mc(const Shape& shape, const Psf& psf, const Mat& basis, double a, int r,
                                       const CurvatureCalibration& calib, std::uint64_t seed, int translations) {
  const int d = shape.dim();
  const WeightSpec raw = curvature_weight(d, r, calib.g);
  raw.validate(psf.profile());
  const WeightSpec vol = volume_weight(d, std::max(0, r - 2), 0.5);
  return run_translations(shape, psf, basis, a, seed, translations, raw.offsets.block, [&](const GreyImage& img) {
    const SymTensor volume = r >= 2 ? local_estimate(img, vol) : SymTensor(d, 0);
    return curvature_tensor_est(local_estimate(img, raw), r, calib, volume);
  });
}

SymTensor exact_mean_estimate(const Shape& disk, const Psf& psf, const Mat& basis, double a, const WeightSpec& spec,
                              const TubeOptions& options) {
  const Profile profile = psf.profile();
  spec.validate(profile);
  const int d = disk.dim();
  TubeProblem prob;
  prob.a = a;
  for (std::size_t k = 0; k < spec.offsets.size(); ++k) {
    prob.offsets.push_back(basis * spec.offsets.offsets[k].cast<double>());
    std::vector<double> lv{spec.box[k].lo, spec.box[k].hi};
    if (!spec.kinks.empty()) lv.insert(lv.end(), spec.kinks[k].begin(), spec.kinks[k].end());
    prob.levels.push_back(std::move(lv));
  }
  const double lo0 = std::clamp(spec.box[0].lo, 1e-15, 1.0 - 1e-15);
  const double hi0 = std::clamp(spec.box[0].hi, 1e-15, 1.0 - 1e-15);
  prob.t_range = {profile.phi(hi0) - 1.5, profile.phi(lo0) + 1.5};
  prob.components = spec.components;
  prob.integrand = [&](double, const Vec& x, std::span<const double> tuple, std::span<double> out) {
    if (spec.in_box(tuple)) spec.weight(tuple, x, out);
  };
  auto bundle = tube_integrate(disk, psf, prob, options);
  const double scale = std::pow(a, spec.q - d);
  for (double& v : bundle) v *= scale;
  return spec.to_tensor(bundle);
}

SymTensor exact_mean_volume(const Shape& disk, const Psf& psf, double a, int r, double beta,
                            const TubeOptions& options) {
  const WeightSpec spec = volume_weight(disk.dim(), r, beta);
  const Profile profile = psf.profile();
  const double tb = profile.phi(beta);
  TubeProblem prob;
  prob.a = a;
  prob.offsets = {Vec::Zero(disk.dim())};
  prob.levels = {{beta}};
  prob.t_breaks = {0.0};
  prob.t_range = {std::min(0.0, tb) - 1.5, std::max(0.0, tb) + 1.5};
  prob.components = spec.components;
  // Difference to the indicator of the disk itself, which the oracle integrates.
  prob.integrand = [&](double t, const Vec& x, std::span<const double> tuple, std::span<double> out) {
    const double w = (tuple[0] >= beta ? 1.0 : 0.0) - (t <= 0.0 ? 1.0 : 0.0);
    if (w == 0.0) return;
    spec.weight(tuple, x, out);
    for (double& v : out) v *= w;
  };
  const auto bundle = tube_integrate(disk, psf, prob, options);
  return volume_tensor_oracle(disk, r) + spec.to_tensor(bundle);
}

SymTensor exact_mean_curvature(const Shape& disk, const Psf& psf, double a, int r, const CurvatureCalibration& calib,
                               const TubeOptions& options) {
  const int d = disk.dim();
  const WeightSpec raw = curvature_weight(d, r, calib.g);
  const SymTensor volume = r >= 2 ? exact_mean_volume(disk, psf, a, r - 2, 0.5, options) : SymTensor(d, 0);
  return curvature_tensor_est(exact_mean_estimate(disk, psf, Mat::Identity(d, d), a, raw, options), r, calib, volume);
}

CurvatureCalibration calibrate_curvature(const Shape& disk, const Psf& psf, const GFunction& g, double beta,
                                         const std::vector<double>& a_schedule, const TubeOptions& options) {
  if (a_schedule.size() < 2) throw ConfigError("calibration needs at least two resolutions");
  CurvatureCalibration cal;
  cal.g = g;
  cal.g.beta = beta;
  cal.beta = beta;
  cal.disk_radius = disk.extents()[0];
  cal.a_schedule = a_schedule;
  cal.I_g = compute_Ig(psf.profile(), cal.g, beta);
  const double phi0 = curvature_tensor_oracle(disk, 0)[0];
  const WeightSpec spec = curvature_weight(disk.dim(), 0, cal.g);
  const Mat basis = Mat::Identity(disk.dim(), disk.dim());
  for (double a : a_schedule) cal.samples.push_back(exact_mean_estimate(disk, psf, basis, a, spec, options)[0] / phi0);
  cal.C_g = num::extrapolate_to_zero(a_schedule, cal.samples);
  if (!(std::abs(cal.C_g) > 1e-9)) throw DomainError("calibration: C_g vanishes for this g");
  for (std::size_t i = 1; i < cal.samples.size(); ++i)
    if (std::abs(cal.samples[i] - cal.C_g) > std::abs(cal.samples[i - 1] - cal.C_g)) cal.unstable = true;
  return cal;
}

}  // namespace greytensor
