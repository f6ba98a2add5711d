#include "greytensor/digitizer.hpp"

#include "greytensor/numerics.hpp"

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <exception>
#include <numbers>
#include <thread>

namespace greytensor {

namespace {

constexpr double kPi = std::numbers::pi;

// R^2 (alpha - sin(alpha) cos(alpha)), the circular segment beyond a chord at height h.
double segment_area(double R, double h) {
  if (h >= R) return 0.0;
  if (h <= -R) return kPi * R * R;
  const double alpha = std::atan2(std::sqrt((R - h) * (R + h)), h);
  const double x = 2.0 * alpha;
  double core;
  if (x < 1e-2) core = (x * x * x / 6.0 - std::pow(x, 5) / 120.0 + std::pow(x, 7) / 5040.0) / 2.0;
  else core = (x - std::sin(x)) / 2.0;
  return R * R * core;
}

double cap_volume(double R, double height) {
  height = std::clamp(height, 0.0, 2.0 * R);
  return kPi * height * height * (3.0 * R - height) / 3.0;
}

// Area of B(0, r) intersected with B(lambda e1, rho).
double lens_area(double lambda, double rho, double r) {
  if (lambda >= rho + r) return 0.0;
  if (lambda <= std::abs(rho - r)) return kPi * std::pow(std::min(rho, r), 2);
  const double h1 = (lambda * lambda + r * r - rho * rho) / (2.0 * lambda);
  const double h2 = (lambda * lambda + rho * rho - r * r) / (2.0 * lambda);
  return segment_area(r, h1) + segment_area(rho, h2);
}

double lens_volume(double lambda, double rho, double r) {
  if (lambda >= rho + r) return 0.0;
  if (lambda <= std::abs(rho - r)) return 4.0 / 3.0 * kPi * std::pow(std::min(rho, r), 3);
  const double cap_rho = (r * r - (lambda - rho) * (lambda - rho)) / (2.0 * lambda);
  const double cap_r = (rho * rho - (lambda - r) * (lambda - r)) / (2.0 * lambda);
  return cap_volume(rho, cap_rho) + cap_volume(r, cap_r);
}

// P(|Z + lambda e1| <= rho), Z standard normal in R^2. The substitution
// y1 = lambda + rho sin(alpha) removes the square-root endpoints of the chord.
double disk_gaussian(double lambda, double rho, double cut) {
  const double y_lo = std::max(lambda - rho, -cut);
  const double y_hi = std::min(lambda + rho, cut);
  if (y_lo >= y_hi) return 0.0;
  const double a_lo = std::asin(std::clamp((y_lo - lambda) / rho, -1.0, 1.0));
  const double a_hi = std::asin(std::clamp((y_hi - lambda) / rho, -1.0, 1.0));
  auto f = [&](double alpha) {
    const double ca = std::cos(alpha);
    const double y1 = lambda + rho * std::sin(alpha);
    const double h = rho * ca;
    return num::normal_pdf(y1) * std::erf(h / std::numbers::sqrt2) * rho * ca;
  };
  return std::clamp(num::integrate(f, a_lo, a_hi, 24, 16), 0.0, 1.0);
}

// P(|Z + lambda e1| <= rho), Z standard normal in R^3 (closed form).
double ball_gaussian_3d(double lambda, double rho) {
  if (lambda < 1e-7) return 2.0 * num::normal_cdf(rho) - 1.0 - 2.0 * rho * num::normal_pdf(rho);
  const double v = (num::normal_pdf(rho + lambda) - num::normal_pdf(rho - lambda)) / lambda +
                   num::normal_cdf(rho - lambda) - num::normal_sf(rho + lambda);
  return std::clamp(v, 0.0, 1.0);
}

double tanh_sinh_integrate(const std::function<double(double)>& f, double lo, double hi) {
  if (!(hi > lo)) return 0.0;
  thread_local boost::math::quadrature::tanh_sinh<double> integrator;
  return integrator.integrate(f, lo, hi, 1e-11);
}

// Convex 2D shape: integrate the PSF column mass over chords along axis 1.
double chord_intensity(const Shape& shape, const Psf& psf, double a, const Vec& x) {
  const auto [box_lo, box_hi] = shape.bounding_box();
  const double col = psf.kind() == PsfKind::gaussian ? psf.exact_cutoff() : psf.ball_radius();
  const double lo = std::max((box_lo[0] - x[0]) / a, -col);
  const double hi = std::min((box_hi[0] - x[0]) / a, col);
  if (lo >= hi) return 0.0;
  std::vector<double> breaks{lo, hi};
  if (shape.kind() == ShapeKind::rounded_box) {
    const double s = shape.extents()[0] - shape.corner_radius();
    for (double b : {shape.center()[0] - s, shape.center()[0] + s}) breaks.push_back((b - x[0]) / a);
  }
  if (psf.kind() == PsfKind::ball_indicator) breaks.push_back(0.0);
  std::sort(breaks.begin(), breaks.end());
  Vec p(2);
  auto f = [&](double y1) {
    p << x[0] + a * y1, x[1];
    const auto chord = shape.chord(1, p);
    if (!chord) return 0.0;
    return psf.column_mass(y1, (chord->lo - x[1]) / a, (chord->hi - x[1]) / a);
  };
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    const double l = std::max(breaks[i], lo);
    const double h = std::min(breaks[i + 1], hi);
    if (h > l) total += tanh_sinh_integrate(f, l, h);
  }
  return std::clamp(total, 0.0, 1.0);
}

// Generic path: kernel truncated at D_eff and renormalized, sampled on a grid
// of spacing a / kSupersample.
Intensity supersampled(const Shape& shape, const Psf& psf, double a, const Vec& x) {
  const int d = shape.dim();
  const double h = 1.0 / kSupersample;
  const long K = static_cast<long>(std::ceil(psf.support_radius() / h));
  const long side = 2 * K;
  long total = 1;
  for (int i = 0; i < d; ++i) total *= side;
  const double half_diag = 0.5 * h * a * std::sqrt(static_cast<double>(d));
  double mass = 0.0;
  double inside = 0.0;
  double uncertain = 0.0;
  Vec y(d);
  for (long lin = 0; lin < total; ++lin) {
    long rem = lin;
    for (int i = 0; i < d; ++i) {
      y[i] = (static_cast<double>(rem % side - K) + 0.5) * h;
      rem /= side;
    }
    if (y.norm() > psf.support_radius()) continue;
    const double w = psf.radial_density(y.norm());
    mass += w;
    const double sd = shape.signed_distance(x + a * y);
    if (sd <= 0.0) inside += w;
    if (std::abs(sd) <= half_diag) uncertain += w;
  }
  if (!(mass > 0.0)) throw DomainError("supersampled intensity: empty kernel");
  return {inside / mass, uncertain / mass > 1e-6};
}

}  // namespace

double ball_intensity(const Psf& psf, double lambda, double rho) {
  if (psf.kind() == PsfKind::gaussian) {
    if (psf.dim() == 2) return disk_gaussian(lambda, rho, psf.exact_cutoff());
    if (psf.dim() == 3) return ball_gaussian_3d(lambda, rho);
  } else {
    const double r = psf.ball_radius();
    if (psf.dim() == 2) return std::clamp(lens_area(lambda, rho, r) / (kPi * r * r), 0.0, 1.0);
    if (psf.dim() == 3) return std::clamp(lens_volume(lambda, rho, r) / (4.0 / 3.0 * kPi * r * r * r), 0.0, 1.0);
  }
  throw DomainError("ball_intensity: unsupported psf dimension");
}

Lattice Lattice::make(const Mat& basis, double a, const Vec& c) {
  const int d = static_cast<int>(basis.cols());
  if (d < 1 || d > kMaxDim || basis.rows() != d) throw ConfigError("lattice basis must be square with d <= 3");
  if (c.size() != d) throw ConfigError("lattice translation has wrong dimension");
  if (!(a > 0.0)) throw ConfigError("resolution a must be positive");
  if (std::abs(std::abs(basis.determinant()) - 1.0) > 1e-12)
    throw ConfigError(fmt::format("lattice cell volume {} is not 1", std::abs(basis.determinant())));
  const Vec coords = basis.lu().solve(c);
  for (int i = 0; i < d; ++i)
    if (coords[i] < -1e-12 || coords[i] >= 1.0 + 1e-12)
      throw ConfigError("lattice translation lies outside the fundamental cell");
  return Lattice{basis, a, c};
}

Lattice Lattice::standard(int dim, double a) { return make(Mat::Identity(dim, dim), a, Vec::Zero(dim)); }

Lattice Lattice::random_translation(const Mat& basis, double a, std::uint64_t seed, std::uint64_t index) {
  const int d = static_cast<int>(basis.cols());
  Vec coords(d);
  for (int i = 0; i < d; ++i) coords[i] = num::uniform01(seed, index * kMaxDim + i);
  return make(basis, a, basis * coords);
}

double Lattice::diameter() const { return basis.colwise().norm().maxCoeff(); }

Vec Lattice::position(const IVec& z) const { return a * (basis * z.cast<double>() + c); }

std::size_t Window::count() const {
  std::size_t n = 1;
  for (int i = 0; i < size.size(); ++i) n *= static_cast<std::size_t>(std::max<long>(size[i], 0));
  return n;
}

bool Window::contains(const IVec& z) const {
  for (int i = 0; i < lo.size(); ++i)
    if (z[i] < lo[i] || z[i] >= lo[i] + size[i]) return false;
  return true;
}

std::size_t Window::linear(const IVec& z) const {
  std::size_t lin = 0;
  for (int i = static_cast<int>(lo.size()) - 1; i >= 0; --i)
    lin = lin * static_cast<std::size_t>(size[i]) + static_cast<std::size_t>(z[i] - lo[i]);
  return lin;
}

IVec Window::index(std::size_t linear) const {
  IVec z(lo.size());
  for (int i = 0; i < lo.size(); ++i) {
    z[i] = lo[i] + static_cast<long>(linear % static_cast<std::size_t>(size[i]));
    linear /= static_cast<std::size_t>(size[i]);
  }
  return z;
}

GreyImage::GreyImage(Lattice lattice, Window window, std::vector<double> values)
    : lattice_(std::move(lattice)), window_(std::move(window)), values_(std::move(values)) {
  if (window_.dim() != lattice_.dim()) throw ConfigError("image window dimension differs from lattice");
  if (values_.size() != window_.count()) throw ConfigError("image value count differs from window size");
  for (double v : values_)
    if (!(v >= 0.0 && v <= 1.0)) throw DomainError(fmt::format("image value {} outside [0, 1]", v));
}

double GreyImage::at(const IVec& z) const {
  if (!window_.contains(z)) throw DomainError("lattice point outside the image window");
  return values_[window_.linear(z)];
}

ConfigOffsets ConfigOffsets::single(int dim) {
  ConfigOffsets s;
  s.offsets.push_back(IVec::Zero(dim));
  s.block = 1;
  s.anchor = IVec::Zero(dim);
  return s;
}

ConfigOffsets ConfigOffsets::forward(int dim) {
  ConfigOffsets s = single(dim);
  for (int i = 0; i < dim; ++i) s.offsets.push_back(IVec::Unit(dim, i));
  s.block = 2;
  return s;
}

ConfigOffsets ConfigOffsets::symmetric(int dim) {
  ConfigOffsets s = single(dim);
  for (int i = 0; i < dim; ++i) {
    s.offsets.push_back(IVec::Unit(dim, i));
    s.offsets.push_back(-IVec::Unit(dim, i));
  }
  s.block = 3;
  s.anchor = IVec::Constant(dim, -1);
  return s;
}

std::string ConfigOffsets::describe() const {
  std::string out = fmt::format("n={} w=(", block);
  for (int i = 0; i < anchor.size(); ++i) out += fmt::format("{}{}", i ? "," : "", anchor[i]);
  out += ") S={";
  for (std::size_t k = 0; k < offsets.size(); ++k) {
    out += k ? ";" : "";
    for (int i = 0; i < offsets[k].size(); ++i) out += fmt::format("{}{}", i ? "," : "", offsets[k][i]);
  }
  return out + "}";
}

Intensity intensity(const Shape& shape, const Psf& psf, double a, const Vec& x, IntensityMethod method) {
  if (!(a > 0.0)) throw DomainError("intensity: resolution must be positive");
  if (shape.dim() != psf.dim() || x.size() != shape.dim()) throw DomainError("intensity: dimension mismatch");
  if (shape.kind() == ShapeKind::halfspace) {
    // Exact for every a: theta((<x,u> - alpha) / a).
    return {psf.profile().theta(shape.signed_distance(x) / a), false};
  }
  if (method == IntensityMethod::supersampled) return supersampled(shape, psf, a, x);
  const double sd = shape.signed_distance(x);
  const double cut = a * psf.exact_cutoff();
  if (sd >= cut) return {0.0, false};
  if (sd <= -cut) return {1.0, false};
  if (shape.kind() == ShapeKind::ball)
    return {ball_intensity(psf, (x - shape.center()).norm() / a, shape.extents()[0] / a), false};
  if (shape.dim() == 2) return {chord_intensity(shape, psf, a, x), false};
  return supersampled(shape, psf, a, x);
}

Window window_for(const Shape& shape, const Psf& psf, const Lattice& lattice, int margin) {
  const int d = lattice.dim();
  if (shape.dim() != d) throw ConfigError("window_for: shape and lattice dimensions differ");
  auto [lo, hi] = shape.bounding_box();
  const double pad = 2.0 * lattice.a * psf.support_radius();
  lo.array() -= pad;
  hi.array() += pad;
  const Mat inv = lattice.basis.inverse();
  Vec zmin = Vec::Constant(d, std::numeric_limits<double>::infinity());
  Vec zmax = -zmin;
  for (int corner = 0; corner < (1 << d); ++corner) {
    Vec p(d);
    for (int i = 0; i < d; ++i) p[i] = (corner >> i) & 1 ? hi[i] : lo[i];
    const Vec z = inv * (p / lattice.a - lattice.c);
    zmin = zmin.cwiseMin(z);
    zmax = zmax.cwiseMax(z);
  }
  Window w{IVec(d), IVec(d)};
  for (int i = 0; i < d; ++i) {
    w.lo[i] = static_cast<long>(std::floor(zmin[i])) - margin;
    w.size[i] = static_cast<long>(std::ceil(zmax[i])) + margin + 1 - w.lo[i];
  }
  return w;
}

GreyImage render(const Shape& shape, const Psf& psf, const Lattice& lattice, const Window& window,
                 const RenderOptions& options) {
  if (window.dim() != lattice.dim()) throw ConfigError("render: window dimension differs from lattice");
  const std::size_t n = window.count();
  if (n == 0) throw ConfigError("render: empty window");
  if (n > options.max_points)
    throw ConfigError(fmt::format("render: window of {} points exceeds the budget of {}", n, options.max_points));
  std::vector<double> values(n);
  std::vector<char> degraded(n, 0);
  // Each worker fills a disjoint contiguous range; values depend only on the index.
  unsigned workers = options.threads ? options.threads : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, n));
  std::vector<std::exception_ptr> errors(workers);
  auto work = [&](unsigned id, std::size_t begin, std::size_t end) {
    try {
      for (std::size_t i = begin; i < end; ++i) {
        const Intensity v = intensity(shape, psf, lattice.a, lattice.position(window.index(i)), options.method);
        values[i] = v.value;
        degraded[i] = v.degraded;
      }
    } catch (...) {
      errors[id] = std::current_exception();
    }
  };
  if (workers <= 1) {
    work(0, 0, n);
  } else {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (n + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
      const std::size_t b = w * chunk;
      const std::size_t e = std::min(n, b + chunk);
      if (b < e) pool.emplace_back(work, w, b, e);
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  GreyImage img(lattice, window, std::move(values));
  img.degraded = std::any_of(degraded.begin(), degraded.end(), [](char c) { return c != 0; });
  img.metadata["shape"] = shape.describe();
  img.metadata["psf"] = to_string(psf.kind());
  return img;
}

std::vector<double> extract_config(const GreyImage& image, const IVec& z, const ConfigOffsets& offsets) {
  std::vector<double> out;
  out.reserve(offsets.size());
  for (const auto& s : offsets.offsets) {
    const IVec p = z + s;
    if (!image.window().contains(p)) throw DomainError("extract_config: configuration leaves the image window");
    out.push_back(image.at(p));
  }
  return out;
}

}  // namespace greytensor
