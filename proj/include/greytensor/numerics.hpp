#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <span>
#include <utility>
#include <vector>

namespace greytensor::num {

inline double normal_pdf(double t) { return std::exp(-0.5 * t * t) / std::sqrt(2.0 * std::numbers::pi); }
/// P(Z <= t).
inline double normal_cdf(double t) { return 0.5 * std::erfc(-t / std::numbers::sqrt2); }
/// P(Z > t), accurate in the upper tail.
inline double normal_sf(double t) { return 0.5 * std::erfc(t / std::numbers::sqrt2); }

/// Surface area of the unit sphere S^{k-1} in R^k (omega_1 = 2, omega_2 = 2*pi, omega_3 = 4*pi).
double sphere_area(int k);
/// Volume of the unit ball in R^k.
double ball_volume(int k);
double factorial(int n);

/// Gauss-Legendre rule on [-1, 1]; supported orders 8, 16, 20, 32.
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};
const GaussRule& gauss_legendre(int order);

/// Composite Gauss-Legendre over [lo, hi] with `panels` equal panels.
double integrate(const std::function<double(double)>& f, double lo, double hi, int panels = 1,
                 int order = 16);

/// Adaptive Gauss-Kronrod (G7/K15 nested, absolute+relative tolerance).
double integrate_adaptive(const std::function<double(double)>& f, double lo, double hi,
                          double tol = 1e-12, int max_depth = 30);

/// Vector-valued adaptive Gauss-Kronrod (G7/K15) with deterministic bisection.
/// `f(x, out)` fills `n` components; the error norm is the max over components.
using VecIntegrand = std::function<void(double, std::span<double>)>;
std::vector<double> integrate_adaptive_vec(const VecIntegrand& f, int n, double lo, double hi,
                                           double abs_tol = 1e-11, double rel_tol = 1e-10,
                                           int max_depth = 14);

/// Root of a monotone function bracketed by [lo, hi] (TOMS 748).
double find_root(const std::function<double(double)>& f, double lo, double hi, double tol = 1e-14);

/// Polynomial (Neville) extrapolation of samples (h_i, y_i) to h = 0.
double extrapolate_to_zero(std::span<const double> h, std::span<const double> y);

/// Least-squares slope of log|y| against log(x).
double loglog_slope(std::span<const double> x, std::span<const double> y);

/// Counter-based generator: the value depends only on (seed, counter).
std::uint64_t splitmix64(std::uint64_t seed, std::uint64_t counter);
/// Uniform in [0, 1) with 53 random bits.
double uniform01(std::uint64_t seed, std::uint64_t counter);

struct MeanStd {
  double mean = 0.0;
  double stderr_ = 0.0;
};
MeanStd mean_stderr(std::span<const double> values);

/// Deterministic pairwise sum: the reduction tree depends only on the length.
double pairwise_sum(std::span<const double> values);

/// Runs fn(begin, end) over contiguous chunks of [0, n) on worker threads
/// (0 = hardware concurrency) and rethrows the first worker exception.
void parallel_chunks(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn, unsigned threads = 0);

}  // namespace greytensor::num
