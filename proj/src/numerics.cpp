#include "greytensor/numerics.hpp"

#include "greytensor/types.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/tools/roots.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <exception>
#include <thread>
#include <limits>

namespace greytensor::num {

namespace {

template <unsigned N>
GaussRule make_rule() {
  using Rule = boost::math::quadrature::gauss<double, N>;
  const auto& x = Rule::abscissa();
  const auto& w = Rule::weights();
  GaussRule rule;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] == 0.0) {
      rule.nodes.push_back(0.0);
      rule.weights.push_back(w[i]);
    } else {
      rule.nodes.push_back(-x[i]);
      rule.weights.push_back(w[i]);
      rule.nodes.push_back(x[i]);
      rule.weights.push_back(w[i]);
    }
  }
  return rule;
}

}  // namespace

double sphere_area(int k) {
  return 2.0 * std::pow(std::numbers::pi, 0.5 * k) / boost::math::tgamma(0.5 * k);
}

double ball_volume(int k) { return sphere_area(k) / k; }

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

const GaussRule& gauss_legendre(int order) {
  static const GaussRule r8 = make_rule<8>();
  static const GaussRule r16 = make_rule<16>();
  static const GaussRule r20 = make_rule<20>();
  static const GaussRule r32 = make_rule<32>();
  switch (order) {
    case 8: return r8;
    case 16: return r16;
    case 20: return r20;
    case 32: return r32;
    default: throw DomainError(fmt::format("unsupported Gauss-Legendre order {}", order));
  }
}

double integrate(const std::function<double(double)>& f, double lo, double hi, int panels, int order) {
  const GaussRule& rule = gauss_legendre(order);
  const double h = (hi - lo) / panels;
  double sum = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double mid = lo + (p + 0.5) * h;
    double part = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) part += rule.weights[i] * f(mid + 0.5 * h * rule.nodes[i]);
    sum += 0.5 * h * part;
  }
  return sum;
}

double integrate_adaptive(const std::function<double(double)>& f, double lo, double hi, double tol,
                          int max_depth) {
  if (lo == hi) return 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, lo, hi, max_depth, tol);
}

namespace {

struct KronrodRule {
  std::vector<double> nodes;   // all 15 nodes on [-1, 1]
  std::vector<double> kronrod; // K15 weights
  std::vector<double> gauss;   // G7 weights, zero on Kronrod-only nodes
};

const KronrodRule& kronrod15() {
  static const KronrodRule rule = [] {
    using K = boost::math::quadrature::gauss_kronrod<double, 15>;
    using G = boost::math::quadrature::gauss<double, 7>;
    KronrodRule r;
    const auto& kx = K::abscissa();
    const auto& kw = K::weights();
    const auto& gx = G::abscissa();
    const auto& gw = G::weights();
    auto gauss_weight = [&](double x) {
      for (std::size_t j = 0; j < gx.size(); ++j)
        if (std::abs(gx[j] - x) < 1e-14) return gw[j];
      return 0.0;
    };
    for (std::size_t i = 0; i < kx.size(); ++i) {
      const double g = gauss_weight(kx[i]);
      if (kx[i] == 0.0) {
        r.nodes.push_back(0.0);
        r.kronrod.push_back(kw[i]);
        r.gauss.push_back(g);
      } else {
        for (double sgn : {-1.0, 1.0}) {
          r.nodes.push_back(sgn * kx[i]);
          r.kronrod.push_back(kw[i]);
          r.gauss.push_back(g);
        }
      }
    }
    return r;
  }();
  return rule;
}

void adaptive_vec(const VecIntegrand& f, int n, double lo, double hi, double tol_density, double rel_tol,
                  int depth, std::vector<double>& acc, std::vector<double>& scratch) {
  const KronrodRule& rule = kronrod15();
  const double half = 0.5 * (hi - lo);
  const double mid = 0.5 * (hi + lo);
  std::vector<double> k(n, 0.0), g(n, 0.0);
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    std::fill(scratch.begin(), scratch.end(), 0.0);
    f(mid + half * rule.nodes[i], scratch);
    for (int c = 0; c < n; ++c) {
      k[c] += rule.kronrod[i] * scratch[c];
      g[c] += rule.gauss[i] * scratch[c];
    }
  }
  double err = 0.0;
  double mag = 0.0;
  for (int c = 0; c < n; ++c) {
    k[c] *= half;
    g[c] *= half;
    err = std::max(err, std::abs(k[c] - g[c]));
    mag = std::max(mag, std::abs(k[c]));
  }
  const double tol = std::max(tol_density * 2.0 * half, rel_tol * mag);
  if (err <= tol || depth <= 0) {
    for (int c = 0; c < n; ++c) acc[c] += k[c];
    return;
  }
  adaptive_vec(f, n, lo, mid, tol_density, rel_tol, depth - 1, acc, scratch);
  adaptive_vec(f, n, mid, hi, tol_density, rel_tol, depth - 1, acc, scratch);
}

}  // namespace

std::vector<double> integrate_adaptive_vec(const VecIntegrand& f, int n, double lo, double hi, double abs_tol,
                                           double rel_tol, int max_depth) {
  std::vector<double> acc(n, 0.0);
  if (hi == lo) return acc;
  std::vector<double> scratch(n, 0.0);
  adaptive_vec(f, n, lo, hi, abs_tol / (hi - lo), rel_tol, max_depth, acc, scratch);
  return acc;
}

double find_root(const std::function<double(double)>& f, double lo, double hi, double tol) {
  double flo = f(lo);
  double fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo > 0) == (fhi > 0)) throw DomainError("find_root: interval does not bracket a root");
  std::uintmax_t iters = 200;
  auto stop = [tol](double a, double b) { return std::abs(b - a) <= tol * std::max(1.0, std::abs(a)); };
  auto [a, b] = boost::math::tools::toms748_solve(f, lo, hi, flo, fhi, stop, iters);
  return 0.5 * (a + b);
}

double extrapolate_to_zero(std::span<const double> h, std::span<const double> y) {
  const std::size_t n = h.size();
  if (n == 0 || y.size() != n) throw DomainError("extrapolate_to_zero: bad sample sizes");
  std::vector<double> p(y.begin(), y.end());
  for (std::size_t m = 1; m < n; ++m)
    for (std::size_t i = 0; i + m < n; ++i)
      p[i] = (h[i + m] * p[i] - h[i] * p[i + 1]) / (h[i + m] - h[i]);
  return p[0];
}

double loglog_slope(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n) throw DomainError("loglog_slope: need at least two samples");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double lx = std::log(x[i]);
    const double ly = std::log(std::max(std::abs(y[i]), std::numeric_limits<double>::min()));
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

std::uint64_t splitmix64(std::uint64_t seed, std::uint64_t counter) {
  std::uint64_t z = seed + (counter + 1) * 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

double uniform01(std::uint64_t seed, std::uint64_t counter) {
  return static_cast<double>(splitmix64(seed, counter) >> 11) * 0x1.0p-53;
}

MeanStd mean_stderr(std::span<const double> values) {
  MeanStd out;
  const std::size_t n = values.size();
  if (n == 0) return out;
  out.mean = pairwise_sum(values) / n;
  if (n > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.stderr_ = std::sqrt(ss / (n - 1) / n);
  }
  return out;
}

double pairwise_sum(std::span<const double> values) {
  if (values.size() <= 8) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

void parallel_chunks(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn, unsigned threads) {
  if (n == 0) return;
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  const auto workers = static_cast<unsigned>(std::min<std::size_t>(threads, n));
  if (workers <= 1) {
    fn(0, n);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (n + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
      const std::size_t b = w * chunk;
      const std::size_t e = std::min(n, b + chunk);
      if (b >= e) continue;
      pool.emplace_back([&, w, b, e] {
        try {
          fn(b, e);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace greytensor::num
