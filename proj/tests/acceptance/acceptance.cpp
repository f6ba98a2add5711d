// Acceptance suite: one PASS/FAIL line per criterion.

#include "greytensor/asymptotics.hpp"
#include "greytensor/estimators.hpp"
#include "greytensor/harness.hpp"
#include "greytensor/mcmullen.hpp"
#include "greytensor/numerics.hpp"
#include "oracles.hpp"

#include <fmt/format.h>

#include <chrono>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

using namespace greytensor;

namespace {

constexpr double kPi = std::numbers::pi;

struct Outcome {
  bool passed = false;
  std::string detail;
};

double rel(double x, double ref) { return std::abs(x - ref) / std::abs(ref); }

Outcome profile_check() {
  const Profile p = Psf::gaussian(2).profile();
  const double err1 = std::abs(p.theta(1.0) - oracle::normal_sf(1.0));
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> U(0.01, 0.99);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double v = U(rng);
    worst = std::max(worst, std::abs(p.theta(p.phi(v)) - v));
  }
  return {err1 <= 1e-9 && worst <= 1e-9, fmt::format("|theta(1) - oracle| = {:.2e}, max roundtrip err = {:.2e}", err1, worst)};
}

Outcome coordinate_identity() {
  const Profile p = Psf::gaussian(2).profile();
  const double V = std::sqrt(2.0);
  const double lo = p.phi(0.9) - V;
  const double hi = p.phi(0.1) + V;
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double ang = 2 * kPi * U(rng);
    const double vang = 2 * kPi * U(rng);
    const double vr = V * U(rng);
    const Vec u = (Vec(2) << std::cos(ang), std::sin(ang)).finished();
    const Vec v = (Vec(2) << vr * std::cos(vang), vr * std::sin(vang)).finished();
    const double t = lo + (hi - lo) * U(rng);
    const double uv = u.dot(v);
    // Keep t + <u, v> inside the same window.
    const double ts = std::clamp(t, lo - std::min(0.0, uv), hi - std::max(0.0, uv));
    const double lhs = p.phi(p.theta(ts + uv)) - p.phi(p.theta(ts));
    worst = std::max(worst, std::abs(lhs - uv));
  }
  return {worst <= 1e-9, fmt::format("max |phi(theta(t+<u,v>)) - phi(theta(t)) - <u,v>| = {:.2e}", worst)};
}

Outcome volume_tensors() {
  const Psf psf = Psf::gaussian(2);
  const Shape disk = Shape::ball(Vec::Zero(2), 1.0);
  const Mat B = Mat::Identity(2, 2);
  const auto v0 = volume_tensor_est(disk, psf, B, 1.0 / 64, 0, 0.5, 11, 32);
  const auto v2 = volume_tensor_est(disk, psf, B, 1.0 / 64, 2, 0.5, 11, 32);
  const double e0 = rel(v0.tensor[0], kPi);
  const double e2 = rel(v2.tensor.at({0, 0}), kPi / 8);
  return {e0 < 0.01 && e2 < 0.02,
          fmt::format("Phi2^00 = {:.6f} (rel {:.2e}, se {:.1e}), (1,1) of Phi2^20 = {:.6f} (rel {:.2e})", v0.tensor[0], e0,
                      v0.stderr_[0], v2.tensor.at({0, 0}), e2)};
}

Outcome surface_tensors() {
  const Psf psf = Psf::gaussian(2);
  const Shape disk = Shape::ball(Vec::Zero(2), 1.0);
  const Mat B = Mat::Identity(2, 2);
  const auto s00 = surface_tensor_est2(disk, psf, B, 1.0 / 64, 0, 0, 0.1, 0.9, 12, 32);
  const auto s11 = surface_tensor_est2(disk, psf, B, 1.0 / 64, 1, 1, 0.1, 0.9, 12, 32);
  const auto s01 = surface_tensor_est2(disk, psf, B, 1.0 / 64, 0, 1, 0.1, 0.9, 12, 32);
  const double e00 = rel(s00.tensor[0], 2 * kPi);
  const double e11 = rel(s11.tensor.at({0, 0}), 1.0);
  const double m01 = s01.tensor.max_abs();
  return {e00 < 0.02 && e11 < 0.03 && m01 < 0.05,
          fmt::format("(0,0) = {:.5f} (rel {:.2e}), (1,1)_11 = {:.5f} (rel {:.2e}), max|(0,1)| = {:.2e}", s00.tensor[0],
                      e00, s11.tensor.at({0, 0}), e11, m01)};
}

Outcome bias_order() {
  const Psf psf = Psf::gaussian(2);
  const Shape disk = Shape::ball(Vec::Zero(2), 1.0);
  const Mat B = Mat::Identity(2, 2);
  const std::vector<double> as{1.0 / 16, 1.0 / 32, 1.0 / 64};
  const auto w2 = surface_weight2(psf.profile(), B, 0, 0, 0.1, 0.9);
  const auto w3 = surface_weight3(psf.profile(), B, 0, 0, 0.1, 0.01);
  std::vector<double> b2, b3;
  for (double a : as) {
    b2.push_back(std::abs(exact_mean_estimate(disk, psf, B, a, w2)[0] - 2 * kPi));
    b3.push_back(std::abs(exact_mean_estimate(disk, psf, B, a, w3)[0] - 2 * kPi));
  }
  const double s2 = num::loglog_slope(as, b2);
  const double s3 = num::loglog_slope(as, b3);
  return {s2 >= 0.8 && s3 >= 1.3,
          fmt::format("slope 2^n = {:.3f} (bias {:.2e}..{:.2e}), slope 3^n = {:.3f} (bias {:.2e}..{:.2e})", s2, b2.front(),
                      b2.back(), s3, b3.front(), b3.back())};
}

Outcome first_order() {
  const Psf psf = Psf::gaussian(2);
  const Shape disk = Shape::ball(Vec::Zero(2), 1.0);
  const Mat B = Mat::Identity(2, 2);
  const auto w = indicator_weight(2, 0.1, 0.9);
  const double rhs = first_order_rhs(disk, psf, B, w)[0];
  const double ref = 2 * kPi * (oracle::normal_sf_inverse(0.1) - oracle::normal_sf_inverse(0.9));
  const double lhs = first_order_lhs(disk, psf, B, w, 1.0 / 128)[0];
  const double d = rel(lhs, rhs);
  return {d < 0.01 && rel(rhs, ref) < 1e-8,
          fmt::format("LHS(1/128) = {:.6f}, RHS = {:.6f} (closed form {:.6f}), rel diff {:.2e}", lhs, rhs, ref, d)};
}

Outcome second_order() {
  const Psf psf = Psf::gaussian(2);
  const Shape disk = Shape::ball(Vec::Zero(2), 1.0);
  const Mat B = Mat::Identity(2, 2);
  const auto w = bump_weight(2, 0.15, 0.75, 0.02);
  const double rhs1 = first_order_rhs(disk, psf, B, w)[0];
  const auto rhs2 = second_order_rhs_disk(disk, psf, B, w);
  const auto emp = second_order_empirical(disk, psf, B, w, {1.0 / 16, 1.0 / 32, 1.0 / 64}, rhs1);
  const double d = rel(emp.extrapolated, rhs2.total()[0]);

  // theta^Q closed form against the defining integral by the trapezoid rule.
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(-1.5, 1.5);
  double worst_q = 0.0;
  for (int i = 0; i < 50; ++i) {
    const double t = U(rng), su = U(rng), se = U(rng), kappa = 1.0 + U(rng) / 2;
    const double direct = -0.5 * kappa *
                          oracle::trapezoid([&](double tau) { return tau * tau * oracle::normal_pdf(tau - se); },
                                            se - 14.0, se + 14.0, 2000) *
                          oracle::normal_pdf(t + su);
    worst_q = std::max(worst_q, std::abs(theta_Q(t, su, se, kappa, psf) - direct));
  }
  const std::vector<Vec> zero{Vec::Zero(2)};
  const auto tb = t_bounds_psi(indicator_weight(2, 0.1, 0.9), zero, (Vec(2) << 0.6, 0.8).finished(), 1.0, psf);
  const double psi_err = std::max(std::abs(tb.psi0 + 0.5), std::abs(tb.psi1 + 0.5));
  return {d < 0.10 && worst_q <= 1e-8 && psi_err <= 1e-8,
          fmt::format("extrapolated bracket {:.6f} vs RHS {:.6f} (rel {:.2e}); theta^Q err {:.1e}; psi err {:.1e}",
                      emp.extrapolated, rhs2.total()[0], d, worst_q, psi_err)};
}

Outcome curvature() {
  const Psf psf = Psf::gaussian(2);
  const std::vector<double> as{1.0 / 16, 1.0 / 32, 1.0 / 64};
  const GFunction g = GFunction::linear(0.1);
  const Shape d1 = Shape::ball(Vec::Zero(2), 1.0);
  const auto cal1 = calibrate_curvature(d1, psf, g, 0.1, as);
  const auto cal8 = calibrate_curvature(Shape::ball(Vec::Zero(2), 0.8), psf, g, 0.1, as);
  const double a = 1.0 / 64;
  const double r0 = exact_mean_curvature(Shape::ball(Vec::Zero(2), 0.7), psf, a, 0, cal1)[0];
  const double r2 = exact_mean_curvature(d1, psf, a, 2, cal1).at({0, 0});
  const double theory = second_order_rhs_disk(d1, psf, Mat::Identity(2, 2), curvature_weight(2, 0, g)).total()[0];
  // Independent I_g by the midpoint rule.
  const double T = oracle::normal_sf_inverse(0.1);
  const double ig = oracle::midpoint([](double t) { return t * (oracle::normal_sf(t) - 0.5); }, -T, T, 20000);
  const double e0 = rel(r0, 1.0), e2 = rel(r2, 0.25), ec = rel(cal8.C_g, cal1.C_g), et = rel(cal1.C_g, theory);
  const bool ok = e0 < 0.02 && e2 < 0.05 && ec < 0.01 && et < 0.05 && rel(cal1.I_g, ig) < 1e-6 && !cal1.unstable;
  return {ok, fmt::format("R=0.7 r=0: {:.5f}; R=1 r=2 (1,1): {:.5f}; C_g(R=1) {:.6f}, C_g(R=0.8) {:.6f} (rel {:.1e}); "
                          "theory {:.6f} (rel {:.1e}); I_g {:.6f} vs {:.6f}",
                          r0, r2, cal1.C_g, cal8.C_g, ec, theory, et, cal1.I_g, ig)};
}

ExperimentConfig mcmullen_config(const std::string& kind) {
  ExperimentConfig c;
  c.shape.kind = kind;
  c.shape.radius = 1.0;
  c.shape.half_widths = {1.0, 0.6};
  c.shape.corner_radius = 0.3;
  c.estimator.kind = "surface3";
  c.estimator.beta = 0.1;
  c.a_schedule = {1.0 / 64};
  c.translations = 32;
  c.seed = 21;
  return c;
}

Outcome mcmullen() {
  bool ok = true;
  std::string detail;
  for (const std::string kind : {"ball", "rounded_box"}) {
    const auto rep = run_mcmullen_check(mcmullen_config(kind));
    double worst_oracle = 0.0;
    int estimated = 0;
    for (const auto& row : rep.rows) {
      if (row.source == "oracle") {
        worst_oracle = std::max(worst_oracle, row.residual);
        ok = ok && row.residual < 1e-6;
      } else {
        ++estimated;
        ok = ok && row.passed;
        detail += fmt::format("{} est ({},{}) {:.2e} < {:.2e}; ", kind, row.k, row.r, row.residual, row.threshold);
      }
    }
    ok = ok && estimated > 0;
    detail += fmt::format("{} oracle max {:.1e}; ", kind, worst_oracle);
  }
  return {ok, detail};
}

std::string sweep_csv(const ExperimentConfig& cfg) {
  std::ostringstream os;
  write_sweep_csv(os, run_sweep(cfg));
  return os.str();
}

Outcome determinism() {
  ExperimentConfig a;
  a.estimator.kind = "volume";
  a.estimator.r = 2;
  a.estimator.beta = 0.5;
  a.a_schedule = {1.0 / 16, 1.0 / 32, 1.0 / 64};
  a.translations = 32;
  a.seed = 99;
  ExperimentConfig b = a;
  b.estimator.kind = "surface2";
  b.estimator.r = 1;
  b.estimator.s = 1;
  b.estimator.beta = 0.1;
  b.estimator.omega = 0.9;
  bool ok = true;
  std::size_t bytes = 0;
  for (const auto& cfg : {a, b}) {
    const std::string first = sweep_csv(cfg);
    const std::string second = sweep_csv(cfg);
    ok = ok && first == second && !first.empty();
    bytes += first.size();
  }
  return {ok, fmt::format("two sweeps repeated, {} CSV bytes compared", bytes)};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {"profile", profile_check},          {"coordinate identity", coordinate_identity},
      {"volume tensors", volume_tensors},   {"surface tensors", surface_tensors},
      {"bias order", bias_order},           {"first-order limit", first_order},
      {"second-order limit", second_order}, {"curvature tensors", curvature},
      {"McMullen relations", mcmullen},     {"determinism", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = criteria[i].run();
    } catch (const std::exception& e) {
      out = {false, fmt::format("exception: {}", e.what())};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    fmt::print("{} {:2} {}: {} [{:.1f} s]\n", out.passed ? "PASS" : "FAIL", i + 1, criteria[i].name, out.detail, secs);
    std::fflush(stdout);
    if (!out.passed) ++failed;
  }
  fmt::print("{} of {} criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
