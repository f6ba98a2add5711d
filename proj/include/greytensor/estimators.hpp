#pragma once

#include "greytensor/digitizer.hpp"
#include "greytensor/psf.hpp"
#include "greytensor/shapes.hpp"
#include "greytensor/sym_tensor.hpp"
#include "greytensor/tube.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace greytensor {

/// Local algorithm a^q sum_z 1_A(Theta) f(Theta, a z) with a component bundle as output.
struct WeightSpec {
  ConfigOffsets offsets;
  /// Admissible box, one closed intensity interval per offset (offset 0 first).
  std::vector<Interval> box;
  int q = 1;
  int components = 1;
  /// f on the box; the caller applies the indicator. `x` is the physical position.
  std::function<void(std::span<const double> tuple, const Vec& x, std::span<double> out)> weight;
  /// Optional analytic derivatives: d f_c / d theta_k at [c * |S| + k] and d f_c / d x_j at [c * d + j].
  std::function<void(std::span<const double> tuple, const Vec& x, std::span<double> d_tuple, std::span<double> d_x)>
      gradient;
  /// Interior intensity levels per offset where f is not smooth.
  std::vector<std::vector<double>> kinks;
  /// Maps the summed bundle to the output tensor.
  std::function<SymTensor(std::span<const double> bundle)> to_tensor;
  std::string label;

  [[nodiscard]] bool in_box(std::span<const double> tuple) const;
  /// Throws ConfigError when the spec is malformed or a box endpoint in (0,1)
  /// is not a regular value of the profile.
  void validate(const Profile& profile) const;
};

/// Raw bundle a^q sum_z f. Throws DomainError if the image window clips the support of f.
[[nodiscard]] std::vector<double> local_sum(const GreyImage& image, const WeightSpec& spec);
[[nodiscard]] SymTensor local_estimate(const GreyImage& image, const WeightSpec& spec);

/// Volume tensor weight 1{theta_0 >= beta} x^r / r!, q = d.
[[nodiscard]] WeightSpec volume_weight(int dim, int r, double beta);

/// Surface tensor weight on S = {0, v_1..v_d}, already divided by phi(beta) - phi(omega).
/// Evaluations on the lattice basis are assembled into a tensor via the dual basis.
[[nodiscard]] WeightSpec surface_weight2(const Profile& profile, const Mat& basis, int r, int s, double beta,
                                         double omega);
/// Bias-corrected surface tensor weight on S = {0, +-v_i} with omega = 1 - beta and
/// neighbor windows widened by epsilon (distance units). The forward and backward
/// difference products are averaged.
[[nodiscard]] WeightSpec surface_weight3(const Profile& profile, const Mat& basis, int r, int s, double beta,
                                         double epsilon);

/// Odd weight g on [beta, 1 - beta] for the mean curvature estimator.
struct GFunction {
  enum class Kind { zero, linear, step, custom };
  Kind kind = Kind::linear;
  double beta = 0.1;
  std::function<double(double)> custom;

  static GFunction zero(double beta) { return {Kind::zero, beta, {}}; }
  /// (theta - 1/2) 1_[beta, 1-beta].
  static GFunction linear(double beta) { return {Kind::linear, beta, {}}; }
  /// 1_[beta, 1/2) - 1_(1/2, 1-beta].
  static GFunction step(double beta) { return {Kind::step, beta, {}}; }
  static GFunction from_name(const std::string& name, double beta);

  [[nodiscard]] double operator()(double theta) const;
  [[nodiscard]] double derivative(double theta) const;
  [[nodiscard]] std::string name() const;
  /// Interior kink levels.
  [[nodiscard]] std::vector<double> kinks() const;
};

/// Curvature weight g(theta_0) x^r on S = {0}, q = d - 2 (raw, uncorrected).
[[nodiscard]] WeightSpec curvature_weight(int dim, int r, const GFunction& g);

/// I_g = int_{-phi(beta)}^{phi(beta)} t g(theta(t)) dt. Rejects g failing g(x) = -g(1-x).
[[nodiscard]] double compute_Ig(const Profile& profile, const GFunction& g, double beta);

struct CurvatureCalibration {
  double C_g = 0.0;
  double I_g = 0.0;
  GFunction g;
  double beta = 0.1;
  double disk_radius = 1.0;
  std::vector<double> a_schedule;
  /// Per-a calibration values before extrapolation.
  std::vector<double> samples;
  /// Set when the per-a residuals are not monotone.
  bool unstable = false;
};

/// Turns raw curvature-weight sums into Phi_{d-2}^{r,0} estimates:
/// [raw - r! I_g Q (.) volume_{r-2}] / (r! C_g), with no volume term for r < 2.
/// `volume_rm2` is the estimate of Phi_d^{r-2,0} (ignored for r < 2).
[[nodiscard]] SymTensor curvature_tensor_est(const SymTensor& raw, int r, const CurvatureCalibration& calib,
                                             const SymTensor& volume_rm2);

struct EstimateResult {
  SymTensor tensor;
  SymTensor stderr_;
  double a = 0.0;
  int translations = 0;
  std::uint64_t seed = 0;
  std::vector<SymTensor> per_translation;
  bool degraded = false;
};

[[nodiscard]] EstimateResult summarize(std::vector<SymTensor> per_translation, double a, std::uint64_t seed);

/// Renders `translations` randomly translated images and applies `estimator` to each.
[[nodiscard]] EstimateResult run_translations(const Shape& shape, const Psf& psf, const Mat& basis, double a,
                                              std::uint64_t seed, int translations, int block,
                                              const std::function<SymTensor(const GreyImage&)>& estimator,
                                              const RenderOptions& options = {});

/// Convenience drivers over random translations.
[[nodiscard]] EstimateResult volume_tensor_est(const Shape& shape, const Psf& psf, const Mat& basis, double a, int r,
                                               double beta, std::uint64_t seed, int translations);
[[nodiscard]] EstimateResult surface_tensor_est2(const Shape& shape, const Psf& psf, const Mat& basis, double a,
                                                 int r, int s, double beta, double omega, std::uint64_t seed,
                                                 int translations);
[[nodiscard]] EstimateResult surface_tensor_est3(const Shape& shape, const Psf& psf, const Mat& basis, double a,
                                                 int r, int s, double beta, double epsilon, std::uint64_t seed,
                                                 int translations);

/// Curvature tensor estimates over random translations. For r >= 2 the volume
/// correction uses the volume estimator at threshold 1/2 on the same images.
[[nodiscard]] EstimateResult curvature_tensor_est_mc(const Shape& shape, const Psf& psf, const Mat& basis, double a,
                                                     int r, const CurvatureCalibration& calib, std::uint64_t seed,
                                                     int translations);

/// Refuses to run surface estimators when the PSF conditions fail.
void require_surface_conditions(const Psf& psf, double beta, double omega, double lattice_diameter);

// Exact mean estimators on a 2D disk: the lattice-translation expectation
// a^{q-d} int f(Theta_a^X(x; aS), x) dx evaluated by polar quadrature.

using TubeOptions = TubeAccuracy;

[[nodiscard]] SymTensor exact_mean_estimate(const Shape& disk, const Psf& psf, const Mat& basis, double a,
                                            const WeightSpec& spec, const TubeOptions& options = {});
[[nodiscard]] SymTensor exact_mean_volume(const Shape& disk, const Psf& psf, double a, int r, double beta,
                                          const TubeOptions& options = {});

/// Exact mean curvature tensor estimate on a 2D disk.
[[nodiscard]] SymTensor exact_mean_curvature(const Shape& disk, const Psf& psf, double a, int r,
                                             const CurvatureCalibration& calib, const TubeOptions& options = {});

/// Calibrates C_g on a disk (r = 0, Phi_0 = 1) from exact mean estimates over
/// `a_schedule`, extrapolated to a = 0.
[[nodiscard]] CurvatureCalibration calibrate_curvature(const Shape& disk, const Psf& psf, const GFunction& g,
                                                       double beta, const std::vector<double>& a_schedule,
                                                       const TubeOptions& options = {});

}  // namespace greytensor
