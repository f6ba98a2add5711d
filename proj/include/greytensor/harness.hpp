#pragma once

#include "greytensor/asymptotics.hpp"
#include "greytensor/estimators.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace greytensor {

inline constexpr const char* kVersion = "greytensor-0.1.0";

struct ShapeSpec {
  std::string kind = "ball";
  std::vector<double> center{0.0, 0.0};
  double radius = 1.0;
  std::vector<double> semi_axes{1.0, 0.5};
  std::vector<double> half_widths{1.0, 0.5};
  double corner_radius = 0.25;
  std::vector<double> normal{1.0, 0.0};
  double offset = 0.0;
};

struct PsfSpec {
  std::string kind = "gaussian";
  int dim = 2;
  double radius = 1.0;
};

struct EstimatorSpec {
  /// volume, surface2, surface3 or curvature.
  std::string kind = "volume";
  int r = 0;
  int s = 0;
  double beta = 0.5;
  double omega = 0.9;
  double epsilon = 0.01;
  std::string g = "linear";
  /// monte_carlo (random lattice translations) or exact_mean (2D disks only).
  std::string mode = "monte_carlo";
};

struct CalibrationSpec {
  double radius = 1.0;
  std::vector<double> a_schedule{1.0 / 16, 1.0 / 32, 1.0 / 64};
};

struct VerifySpec {
  /// indicator or bump.
  std::string weight = "indicator";
  double lo = 0.1;
  double hi = 0.9;
  double width = 0.02;
  double a = 1.0 / 128;
  int subgrid = 8;
  bool second_order = false;
  std::vector<double> a_schedule{1.0 / 16, 1.0 / 32, 1.0 / 64};
};

/// Tolerance gates; an absent gate is not checked.
struct Gates {
  std::optional<double> abs_tol;
  std::optional<double> rel_tol;
  std::optional<double> min_slope;
  std::optional<double> first_order;
  std::optional<double> second_order;
  std::optional<double> mcmullen_oracle;
  std::optional<double> mcmullen_sigmas;
};

struct OutputSpec {
  std::string csv;
  std::string svg;
  std::string image;
};

struct ExperimentConfig {
  ShapeSpec shape;
  PsfSpec psf;
  EstimatorSpec estimator;
  /// Lattice basis columns; empty means the standard lattice.
  std::vector<std::vector<double>> basis;
  std::vector<double> a_schedule{1.0 / 16, 1.0 / 32, 1.0 / 64};
  int translations = 32;
  std::uint64_t seed = 1;
  CalibrationSpec calibration;
  VerifySpec verify;
  Gates gates;
  OutputSpec output;

  /// Throws ConfigError on any invalid field.
  void validate() const;
};

[[nodiscard]] ExperimentConfig config_from_json(const nlohmann::json& j);
[[nodiscard]] ExperimentConfig load_config(const std::filesystem::path& path);

[[nodiscard]] Shape build_shape(const ShapeSpec& spec);
[[nodiscard]] Psf build_psf(const PsfSpec& spec);
[[nodiscard]] Mat build_basis(const ExperimentConfig& config);

/// Minkowski label estimated by the configured estimator.
[[nodiscard]] TensorIndex target_index(const EstimatorSpec& spec, int dim);

/// Component label: 1-based axis digits ("11", "12"), "0" for scalars.
[[nodiscard]] std::string component_label(const MultiIndex& idx);

struct SweepRow {
  std::string kind;
  std::string estimator;
  std::string shape;
  std::string component;
  double a = 0.0;
  std::uint64_t seed = 0;
  int translations = 0;
  double estimate = 0.0;
  double stderr_ = 0.0;
  double oracle = 0.0;
  double bias = 0.0;
};

struct GateResult {
  std::string name;
  bool passed = true;
  std::string detail;
};

struct SweepReport {
  std::vector<SweepRow> rows;
  std::vector<GateResult> gates;
  [[nodiscard]] bool passed() const;
};

/// Per-a estimates with oracle and bias, then one slope row per component.
[[nodiscard]] SweepReport run_sweep(const ExperimentConfig& config);
/// Estimate at the first a of the schedule (point rows only).
[[nodiscard]] SweepReport run_estimate(const ExperimentConfig& config);
/// Estimate from a stored PGM or raw image; the oracle column is NaN.
[[nodiscard]] SweepReport run_estimate_image(const ExperimentConfig& config, const std::filesystem::path& image);

void write_sweep_csv(std::ostream& os, const SweepReport& report);

struct VerifyRow {
  std::string theorem;
  std::string shape;
  double a = 0.0;
  std::uint64_t seed = 0;
  int translations = 0;
  double lhs = 0.0;
  double rhs = 0.0;
  double rel_diff = 0.0;
};

struct VerifyReport {
  std::vector<VerifyRow> rows;
  std::vector<GateResult> gates;
  [[nodiscard]] bool passed() const;
};

[[nodiscard]] VerifyReport run_verify(const ExperimentConfig& config);
void write_verify_csv(std::ostream& os, const VerifyReport& report);

struct CalibrationReport {
  CurvatureCalibration calibration;
  /// Second-order limit of the raw weight on the calibration disk.
  double theory = 0.0;
  std::vector<GateResult> gates;
  [[nodiscard]] bool passed() const;
};

[[nodiscard]] CalibrationReport run_calibrate(const ExperimentConfig& config);
void write_calibration_csv(std::ostream& os, const ExperimentConfig& config, const CalibrationReport& report);

struct McMullenRow {
  std::string source;
  std::string shape;
  int k = 0;
  int r = 0;
  double a = 0.0;
  std::uint64_t seed = 0;
  int translations = 0;
  double residual = 0.0;
  double threshold = 0.0;
  bool passed = true;
};

struct McMullenReport {
  std::vector<McMullenRow> rows;
  [[nodiscard]] bool passed() const;
};

/// Oracle residuals for every relation with k + r <= 3, and residuals of
/// estimated families (first a of the schedule) against 3 standard errors for
/// relations whose members are all estimable.
[[nodiscard]] McMullenReport run_mcmullen_check(const ExperimentConfig& config);
void write_mcmullen_csv(std::ostream& os, const McMullenReport& report);

/// Renders the shape at the first a of the schedule (translation 0 of the seed).
[[nodiscard]] GreyImage run_render(const ExperimentConfig& config);

/// Log-log SVG chart of |bias| against a from sweep CSV text. Throws
/// ConfigError on schema mismatch or when there is nothing to plot.
[[nodiscard]] std::string emit_plot(const std::string& csv_text);

}  // namespace greytensor
