#include "greytensor/harness.hpp"
#include "greytensor/image_io.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

using namespace greytensor;

namespace {

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> translations;
  std::vector<double> a_schedule;
  std::optional<std::string> estimator;
  std::optional<std::string> mode;
  std::optional<int> r;
  std::optional<int> s;
  std::optional<double> beta;
  std::optional<double> omega;
  std::optional<double> epsilon;
  std::optional<std::string> g;
  std::optional<std::string> shape;
  std::optional<double> radius;
  std::optional<std::string> psf;
  std::optional<std::string> csv;
  std::optional<std::string> svg;
  std::optional<std::string> image;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("-c,--config", o.config, "JSON experiment configuration");
  cmd->add_option("--seed", o.seed, "Random lattice translation seed");
  cmd->add_option("--translations", o.translations, "Number of random lattice translations");
  cmd->add_option("--a", o.a_schedule, "Lattice spacings, strictly decreasing");
  cmd->add_option("--estimator", o.estimator, "volume, surface2, surface3 or curvature");
  cmd->add_option("--mode", o.mode, "monte_carlo or exact_mean");
  cmd->add_option("--r", o.r, "Position exponent");
  cmd->add_option("--s", o.s, "Normal exponent");
  cmd->add_option("--beta", o.beta, "Lower threshold");
  cmd->add_option("--omega", o.omega, "Upper threshold (surface2)");
  cmd->add_option("--epsilon", o.epsilon, "Neighbor window widening (surface3)");
  cmd->add_option("--g", o.g, "Curvature weight: linear, step or zero");
  cmd->add_option("--shape", o.shape, "ball, ellipse, rounded_box or halfspace");
  cmd->add_option("--radius", o.radius, "Ball radius");
  cmd->add_option("--psf", o.psf, "gaussian or ball_indicator");
  cmd->add_option("--csv", o.csv, "CSV output path (default stdout)");
  cmd->add_option("--svg", o.svg, "SVG plot output path");
}

ExperimentConfig resolve(const Overrides& o) {
  ExperimentConfig c = o.config.empty() ? ExperimentConfig{} : load_config(o.config);
  if (o.seed) c.seed = *o.seed;
  if (o.translations) c.translations = *o.translations;
  if (!o.a_schedule.empty()) c.a_schedule = o.a_schedule;
  if (o.estimator) c.estimator.kind = *o.estimator;
  if (o.mode) c.estimator.mode = *o.mode;
  if (o.r) c.estimator.r = *o.r;
  if (o.s) c.estimator.s = *o.s;
  if (o.beta) c.estimator.beta = *o.beta;
  if (o.omega) c.estimator.omega = *o.omega;
  if (o.epsilon) c.estimator.epsilon = *o.epsilon;
  if (o.g) c.estimator.g = *o.g;
  if (o.shape) c.shape.kind = *o.shape;
  if (o.radius) c.shape.radius = *o.radius;
  if (o.psf) c.psf.kind = *o.psf;
  if (o.csv) c.output.csv = *o.csv;
  if (o.svg) c.output.svg = *o.svg;
  if (o.image) c.output.image = *o.image;
  return c;
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError(fmt::format("cannot open '{}' for writing", path));
  out << text;
}

int report_gates(const std::vector<GateResult>& gates) {
  bool ok = true;
  for (const auto& g : gates) {
    fmt::print(stderr, "{} {}: {}\n", g.passed ? "PASS" : "FAIL", g.name, g.detail);
    ok = ok && g.passed;
  }
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Minkowski tensor estimation from blurred grey-scale images"};
  app.require_subcommand(1);
  Overrides o;

  auto* render_cmd = app.add_subcommand("render", "Render a blurred image of the configured shape");
  add_common(render_cmd, o);
  render_cmd->add_option("--out", o.image, "Image path (.pgm for 16-bit PGM, otherwise float32 raw)");

  auto* estimate_cmd = app.add_subcommand("estimate", "Estimate a tensor at the first a of the schedule");
  add_common(estimate_cmd, o);
  std::string input_image;
  estimate_cmd->add_option("--image", input_image, "Estimate from a stored PGM or raw image instead");

  auto* sweep_cmd = app.add_subcommand("sweep", "Resolution sweep with oracle, bias and slope");
  add_common(sweep_cmd, o);
  auto* calibrate_cmd = app.add_subcommand("calibrate", "Calibrate the curvature constant C_g");
  add_common(calibrate_cmd, o);
  auto* verify_cmd = app.add_subcommand("verify", "Check the first- and second-order limits");
  add_common(verify_cmd, o);
  auto* mcmullen_cmd = app.add_subcommand("mcmullen-check", "Residuals of the McMullen relations");
  add_common(mcmullen_cmd, o);

  auto* plot_cmd = app.add_subcommand("plot", "Log-log SVG of |bias| against a from a sweep CSV");
  std::string plot_in;
  std::string plot_out;
  plot_cmd->add_option("--in", plot_in, "Sweep CSV")->required();
  plot_cmd->add_option("--out", plot_out, "SVG output path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (plot_cmd->parsed()) {
      std::ifstream in(plot_in);
      if (!in) throw ConfigError(fmt::format("cannot open '{}'", plot_in));
      std::stringstream ss;
      ss << in.rdbuf();
      const std::string svg = emit_plot(ss.str());
      write_text(plot_out, svg);
      return 0;
    }
    const ExperimentConfig cfg = resolve(o);
    if (render_cmd->parsed()) {
      if (cfg.output.image.empty()) throw ConfigError("render needs --out or output.image");
      const GreyImage img = run_render(cfg);
      const std::filesystem::path path(cfg.output.image);
      if (path.extension() == ".pgm")
        write_pgm(path, img);
      else
        write_raw(path, img);
      if (img.degraded) fmt::print(stderr, "warning: some samples could not be certified to 1e-6\n");
      return 0;
    }
    if (estimate_cmd->parsed()) {
      const SweepReport rep = input_image.empty() ? run_estimate(cfg) : run_estimate_image(cfg, input_image);
      std::ostringstream os;
      write_sweep_csv(os, rep);
      write_text(cfg.output.csv, os.str());
      return report_gates(rep.gates);
    }
    if (sweep_cmd->parsed()) {
      const SweepReport rep = run_sweep(cfg);
      std::ostringstream os;
      write_sweep_csv(os, rep);
      write_text(cfg.output.csv, os.str());
      if (!cfg.output.svg.empty()) write_text(cfg.output.svg, emit_plot(os.str()));
      return report_gates(rep.gates);
    }
    if (calibrate_cmd->parsed()) {
      const CalibrationReport rep = run_calibrate(cfg);
      std::ostringstream os;
      write_calibration_csv(os, cfg, rep);
      write_text(cfg.output.csv, os.str());
      return report_gates(rep.gates);
    }
    if (verify_cmd->parsed()) {
      const VerifyReport rep = run_verify(cfg);
      std::ostringstream os;
      write_verify_csv(os, rep);
      write_text(cfg.output.csv, os.str());
      return report_gates(rep.gates);
    }
    if (mcmullen_cmd->parsed()) {
      const McMullenReport rep = run_mcmullen_check(cfg);
      std::ostringstream os;
      write_mcmullen_csv(os, rep);
      write_text(cfg.output.csv, os.str());
      return rep.passed() ? 0 : 1;
    }
  } catch (const ConfigError& e) {
    fmt::print(stderr, "config error: {}\n", e.what());
    return 2;
  } catch (const DomainError& e) {
    fmt::print(stderr, "domain error: {}\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 2;
  }
  return 0;
}
