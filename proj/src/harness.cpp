#include "greytensor/harness.hpp"

#include "greytensor/image_io.hpp"
#include "greytensor/mcmullen.hpp"
#include "greytensor/numerics.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

namespace greytensor {

namespace {

using nlohmann::json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_keys(const json& j, const std::string& where, const std::set<std::string>& allowed) {
  if (!j.is_object()) throw ConfigError(fmt::format("'{}' must be a JSON object", where));
  for (const auto& [key, value] : j.items())
    if (!allowed.contains(key)) throw ConfigError(fmt::format("unknown key '{}' in '{}'", key, where));
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("field '{}': {}", key, e.what()));
  }
}

void read_opt(const json& j, const char* key, std::optional<double>& out) {
  if (!j.contains(key)) return;
  double v = 0.0;
  read(j, key, v);
  out = v;
}

Vec to_vec(const std::vector<double>& v, const char* what) {
  if (v.empty() || v.size() > static_cast<std::size_t>(kMaxDim))
    throw ConfigError(fmt::format("{} must have 1 to {} entries", what, kMaxDim));
  Vec out(static_cast<int>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<int>(i)] = v[i];
  return out;
}

std::string fmt_double(double v) {
  if (std::isnan(v)) return "nan";
  return fmt::format("{:.17g}", v);
}

std::string shape_name(const Shape& s) { return to_string(s.kind()); }

bool is_disk(const Shape& s) { return s.kind() == ShapeKind::ball && s.dim() == 2; }

void check_schedule(const std::vector<double>& sched, const char* what) {
  if (sched.empty()) throw ConfigError(fmt::format("{} is empty", what));
  for (std::size_t i = 0; i < sched.size(); ++i) {
    if (!(sched[i] > 0.0)) throw ConfigError(fmt::format("{} entries must be positive", what));
    if (i > 0 && !(sched[i] < sched[i - 1])) throw ConfigError(fmt::format("{} must be strictly decreasing", what));
  }
}

WeightSpec make_weight(const ExperimentConfig& cfg, const Psf& psf, const Mat& basis, int dim) {
  const auto& e = cfg.estimator;
  if (e.kind == "volume") return volume_weight(dim, e.r, e.beta);
  if (e.kind == "surface2") return surface_weight2(psf.profile(), basis, e.r, e.s, e.beta, e.omega);
  if (e.kind == "surface3") return surface_weight3(psf.profile(), basis, e.r, e.s, e.beta, e.epsilon);
  if (e.kind == "curvature") return curvature_weight(dim, e.r, GFunction::from_name(e.g, e.beta));
  throw ConfigError(fmt::format("unknown estimator kind '{}'", e.kind));
}

CurvatureCalibration calibration_for(const ExperimentConfig& cfg, const Psf& psf) {
  const Shape disk = Shape::ball(Vec::Zero(psf.dim()), cfg.calibration.radius);
  return calibrate_curvature(disk, psf, GFunction::from_name(cfg.estimator.g, cfg.estimator.beta), cfg.estimator.beta,
                             cfg.calibration.a_schedule);
}

struct Context {
  Shape shape;
  Psf psf;
  Mat basis;
  std::optional<CurvatureCalibration> calib;
};

Context prepare(const ExperimentConfig& cfg) {
  cfg.validate();
  Context ctx{build_shape(cfg.shape), build_psf(cfg.psf), build_basis(cfg), std::nullopt};
  if (ctx.shape.dim() != ctx.psf.dim()) throw ConfigError("shape and psf dimensions differ");
  const auto& e = cfg.estimator;
  // Fail on invalid estimator parameters before any compute.
  const WeightSpec spec = make_weight(cfg, ctx.psf, ctx.basis, ctx.shape.dim());
  spec.validate(ctx.psf.profile());
  if (e.kind == "surface2")
    require_surface_conditions(ctx.psf, e.beta, e.omega, ctx.basis.colwise().norm().maxCoeff());
  if (e.kind == "surface3")
    require_surface_conditions(ctx.psf, e.beta, 1.0 - e.beta, ctx.basis.colwise().norm().maxCoeff() + e.epsilon);
  if (e.mode == "exact_mean" && !is_disk(ctx.shape)) throw ConfigError("exact_mean mode needs a 2D disk");
  if (e.kind == "curvature") ctx.calib = calibration_for(cfg, ctx.psf);
  return ctx;
}

EstimateResult estimate_at(const ExperimentConfig& cfg, const Context& ctx, double a) {
  const auto& e = cfg.estimator;
  if (e.mode == "exact_mean") {
    SymTensor t;
    if (e.kind == "volume") {
      t = exact_mean_volume(ctx.shape, ctx.psf, a, e.r, e.beta);
    } else if (e.kind == "curvature") {
      t = exact_mean_curvature(ctx.shape, ctx.psf, a, e.r, *ctx.calib);
    } else {
      t = exact_mean_estimate(ctx.shape, ctx.psf, ctx.basis, a, make_weight(cfg, ctx.psf, ctx.basis, 2));
    }
    EstimateResult res;
    res.tensor = t;
    res.stderr_ = SymTensor(t.dim(), t.rank());
    res.a = a;
    res.seed = cfg.seed;
    res.translations = 0;
    return res;
  }
  if (e.kind == "volume") return volume_tensor_est(ctx.shape, ctx.psf, ctx.basis, a, e.r, e.beta, cfg.seed, cfg.translations);
  if (e.kind == "surface2")
    return surface_tensor_est2(ctx.shape, ctx.psf, ctx.basis, a, e.r, e.s, e.beta, e.omega, cfg.seed, cfg.translations);
  if (e.kind == "surface3")
    return surface_tensor_est3(ctx.shape, ctx.psf, ctx.basis, a, e.r, e.s, e.beta, e.epsilon, cfg.seed,
                               cfg.translations);
  return curvature_tensor_est_mc(ctx.shape, ctx.psf, ctx.basis, a, e.r, *ctx.calib, cfg.seed, cfg.translations);
}

void append_point_rows(SweepReport& rep, const ExperimentConfig& cfg, const std::string& shape,
                       const EstimateResult& res, const std::optional<SymTensor>& oracle) {
  const auto& idx = res.tensor.indices();
  for (std::size_t c = 0; c < res.tensor.size(); ++c) {
    SweepRow row;
    row.kind = "point";
    row.estimator = cfg.estimator.kind;
    row.shape = shape;
    row.component = component_label(idx[c]);
    row.a = res.a;
    row.seed = cfg.seed;
    row.translations = res.translations;
    row.estimate = res.tensor[c];
    row.stderr_ = res.stderr_[c];
    row.oracle = oracle ? (*oracle)[c] : kNaN;
    row.bias = oracle ? row.estimate - row.oracle : kNaN;
    rep.rows.push_back(row);
  }
}

void apply_tolerance_gates(SweepReport& rep, const ExperimentConfig& cfg) {
  if (!cfg.gates.abs_tol && !cfg.gates.rel_tol) return;
  const double smallest = cfg.a_schedule.back();
  const double abs_tol = cfg.gates.abs_tol.value_or(0.0);
  const double rel_tol = cfg.gates.rel_tol.value_or(0.0);
  // Relative to the max-norm of the oracle tensor, so vanishing components are
  // held to the scale of the whole tensor.
  double scale = 0.0;
  for (const auto& row : rep.rows)
    if (row.kind == "point" && row.a == smallest && std::isfinite(row.oracle)) scale = std::max(scale, std::abs(row.oracle));
  const double allowed = abs_tol + rel_tol * scale;
  for (const auto& row : rep.rows) {
    if (row.kind != "point" || row.a != smallest) continue;
    GateResult g;
    g.name = fmt::format("bias[{}] at a={}", row.component, row.a);
    g.passed = std::abs(row.bias) <= allowed;
    g.detail = fmt::format("|bias| = {:.3e}, allowed {:.3e}", std::abs(row.bias), allowed);
    rep.gates.push_back(g);
  }
}

bool all_passed(const std::vector<GateResult>& gates) {
  return std::all_of(gates.begin(), gates.end(), [](const GateResult& g) { return g.passed; });
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(line);
  while (std::getline(in, cur, ',')) out.push_back(cur);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

void ExperimentConfig::validate() const {
  check_schedule(a_schedule, "a_schedule");
  if (translations < 1) throw ConfigError("translations must be at least 1");
  const auto& e = estimator;
  if (e.kind != "volume" && e.kind != "surface2" && e.kind != "surface3" && e.kind != "curvature")
    throw ConfigError(fmt::format("unknown estimator kind '{}'", e.kind));
  if (e.mode != "monte_carlo" && e.mode != "exact_mean")
    throw ConfigError(fmt::format("unknown estimator mode '{}'", e.mode));
  if (e.r < 0 || e.s < 0 || e.r + e.s > kOracleMaxRank) throw ConfigError("estimator exponents out of range");
  if ((e.kind == "volume" || e.kind == "curvature") && e.s != 0)
    throw ConfigError("volume and curvature estimators take s = 0");
  if (e.kind == "curvature") check_schedule(calibration.a_schedule, "calibration.a_schedule");
  if (verify.subgrid < 1) throw ConfigError("verify.subgrid must be positive");
  if (verify.weight != "indicator" && verify.weight != "bump")
    throw ConfigError(fmt::format("unknown verify weight '{}'", verify.weight));
  if (!(verify.a > 0.0)) throw ConfigError("verify.a must be positive");
  if (verify.second_order) check_schedule(verify.a_schedule, "verify.a_schedule");
}

ExperimentConfig config_from_json(const json& j) {
  check_keys(j, "config", {"shape", "psf", "estimator", "basis", "a_schedule", "translations", "seed", "calibration",
                           "verify", "gates", "output"});
  ExperimentConfig c;
  if (j.contains("shape")) {
    const auto& s = j.at("shape");
    check_keys(s, "shape", {"kind", "center", "radius", "semi_axes", "half_widths", "corner_radius", "normal", "offset"});
    read(s, "kind", c.shape.kind);
    read(s, "center", c.shape.center);
    read(s, "radius", c.shape.radius);
    read(s, "semi_axes", c.shape.semi_axes);
    read(s, "half_widths", c.shape.half_widths);
    read(s, "corner_radius", c.shape.corner_radius);
    read(s, "normal", c.shape.normal);
    read(s, "offset", c.shape.offset);
  }
  if (j.contains("psf")) {
    const auto& p = j.at("psf");
    check_keys(p, "psf", {"kind", "dim", "radius"});
    read(p, "kind", c.psf.kind);
    read(p, "dim", c.psf.dim);
    read(p, "radius", c.psf.radius);
  }
  if (j.contains("estimator")) {
    const auto& e = j.at("estimator");
    check_keys(e, "estimator", {"kind", "r", "s", "beta", "omega", "epsilon", "g", "mode"});
    read(e, "kind", c.estimator.kind);
    read(e, "r", c.estimator.r);
    read(e, "s", c.estimator.s);
    read(e, "beta", c.estimator.beta);
    read(e, "omega", c.estimator.omega);
    read(e, "epsilon", c.estimator.epsilon);
    read(e, "g", c.estimator.g);
    read(e, "mode", c.estimator.mode);
  }
  read(j, "basis", c.basis);
  read(j, "a_schedule", c.a_schedule);
  read(j, "translations", c.translations);
  read(j, "seed", c.seed);
  if (j.contains("calibration")) {
    const auto& k = j.at("calibration");
    check_keys(k, "calibration", {"radius", "a_schedule"});
    read(k, "radius", c.calibration.radius);
    read(k, "a_schedule", c.calibration.a_schedule);
  }
  if (j.contains("verify")) {
    const auto& v = j.at("verify");
    check_keys(v, "verify", {"weight", "lo", "hi", "width", "a", "subgrid", "second_order", "a_schedule"});
    read(v, "weight", c.verify.weight);
    read(v, "lo", c.verify.lo);
    read(v, "hi", c.verify.hi);
    read(v, "width", c.verify.width);
    read(v, "a", c.verify.a);
    read(v, "subgrid", c.verify.subgrid);
    read(v, "second_order", c.verify.second_order);
    read(v, "a_schedule", c.verify.a_schedule);
  }
  if (j.contains("gates")) {
    const auto& g = j.at("gates");
    check_keys(g, "gates",
               {"abs_tol", "rel_tol", "min_slope", "first_order", "second_order", "mcmullen_oracle", "mcmullen_sigmas"});
    read_opt(g, "abs_tol", c.gates.abs_tol);
    read_opt(g, "rel_tol", c.gates.rel_tol);
    read_opt(g, "min_slope", c.gates.min_slope);
    read_opt(g, "first_order", c.gates.first_order);
    read_opt(g, "second_order", c.gates.second_order);
    read_opt(g, "mcmullen_oracle", c.gates.mcmullen_oracle);
    read_opt(g, "mcmullen_sigmas", c.gates.mcmullen_sigmas);
  }
  if (j.contains("output")) {
    const auto& o = j.at("output");
    check_keys(o, "output", {"csv", "svg", "image"});
    read(o, "csv", c.output.csv);
    read(o, "svg", c.output.svg);
    read(o, "image", c.output.image);
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open config '{}'", path.string()));
  try {
    return config_from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw ConfigError(fmt::format("config '{}': {}", path.string(), e.what()));
  }
}

Shape build_shape(const ShapeSpec& s) {
  const Vec center = to_vec(s.center, "shape.center");
  if (s.kind == "ball") return Shape::ball(center, s.radius);
  if (s.kind == "ellipse") {
    if (s.semi_axes.size() != 2) throw ConfigError("shape.semi_axes needs two entries");
    return Shape::ellipse(center, s.semi_axes[0], s.semi_axes[1]);
  }
  if (s.kind == "rounded_box") return Shape::rounded_box(center, to_vec(s.half_widths, "shape.half_widths"), s.corner_radius);
  if (s.kind == "halfspace") return Shape::halfspace(to_vec(s.normal, "shape.normal"), s.offset);
  throw ConfigError(fmt::format("unknown shape kind '{}'", s.kind));
}

Psf build_psf(const PsfSpec& p) {
  switch (psf_kind_from_string(p.kind)) {
    case PsfKind::gaussian: return Psf::gaussian(p.dim);
    case PsfKind::ball_indicator: return Psf::ball_indicator(p.dim, p.radius);
  }
  throw ConfigError("unknown psf kind");
}

Mat build_basis(const ExperimentConfig& cfg) {
  const int d = cfg.psf.dim;
  if (cfg.basis.empty()) return Mat::Identity(d, d);
  if (cfg.basis.size() != static_cast<std::size_t>(d)) throw ConfigError("basis needs one column per dimension");
  Mat B(d, d);
  for (int j = 0; j < d; ++j) {
    if (cfg.basis[j].size() != static_cast<std::size_t>(d)) throw ConfigError("basis column has the wrong length");
    for (int i = 0; i < d; ++i) B(i, j) = cfg.basis[j][i];
  }
  if (std::abs(std::abs(B.determinant()) - 1.0) > 1e-12) throw ConfigError("basis must have unit covolume");
  return B;
}

TensorIndex target_index(const EstimatorSpec& e, int dim) {
  if (e.kind == "volume") return {dim, e.r, 0};
  if (e.kind == "curvature") return {dim - 2, e.r, 0};
  return {dim - 1, e.r, e.s};
}

std::string component_label(const MultiIndex& idx) {
  if (idx.empty()) return "0";
  std::string s;
  for (int i : idx) s += std::to_string(i + 1);
  return s;
}

bool SweepReport::passed() const { return all_passed(gates); }
bool VerifyReport::passed() const { return all_passed(gates); }
bool CalibrationReport::passed() const { return all_passed(gates); }

bool McMullenReport::passed() const {
  return std::all_of(rows.begin(), rows.end(), [](const McMullenRow& r) { return r.passed; });
}

SweepReport run_sweep(const ExperimentConfig& cfg) {
  const Context ctx = prepare(cfg);
  const SymTensor oracle = minkowski_tensor_oracle(ctx.shape, target_index(cfg.estimator, ctx.shape.dim()));
  SweepReport rep;
  for (double a : cfg.a_schedule) append_point_rows(rep, cfg, shape_name(ctx.shape), estimate_at(cfg, ctx, a), oracle);
  std::stable_sort(rep.rows.begin(), rep.rows.end(), [](const SweepRow& x, const SweepRow& y) {
    if (x.component != y.component) return x.component < y.component;
    return x.a > y.a;
  });

  // One slope row per component with nonzero bias at every a.
  std::vector<SweepRow> slopes;
  if (cfg.a_schedule.size() >= 2) {
    std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> series;
    for (const auto& row : rep.rows) {
      series[row.component].first.push_back(row.a);
      series[row.component].second.push_back(std::abs(row.bias));
    }
    for (const auto& [comp, xy] : series) {
      if (std::any_of(xy.second.begin(), xy.second.end(), [](double b) { return !(b > 0.0); })) continue;
      SweepRow row;
      row.kind = "slope";
      row.estimator = cfg.estimator.kind;
      row.shape = shape_name(ctx.shape);
      row.component = comp;
      row.a = kNaN;
      row.seed = cfg.seed;
      row.translations = cfg.estimator.mode == "exact_mean" ? 0 : cfg.translations;
      row.estimate = num::loglog_slope(xy.first, xy.second);
      row.stderr_ = kNaN;
      row.oracle = kNaN;
      row.bias = kNaN;
      slopes.push_back(row);
      if (cfg.gates.min_slope) {
        GateResult g;
        g.name = fmt::format("slope[{}]", comp);
        g.passed = row.estimate >= *cfg.gates.min_slope;
        g.detail = fmt::format("slope {:.4f}, required >= {}", row.estimate, *cfg.gates.min_slope);
        rep.gates.push_back(g);
      }
    }
  }
  apply_tolerance_gates(rep, cfg);
  rep.rows.insert(rep.rows.end(), slopes.begin(), slopes.end());
  return rep;
}

SweepReport run_estimate(const ExperimentConfig& cfg) {
  ExperimentConfig one = cfg;
  one.a_schedule = {cfg.a_schedule.front()};
  const Context ctx = prepare(one);
  const SymTensor oracle = minkowski_tensor_oracle(ctx.shape, target_index(one.estimator, ctx.shape.dim()));
  SweepReport rep;
  append_point_rows(rep, one, shape_name(ctx.shape), estimate_at(one, ctx, one.a_schedule.front()), oracle);
  apply_tolerance_gates(rep, one);
  return rep;
}

SweepReport run_estimate_image(const ExperimentConfig& cfg, const std::filesystem::path& path) {
  const std::string ext = path.extension().string();
  const GreyImage img = ext == ".pgm" ? read_pgm(path) : read_raw(path);
  ExperimentConfig one = cfg;
  one.psf.dim = img.lattice().dim();
  const Psf psf = build_psf(one.psf);
  const Mat basis = img.lattice().basis;
  const int d = img.lattice().dim();
  const WeightSpec spec = make_weight(one, psf, basis, d);
  spec.validate(psf.profile());
  const auto& e = one.estimator;
  if (e.kind == "surface2") require_surface_conditions(psf, e.beta, e.omega, basis.colwise().norm().maxCoeff());
  if (e.kind == "surface3")
    require_surface_conditions(psf, e.beta, 1.0 - e.beta, basis.colwise().norm().maxCoeff() + e.epsilon);
  SymTensor t = local_estimate(img, spec);
  if (e.kind == "curvature") {
    const CurvatureCalibration cal = calibration_for(one, psf);
    const SymTensor vol = e.r >= 2 ? local_estimate(img, volume_weight(d, e.r - 2, 0.5)) : SymTensor(d, 0);
    t = curvature_tensor_est(t, e.r, cal, vol);
  }
  EstimateResult res;
  res.tensor = t;
  res.stderr_ = SymTensor(t.dim(), t.rank());
  res.a = img.lattice().a;
  res.translations = 1;
  res.seed = one.seed;
  SweepReport rep;
  append_point_rows(rep, one, "image", res, std::nullopt);
  return rep;
}

void write_sweep_csv(std::ostream& os, const SweepReport& rep) {
  os << "version,kind,estimator,shape,component,a,seed,translations,estimate,stderr,oracle,bias\n";
  for (const auto& r : rep.rows)
    os << fmt::format("{},{},{},{},{},{},{},{},{},{},{},{}\n", kVersion, r.kind, r.estimator, r.shape, r.component,
                      fmt_double(r.a), r.seed, r.translations, fmt_double(r.estimate), fmt_double(r.stderr_),
                      fmt_double(r.oracle), fmt_double(r.bias));
}

VerifyReport run_verify(const ExperimentConfig& cfg) {
  cfg.validate();
  const Shape shape = build_shape(cfg.shape);
  const Psf psf = build_psf(cfg.psf);
  const Mat basis = build_basis(cfg);
  const int d = shape.dim();
  const auto& v = cfg.verify;
  const WeightSpec spec = v.weight == "bump" ? bump_weight(d, v.lo, v.hi, v.width) : indicator_weight(d, v.lo, v.hi);
  VerifyReport rep;
  auto add = [&](const std::string& theorem, double a, double lhs, double rhs, const std::optional<double>& tol) {
    const double diff = std::abs(lhs - rhs);
    VerifyRow row{theorem, shape_name(shape), a, cfg.seed, 0, lhs, rhs, rhs == 0.0 ? diff : diff / std::abs(rhs)};
    rep.rows.push_back(row);
    if (tol) {
      GateResult g;
      g.name = fmt::format("{} at a={}", theorem, a);
      g.passed = row.rel_diff < *tol;
      g.detail = fmt::format("rel_diff {:.3e}, required < {}", row.rel_diff, *tol);
      rep.gates.push_back(g);
    }
  };

  const double rhs1 = first_order_rhs(shape, psf, basis, spec)[0];
  const double lhs1 = first_order_lhs(shape, psf, basis, spec, v.a, {v.subgrid})[0];
  add("first_order", v.a, lhs1, rhs1, cfg.gates.first_order);

  if (v.second_order) {
    if (!is_disk(shape)) throw ConfigError("the second-order check needs a 2D disk");
    const SecondOrderTerms rhs2 = second_order_rhs_disk(shape, psf, basis, spec);
    const SecondOrderEmpirical emp = second_order_empirical(shape, psf, basis, spec, v.a_schedule, rhs1);
    if (!emp.converging) {
      GateResult g{"second_order convergence", false, "brackets do not approach the extrapolated value"};
      rep.gates.push_back(g);
    }
    add("second_order", 0.0, emp.extrapolated, rhs2.total()[0], cfg.gates.second_order);
    if (psf.kind() == PsfKind::gaussian && d == 2) {
      const double kappa = 1.0 / shape.extents()[0];
      add("theta_Q", 0.0, theta_Q(0.3, 0.2, 0.7, kappa, psf), theta_Q_quadrature(0.3, 0.2, 0.7, kappa, psf),
          std::optional<double>(1e-8));
      const WeightSpec single = indicator_weight(2, v.lo, v.hi);
      const std::vector<Vec> zero{Vec::Zero(2)};
      const Vec u = (Vec(2) << 1.0, 0.0).finished();
      const SecondOrderTerms tb = t_bounds_psi(single, zero, u, kappa, psf);
      add("psi0", 0.0, tb.psi0, -0.5 * kappa, std::optional<double>(1e-8));
      add("psi1", 0.0, tb.psi1, -0.5 * kappa, std::optional<double>(1e-8));
    }
  }
  return rep;
}

void write_verify_csv(std::ostream& os, const VerifyReport& rep) {
  os << "version,theorem,shape,a,seed,translations,lhs,rhs,rel_diff\n";
  for (const auto& r : rep.rows)
    os << fmt::format("{},{},{},{},{},{},{},{},{}\n", kVersion, r.theorem, r.shape, fmt_double(r.a), r.seed,
                      r.translations, fmt_double(r.lhs), fmt_double(r.rhs), fmt_double(r.rel_diff));
}

CalibrationReport run_calibrate(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.estimator.kind != "curvature") throw ConfigError("calibrate needs estimator.kind = curvature");
  const Psf psf = build_psf(cfg.psf);
  CalibrationReport rep;
  rep.calibration = calibration_for(cfg, psf);
  const Shape disk = Shape::ball(Vec::Zero(psf.dim()), cfg.calibration.radius);
  const WeightSpec raw = curvature_weight(psf.dim(), 0, rep.calibration.g);
  rep.theory = second_order_rhs_disk(disk, psf, Mat::Identity(2, 2), raw).total()[0] /
               curvature_tensor_oracle(disk, 0)[0];
  if (cfg.gates.rel_tol) {
    const double rel = std::abs(rep.calibration.C_g - rep.theory) / std::abs(rep.theory);
    rep.gates.push_back({"C_g vs theory", rel <= *cfg.gates.rel_tol,
                         fmt::format("rel diff {:.3e}, allowed {}", rel, *cfg.gates.rel_tol)});
  }
  if (rep.calibration.unstable) rep.gates.push_back({"calibration stability", false, "residuals not monotone"});
  return rep;
}

void write_calibration_csv(std::ostream& os, const ExperimentConfig& cfg, const CalibrationReport& rep) {
  const auto& c = rep.calibration;
  os << "version,kind,g,beta,radius,a,seed,translations,value\n";
  auto line = [&](const std::string& kind, double a, double value) {
    os << fmt::format("{},{},{},{},{},{},{},{},{}\n", kVersion, kind, c.g.name(), fmt_double(c.beta),
                      fmt_double(c.disk_radius), fmt_double(a), cfg.seed, 0, fmt_double(value));
  };
  for (std::size_t i = 0; i < c.a_schedule.size(); ++i) line("sample", c.a_schedule[i], c.samples[i]);
  line("C_g", 0.0, c.C_g);
  line("I_g", 0.0, c.I_g);
  line("theory", 0.0, rep.theory);
  line("unstable", 0.0, c.unstable ? 1.0 : 0.0);
}

McMullenReport run_mcmullen_check(const ExperimentConfig& cfg) {
  cfg.validate();
  const Shape shape = build_shape(cfg.shape);
  const Psf psf = build_psf(cfg.psf);
  const Mat basis = build_basis(cfg);
  const int d = shape.dim();
  const double oracle_tol = cfg.gates.mcmullen_oracle.value_or(1e-6);
  const double sigmas = cfg.gates.mcmullen_sigmas.value_or(3.0);
  const TensorFamily family = oracle_family(shape, 3);
  McMullenReport rep;
  std::vector<std::pair<int, int>> relations;
  for (int k = 0; k <= d; ++k)
    for (int r = 0; k + r <= 3; ++r)
      if (!mcmullen_required(k, r, d).empty()) relations.emplace_back(k, r);

  for (const auto& [k, r] : relations) {
    const double res = mcmullen_residual(k, r, family, d);
    rep.rows.push_back({"oracle", shape_name(shape), k, r, 0.0, cfg.seed, 0, res, oracle_tol, res < oracle_tol});
  }

  // Members estimable from images: volume tensors, surface tensors (bias
  // corrected) and curvature tensors without normal exponent.
  auto estimable = [&](const TensorIndex& idx) {
    return (idx.k == d && idx.s == 0) || idx.k == d - 1 || (idx.k == d - 2 && idx.s == 0 && d == 2);
  };
  std::vector<std::pair<int, int>> estimated;
  std::set<TensorIndex> labels;
  for (const auto& [k, r] : relations) {
    const auto req = mcmullen_required(k, r, d);
    if (!std::all_of(req.begin(), req.end(), estimable)) continue;
    estimated.emplace_back(k, r);
    labels.insert(req.begin(), req.end());
  }
  if (estimated.empty()) return rep;

  const double a = cfg.a_schedule.front();
  const auto& e = cfg.estimator;
  const double beta3 = e.kind == "surface3" ? e.beta : 0.1;
  const double vol_beta = e.kind == "volume" ? e.beta : 0.5;
  std::optional<CurvatureCalibration> calib;
  for (const auto& idx : labels)
    if (idx.k == d - 2 && !calib) {
      ExperimentConfig cc = cfg;
      cc.estimator.kind = "curvature";
      cc.estimator.beta = 0.1;
      calib = calibration_for(cc, psf);
    }
  std::map<TensorIndex, WeightSpec> specs;
  for (const auto& idx : labels) {
    if (idx.k == d) specs.emplace(idx, volume_weight(d, idx.r, vol_beta));
    else if (idx.k == d - 1) specs.emplace(idx, surface_weight3(psf.profile(), basis, idx.r, idx.s, beta3, e.epsilon));
    else specs.emplace(idx, curvature_weight(d, idx.r, calib->g));
  }
  require_surface_conditions(psf, beta3, 1.0 - beta3, basis.colwise().norm().maxCoeff() + e.epsilon);

  std::map<std::pair<int, int>, std::vector<SymTensor>> per_translation;
  for (int i = 0; i < cfg.translations; ++i) {
    const Lattice lat = Lattice::random_translation(basis, a, cfg.seed, static_cast<std::uint64_t>(i));
    const GreyImage img = render(shape, psf, lat, window_for(shape, psf, lat, 4));
    TensorFamily fam;
    for (const auto& [idx, spec] : specs) {
      SymTensor t = local_estimate(img, spec);
      if (idx.k == d - 2) {
        const SymTensor vol = idx.r >= 2 ? local_estimate(img, volume_weight(d, idx.r - 2, 0.5)) : SymTensor(d, 0);
        t = curvature_tensor_est(t, idx.r, *calib, vol);
      }
      fam.emplace(idx, t);
    }
    for (const auto& kr : estimated)
      per_translation[kr].push_back(mcmullen_relation(kr.first, kr.second, fam, d).residual);
  }
  for (const auto& kr : estimated) {
    const EstimateResult s = summarize(per_translation[kr], a, cfg.seed);
    double worst = -1.0;
    McMullenRow row{"estimate", shape_name(shape), kr.first, kr.second, a, cfg.seed, cfg.translations, 0.0, 0.0, true};
    for (std::size_t c = 0; c < s.tensor.size(); ++c) {
      const double m = std::abs(s.tensor[c]);
      const double thr = sigmas * s.stderr_[c];
      const double ratio = thr > 0.0 ? m / thr : (m > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
      if (ratio > worst) {
        worst = ratio;
        row.residual = m;
        row.threshold = thr;
      }
    }
    row.passed = worst < 1.0;
    rep.rows.push_back(row);
  }
  return rep;
}

void write_mcmullen_csv(std::ostream& os, const McMullenReport& rep) {
  os << "version,source,shape,k,r,a,seed,translations,residual,threshold,pass\n";
  for (const auto& r : rep.rows)
    os << fmt::format("{},{},{},{},{},{},{},{},{},{},{}\n", kVersion, r.source, r.shape, r.k, r.r, fmt_double(r.a),
                      r.seed, r.translations, fmt_double(r.residual), fmt_double(r.threshold), r.passed ? 1 : 0);
}

GreyImage run_render(const ExperimentConfig& cfg) {
  cfg.validate();
  const Shape shape = build_shape(cfg.shape);
  const Psf psf = build_psf(cfg.psf);
  const Lattice lat = Lattice::random_translation(build_basis(cfg), cfg.a_schedule.front(), cfg.seed, 0);
  if (!shape.bounded()) {
    // Halfspaces are rendered on a fixed window around the origin.
    const int d = shape.dim();
    const long half = static_cast<long>(std::ceil(psf.support_radius())) + 16;
    return render(shape, psf, lat, Window{IVec::Constant(d, -half), IVec::Constant(d, 2 * half + 1)});
  }
  return render(shape, psf, lat, window_for(shape, psf, lat, 4));
}

std::string emit_plot(const std::string& csv_text) {
  std::istringstream in(csv_text);
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("plot: empty CSV");
  const auto header = split_csv(line);
  auto col = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw ConfigError(fmt::format("plot: CSV lacks column '{}'", name));
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t ck = col("kind"), ce = col("estimator"), cc = col("component"), ca = col("a"), cb = col("bias");
  std::map<std::string, std::vector<std::pair<double, double>>> series;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != header.size()) throw ConfigError("plot: row width differs from header");
    if (f[ck] != "point") continue;
    const double a = std::stod(f[ca]);
    const double b = std::abs(std::stod(f[cb]));
    if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(b)) continue;
    series[f[ce] + " " + f[cc]].emplace_back(a, b);
  }
  if (series.empty()) throw ConfigError("plot: no plottable points");

  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = xmin, ymax = -xmin;
  for (const auto& [name, pts] : series)
    for (const auto& [x, y] : pts) {
      xmin = std::min(xmin, std::log10(x));
      xmax = std::max(xmax, std::log10(x));
      ymin = std::min(ymin, std::log10(y));
      ymax = std::max(ymax, std::log10(y));
    }
  xmin = std::floor(xmin);
  xmax = std::max(std::ceil(xmax), xmin + 1);
  ymin = std::floor(ymin);
  ymax = std::max(std::ceil(ymax), ymin + 1);

  constexpr double W = 640, H = 420, L = 70, R = 160, T = 20, B = 50;
  auto px = [&](double lx) { return L + (lx - xmin) / (xmax - xmin) * (W - L - R); };
  auto py = [&](double ly) { return H - B - (ly - ymin) / (ymax - ymin) * (H - T - B); };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2"};

  std::string svg = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0f}\" height=\"{:.0f}\" font-family=\"sans-serif\" "
      "font-size=\"12\">\n",
      W, H);
  svg += fmt::format("<rect x=\"0\" y=\"0\" width=\"{:.0f}\" height=\"{:.0f}\" fill=\"white\"/>\n", W, H);
  svg += fmt::format("<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" height=\"{:.2f}\" fill=\"none\" stroke=\"black\"/>\n",
                     L, T, W - L - R, H - T - B);
  for (double e = xmin; e <= xmax + 1e-9; e += 1.0)
    svg += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\">1e{:.0f}</text>\n", px(e), H - B + 16, e);
  for (double e = ymin; e <= ymax + 1e-9; e += 1.0)
    svg += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"end\">1e{:.0f}</text>\n", L - 6, py(e) + 4, e);
  svg += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\">a</text>\n", (L + W - R) / 2, H - 12);
  svg += fmt::format(
      "<text x=\"16\" y=\"{:.2f}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {:.2f})\">|bias|</text>\n",
      (T + H - B) / 2, (T + H - B) / 2);
  int si = 0;
  for (auto& [name, pts] : series) {
    std::sort(pts.begin(), pts.end());
    const char* color = colors[si % 7];
    std::string path;
    for (const auto& [x, y] : pts)
      path += fmt::format("{}{:.2f},{:.2f}", path.empty() ? "" : " ", px(std::log10(x)), py(std::log10(y)));
    svg += fmt::format("<polyline fill=\"none\" stroke=\"{}\" points=\"{}\"/>\n", color, path);
    for (const auto& [x, y] : pts)
      svg += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"3\" fill=\"{}\"/>\n", px(std::log10(x)),
                         py(std::log10(y)), color);
    svg += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" fill=\"{}\">{}</text>\n", W - R + 10, T + 16 + 16 * si, color,
                       name);
    ++si;
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace greytensor
