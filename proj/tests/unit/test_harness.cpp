#include "greytensor/harness.hpp"
#include "greytensor/image_io.hpp"

#include <doctest.h>

#include <sstream>

using namespace greytensor;

namespace {

std::string sweep_text(const ExperimentConfig& cfg) {
  std::ostringstream os;
  write_sweep_csv(os, run_sweep(cfg));
  return os.str();
}

std::size_t count(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto p = text.find(needle); p != std::string::npos; p = text.find(needle, p + 1)) ++n;
  return n;
}

ExperimentConfig small_volume() {
  ExperimentConfig c;
  c.estimator.kind = "volume";
  c.a_schedule = {1.0 / 8, 1.0 / 16, 1.0 / 32};
  c.translations = 1;
  c.seed = 3;
  return c;
}

}  // namespace

TEST_CASE("config validation") {
  ExperimentConfig c = small_volume();
  CHECK_NOTHROW(c.validate());
  c.a_schedule = {};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.a_schedule = {1.0 / 16, 1.0 / 16};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = small_volume();
  c.translations = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = small_volume();
  c.estimator.kind = "volume";
  c.estimator.s = 1;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("json config") {
  const auto j = nlohmann::json::parse(R"({"estimator": {"kind": "surface2", "r": 1, "s": 1},
                                           "a_schedule": [0.0625, 0.03125], "seed": 5})");
  const ExperimentConfig c = config_from_json(j);
  CHECK(c.estimator.kind == "surface2");
  CHECK(c.estimator.s == 1);
  CHECK(c.seed == 5);
  CHECK(c.a_schedule.size() == 2);
  CHECK_THROWS_AS((void)config_from_json(nlohmann::json::parse(R"({"sead": 5})")), ConfigError);
  CHECK_THROWS_AS((void)config_from_json(nlohmann::json::parse(R"({"estimator": {"rr": 1}})")), ConfigError);
  CHECK_THROWS_AS((void)config_from_json(nlohmann::json::parse(R"({"seed": "five"})")), ConfigError);
  ExperimentConfig sheared;
  sheared.basis = {{1, 0}, {0.5, 1}};
  CHECK(build_basis(sheared)(0, 1) == 0.5);
  sheared.basis = {{2, 0}, {0, 1}};
  CHECK_THROWS_AS((void)build_basis(sheared), ConfigError);
}

TEST_CASE("labels") {
  CHECK(component_label({}) == "0");
  CHECK(component_label({0, 1}) == "12");
  EstimatorSpec e;
  e.kind = "surface3";
  e.r = 1;
  e.s = 1;
  CHECK(target_index(e, 2) == TensorIndex{1, 1, 1});
  e.kind = "curvature";
  e.s = 0;
  CHECK(target_index(e, 2) == TensorIndex{0, 1, 0});
}

TEST_CASE("sweep is deterministic and its bias shrinks") {
  const ExperimentConfig c = small_volume();
  const std::string a = sweep_text(c);
  CHECK(a == sweep_text(c));
  CHECK(a.rfind("version,kind,estimator,shape,component,a,seed,translations,estimate,stderr,oracle,bias\n", 0) == 0);
  ExperimentConfig exact = c;
  exact.estimator.mode = "exact_mean";
  const SweepReport rep = run_sweep(exact);
  std::vector<double> bias;
  for (const auto& row : rep.rows)
    if (row.kind == "point") bias.push_back(std::abs(row.bias));
  REQUIRE(bias.size() == 3);
  CHECK(bias[1] < bias[0]);
  CHECK(bias[2] < bias[1]);
}

TEST_CASE("plot") {
  const std::string csv = sweep_text(small_volume());
  const std::string svg = emit_plot(csv);
  CHECK(count(svg, "<circle") == 3);
  CHECK(svg.find(">a</text>") != std::string::npos);
  CHECK(svg.find(">|bias|</text>") != std::string::npos);
  CHECK(svg == emit_plot(csv));
  CHECK_THROWS_AS((void)emit_plot(""), ConfigError);
  CHECK_THROWS_AS((void)emit_plot("version,kind,estimator,shape,component,a,seed,translations,estimate,stderr,oracle,bias\n"),
                  ConfigError);
  CHECK_THROWS_AS((void)emit_plot("x,y\n1,2\n"), ConfigError);
}

TEST_CASE("verify rows") {
  ExperimentConfig c;
  c.verify.a = 1.0 / 64;
  const VerifyReport rep = run_verify(c);
  REQUIRE_FALSE(rep.rows.empty());
  CHECK(rep.rows[0].theorem == "first_order");
  CHECK(rep.rows[0].rel_diff < 0.01);
  std::ostringstream os;
  write_verify_csv(os, rep);
  CHECK(os.str().rfind("version,theorem,shape,a,seed,translations,lhs,rhs,rel_diff\n", 0) == 0);
}

TEST_CASE("render and estimate from a stored image agree") {
  ExperimentConfig c = small_volume();
  const GreyImage img = run_render(c);
  const auto dir = std::filesystem::temp_directory_path() / "greytensor_test_render.raw";
  write_raw(dir, img);
  const SweepReport from_file = run_estimate_image(c, dir);
  const SweepReport direct = run_estimate(c);
  REQUIRE(from_file.rows.size() == direct.rows.size());
  CHECK(from_file.rows[0].estimate == doctest::Approx(direct.rows[0].estimate).epsilon(1e-6));
  std::filesystem::remove(dir);
}

TEST_CASE("relative gate uses the oracle tensor scale") {
  ExperimentConfig c = small_volume();
  c.estimator.r = 2;
  c.estimator.mode = "exact_mean";
  c.gates.rel_tol = 0.05;
  const SweepReport rep = run_sweep(c);
  CHECK(rep.gates.size() == 3);
  CHECK(rep.passed());
  c.gates.rel_tol = 1e-9;
  CHECK_FALSE(run_sweep(c).passed());
}
