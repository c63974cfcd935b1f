#include <doctest.h>

#include <cmath>
#include <fstream>

#include "hyreach/engine.hpp"
#include "hyreach/log_io.hpp"
#include "json.hpp"

using namespace hyreach;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

config::Scenario benchmark() {
  return config::load_scenario(std::string(SCENARIO_DIR) + "/benchmark2d.json");
}

// Re-resolve through the parser so the echoed config stays faithful.
config::Scenario benchmark_word(const std::vector<std::string>& word) {
  nlohmann::json j = nlohmann::json::parse(benchmark().resolved_json);
  j["tiebreak"] = {{"mode", "fixed-word"}, {"word", word}};
  return config::parse_scenario(j.dump());
}

// Cache the default benchmark run; several tests inspect it.
const engine::TrajectoryLog& benchmark_log() {
  static engine::TrajectoryLog log = engine::run(benchmark());
  return log;
}

}  // namespace

TEST_SUITE("engine") {

TEST_CASE("zero dynamics with zero input leaves the state fixed") {
  // Drift weights all zero over the linear basis, identity input matrix,
  // and the zero controller: x must not move.
  nlohmann::json j;
  j["name"] = "zero";
  j["formula"] = "F o1";
  j["alphabet"] = {"o1"};
  j["roi"] = {{{"name", "o1"}, {"center", {5.0, 5.0}}, {"radius", 0.5}}};
  j["plant"] = {{"type", "custom-basis"},
                {"basis", "linear"},
                {"theta", {{0.0, 0.0}, {0.0, 0.0}}},
                {"g", {{1.0, 0.0}, {0.0, 1.0}}}};
  j["cost"] = {{"R", {{1.0, 0.0}, {0.0, 1.0}}}};
  j["sysid"] = {{"k_theta", 0.0}, {"theta0", "true"}};
  j["adp"] = {{"wc0", 0.0}, {"wa0", 0.0}};
  j["init"] = {{"x0", {0.3, -0.7}}};
  j["dt"] = 1e-3;
  j["t_max"] = 0.5;
  j["controller"] = "zero";
  config::Scenario s = config::parse_scenario(j.dump());

  engine::Simulation sim(s);
  VectorXd x0 = sim.x();
  for (int k = 0; k < 100; ++k) sim.step_flow();
  CHECK((sim.x() - x0).norm() == 0.0);
}

TEST_CASE("benchmark run: word o1 o2 o3") {
  const auto& log = benchmark_log();
  CHECK(log.result.accepted);
  CHECK(log.result.T <= 5.0);
  CHECK(log.result.J == 3);
  CHECK(log.result.word == std::vector<int>({0, 1, 2}));
  CHECK(log.samples.size() == 5001);  // 5 s at 1 kHz plus the initial sample
  CHECK(log.jumps.size() == 3);
}

TEST_CASE("benchmark run: word o2 o1 o3") {
  config::Scenario s = benchmark_word({"o2", "o1", "o3"});
  engine::TrajectoryLog log = engine::run(s);
  CHECK(log.result.accepted);
  CHECK(log.result.word == std::vector<int>({1, 0, 2}));
}

TEST_CASE("benchmark monitors") {
  const auto& log = benchmark_log();
  config::Scenario s = benchmark();
  scltl::Alphabet a = s.make_alphabet();
  fsa::Fsa m = fsa::compile(*scltl::parse_formula(s.formula_text, a), a);
  fsa::DtaTable dta = fsa::compute_dta(m);
  plant::RoiSet rois = s.make_rois(a);

  auto verdict = engine::check_eventuality(log, m);
  CHECK(verdict.accepted);
  CHECK(verdict.T == doctest::Approx(log.result.T));
  CHECK(verdict.J == log.result.J);

  auto cert = engine::check_certificate(log, m, dta, rois);
  CHECK(cert.dta_decreases);
  CHECK(cert.surrogate_decreases);
  CHECK(cert.lambda_witness > 0.0);
  CHECK(cert.lambda_witness <= 1.0);
  CHECK(cert.forbidden_clear);
  CHECK(cert.min_clearance > 0.0);
  CHECK(cert.jumps_checked == 3);

  CHECK(engine::hybrid_time_wellformed(log));

  // The consumed word is accepted by the automaton.
  CHECK(m.accepts(log.result.word));

  // Learner diagnostics stay finite and inside the gain corridors.
  for (const auto& rec : log.samples) {
    REQUIRE(std::isfinite(rec.gamma_min));
    REQUIRE(rec.gamma_min > 0.0);
    REQUIRE(rec.gamma_max <= 150.0 * 1.01);
    REQUIRE(rec.gamma_theta_min > 0.0);
    REQUIRE(rec.gamma_theta_max < 10.0 * 20.0);
    REQUIRE(rec.Wc.allFinite());
    REQUIRE(rec.Wa.allFinite());
    REQUIRE_FALSE(rec.barrier_violation);
  }

  // System identification converges on the run.
  CHECK(log.samples.back().theta_err < 0.05 * std::sqrt(1.0 + 1.0 + 0.5));
  CHECK(log.sysid_excitation_level >= 0.003);

  // One rotating probe yields a positive windowed excitation level.
  CHECK(log.excitation.c1 > 0.0);
  CHECK(log.excitation.c1_positive);
}

TEST_CASE("detect_and_jump fires only inside the target region") {
  config::Scenario s = benchmark();
  engine::Simulation sim(s);
  CHECK(sim.automaton_state() == 0);
  CHECK(sim.target() == 0);          // fixed word starts at o1
  CHECK_FALSE(sim.detect_and_jump());  // x0 is far from every region
  CHECK(sim.jumps() == 0);

  // March the flow until the first jump; the automaton must move to the
  // branch state and the next target must be o2.
  int guard = 0;
  while (!sim.detect_and_jump()) {
    sim.step_flow();
    REQUIRE(++guard < 5000);
  }
  CHECK(sim.jumps() == 1);
  CHECK(sim.automaton_state() == 1);
  CHECK(sim.target() == 1);
}

TEST_CASE("x0 inside the target region jumps at t = 0") {
  nlohmann::json j;
  j["name"] = "instant";
  j["formula"] = "F o1";
  j["alphabet"] = {"o1"};
  j["roi"] = {{{"name", "o1"}, {"center", {0.0, 0.0}}, {"radius", 0.5}}};
  j["plant"] = {{"type", "custom-basis"},
                {"basis", "linear"},
                {"theta", {{-1.0, 0.0}, {0.0, -1.0}}},
                {"g", {{1.0, 0.0}, {0.0, 1.0}}}};
  j["cost"] = {{"R", {{1.0, 0.0}, {0.0, 1.0}}}};
  j["sysid"] = {{"k_theta", 0.0}, {"theta0", "true"}};
  j["adp"] = {{"wc0", 1.0}, {"wa0", 1.0}};
  j["init"] = {{"x0", {0.1, 0.0}}};
  j["dt"] = 1e-3;
  j["t_max"] = 0.2;
  j["settle"] = 0.05;
  config::Scenario s = config::parse_scenario(j.dump());
  engine::TrajectoryLog log = engine::run(s);
  CHECK(log.result.accepted);
  CHECK(log.result.T == 0.0);
  CHECK(log.result.J == 1);
  REQUIRE(!log.jumps.empty());
  CHECK(log.jumps.front().t == 0.0);
}

TEST_CASE("trivially accepting formula accepts at (0, 0)") {
  nlohmann::json j;
  j["name"] = "trivial";
  j["formula"] = "T";
  j["alphabet"] = {"o1"};
  j["roi"] = {{{"name", "o1"}, {"center", {3.0, 3.0}}, {"radius", 0.5}}};
  j["plant"] = {{"type", "custom-basis"},
                {"basis", "linear"},
                {"theta", {{-1.0, 0.0}, {0.0, -1.0}}},
                {"g", {{1.0, 0.0}, {0.0, 1.0}}}};
  j["cost"] = {{"R", {{1.0, 0.0}, {0.0, 1.0}}}};
  j["sysid"] = {{"k_theta", 0.0}, {"theta0", "true"}};
  j["adp"] = {{"wc0", 0.0}, {"wa0", 0.0}};
  j["init"] = {{"x0", {1.0, 1.0}}};
  j["dt"] = 1e-3;
  j["t_max"] = 0.1;
  j["settle"] = 0.02;
  config::Scenario s = config::parse_scenario(j.dump());
  engine::TrajectoryLog log = engine::run(s);
  CHECK(log.result.accepted);
  CHECK(log.result.T == 0.0);
  CHECK(log.result.J == 0);
}

TEST_CASE("open-loop benchmark does not satisfy the specification") {
  config::Scenario s = benchmark();
  nlohmann::json j = nlohmann::json::parse(s.resolved_json);
  j["controller"] = "zero";
  j["t_max"] = 2.0;
  j["settle"] = 2.0;
  j["sysid"]["k_theta"] = 0.0;
  j["sysid"]["prepopulate"] = false;
  j["sysid"]["theta0"] = "true";
  j["adp"]["kc1"] = 0.0;
  j["adp"]["kc2"] = 0.0;
  j["adp"]["ka1"] = 0.0;
  j["adp"]["ka2"] = 0.0;
  j["adp"]["beta"] = 0.0;
  config::Scenario open = config::parse_scenario(j.dump());
  engine::TrajectoryLog log = engine::run(open);
  CHECK_FALSE(log.result.accepted);  // a monitor verdict, not a failure
  CHECK(log.result.word.empty());
}

TEST_CASE("dt halving changes the short-horizon endpoint very little") {
  config::Scenario s = benchmark();
  nlohmann::json j = nlohmann::json::parse(s.resolved_json);
  j["t_max"] = 1.0;
  j["settle"] = 1.0;
  config::Scenario s1 = config::parse_scenario(j.dump());
  j["dt"] = 5e-4;
  config::Scenario s2 = config::parse_scenario(j.dump());

  engine::TrajectoryLog a = engine::run(s1);
  engine::TrajectoryLog b = engine::run(s2);
  VectorXd xa = a.samples.back().x;
  VectorXd xb = b.samples.back().x;
  CHECK((xa - xb).norm() / std::max(1.0, xa.norm()) < 1e-3);
}

TEST_CASE("determinism: same scenario, same log bytes") {
  config::Scenario s = benchmark();
  nlohmann::json j = nlohmann::json::parse(s.resolved_json);
  j["t_max"] = 1.5;
  j["settle"] = 1.5;
  config::Scenario short_run = config::parse_scenario(j.dump());

  engine::TrajectoryLog l1 = engine::run(short_run);
  engine::TrajectoryLog l2 = engine::run(short_run);
  std::string p1 = "/tmp/hyreach_det_1.ndjson";
  std::string p2 = "/tmp/hyreach_det_2.ndjson";
  log_io::export_ndjson(l1, p1);
  log_io::export_ndjson(l2, p2);
  std::ifstream f1(p1), f2(p2);
  std::string s1((std::istreambuf_iterator<char>(f1)), {});
  std::string s2((std::istreambuf_iterator<char>(f2)), {});
  CHECK(s1 == s2);
  CHECK(!s1.empty());
}

TEST_CASE("linear1d scenario learns the regulator coefficient") {
  config::Scenario s =
      config::load_scenario(std::string(SCENARIO_DIR) + "/linear1d.json");
  engine::TrajectoryLog log = engine::run(s);
  CHECK(log.result.accepted);

  // Closed-form regulator coefficient for dx = a x + b u with q, r.
  double a = 0.5, b = 1.0, q = 1.0, r = 1.0;
  double p_star = r * (a + std::sqrt(a * a + b * b * q / r)) / (b * b);
  double wc = log.samples.back().Wc[0];
  CAPTURE(wc);
  CHECK(std::abs(wc - p_star) / p_star < 0.02);
}

}  // TEST_SUITE
