#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hyreach/adp.hpp"
#include "hyreach/cost.hpp"
#include "hyreach/fsa.hpp"
#include "hyreach/plant.hpp"
#include "hyreach/scltl.hpp"

namespace hyreach::config {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct RoiConfig {
  std::string name;
  VectorXd center;
  double radius = 0.0;
  std::optional<VectorXd> goal;  // interior goal override
};

struct PlantConfig {
  std::string type;  // benchmark2d | linear1d | custom-basis
  double a = 0.5, b = 1.0;                    // linear1d
  MatrixXd theta;                             // custom-basis
  std::string basis = "linear";               // custom-basis
  MatrixXd g;                                 // custom-basis
};

struct SysidConfig {
  double k_theta = 15.0;
  double beta_theta = 10.0;
  double gamma0 = 20.0;
  int M = 20;
  double dt_window = 0.2;
  double theta_max = 20.0;
  bool prepopulate = false;
  double append_period = 0.1;
  double lambda_theta = 0.0;      // configured excitation threshold
  double gamma_cap_factor = 10.0; // cap = factor * gamma0
  std::string theta0_mode = "uniform";  // uniform | true | explicit
  double theta0_range = 5.0;
  MatrixXd theta0_explicit;
  std::vector<double> prepopulate_box;  // per-dimension half widths
  double prepopulate_u = 0.5;
};

struct AdpConfig {
  double kc1 = 0.8, kc2 = 0.8, ka1 = 1.2, ka2 = 0.1;
  double gamma1 = 1.0, beta = 0.1;
  int N = 1;
  double a = 0.7;
  double omega_probe = 10.0 * 3.14159265358979323846;
  double gamma0 = 15.0;
  double gamma_bar = 150.0;
  std::vector<double> wc0{4.0};  // scalar broadcast when size 1
  std::vector<double> wa0{4.0};
  std::string basis = "staf";    // staf | quadratic1d
};

struct CostConfig {
  double q_scale = 1.0;
  MatrixXd R;
  double barrier_scale = 1.0;
};

struct TiebreakConfig {
  fsa::Tiebreak mode = fsa::Tiebreak::Lexicographic;
  std::vector<std::string> word;
};

/// A fully resolved, validated experiment description. `resolved_json` holds
/// every field with defaults filled, and `config_hash` is an FNV-1a digest
/// of it; both are embedded in log headers so runs are reproducible.
struct Scenario {
  std::string name;
  std::string formula_text;
  std::vector<std::string> alphabet_names;
  std::vector<RoiConfig> rois;
  PlantConfig plant;
  CostConfig cost;
  SysidConfig sysid;
  AdpConfig adp;
  VectorXd x0;
  TiebreakConfig tiebreak;
  double dt = 1e-3;
  double t_max = 5.0;
  double settle = 0.5;
  std::uint64_t seed = 0;
  std::string controller = "learned";  // learned | zero

  std::string resolved_json;
  std::string config_hash;

  scltl::Alphabet make_alphabet() const;
  plant::ControlAffinePlant make_plant() const;
  plant::RoiSet make_rois(const scltl::Alphabet& alphabet) const;
  std::shared_ptr<adp::ValueBasis> make_basis(int n) const;
  cost::CostSpec make_cost_spec() const;
  std::vector<int> tiebreak_word(const scltl::Alphabet& alphabet) const;
};

/// Parses and validates a scenario file. Throws ParseError for malformed
/// JSON and ValidationError (naming the field) for semantic problems.
Scenario load_scenario(const std::string& path);

/// Same from an in-memory JSON string.
Scenario parse_scenario(const std::string& json_text);

/// FNV-1a 64-bit digest as hex, used for config hashes.
std::string fnv1a_hex(const std::string& data);

}  // namespace hyreach::config
