#include "hyreach/scenario.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace hyreach::config {

using nlohmann::json;

namespace {

VectorXd to_vector(const json& j, const std::string& field) {
  if (!j.is_array()) throw ValidationError(field + ": expected an array");
  VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ValidationError(field + ": expected numbers");
    v[i] = j[i].get<double>();
  }
  return v;
}

MatrixXd to_matrix(const json& j, const std::string& field) {
  if (!j.is_array() || j.empty() || !j[0].is_array())
    throw ValidationError(field + ": expected an array of rows");
  MatrixXd m(j.size(), j[0].size());
  for (std::size_t r = 0; r < j.size(); ++r) {
    if (j[r].size() != j[0].size())
      throw ValidationError(field + ": ragged rows");
    for (std::size_t c = 0; c < j[r].size(); ++c)
      m(r, c) = j[r][c].get<double>();
  }
  return m;
}

json matrix_to_json(const MatrixXd& m) {
  json rows = json::array();
  for (int r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

json vector_to_json(const VectorXd& v) {
  json out = json::array();
  for (int i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

double require_positive(double v, const std::string& field) {
  if (!(v > 0.0)) throw ValidationError(field + " must be positive");
  return v;
}

double require_nonneg(double v, const std::string& field) {
  if (!(v >= 0.0)) throw ValidationError(field + " must be non-negative");
  return v;
}

std::vector<double> weights_from_json(const json& j, const std::string& field) {
  std::vector<double> out;
  if (j.is_number()) {
    out.push_back(j.get<double>());
  } else if (j.is_array()) {
    for (const auto& v : j) out.push_back(v.get<double>());
  } else {
    throw ValidationError(field + ": expected a number or array");
  }
  return out;
}

}  // namespace

std::string fnv1a_hex(const std::string& data) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  std::ostringstream os;
  os << std::hex << h;
  return os.str();
}

scltl::Alphabet Scenario::make_alphabet() const {
  return scltl::Alphabet(alphabet_names);
}

plant::ControlAffinePlant Scenario::make_plant() const {
  if (plant.type == "benchmark2d") return plant::make_benchmark2d();
  if (plant.type == "linear1d") return plant::make_linear1d(plant.a, plant.b);
  if (plant.type == "custom-basis")
    return plant::make_custom_basis(plant.theta, plant.basis, plant.g);
  throw ValidationError("plant: unknown type '" + plant.type + "'");
}

plant::RoiSet Scenario::make_rois(const scltl::Alphabet& alphabet) const {
  std::vector<plant::Roi> out;
  for (const auto& rc : rois) {
    plant::Roi r;
    r.name = rc.name;
    r.obs = alphabet.index_of(rc.name);
    if (r.obs < 0)
      throw ValidationError("roi '" + rc.name + "' is not in the alphabet");
    r.center = rc.center;
    r.radius = rc.radius;
    r.goal = rc.goal;
    out.push_back(std::move(r));
  }
  plant::RoiSet set(std::move(out));
  set.check_disjoint();
  return set;
}

std::shared_ptr<adp::ValueBasis> Scenario::make_basis(int n) const {
  if (adp.basis == "staf")
    return std::make_shared<adp::StafKernelBasis>(n, adp.a);
  if (adp.basis == "quadratic1d") {
    if (n != 1)
      throw ValidationError("adp.basis quadratic1d requires a scalar plant");
    return std::make_shared<adp::QuadraticBasis1d>(adp.a);
  }
  throw ValidationError("adp.basis: unknown basis '" + adp.basis + "'");
}

cost::CostSpec Scenario::make_cost_spec() const {
  cost::CostSpec spec;
  spec.q_scale = cost.q_scale;
  spec.R = cost.R;
  spec.validate();
  return spec;
}

std::vector<int> Scenario::tiebreak_word(const scltl::Alphabet& alphabet) const {
  std::vector<int> out;
  for (const auto& name : tiebreak.word) {
    int idx = alphabet.index_of(name);
    if (idx < 0)
      throw ValidationError("tiebreak.word: unknown observation '" + name + "'");
    out.push_back(idx);
  }
  return out;
}

Scenario parse_scenario(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("scenario: invalid JSON: ") + e.what());
  }

  Scenario s;
  s.name = j.value("name", "scenario");

  if (!j.contains("formula") || !j["formula"].is_string())
    throw ValidationError("formula: required string field is missing");
  s.formula_text = j["formula"].get<std::string>();

  if (!j.contains("alphabet"))
    throw ValidationError("alphabet: required field is missing");
  for (const auto& v : j["alphabet"]) s.alphabet_names.push_back(v.get<std::string>());

  if (!j.contains("roi")) throw ValidationError("roi: required field is missing");
  for (const auto& v : j["roi"]) {
    RoiConfig rc;
    rc.name = v.at("name").get<std::string>();
    rc.center = to_vector(v.at("center"), "roi.center");
    rc.radius = require_positive(v.at("radius").get<double>(), "roi.radius");
    if (v.contains("goal")) rc.goal = to_vector(v["goal"], "roi.goal");
    s.rois.push_back(std::move(rc));
  }

  // Plant: a bare string or an object with a type and parameters.
  if (!j.contains("plant")) throw ValidationError("plant: required field is missing");
  if (j["plant"].is_string()) {
    s.plant.type = j["plant"].get<std::string>();
  } else {
    const json& p = j["plant"];
    s.plant.type = p.at("type").get<std::string>();
    s.plant.a = p.value("a", s.plant.a);
    s.plant.b = p.value("b", s.plant.b);
    if (p.contains("theta")) s.plant.theta = to_matrix(p["theta"], "plant.theta");
    s.plant.basis = p.value("basis", s.plant.basis);
    if (p.contains("g")) s.plant.g = to_matrix(p["g"], "plant.g");
  }

  const json cost_j = j.value("cost", json::object());
  s.cost.q_scale = require_positive(cost_j.value("Q_scale", 1.0), "cost.Q_scale");
  s.cost.barrier_scale =
      require_nonneg(cost_j.value("barrier_scale", 1.0), "cost.barrier_scale");

  const json sysid_j = j.value("sysid", json::object());
  s.sysid.k_theta = require_nonneg(sysid_j.value("k_theta", 15.0), "sysid.k_theta");
  s.sysid.beta_theta =
      require_nonneg(sysid_j.value("beta_theta", 10.0), "sysid.beta_theta");
  s.sysid.gamma0 = require_positive(sysid_j.value("gamma0", 20.0), "sysid.gamma0");
  s.sysid.M = sysid_j.value("M", 20);
  if (s.sysid.M < 1) throw ValidationError("sysid.M must be >= 1");
  s.sysid.dt_window =
      require_positive(sysid_j.value("dt_window", 0.2), "sysid.dt_window");
  s.sysid.theta_max =
      require_positive(sysid_j.value("theta_max", 20.0), "sysid.theta_max");
  s.sysid.prepopulate = sysid_j.value("prepopulate", false);
  s.sysid.append_period =
      require_positive(sysid_j.value("append_period", 0.1), "sysid.append_period");
  s.sysid.lambda_theta =
      require_nonneg(sysid_j.value("lambda_theta", 0.0), "sysid.lambda_theta");
  s.sysid.gamma_cap_factor = require_positive(
      sysid_j.value("gamma_cap_factor", 10.0), "sysid.gamma_cap_factor");
  s.sysid.theta0_mode = sysid_j.value("theta0", "uniform");
  s.sysid.theta0_range = sysid_j.value("theta0_range", 5.0);
  if (sysid_j.contains("theta0_matrix")) {
    s.sysid.theta0_mode = "explicit";
    s.sysid.theta0_explicit = to_matrix(sysid_j["theta0_matrix"], "sysid.theta0_matrix");
  }
  if (sysid_j.contains("prepopulate_box"))
    for (const auto& v : sysid_j["prepopulate_box"])
      s.sysid.prepopulate_box.push_back(v.get<double>());
  s.sysid.prepopulate_u = sysid_j.value("prepopulate_u", 0.5);

  const json adp_j = j.value("adp", json::object());
  s.adp.kc1 = require_nonneg(adp_j.value("kc1", 0.8), "adp.kc1");
  s.adp.kc2 = require_nonneg(adp_j.value("kc2", 0.8), "adp.kc2");
  s.adp.ka1 = require_nonneg(adp_j.value("ka1", 1.2), "adp.ka1");
  s.adp.ka2 = require_nonneg(adp_j.value("ka2", 0.1), "adp.ka2");
  s.adp.gamma1 = require_positive(adp_j.value("gamma1", 1.0), "adp.gamma1");
  s.adp.beta = require_nonneg(adp_j.value("beta", 0.1), "adp.beta");
  s.adp.N = adp_j.value("N", 1);
  if (s.adp.N < 1) throw ValidationError("adp.N must be >= 1");
  s.adp.a = require_positive(adp_j.value("a", 0.7), "adp.a");
  s.adp.omega_probe =
      require_positive(adp_j.value("omega_probe", 10.0 * M_PI), "adp.omega_probe");
  s.adp.gamma0 = require_positive(adp_j.value("gamma0", 15.0), "adp.gamma0");
  s.adp.gamma_bar = require_positive(adp_j.value("gamma_bar", 150.0), "adp.gamma_bar");
  if (adp_j.contains("wc0")) s.adp.wc0 = weights_from_json(adp_j["wc0"], "adp.wc0");
  if (adp_j.contains("wa0")) s.adp.wa0 = weights_from_json(adp_j["wa0"], "adp.wa0");
  s.adp.basis = adp_j.value("basis", "staf");

  if (!j.contains("init") || !j["init"].contains("x0"))
    throw ValidationError("init.x0: required field is missing");
  s.x0 = to_vector(j["init"]["x0"], "init.x0");

  const json tb = j.value("tiebreak", json::object());
  std::string mode = tb.value("mode", "lexicographic");
  if (mode == "lexicographic") {
    s.tiebreak.mode = fsa::Tiebreak::Lexicographic;
  } else if (mode == "nearest-roi") {
    s.tiebreak.mode = fsa::Tiebreak::NearestRoi;
  } else if (mode == "fixed-word") {
    s.tiebreak.mode = fsa::Tiebreak::FixedWord;
    if (!tb.contains("word"))
      throw ValidationError("tiebreak.word: required for fixed-word mode");
    for (const auto& v : tb["word"]) s.tiebreak.word.push_back(v.get<std::string>());
  } else {
    throw ValidationError("tiebreak.mode: unknown mode '" + mode + "'");
  }

  s.dt = require_positive(j.value("dt", 1e-3), "dt");
  s.t_max = require_positive(j.value("t_max", 5.0), "t_max");
  s.settle = require_nonneg(j.value("settle", 0.5), "settle");
  s.seed = j.value("seed", 0ull);
  s.controller = j.value("controller", "learned");
  if (s.controller != "learned" && s.controller != "zero")
    throw ValidationError("controller: expected 'learned' or 'zero'");

  // Cost weight matrix defaults to 2 I sized by the plant input dimension.
  {
    plant::ControlAffinePlant pl = s.make_plant();
    if (cost_j.contains("R")) {
      s.cost.R = to_matrix(cost_j["R"], "cost.R");
      if (s.cost.R.rows() != pl.m)
        throw ValidationError("cost.R: dimension does not match the plant input");
    } else {
      s.cost.R = 2.0 * MatrixXd::Identity(pl.m, pl.m);
    }
    s.make_cost_spec();
    if (s.x0.size() != pl.n)
      throw ValidationError("init.x0: dimension does not match the plant state");
    for (const auto& rc : s.rois)
      if (rc.center.size() != pl.n)
        throw ValidationError("roi '" + rc.name + "': center dimension mismatch");
    if (s.sysid.prepopulate_box.empty())
      s.sysid.prepopulate_box.assign(pl.n, 1.0);
    if (static_cast<int>(s.sysid.prepopulate_box.size()) != pl.n)
      throw ValidationError("sysid.prepopulate_box: dimension mismatch");
  }

  // Semantic validation: alphabet, ROIs, formula feasibility.
  scltl::Alphabet alphabet = s.make_alphabet();
  for (const auto& name : alphabet.names()) {
    int hits = 0;
    for (const auto& rc : s.rois)
      if (rc.name == name) ++hits;
    if (hits != 1)
      throw ValidationError("roi: observation '" + name +
                            "' must have exactly one region");
  }
  plant::RoiSet rois = s.make_rois(alphabet);  // checks disjointness
  (void)rois;
  scltl::FormulaPtr f = scltl::parse_formula(s.formula_text, alphabet);
  fsa::Fsa automaton = fsa::compile(*f, alphabet);  // throws EmptyLanguage
  (void)automaton;
  s.tiebreak_word(alphabet);  // validates fixed-word symbols

  // Echo the fully resolved configuration.
  json resolved;
  resolved["name"] = s.name;
  resolved["formula"] = s.formula_text;
  resolved["alphabet"] = s.alphabet_names;
  resolved["roi"] = json::array();
  for (const auto& rc : s.rois) {
    json entry = {{"name", rc.name},
                  {"center", vector_to_json(rc.center)},
                  {"radius", rc.radius}};
    if (rc.goal) entry["goal"] = vector_to_json(*rc.goal);
    resolved["roi"].push_back(std::move(entry));
  }
  resolved["plant"] = {{"type", s.plant.type}};
  if (s.plant.type == "linear1d") {
    resolved["plant"]["a"] = s.plant.a;
    resolved["plant"]["b"] = s.plant.b;
  } else if (s.plant.type == "custom-basis") {
    resolved["plant"]["theta"] = matrix_to_json(s.plant.theta);
    resolved["plant"]["basis"] = s.plant.basis;
    resolved["plant"]["g"] = matrix_to_json(s.plant.g);
  }
  resolved["cost"] = {{"Q_scale", s.cost.q_scale},
                      {"R", matrix_to_json(s.cost.R)},
                      {"barrier_scale", s.cost.barrier_scale}};
  resolved["sysid"] = {{"k_theta", s.sysid.k_theta},
                       {"beta_theta", s.sysid.beta_theta},
                       {"gamma0", s.sysid.gamma0},
                       {"M", s.sysid.M},
                       {"dt_window", s.sysid.dt_window},
                       {"theta_max", s.sysid.theta_max},
                       {"prepopulate", s.sysid.prepopulate},
                       {"append_period", s.sysid.append_period},
                       {"lambda_theta", s.sysid.lambda_theta},
                       {"gamma_cap_factor", s.sysid.gamma_cap_factor},
                       {"theta0", s.sysid.theta0_mode},
                       {"theta0_range", s.sysid.theta0_range},
                       {"prepopulate_box", s.sysid.prepopulate_box},
                       {"prepopulate_u", s.sysid.prepopulate_u}};
  if (s.sysid.theta0_mode == "explicit")
    resolved["sysid"]["theta0_matrix"] = matrix_to_json(s.sysid.theta0_explicit);
  resolved["adp"] = {{"kc1", s.adp.kc1},     {"kc2", s.adp.kc2},
                     {"ka1", s.adp.ka1},     {"ka2", s.adp.ka2},
                     {"gamma1", s.adp.gamma1}, {"beta", s.adp.beta},
                     {"N", s.adp.N},         {"a", s.adp.a},
                     {"omega_probe", s.adp.omega_probe},
                     {"gamma0", s.adp.gamma0}, {"gamma_bar", s.adp.gamma_bar},
                     {"wc0", s.adp.wc0},     {"wa0", s.adp.wa0},
                     {"basis", s.adp.basis}};
  resolved["init"] = {{"x0", vector_to_json(s.x0)}};
  resolved["tiebreak"] = {{"mode", mode}};
  if (!s.tiebreak.word.empty()) resolved["tiebreak"]["word"] = s.tiebreak.word;
  resolved["dt"] = s.dt;
  resolved["t_max"] = s.t_max;
  resolved["settle"] = s.settle;
  resolved["seed"] = s.seed;
  resolved["controller"] = s.controller;

  s.resolved_json = resolved.dump();
  s.config_hash = fnv1a_hex(s.resolved_json);
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scenario file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

}  // namespace hyreach::config
