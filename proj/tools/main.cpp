// Command-line front end: compile specifications to automata, run and verify
// hybrid closed-loop simulations, sweep gain grids, and emit plot data.
//
// Exit codes: 0 success, 1 validation error, 2 runtime error,
// 3 monitor failure (--require-accept on a rejected run).

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "hyreach/engine.hpp"
#include "hyreach/log_io.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace hyreach;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;
constexpr int kExitMonitor = 3;

std::vector<std::string> split_csv(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string default_out_dir() {
  const char* env = std::getenv("HYREACH_OUT_DIR");
  return env ? env : ".";
}

struct MonitorPrintout {
  bool ok = true;
  bool accept_required_failed = false;
};

MonitorPrintout print_monitors(const engine::TrajectoryLog& log) {
  MonitorPrintout out;
  config::Scenario s = config::parse_scenario(log.resolved_config_json);
  scltl::Alphabet alphabet = s.make_alphabet();
  fsa::Fsa automaton =
      fsa::compile(*scltl::parse_formula(s.formula_text, alphabet), alphabet);
  fsa::DtaTable dta = fsa::compute_dta(automaton);
  plant::RoiSet rois = s.make_rois(alphabet);

  auto verdict = engine::check_eventuality(log, automaton);
  std::cout << "eventuality: " << (verdict.accepted ? "accepted" : "not accepted");
  if (verdict.accepted)
    std::cout << " at T=" << verdict.T << " s, J=" << verdict.J;
  std::cout << "\n";

  std::cout << "word:";
  for (int o : log.result.word) std::cout << " " << alphabet.name(o);
  bool word_ok = !verdict.accepted || automaton.accepts(log.result.word);
  std::cout << (log.result.word.empty() ? " (empty)" : "")
            << "  [automaton cross-check: " << (word_ok ? "ok" : "FAIL") << "]\n";

  bool domain_ok = engine::hybrid_time_wellformed(log);
  std::cout << "hybrid time domain: " << (domain_ok ? "ok" : "FAIL") << "\n";

  auto cert = engine::check_certificate(log, automaton, dta, rois);
  std::cout << "certificate (a) distance drop at jumps: "
            << (cert.dta_decreases ? "ok" : "FAIL") << " (" << cert.jumps_checked
            << " jumps)\n";
  std::cout << "certificate (b) surrogate decrease, lambda="
            << cert.lambda_witness << ": "
            << (cert.surrogate_decreases ? "ok" : "FAIL") << "\n";
  std::cout << "certificate (c) forbidden clearance: "
            << (cert.forbidden_clear ? "ok" : "FAIL");
  if (cert.jumps_checked >= 0 && std::isfinite(cert.min_clearance))
    std::cout << " (min clearance " << cert.min_clearance << ")";
  std::cout << "\n";
  std::cout << "excitation: c1=" << log.excitation.c1
            << " c2=" << log.excitation.c2 << " c3=" << log.excitation.c3
            << " (window " << log.excitation.window
            << " s), sysid level=" << log.sysid_excitation_level << "\n";

  out.ok = word_ok && domain_ok && cert.dta_decreases && cert.forbidden_clear;
  out.accept_required_failed = !verdict.accepted;
  return out;
}

int run_compile(const std::string& formula, const std::string& alphabet_csv,
                const std::string& dot_path, bool show_dta) {
  scltl::Alphabet alphabet(split_csv(alphabet_csv));
  auto f = scltl::parse_formula(formula, alphabet);
  fsa::Fsa m = fsa::compile(*f, alphabet);
  fsa::DtaTable dta = fsa::compute_dta(m);

  std::cout << "formula: " << scltl::to_string(*f, alphabet) << "\n";
  std::cout << "states: " << m.num_states() << " (initial s" << m.initial << ")\n";
  std::cout << "accepting:";
  for (int s = 0; s < m.num_states(); ++s)
    if (m.is_accepting(s)) std::cout << " s" << s;
  std::cout << "\n";
  for (int s = 0; s < m.num_states(); ++s) {
    std::cout << "  s" << s << ":";
    for (int o : m.admissible(s))
      std::cout << " " << alphabet.name(o) << "->s" << m.step(s, o);
    std::cout << "\n";
  }
  if (show_dta) {
    std::cout << "distance to acceptance:\n";
    for (int s = 0; s < m.num_states(); ++s)
      std::cout << "  s" << s << ": " << dta.at(s) << "\n";
  }
  if (!dot_path.empty()) {
    std::ofstream out(dot_path);
    if (!out) throw IoError("cannot open '" + dot_path + "'");
    out << fsa::export_dot(m);
    std::cout << "wrote " << dot_path << "\n";
  }
  return kExitOk;
}

int run_run(const std::string& scenario_path, std::string out_path,
            const std::string& format, const std::string& word_csv,
            bool require_accept) {
  config::Scenario scenario = config::load_scenario(scenario_path);
  if (!word_csv.empty()) {
    json j = json::parse(scenario.resolved_json);
    j["tiebreak"] = {{"mode", "fixed-word"}, {"word", split_csv(word_csv)}};
    scenario = config::parse_scenario(j.dump());
  }
  engine::TrajectoryLog log = engine::run(scenario);

  if (out_path.empty())
    out_path = default_out_dir() + "/" + scenario.name + ".ndjson";
  log_io::export_log(log, out_path, format);
  std::cout << "wrote " << out_path << " (" << log.samples.size() << " samples, "
            << log.jumps.size() << " jumps)\n";
  MonitorPrintout mon = print_monitors(log);
  if (require_accept && mon.accept_required_failed) return kExitMonitor;
  return mon.ok ? kExitOk : kExitMonitor;
}

int run_verify(const std::string& log_path, bool require_accept) {
  engine::TrajectoryLog log = log_io::read_ndjson(log_path);
  MonitorPrintout mon = print_monitors(log);
  if (require_accept && mon.accept_required_failed) return kExitMonitor;
  return mon.ok ? kExitOk : kExitMonitor;
}

// Grid files: either a JSON object of arrays, or flat lines of the form
//   dotted.key = [v1, v2, ...]
// with '#' comments.
std::map<std::string, std::vector<json>> parse_grid(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open grid file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  std::string text = buf.str();

  std::map<std::string, std::vector<json>> grid;
  auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    json j = json::parse(text);
    for (auto& [key, values] : j.items()) {
      if (!values.is_array())
        throw ValidationError("grid: '" + key + "' must map to an array");
      for (const auto& v : values) grid[key].push_back(v);
    }
    return grid;
  }

  std::istringstream lines(text);
  std::string line;
  int lineno = 0;
  while (std::getline(lines, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    auto nonspace = line.find_first_not_of(" \t\r");
    if (nonspace == std::string::npos) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ValidationError("grid line " + std::to_string(lineno) +
                            ": expected 'key = [values]'");
    std::string key = line.substr(0, eq);
    key.erase(0, key.find_first_not_of(" \t"));
    key.erase(key.find_last_not_of(" \t") + 1);
    std::string values = line.substr(eq + 1);
    json arr;
    try {
      arr = json::parse(values);
    } catch (const json::exception& e) {
      throw ValidationError("grid line " + std::to_string(lineno) + ": " +
                            e.what());
    }
    if (!arr.is_array()) arr = json::array({arr});
    for (const auto& v : arr) grid[key].push_back(v);
  }
  return grid;
}

void set_dotted(json& root, const std::string& dotted, const json& value) {
  json* node = &root;
  std::stringstream ss(dotted);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(ss, part, '.')) parts.push_back(part);
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) node = &((*node)[parts[i]]);
  (*node)[parts.back()] = value;
}

int run_sweep(const std::string& scenario_path, const std::string& grid_path,
              int jobs, std::string out_dir) {
  config::Scenario base = config::load_scenario(scenario_path);
  auto grid = parse_grid(grid_path);
  if (out_dir.empty()) out_dir = default_out_dir() + "/sweep_" + base.name;
  fs::create_directories(out_dir);

  // Cartesian product of the grid axes.
  std::vector<std::string> keys;
  for (const auto& [k, _] : grid) keys.push_back(k);
  std::vector<json> points;
  json seed = json::parse(base.resolved_json);
  std::function<void(std::size_t, json)> expand = [&](std::size_t i, json acc) {
    if (i == keys.size()) {
      points.push_back(std::move(acc));
      return;
    }
    for (const auto& v : grid[keys[i]]) {
      json next = acc;
      set_dotted(next, keys[i], v);
      expand(i + 1, std::move(next));
    }
  };
  expand(0, seed);
  std::cout << "sweep: " << points.size() << " points, " << jobs << " jobs\n";

  std::vector<json> summaries(points.size());
  std::atomic<std::size_t> cursor{0};
  std::atomic<int> failures{0};
  auto worker = [&]() {
    for (;;) {
      std::size_t i = cursor.fetch_add(1);
      if (i >= points.size()) return;
      std::string dir = out_dir + "/point_" + std::to_string(i);
      json summary;
      summary["point"] = i;
      for (const auto& k : keys) {
        json* node = &points[i];
        std::stringstream ss(k);
        std::string part;
        while (std::getline(ss, part, '.')) node = &((*node)[part]);
        summary[k] = *node;
      }
      try {
        config::Scenario s = config::parse_scenario(points[i].dump());
        engine::TrajectoryLog log = engine::run(s);
        fs::create_directories(dir);
        log_io::export_ndjson(log, dir + "/log.ndjson");
        summary["accepted"] = log.result.accepted;
        summary["T"] = log.result.T;
        summary["J"] = log.result.J;
        summary["theta_err_final"] =
            log.samples.empty() ? json() : json(log.samples.back().theta_err);
        summary["fe_c1"] = log.excitation.c1;
        summary["status"] = "ok";
      } catch (const Error& e) {
        summary["status"] = std::string("error: ") + e.what();
        failures.fetch_add(1);
      }
      summaries[i] = std::move(summary);
    }
  };
  std::vector<std::thread> pool;
  for (int k = 0; k < std::max(1, jobs); ++k) pool.emplace_back(worker);
  for (auto& th : pool) th.join();

  std::ofstream summary_out(out_dir + "/summary.ndjson");
  for (const auto& s : summaries) summary_out << s.dump() << "\n";
  std::cout << "wrote " << out_dir << "/summary.ndjson\n";
  return failures.load() == 0 ? kExitOk : kExitRuntime;
}

int run_plot(const std::string& log_path, std::string out_dir) {
  engine::TrajectoryLog log = log_io::read_ndjson(log_path);
  if (out_dir.empty()) out_dir = default_out_dir() + "/plots";
  log_io::emit_plots(log, out_dir);
  std::cout << "wrote plot data to " << out_dir << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Temporal-logic hybrid controller synthesis and simulation"};
  app.require_subcommand(1);

  std::string formula, alphabet_csv, dot_path;
  bool show_dta = false;
  auto* compile = app.add_subcommand("compile", "Compile a formula to an automaton");
  compile->add_option("--formula", formula, "Formula text")->required();
  compile->add_option("--alphabet", alphabet_csv, "Comma-separated observations")
      ->required();
  compile->add_option("--dot", dot_path, "Write GraphViz output here");
  compile->add_flag("--dta", show_dta, "Print the distance-to-acceptance table");

  std::string scenario_path, out_path, format = "ndjson", word_csv, log_path,
              grid_path, out_dir;
  bool require_accept = false;
  int jobs = 1;
  auto* run = app.add_subcommand("run", "Run a scenario and write the log");
  run->add_option("--scenario", scenario_path, "Scenario file")->required();
  run->add_option("--out", out_path, "Log output path");
  run->add_option("--format", format, "ndjson or csv");
  run->add_option("--word", word_csv, "Override the fixed observation word");
  run->add_flag("--require-accept", require_accept,
                "Exit 3 unless the run reaches an accepting state");

  auto* verify = app.add_subcommand("verify", "Re-run monitors on a log");
  verify->add_option("--log", log_path, "Log file (ndjson)")->required();
  verify->add_flag("--require-accept", require_accept,
                   "Exit 3 unless the log reaches an accepting state");

  auto* sweep = app.add_subcommand("sweep", "Run a grid of gain overrides");
  sweep->add_option("--scenario", scenario_path, "Scenario file")->required();
  sweep->add_option("--grid", grid_path, "Grid file (key = [values] or JSON)")
      ->required();
  sweep->add_option("--jobs", jobs, "Concurrent runs");
  sweep->add_option("--out", out_dir, "Output directory");

  auto* plot = app.add_subcommand("plot", "Emit plot-ready data from a log");
  plot->add_option("--log", log_path, "Log file (ndjson)")->required();
  plot->add_option("--out", out_dir, "Output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (compile->parsed())
      return run_compile(formula, alphabet_csv, dot_path, show_dta);
    if (run->parsed())
      return run_run(scenario_path, out_path, format, word_csv, require_accept);
    if (verify->parsed()) return run_verify(log_path, require_accept);
    if (sweep->parsed()) return run_sweep(scenario_path, grid_path, jobs, out_dir);
    if (plot->parsed()) return run_plot(log_path, out_dir);
  } catch (const SyntaxError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const UnknownObservation& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const NegationOfNonObservation& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const EmptyLanguage& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}
