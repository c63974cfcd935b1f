#include "hyreach/log_io.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "json.hpp"

namespace hyreach::log_io {

using engine::JumpRecord;
using engine::SampleRecord;
using engine::TrajectoryLog;
using nlohmann::json;

namespace {

json vec_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (int i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Eigen::VectorXd vec_from(const json& j) {
  Eigen::VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v[i] = j[i].get<double>();
  return v;
}

json num_or_null(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

double num_opt(const json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null())
    return std::numeric_limits<double>::quiet_NaN();
  return j[key].get<double>();
}

std::string fmt(double v) {
  if (std::isnan(v)) return "";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void export_ndjson(const TrajectoryLog& log, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");

  json header;
  header["type"] = "header";
  header["version"] = log.version;
  header["config_hash"] = log.config_hash;
  header["config"] = json::parse(log.resolved_config_json);
  out << header.dump() << "\n";

  for (const auto& s : log.samples) {
    json j;
    j["type"] = "sample";
    j["t"] = s.t;
    j["j"] = s.j;
    j["x"] = vec_json(s.x);
    j["s"] = s.s;
    j["o"] = s.o_target;
    j["u"] = vec_json(s.u);
    j["mu"] = vec_json(s.mu);
    j["delta"] = num_or_null(s.delta_t);
    j["theta_err"] = num_or_null(s.theta_err);
    j["Wc"] = vec_json(s.Wc);
    j["Wa"] = vec_json(s.Wa);
    j["gamma_min"] = num_or_null(s.gamma_min);
    j["gamma_max"] = num_or_null(s.gamma_max);
    j["gamma_theta_min"] = num_or_null(s.gamma_theta_min);
    j["gamma_theta_max"] = num_or_null(s.gamma_theta_max);
    j["violation"] = s.barrier_violation;
    out << j.dump() << "\n";
  }
  for (const auto& r : log.jumps) {
    json j;
    j["type"] = "jump";
    j["t"] = r.t;
    j["j"] = r.j;
    j["s_from"] = r.s_from;
    j["s_to"] = r.s_to;
    j["o_consumed"] = r.o_consumed;
    j["v_next"] = r.v_next;
    j["vd_from"] = r.vd_from;
    j["vd_to"] = r.vd_to;
    j["vhat_before"] = num_or_null(r.vhat_before);
    j["vhat_after"] = num_or_null(r.vhat_after);
    out << j.dump() << "\n";
  }
  json res;
  res["type"] = "result";
  res["accepted"] = log.result.accepted;
  res["T"] = log.result.T;
  res["J"] = log.result.J;
  res["word"] = log.result.word;
  res["t_end"] = log.result.t_end;
  res["status"] = log.result.status;
  res["fe_c1"] = log.excitation.c1;
  res["fe_c2"] = log.excitation.c2;
  res["fe_c3"] = log.excitation.c3;
  res["fe_window"] = log.excitation.window;
  res["sysid_excitation"] = log.sysid_excitation_level;
  out << res.dump() << "\n";
  if (!out) throw IoError("write failed for '" + path + "'");
}

void export_csv(const TrajectoryLog& log, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");

  int n = log.samples.empty() ? 0 : static_cast<int>(log.samples.front().x.size());
  int m = log.samples.empty() ? 0 : static_cast<int>(log.samples.front().u.size());
  int L = log.samples.empty() ? 0 : static_cast<int>(log.samples.front().Wc.size());

  out << "type,t,j,s,o";
  for (int i = 0; i < n; ++i) out << ",x" << i + 1;
  for (int i = 0; i < m; ++i) out << ",u" << i + 1;
  for (int i = 0; i < m; ++i) out << ",mu" << i + 1;
  out << ",delta,theta_err";
  for (int i = 0; i < L; ++i) out << ",Wc" << i + 1;
  for (int i = 0; i < L; ++i) out << ",Wa" << i + 1;
  out << ",gamma_min,gamma_max,gamma_theta_min,gamma_theta_max,violation";
  out << ",s_from,s_to,o_consumed,v_next,vd_from,vd_to,vhat_before,vhat_after\n";

  for (const auto& s : log.samples) {
    out << "sample," << fmt(s.t) << "," << s.j << "," << s.s << "," << s.o_target;
    for (int i = 0; i < n; ++i) out << "," << fmt(s.x[i]);
    for (int i = 0; i < m; ++i) out << "," << fmt(s.u[i]);
    for (int i = 0; i < m; ++i) out << "," << fmt(s.mu[i]);
    out << "," << fmt(s.delta_t) << "," << fmt(s.theta_err);
    for (int i = 0; i < L; ++i) out << "," << fmt(s.Wc[i]);
    for (int i = 0; i < L; ++i) out << "," << fmt(s.Wa[i]);
    out << "," << fmt(s.gamma_min) << "," << fmt(s.gamma_max) << ","
        << fmt(s.gamma_theta_min) << "," << fmt(s.gamma_theta_max) << ","
        << (s.barrier_violation ? 1 : 0);
    out << ",,,,,,,,\n";
  }
  for (const auto& r : log.jumps) {
    out << "jump," << fmt(r.t) << "," << r.j << ",,";
    for (int i = 0; i < 2 * n + 2 * m; ++i) out << ",";
    out << ",,";  // delta, theta_err
    for (int i = 0; i < 2 * L; ++i) out << ",";
    out << ",,,,,";  // gammas, violation
    out << r.s_from << "," << r.s_to << "," << r.o_consumed << "," << r.v_next
        << "," << r.vd_from << "," << r.vd_to << "," << fmt(r.vhat_before) << ","
        << fmt(r.vhat_after) << "\n";
  }
  if (!out) throw IoError("write failed for '" + path + "'");
}

void export_log(const TrajectoryLog& log, const std::string& path,
                const std::string& format) {
  if (format == "ndjson") {
    export_ndjson(log, path);
  } else if (format == "csv") {
    export_csv(log, path);
  } else {
    throw ValidationError("unknown log format '" + format + "'");
  }
}

TrajectoryLog read_ndjson(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open log '" + path + "'");
  TrajectoryLog log;
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError(std::string("log: invalid JSON line: ") + e.what());
    }
    std::string type = j.value("type", "");
    if (type == "header") {
      have_header = true;
      log.version = j.value("version", "");
      log.config_hash = j.value("config_hash", "");
      log.resolved_config_json = j["config"].dump();
    } else if (type == "sample") {
      SampleRecord s;
      s.t = j["t"].get<double>();
      s.j = j["j"].get<int>();
      s.x = vec_from(j["x"]);
      s.s = j["s"].get<int>();
      s.o_target = j["o"].get<int>();
      s.u = vec_from(j["u"]);
      s.mu = vec_from(j["mu"]);
      s.delta_t = num_opt(j, "delta");
      s.theta_err = num_opt(j, "theta_err");
      s.Wc = vec_from(j["Wc"]);
      s.Wa = vec_from(j["Wa"]);
      s.gamma_min = num_opt(j, "gamma_min");
      s.gamma_max = num_opt(j, "gamma_max");
      s.gamma_theta_min = num_opt(j, "gamma_theta_min");
      s.gamma_theta_max = num_opt(j, "gamma_theta_max");
      s.barrier_violation = j.value("violation", false);
      log.samples.push_back(std::move(s));
    } else if (type == "jump") {
      JumpRecord r;
      r.t = j["t"].get<double>();
      r.j = j["j"].get<int>();
      r.s_from = j["s_from"].get<int>();
      r.s_to = j["s_to"].get<int>();
      r.o_consumed = j["o_consumed"].get<int>();
      r.v_next = j["v_next"].get<int>();
      r.vd_from = j["vd_from"].get<int>();
      r.vd_to = j["vd_to"].get<int>();
      r.vhat_before = num_opt(j, "vhat_before");
      r.vhat_after = num_opt(j, "vhat_after");
      log.jumps.push_back(std::move(r));
    } else if (type == "result") {
      log.result.accepted = j["accepted"].get<bool>();
      log.result.T = j["T"].get<double>();
      log.result.J = j["J"].get<int>();
      log.result.word = j["word"].get<std::vector<int>>();
      log.result.t_end = j["t_end"].get<double>();
      log.result.status = j.value("status", "ok");
      log.excitation.c1 = j.value("fe_c1", 0.0);
      log.excitation.c2 = j.value("fe_c2", 0.0);
      log.excitation.c3 = j.value("fe_c3", 0.0);
      log.excitation.window = j.value("fe_window", 0.0);
      log.excitation.c1_positive = log.excitation.c1 > 1e-12;
      log.sysid_excitation_level = j.value("sysid_excitation", 0.0);
    }
  }
  if (!have_header) throw ParseError("log '" + path + "' has no header record");
  return log;
}

void emit_plots(const TrajectoryLog& log, const std::string& outdir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(outdir, ec);
  if (ec) throw IoError("cannot create directory '" + outdir + "'");

  auto open = [&](const std::string& name) {
    std::ofstream f(outdir + "/" + name);
    if (!f) throw IoError("cannot open '" + outdir + "/" + name + "'");
    return f;
  };

  {
    auto f = open("phase.csv");
    f << "t,j";
    int n = log.samples.empty() ? 0 : static_cast<int>(log.samples.front().x.size());
    for (int i = 0; i < n; ++i) f << ",x" << i + 1;
    f << "\n";
    for (const auto& s : log.samples) {
      f << fmt(s.t) << "," << s.j;
      for (int i = 0; i < s.x.size(); ++i) f << "," << fmt(s.x[i]);
      f << "\n";
    }
  }
  {
    auto f = open("fsa_state.csv");
    f << "t,s\n";
    for (const auto& s : log.samples) f << fmt(s.t) << "," << s.s << "\n";
  }
  {
    auto f = open("theta_error.csv");
    f << "t,err\n";
    for (const auto& s : log.samples)
      f << fmt(s.t) << "," << fmt(s.theta_err) << "\n";
  }
  {
    auto f = open("weights.csv");
    int L = log.samples.empty() ? 0 : static_cast<int>(log.samples.front().Wc.size());
    f << "t";
    for (int i = 0; i < L; ++i) f << ",Wc" << i + 1;
    for (int i = 0; i < L; ++i) f << ",Wa" << i + 1;
    f << "\n";
    for (const auto& s : log.samples) {
      f << fmt(s.t);
      for (int i = 0; i < L; ++i) f << "," << fmt(s.Wc[i]);
      for (int i = 0; i < L; ++i) f << "," << fmt(s.Wa[i]);
      f << "\n";
    }
  }
  {
    auto f = open("roi_circles.csv");
    f << "name,px,py\n";
    json config = json::parse(log.resolved_config_json);
    if (config.contains("roi")) {
      for (const auto& roi : config["roi"]) {
        auto center = roi["center"];
        if (center.size() < 2) continue;  // outlines only make sense in 2d
        double cx = center[0].get<double>();
        double cy = center[1].get<double>();
        double r = roi["radius"].get<double>();
        std::string name = roi["name"].get<std::string>();
        const int kPoints = 64;
        for (int k = 0; k <= kPoints; ++k) {
          double a = 2.0 * M_PI * k / kPoints;
          f << name << "," << fmt(cx + r * std::cos(a)) << ","
            << fmt(cy + r * std::sin(a)) << "\n";
        }
      }
    }
  }
}

}  // namespace hyreach::log_io
