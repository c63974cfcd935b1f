#pragma once

#include <Eigen/Dense>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "hyreach/adp.hpp"
#include "hyreach/cost.hpp"
#include "hyreach/fsa.hpp"
#include "hyreach/plant.hpp"
#include "hyreach/scenario.hpp"
#include "hyreach/sysid.hpp"

namespace hyreach::engine {

using Eigen::MatrixXd;
using Eigen::VectorXd;

inline constexpr const char* kVersion = "hyreach 0.1.0";

/// One logged point of the hybrid arc, after any jump at the same instant.
struct SampleRecord {
  double t = 0.0;
  int j = 0;
  VectorXd x;
  int s = 0;
  int o_target = -1;  // -1 once the run has been accepted
  VectorXd u, mu;
  double delta_t = 0.0;
  double theta_err = std::numeric_limits<double>::quiet_NaN();
  VectorXd Wc, Wa;
  double gamma_min = 0.0, gamma_max = 0.0;
  double gamma_theta_min = 0.0, gamma_theta_max = 0.0;
  bool barrier_violation = false;
};

struct JumpRecord {
  double t = 0.0;
  int j = 0;  // jump count after the jump
  int s_from = 0, s_to = 0;
  int o_consumed = -1;
  int v_next = -1;  // -1 when the run accepted at this jump
  int vd_from = 0, vd_to = 0;
  double vhat_before = 0.0, vhat_after = 0.0;
};

struct RunResult {
  bool accepted = false;
  double T = 0.0;
  int J = 0;
  std::vector<int> word;  // consumed observation indices, in jump order
  double t_end = 0.0;
  std::string status = "ok";
};

struct TrajectoryLog {
  std::string resolved_config_json;
  std::string config_hash;
  std::string version;
  std::vector<SampleRecord> samples;
  std::vector<JumpRecord> jumps;
  RunResult result;
  adp::ExcitationMonitor::Report excitation;
  double sysid_excitation_level = 0.0;
};

/// Executes the coupled plant + automaton + learner hybrid system. Flows are
/// integrated with fixed-step RK4; a jump fires at the first sample where
/// the target region is reached. Deterministic for a fixed scenario.
class Simulation {
 public:
  explicit Simulation(const config::Scenario& scenario);

  /// One RK4 flow step of the coupled dynamics (no jump detection).
  void step_flow();

  /// Fires a jump if the state lies in the current target region; retargets
  /// the auxiliary system and barrier, carrying learner weights over.
  /// Returns true if a jump occurred.
  bool detect_and_jump();

  /// Runs to completion and returns the full log.
  TrajectoryLog run();

  // Introspection for tests.
  double t() const { return t_; }
  int jumps() const { return j_; }
  const VectorXd& x() const { return x_; }
  int automaton_state() const { return s_; }
  int target() const { return o_target_; }
  bool accepted() const { return accepted_; }
  const fsa::Fsa& automaton() const { return fsa_; }
  const fsa::DtaTable& dta() const { return dta_; }
  const plant::RoiSet& rois() const { return rois_; }
  const sysid::ThetaEstimator& estimator() const { return estimator_; }
  const adp::CriticState& critic() const { return critic_; }
  const adp::ActorState& actor() const { return actor_; }
  const sysid::HistoryStack& stack() const { return stack_; }

 private:
  struct Derivs {
    VectorXd dx;
    MatrixXd dtheta, dPtheta;
    VectorXd dWc;
    MatrixXd dPc;
    VectorXd dWa;
  };

  struct Diag {
    VectorXd u, mu;
    double delta_t = 0.0;
    MatrixXd lambda_on, lambda_off;
  };

  Derivs derivatives(double t, const VectorXd& x, const MatrixXd& theta,
                     const MatrixXd& Ptheta, const VectorXd& Wc,
                     const MatrixXd& Pc, const VectorXd& Wa, Diag* diag) const;

  void rk4_step(const Derivs& k1);
  void retarget_segment(int target_obs);
  void log_sample(const Diag& diag);
  void prepopulate_stack();
  void prepopulate_stack_rng(std::mt19937_64& rng);
  void check_finite() const;
  double current_t_end() const;

  config::Scenario scenario_;
  plant::ControlAffinePlant plant_;
  scltl::Alphabet alphabet_;
  plant::RoiSet rois_;
  fsa::Fsa fsa_;
  fsa::DtaTable dta_;
  std::shared_ptr<adp::ValueBasis> basis_;
  cost::CostSpec cost_;
  std::vector<int> fixed_word_;

  // Hybrid state.
  double t_ = 0.0;
  int j_ = 0;
  VectorXd x_;
  int s_ = 0;
  int o_target_ = -1;
  bool accepted_ = false;
  double accept_t_ = 0.0;
  int accept_j_ = 0;

  // Learners.
  sysid::ThetaEstimator estimator_;
  adp::CriticState critic_;
  adp::ActorState actor_;
  sysid::HistoryStack stack_;
  std::vector<sysid::WindowSample> window_;
  double last_stack_append_ = 0.0;

  // Current optimal-control segment.
  plant::AuxiliarySystem aux_;
  cost::RecenteredBarrier barrier_;

  adp::ExcitationMonitor monitor_;
  TrajectoryLog log_;
};

/// Runs the scenario end to end.
TrajectoryLog run(const config::Scenario& scenario);

struct EventualityVerdict {
  bool accepted = false;
  double T = 0.0;
  int J = 0;
};

/// Accepted iff some sample's automaton state is accepting; returns the
/// first such hybrid time.
EventualityVerdict check_eventuality(const TrajectoryLog& log, const fsa::Fsa& fsa);

struct CertificateReport {
  bool dta_decreases = true;        // distance drops by >= 1 at every jump
  bool surrogate_decreases = true;  // V_d + lambda V_hat drops across jumps
  double lambda_witness = 1.0;
  bool forbidden_clear = true;      // never enters a forbidden region
  double min_clearance = std::numeric_limits<double>::infinity();
  int jumps_checked = 0;
};

/// Replays the barrier-certificate conditions along a finished log.
CertificateReport check_certificate(const TrajectoryLog& log, const fsa::Fsa& fsa,
                                    const fsa::DtaTable& dta,
                                    const plant::RoiSet& rois);

/// Hybrid time domain checks: t non-decreasing, j unit increments.
bool hybrid_time_wellformed(const TrajectoryLog& log);

}  // namespace hyreach::engine
