#include "hyreach/engine.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace hyreach::engine {

namespace {

double uniform_pm1(std::mt19937_64& rng) {
  // Deterministic across platforms, unlike std::uniform_real_distribution.
  return 2.0 * ((rng() >> 11) * 0x1.0p-53) - 1.0;
}

void eig_bounds(const MatrixXd& P_inv_form, double& lo, double& hi) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(
      0.5 * (P_inv_form + P_inv_form.transpose()));
  double pmin = es.eigenvalues().minCoeff();
  double pmax = es.eigenvalues().maxCoeff();
  lo = pmax > 0.0 ? 1.0 / pmax : 0.0;
  hi = pmin > 0.0 ? 1.0 / pmin : std::numeric_limits<double>::infinity();
}

}  // namespace

Simulation::Simulation(const config::Scenario& scenario)
    : scenario_(scenario),
      plant_(scenario.make_plant()),
      alphabet_(scenario.make_alphabet()),
      rois_(scenario.make_rois(alphabet_)),
      fsa_(fsa::compile(*scltl::parse_formula(scenario.formula_text, alphabet_),
                        alphabet_)),
      dta_(fsa::compute_dta(fsa_)),
      basis_(scenario.make_basis(plant_.n)),
      cost_(scenario.make_cost_spec()),
      fixed_word_(scenario.tiebreak_word(alphabet_)),
      x_(scenario.x0),
      monitor_(basis_->size()) {
  std::mt19937_64 rng(scenario_.seed);

  // Initial drift weights.
  MatrixXd theta0(plant_.p1, plant_.n);
  const auto& sc = scenario_.sysid;
  if (sc.theta0_mode == "uniform") {
    for (int r = 0; r < theta0.rows(); ++r)
      for (int c = 0; c < theta0.cols(); ++c)
        theta0(r, c) = sc.theta0_range * uniform_pm1(rng);
  } else if (sc.theta0_mode == "true") {
    if (!plant_.theta_true)
      throw ValidationError("sysid.theta0='true' requires a plant with known weights");
    theta0 = *plant_.theta_true;
  } else if (sc.theta0_mode == "explicit") {
    if (sc.theta0_explicit.rows() != plant_.p1 ||
        sc.theta0_explicit.cols() != plant_.n)
      throw ValidationError("sysid.theta0_matrix: dimension mismatch");
    theta0 = sc.theta0_explicit;
  } else {
    throw ValidationError("sysid.theta0: unknown mode '" + sc.theta0_mode + "'");
  }
  estimator_ = sysid::ThetaEstimator(theta0, sc.gamma0, sc.k_theta, sc.beta_theta,
                                     sc.theta_max, sc.gamma_cap_factor * sc.gamma0);
  stack_ = sysid::HistoryStack(sc.M, sc.dt_window);
  if (sc.prepopulate) prepopulate_stack_rng(rng);

  // Critic and actor.
  const auto& ac = scenario_.adp;
  int L = basis_->size();
  auto fill_weights = [L](const std::vector<double>& w, const char* field) {
    VectorXd out(L);
    if (w.size() == 1) {
      out.setConstant(w[0]);
    } else if (static_cast<int>(w.size()) == L) {
      for (int i = 0; i < L; ++i) out[i] = w[i];
    } else {
      throw ValidationError(std::string(field) + ": expected 1 or " +
                            std::to_string(L) + " entries");
    }
    return out;
  };
  critic_.Wc = fill_weights(ac.wc0, "adp.wc0");
  critic_.P = MatrixXd::Identity(L, L) / ac.gamma0;
  critic_.kc1 = ac.kc1;
  critic_.kc2 = ac.kc2;
  critic_.gamma1 = ac.gamma1;
  critic_.beta = ac.beta;
  critic_.gamma_cap = ac.gamma_bar;
  critic_.N = ac.N;
  actor_.Wa = fill_weights(ac.wa0, "adp.wa0");
  actor_.ka1 = ac.ka1;
  actor_.ka2 = ac.ka2;

  // Initial automaton state and target.
  s_ = fsa_.initial;
  if (fsa_.is_accepting(s_)) {
    accepted_ = true;
    accept_t_ = 0.0;
    accept_j_ = 0;
    o_target_ = -1;
    aux_ = plant::AuxiliarySystem(plant_, x_, estimator_.theta_hat());
    barrier_ = cost::RecenteredBarrier({}, aux_.x_d(), scenario_.cost.barrier_scale);
  } else {
    fsa::PolicyContext ctx;
    ctx.roi_distance = [this](int o) {
      return (x_ - rois_.by_obs(o).center).norm();
    };
    ctx.word = &fixed_word_;
    ctx.word_pos = 0;
    auto v = fsa::initial_observation(fsa_, dta_, scenario_.tiebreak.mode, ctx);
    retarget_segment(*v);
  }

  // The starting state must be outside every currently forbidden region.
  for (int o : fsa_.forbidden(s_)) {
    if (rois_.by_obs(o).h(x_) >= 0.0)
      throw ValidationError("init.x0 lies inside forbidden region '" +
                            rois_.by_obs(o).name + "'");
  }
}

void Simulation::prepopulate_stack() {
  std::mt19937_64 rng(scenario_.seed);
  prepopulate_stack_rng(rng);
}

void Simulation::prepopulate_stack_rng(std::mt19937_64& rng) {
  const auto& sc = scenario_.sysid;
  double dt = scenario_.dt;
  int steps = std::max(2, static_cast<int>(std::round(sc.dt_window / dt)));
  for (int i = 0; i < sc.M; ++i) {
    VectorXd x(plant_.n);
    for (int d = 0; d < plant_.n; ++d)
      x[d] = sc.prepopulate_box[d] * uniform_pm1(rng);
    VectorXd u(plant_.m);
    for (int d = 0; d < plant_.m; ++d) u[d] = sc.prepopulate_u * uniform_pm1(rng);

    std::vector<sysid::WindowSample> samples;
    double t = 0.0;
    auto push = [&]() {
      sysid::WindowSample ws;
      ws.t = t;
      ws.x = x;
      ws.Y = plant_.basis(x);
      ws.gu = plant_.g(x) * u;
      samples.push_back(std::move(ws));
    };
    push();
    auto deriv = [&](const VectorXd& xs) -> VectorXd {
      return plant_.f(xs) + plant_.g(xs) * u;
    };
    for (int k = 0; k < steps; ++k) {
      VectorXd k1 = deriv(x);
      VectorXd k2 = deriv(x + 0.5 * dt * k1);
      VectorXd k3 = deriv(x + 0.5 * dt * k2);
      VectorXd k4 = deriv(x + dt * k3);
      x += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      t += dt;
      push();
    }
    stack_.accumulate(samples);
  }
}

void Simulation::retarget_segment(int target_obs) {
  o_target_ = target_obs;
  aux_ = plant::retarget(plant_, rois_, target_obs, estimator_.theta_hat());
  std::vector<plant::Roi> forbidden;
  for (int o : fsa_.forbidden(s_)) forbidden.push_back(rois_.by_obs(o));
  barrier_ = cost::RecenteredBarrier(std::move(forbidden), aux_.x_d(),
                                     scenario_.cost.barrier_scale);
}

Simulation::Derivs Simulation::derivatives(double t, const VectorXd& x,
                                           const MatrixXd& theta,
                                           const MatrixXd& Ptheta,
                                           const VectorXd& Wc, const MatrixXd& Pc,
                                           const VectorXd& Wa, Diag* diag) const {
  Derivs d;
  int L = basis_->size();
  VectorXd e = x - aux_.x_d();
  bool zero_ctrl = scenario_.controller == "zero";
  bool domain_ok = barrier_.in_domain(e);

  VectorXd mu = VectorXd::Zero(plant_.m);
  VectorXd u = VectorXd::Zero(plant_.m);
  adp::BellmanSample on;
  std::vector<adp::BellmanSample> off;
  bool learn = !zero_ctrl && domain_ok;

  if (!zero_ctrl) {
    if (domain_ok) {
      on = adp::bellman_sample(*basis_, e, e, Wc, Wa, theta, cost_, barrier_,
                               aux_, scenario_.adp.gamma1);
      mu = on.mu;
      u = aux_.u_d(theta) + mu;
      for (const VectorXd& y : adp::sample_offpolicy(
               *basis_, e, t, scenario_.adp.N, scenario_.adp.omega_probe)) {
        if (!barrier_.in_domain(y)) continue;  // probe fell in a forbidden region
        off.push_back(adp::bellman_sample(*basis_, y, e, Wc, Wa, theta, cost_,
                                          barrier_, aux_, scenario_.adp.gamma1));
      }
    } else {
      // Monitor failure: inside a forbidden region the barrier (and so the
      // feedback) is undefined. Keep flying on the feedforward term and
      // pause learning; the violation is logged, not clamped away.
      u = aux_.u_d(theta);
    }
  }

  d.dx = plant_.f(x) + plant_.g(x) * u;

  if (learn) {
    adp::CriticState critic = critic_;
    critic.Wc = Wc;
    critic.P = Pc;
    adp::critic_derivatives(critic, on, off, d.dWc, d.dPc);
    adp::ActorState actor = actor_;
    actor.Wa = Wa;
    d.dWa = adp::actor_derivatives(actor, critic, on, off);
  } else {
    d.dWc = VectorXd::Zero(L);
    d.dPc = MatrixXd::Zero(L, L);
    d.dWa = VectorXd::Zero(L);
  }

  sysid::icl_derivatives(theta, Ptheta, stack_, scenario_.sysid.k_theta,
                         scenario_.sysid.beta_theta,
                         scenario_.sysid.gamma_cap_factor * scenario_.sysid.gamma0,
                         d.dtheta, d.dPtheta);

  if (diag) {
    diag->u = u;
    diag->mu = mu;
    diag->delta_t =
        learn ? on.delta : std::numeric_limits<double>::quiet_NaN();
    diag->lambda_on = MatrixXd::Zero(L, L);
    diag->lambda_off = MatrixXd::Zero(L, L);
    if (learn) {
      diag->lambda_on =
          (on.omega * on.omega.transpose()) / (on.rho * on.rho);
      for (const auto& s : off)
        diag->lambda_off += (s.omega * s.omega.transpose()) / (s.rho * s.rho);
      diag->lambda_off /= std::max(1, scenario_.adp.N);
    }
  }
  return d;
}

void Simulation::rk4_step(const Derivs& k1) {
  const double dt = scenario_.dt;
  const MatrixXd theta0 = estimator_.theta_hat();
  const MatrixXd Ptheta0 = estimator_.P();
  const VectorXd Wc0 = critic_.Wc;
  const MatrixXd Pc0 = critic_.P;
  const VectorXd Wa0 = actor_.Wa;
  const VectorXd x0 = x_;

  auto at = [&](const Derivs& k, double h) {
    return std::make_tuple(x0 + h * k.dx, theta0 + h * k.dtheta,
                           Ptheta0 + h * k.dPtheta, Wc0 + h * k.dWc,
                           Pc0 + h * k.dPc, Wa0 + h * k.dWa);
  };

  auto [x2, th2, pt2, wc2, pc2, wa2] = at(k1, 0.5 * dt);
  Derivs k2 = derivatives(t_ + 0.5 * dt, x2, th2, pt2, wc2, pc2, wa2, nullptr);
  auto [x3, th3, pt3, wc3, pc3, wa3] = at(k2, 0.5 * dt);
  Derivs k3 = derivatives(t_ + 0.5 * dt, x3, th3, pt3, wc3, pc3, wa3, nullptr);
  auto [x4, th4, pt4, wc4, pc4, wa4] = at(k3, dt);
  Derivs k4 = derivatives(t_ + dt, x4, th4, pt4, wc4, pc4, wa4, nullptr);

  auto blend = [&](auto k1v, auto k2v, auto k3v, auto k4v) {
    return dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
  };
  x_ = x0 + blend(k1.dx, k2.dx, k3.dx, k4.dx);
  estimator_.apply_step(
      theta0 + blend(k1.dtheta, k2.dtheta, k3.dtheta, k4.dtheta),
      Ptheta0 + blend(k1.dPtheta, k2.dPtheta, k3.dPtheta, k4.dPtheta));
  critic_.Wc = Wc0 + blend(k1.dWc, k2.dWc, k3.dWc, k4.dWc);
  MatrixXd Pc_new = Pc0 + blend(k1.dPc, k2.dPc, k3.dPc, k4.dPc);
  critic_.P = 0.5 * (Pc_new + Pc_new.transpose());
  actor_.Wa = Wa0 + blend(k1.dWa, k2.dWa, k3.dWa, k4.dWa);
  t_ += dt;
  check_finite();
}

void Simulation::step_flow() {
  rk4_step(derivatives(t_, x_, estimator_.theta_hat(), estimator_.P(), critic_.Wc,
                       critic_.P, actor_.Wa, nullptr));
}

bool Simulation::detect_and_jump() {
  if (accepted_ || o_target_ < 0) return false;
  if (rois_.by_obs(o_target_).h(x_) < 0.0) return false;

  int s_from = s_;
  int o_cons = o_target_;
  JumpRecord rec;
  rec.t = t_;
  rec.s_from = s_from;
  rec.o_consumed = o_cons;
  rec.vd_from = dta_.at(s_from);
  VectorXd e_old = x_ - aux_.x_d();
  rec.vhat_before = barrier_.in_domain(e_old)
                        ? adp::value_hat(*basis_, e_old, e_old, critic_.Wc, barrier_)
                        : std::numeric_limits<double>::quiet_NaN();

  int s_to = fsa_.step(s_from, o_cons);
  if (s_to < 0)
    throw EmptyPolicySet("jump on an undefined transition at state " +
                         std::to_string(s_from));
  j_ += 1;
  s_ = s_to;
  rec.j = j_;
  rec.s_to = s_to;
  rec.vd_to = dta_.at(s_to);
  log_.result.word.push_back(o_cons);

  if (fsa_.is_accepting(s_to)) {
    accepted_ = true;
    accept_t_ = t_;
    accept_j_ = j_;
    o_target_ = -1;
    // Keep regulating toward the goal just reached; nothing is forbidden in
    // an accepting state.
    barrier_ = cost::RecenteredBarrier({}, aux_.x_d(), scenario_.cost.barrier_scale);
    rec.v_next = -1;
  } else {
    fsa::PolicyContext ctx;
    ctx.roi_distance = [this](int o) {
      return (x_ - rois_.by_obs(o).center).norm();
    };
    ctx.word = &fixed_word_;
    ctx.word_pos = j_;
    auto v = fsa::next_observation(fsa_, dta_, s_from, o_cons,
                                   scenario_.tiebreak.mode, ctx);
    retarget_segment(*v);
    rec.v_next = *v;
  }

  VectorXd e_new = x_ - aux_.x_d();
  rec.vhat_after = barrier_.in_domain(e_new)
                       ? adp::value_hat(*basis_, e_new, e_new, critic_.Wc, barrier_)
                       : std::numeric_limits<double>::quiet_NaN();
  log_.jumps.push_back(rec);
  return true;
}

double Simulation::current_t_end() const {
  if (accepted_) return std::min(scenario_.t_max, accept_t_ + scenario_.settle);
  return scenario_.t_max;
}

void Simulation::check_finite() const {
  bool ok = x_.allFinite() && estimator_.theta_hat().allFinite() &&
            estimator_.P().allFinite() && critic_.Wc.allFinite() &&
            critic_.P.allFinite() && actor_.Wa.allFinite();
  if (!ok)
    throw NumericalBlowup("non-finite state at t=" + std::to_string(t_) +
                          ", j=" + std::to_string(j_));
}

void Simulation::log_sample(const Diag& diag) {
  SampleRecord rec;
  rec.t = t_;
  rec.j = j_;
  rec.x = x_;
  rec.s = s_;
  rec.o_target = o_target_;
  rec.u = diag.u;
  rec.mu = diag.mu;
  rec.delta_t = diag.delta_t;
  if (plant_.theta_true)
    rec.theta_err = (*plant_.theta_true - estimator_.theta_hat()).norm();
  rec.Wc = critic_.Wc;
  rec.Wa = actor_.Wa;
  eig_bounds(critic_.P, rec.gamma_min, rec.gamma_max);
  eig_bounds(estimator_.P(), rec.gamma_theta_min, rec.gamma_theta_max);
  rec.barrier_violation = false;
  for (int o : fsa_.forbidden(s_))
    if (rois_.by_obs(o).h(x_) >= 0.0) rec.barrier_violation = true;
  log_.samples.push_back(std::move(rec));
}

TrajectoryLog Simulation::run() {
  log_.resolved_config_json = scenario_.resolved_json;
  log_.config_hash = scenario_.config_hash;
  log_.version = kVersion;

  const double dt = scenario_.dt;
  detect_and_jump();  // the initial condition may already be in the target

  for (;;) {
    Diag diag;
    Derivs k1 = derivatives(t_, x_, estimator_.theta_hat(), estimator_.P(),
                            critic_.Wc, critic_.P, actor_.Wa, &diag);
    monitor_.record(t_, diag.lambda_on, diag.lambda_off);

    // Window bookkeeping for online identification.
    if (!scenario_.sysid.prepopulate && scenario_.sysid.k_theta > 0.0) {
      sysid::WindowSample ws;
      ws.t = t_;
      ws.x = x_;
      ws.Y = plant_.basis(x_);
      ws.gu = plant_.g(x_) * diag.u;
      window_.push_back(std::move(ws));
      while (window_.size() > 2 &&
             window_.front().t < t_ - scenario_.sysid.dt_window - 2.0 * dt)
        window_.erase(window_.begin());
      if (t_ >= scenario_.sysid.dt_window - 1e-12 &&
          t_ >= last_stack_append_ + scenario_.sysid.append_period - 1e-12) {
        stack_.accumulate(window_);
        last_stack_append_ = t_;
      }
    }

    log_sample(diag);
    if (t_ >= current_t_end() - 0.5 * dt) break;
    rk4_step(k1);
    detect_and_jump();
  }

  log_.result.accepted = accepted_;
  log_.result.T = accept_t_;
  log_.result.J = accept_j_;
  log_.result.t_end = t_;
  log_.result.status = "ok";
  double fe_window = 2.0 * M_PI / scenario_.adp.omega_probe;
  log_.excitation = monitor_.report(fe_window, accepted_ ? accept_t_ : -1.0);
  log_.sysid_excitation_level = stack_.excitation_level();
  return log_;
}

TrajectoryLog run(const config::Scenario& scenario) {
  Simulation sim(scenario);
  return sim.run();
}

EventualityVerdict check_eventuality(const TrajectoryLog& log, const fsa::Fsa& fsa) {
  EventualityVerdict v;
  for (const auto& s : log.samples) {
    if (fsa.is_accepting(s.s)) {
      v.accepted = true;
      v.T = s.t;
      v.J = s.j;
      return v;
    }
  }
  return v;
}

CertificateReport check_certificate(const TrajectoryLog& log, const fsa::Fsa& fsa,
                                    const fsa::DtaTable& dta,
                                    const plant::RoiSet& rois) {
  CertificateReport rep;
  rep.jumps_checked = static_cast<int>(log.jumps.size());

  // (a) the distance to acceptance drops by at least one at every jump.
  for (const auto& jr : log.jumps)
    if (!(dta.at(jr.s_to) <= dta.at(jr.s_from) - 1)) rep.dta_decreases = false;

  // (b) surrogate certificate V_d + lambda V_hat with a witness lambda
  // recovered from the log.
  double lambda = 1.0;
  for (const auto& jr : log.jumps) {
    double drop = static_cast<double>(jr.vd_from - jr.vd_to);
    double dv = jr.vhat_after - jr.vhat_before;
    if (!std::isfinite(dv)) {
      rep.surrogate_decreases = false;
      continue;
    }
    lambda = std::min(lambda, 0.5 * drop / std::max(dv, 1.0));
  }
  lambda = std::clamp(lambda, 1e-12, 1.0);
  rep.lambda_witness = lambda;
  for (const auto& jr : log.jumps) {
    double dv = jr.vhat_after - jr.vhat_before;
    if (!std::isfinite(dv) ||
        !(static_cast<double>(jr.vd_to - jr.vd_from) + lambda * dv < 0.0))
      rep.surrogate_decreases = false;
  }

  // (c) clearance from every region forbidden at the sample's automaton
  // state, over the whole run.
  for (const auto& s : log.samples) {
    for (int o : fsa.forbidden(s.s)) {
      double clearance = -rois.by_obs(o).h(s.x);
      rep.min_clearance = std::min(rep.min_clearance, clearance);
      if (clearance <= 0.0) rep.forbidden_clear = false;
    }
  }
  return rep;
}

bool hybrid_time_wellformed(const TrajectoryLog& log) {
  for (std::size_t i = 1; i < log.samples.size(); ++i) {
    const auto& a = log.samples[i - 1];
    const auto& b = log.samples[i];
    if (b.t < a.t - 1e-12) return false;
    if (b.j < a.j || b.j > a.j + 1) return false;
  }
  int expected_j = 0;
  for (const auto& jr : log.jumps)
    if (jr.j != ++expected_j) return false;
  return true;
}

}  // namespace hyreach::engine
