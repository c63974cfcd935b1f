#include "hyreach/adp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hyreach::adp {

namespace {

double min_eig(const MatrixXd& sym) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (sym + sym.transpose()));
  return es.eigenvalues().minCoeff();
}

// Unit direction rotating in the leading coordinate plane.
VectorXd rotating_direction(int n, double phase) {
  VectorXd d = VectorXd::Zero(n);
  if (n == 1) {
    d[0] = std::cos(phase);
  } else {
    d[0] = std::cos(phase);
    d[1] = std::sin(phase);
  }
  return d;
}

}  // namespace

StafKernelBasis::StafKernelBasis(int n, double a) : n_(n), a_(a) {
  if (n_ < 1) throw ValidationError("basis dimension must be >= 1");
  if (a_ <= 0.0) throw ValidationError("basis radius must be positive");
  // Regular simplex directions: unit vectors q_i = e_i (i < n) plus
  // q_n = (1 - sqrt(n+1))/n * ones, recentered and normalized.
  std::vector<VectorXd> q;
  for (int i = 0; i < n_; ++i) {
    VectorXd v = VectorXd::Zero(n_);
    v[i] = 1.0;
    q.push_back(v);
  }
  q.push_back(VectorXd::Constant(n_, (1.0 - std::sqrt(n_ + 1.0)) / n_));
  VectorXd centroid = VectorXd::Zero(n_);
  for (const auto& v : q) centroid += v;
  centroid /= static_cast<double>(q.size());
  for (auto& v : q) {
    VectorXd d = v - centroid;
    offsets_.push_back(d / d.norm());
  }
}

VectorXd StafKernelBasis::center(int i, const VectorXd& e) const {
  return e + probe_radius(e) * offsets_[i];
}

double StafKernelBasis::probe_radius(const VectorXd& e) const {
  double s = e.squaredNorm();
  return a_ * s / (1.0 + s);
}

VectorXd StafKernelBasis::sigma(const VectorXd& y, const VectorXd& e) const {
  VectorXd out(size());
  double nu = probe_radius(e);
  for (int i = 0; i < size(); ++i) out[i] = y.dot(e + nu * offsets_[i]);
  return out;
}

MatrixXd StafKernelBasis::grad_sigma(const VectorXd&, const VectorXd& e) const {
  MatrixXd out(size(), n_);
  double nu = probe_radius(e);
  for (int i = 0; i < size(); ++i) out.row(i) = (e + nu * offsets_[i]).transpose();
  return out;
}

VectorXd QuadraticBasis1d::sigma(const VectorXd& y, const VectorXd&) const {
  VectorXd out(1);
  out[0] = y[0] * y[0];
  return out;
}

MatrixXd QuadraticBasis1d::grad_sigma(const VectorXd& y, const VectorXd&) const {
  MatrixXd out(1, 1);
  out(0, 0) = 2.0 * y[0];
  return out;
}

double value_hat(const ValueBasis& basis, const VectorXd& y, const VectorXd& e,
                 const VectorXd& Wc, const cost::RecenteredBarrier& barrier) {
  return Wc.dot(basis.sigma(y, e)) + barrier.bounded(y);
}

VectorXd policy_hat(const ValueBasis& basis, const VectorXd& y, const VectorXd& e,
                    const VectorXd& Wa, const cost::CostSpec& cost,
                    const cost::RecenteredBarrier& barrier,
                    const plant::AuxiliarySystem& aux) {
  VectorXd grad_v = basis.grad_sigma(y, e).transpose() * Wa +
                    barrier.bounded_gradient(y);
  return -0.5 * cost.R_inv() * aux.G(y).transpose() * grad_v;
}

BellmanSample bellman_sample(const ValueBasis& basis, const VectorXd& y,
                             const VectorXd& e, const VectorXd& Wc,
                             const VectorXd& Wa, const MatrixXd& theta_hat,
                             const cost::CostSpec& cost,
                             const cost::RecenteredBarrier& barrier,
                             const plant::AuxiliarySystem& aux, double gamma1) {
  BellmanSample s;
  MatrixXd grad_sig = basis.grad_sigma(y, e);
  MatrixXd G = aux.G(y);
  MatrixXd R_inv = cost.R_inv();
  VectorXd mu = -0.5 * R_inv * G.transpose() *
                (grad_sig.transpose() * Wa + barrier.bounded_gradient(y));
  VectorXd flow = aux.F_hat(y, theta_hat) + G * mu;
  s.omega = grad_sig * flow;
  s.rho = 1.0 + gamma1 * s.omega.squaredNorm();
  double r = cost.Q(y) + mu.dot(cost.R * mu) + barrier.value(y);
  VectorXd grad_v = grad_sig.transpose() * Wc + barrier.bounded_gradient(y);
  s.delta = r + grad_v.dot(flow);
  MatrixXd G_R = G * R_inv * G.transpose();
  s.G_sigma = grad_sig * G_R * grad_sig.transpose();
  s.mu = mu;
  return s;
}

double bellman_error(const ValueBasis& basis, const VectorXd& y, const VectorXd& e,
                     const VectorXd& Wc, const VectorXd& Wa,
                     const MatrixXd& theta_hat, const cost::CostSpec& cost,
                     const cost::RecenteredBarrier& barrier,
                     const plant::AuxiliarySystem& aux) {
  return bellman_sample(basis, y, e, Wc, Wa, theta_hat, cost, barrier, aux, 1.0)
      .delta;
}

std::vector<VectorXd> sample_offpolicy(const ValueBasis& basis, const VectorXd& e,
                                       double t, int N, double omega_probe) {
  if (N < 1) throw ValidationError("off-policy probe count must be >= 1");
  std::vector<VectorXd> out;
  double radius = basis.probe_radius(e);
  for (int k = 0; k < N; ++k) {
    double phase = omega_probe * t + 2.0 * M_PI * k / N;
    out.push_back(e + radius * rotating_direction(basis.dim(), phase));
  }
  return out;
}

void critic_derivatives(const CriticState& critic, const BellmanSample& on_policy,
                        const std::vector<BellmanSample>& off_policy,
                        VectorXd& dWc, MatrixXd& dP) {
  if (min_eig(critic.P) <= 0.0)
    throw GammaNotSPD("critic gain lost positive definiteness");
  MatrixXd gamma_now = critic.P.inverse();
  int L = static_cast<int>(critic.Wc.size());
  int N = std::max<int>(1, critic.N);

  VectorXd force = VectorXd::Zero(L);
  MatrixXd lambda_sum = MatrixXd::Zero(L, L);

  const double rho2_on = on_policy.rho * on_policy.rho;
  force += critic.kc1 * on_policy.omega * (on_policy.delta / rho2_on);
  lambda_sum += critic.kc1 * (on_policy.omega * on_policy.omega.transpose()) / rho2_on;

  for (const auto& s : off_policy) {
    double rho2 = s.rho * s.rho;
    force += (critic.kc2 / N) * s.omega * (s.delta / rho2);
    lambda_sum += (critic.kc2 / N) * (s.omega * s.omega.transpose()) / rho2;
  }

  dWc = -gamma_now * force;

  double beta_eff = critic.beta;
  if (critic.gamma_cap > 0.0 && min_eig(critic.P) <= 1.0 / critic.gamma_cap)
    beta_eff = 0.0;
  // Gamma' = beta Gamma - Gamma (sum of weighted Lambda) Gamma, in inverse form.
  dP = -beta_eff * critic.P + lambda_sum;
}

VectorXd actor_derivatives(const ActorState& actor, const CriticState& critic,
                           const BellmanSample& on_policy,
                           const std::vector<BellmanSample>& off_policy) {
  int N = std::max<int>(1, critic.N);
  VectorXd dWa = -actor.ka1 * (actor.Wa - critic.Wc) - actor.ka2 * actor.Wa;
  const double rho2_on = on_policy.rho * on_policy.rho;
  dWa += critic.kc1 * on_policy.G_sigma.transpose() * actor.Wa *
         (on_policy.omega.dot(critic.Wc)) / (4.0 * rho2_on);
  for (const auto& s : off_policy) {
    double rho2 = s.rho * s.rho;
    dWa += critic.kc2 * s.G_sigma.transpose() * actor.Wa *
           (s.omega.dot(critic.Wc)) / (4.0 * N * rho2);
  }
  return dWa;
}

void critic_step(CriticState& critic, const BellmanSample& on_policy,
                 const std::vector<BellmanSample>& off_policy, double dt) {
  VectorXd dWc;
  MatrixXd dP;
  critic_derivatives(critic, on_policy, off_policy, dWc, dP);
  critic.Wc += dt * dWc;
  MatrixXd P_new = critic.P + dt * dP;
  critic.P = 0.5 * (P_new + P_new.transpose());
}

void actor_step(ActorState& actor, const CriticState& critic,
                const BellmanSample& on_policy,
                const std::vector<BellmanSample>& off_policy, double dt) {
  actor.Wa += dt * actor_derivatives(actor, critic, on_policy, off_policy);
}

void ExcitationMonitor::record(double t, const MatrixXd& lambda_on,
                               const MatrixXd& lambda_off_mean) {
  times_.push_back(t);
  lambda_on_.push_back(lambda_on);
  lambda_off_.push_back(lambda_off_mean);
}

ExcitationMonitor::Report ExcitationMonitor::report(double window,
                                                    double t_end) const {
  Report rep;
  rep.window = window;
  if (times_.size() < 2) return rep;

  std::size_t limit = times_.size();
  if (t_end >= 0.0) {
    while (limit > 1 && times_[limit - 1] > t_end) --limit;
  }
  if (limit < 2) return rep;

  // Prefix trapezoidal integrals.
  std::vector<MatrixXd> int_on(limit), int_off(limit);
  int_on[0] = MatrixXd::Zero(L_, L_);
  int_off[0] = MatrixXd::Zero(L_, L_);
  for (std::size_t i = 1; i < limit; ++i) {
    double h = times_[i] - times_[i - 1];
    int_on[i] = int_on[i - 1] + 0.5 * h * (lambda_on_[i] + lambda_on_[i - 1]);
    int_off[i] = int_off[i - 1] + 0.5 * h * (lambda_off_[i] + lambda_off_[i - 1]);
  }

  double c1 = std::numeric_limits<double>::infinity();
  double c2 = std::numeric_limits<double>::infinity();
  double c3 = std::numeric_limits<double>::infinity();
  std::size_t right = 0;
  bool any_window = false;
  for (std::size_t left = 0; left < limit; ++left) {
    c2 = std::min(c2, min_eig(lambda_off_[left]));
    if (right < left) right = left;
    while (right + 1 < limit && times_[right] - times_[left] < window) ++right;
    if (times_[right] - times_[left] < window) break;  // tail shorter than window
    any_window = true;
    c1 = std::min(c1, min_eig(int_off[right] - int_off[left]));
    c3 = std::min(c3, min_eig(int_on[right] - int_on[left]));
  }
  if (!any_window) {
    // Fall back to the single full-span window.
    c1 = min_eig(int_off[limit - 1]);
    c3 = min_eig(int_on[limit - 1]);
  }
  rep.c1 = std::max(0.0, c1);
  rep.c2 = std::max(0.0, std::isfinite(c2) ? c2 : 0.0);
  rep.c3 = std::max(0.0, c3);
  rep.c1_positive = rep.c1 > 1e-12;
  return rep;
}

}  // namespace hyreach::adp
