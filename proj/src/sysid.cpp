#include "hyreach/sysid.hpp"

#include <algorithm>
#include <cmath>

namespace hyreach::sysid {

namespace {

double min_eig(const MatrixXd& sym) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(sym);
  return es.eigenvalues().minCoeff();
}

}  // namespace

HistoryStack::HistoryStack(int capacity, double dt_window)
    : capacity_(capacity), dt_window_(dt_window) {
  if (capacity_ < 1) throw ValidationError("history stack capacity must be >= 1");
  if (dt_window_ <= 0.0)
    throw ValidationError("history stack window must be positive");
}

bool HistoryStack::accumulate(const std::vector<WindowSample>& samples) {
  if (samples.size() < 2) throw WindowTooShort("need at least two samples");
  double t_end = samples.back().t;
  double t_start = t_end - dt_window_;
  if (samples.front().t > t_start + 1e-12)
    throw WindowTooShort("samples span " +
                         std::to_string(t_end - samples.front().t) +
                         " s, window needs " + std::to_string(dt_window_));

  // Trapezoidal integration over [t_end - dt_window, t_end]. The first
  // sample at or before t_start anchors the window; grids are uniform in
  // practice so no interpolation is attempted beyond picking that sample.
  std::size_t first = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].t <= t_start + 1e-12) first = i;
  }
  StackEntry e;
  e.Y_int = VectorXd::Zero(samples[first].Y.size());
  e.U_int = VectorXd::Zero(samples[first].gu.size());
  for (std::size_t i = first + 1; i < samples.size(); ++i) {
    double h = samples[i].t - samples[i - 1].t;
    e.Y_int += 0.5 * h * (samples[i].Y + samples[i - 1].Y);
    e.U_int += 0.5 * h * (samples[i].gu + samples[i - 1].gu);
  }
  e.dx = samples.back().x - samples[first].x;
  e.t = t_end;
  return offer(e);
}

bool HistoryStack::offer(const StackEntry& entry) {
  if (static_cast<int>(entries_.size()) < capacity_) {
    entries_.push_back(entry);
    return true;
  }
  // Replace the entry whose removal maximizes the resulting minimum
  // eigenvalue, but never decrease it.
  MatrixXd total = gram();
  MatrixXd candidate = entry.Y_int * entry.Y_int.transpose();
  double current = min_eig(total);
  double best = current;
  int best_idx = -1;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    MatrixXd without =
        total - entries_[i].Y_int * entries_[i].Y_int.transpose() + candidate;
    double lam = min_eig(without);
    if (lam > best) {
      best = lam;
      best_idx = static_cast<int>(i);
    }
  }
  if (best_idx < 0) return false;
  entries_[best_idx] = entry;
  return true;
}

double HistoryStack::excitation_level() const {
  if (entries_.empty()) return 0.0;
  return std::max(0.0, min_eig(gram()));
}

MatrixXd HistoryStack::gram() const {
  if (entries_.empty()) return MatrixXd();
  int p = static_cast<int>(entries_.front().Y_int.size());
  MatrixXd g = MatrixXd::Zero(p, p);
  for (const auto& e : entries_) g += e.Y_int * e.Y_int.transpose();
  return g;
}

ThetaEstimator::ThetaEstimator(MatrixXd theta0, double gamma0, double k_theta,
                               double beta_theta, double theta_max,
                               double gamma_cap)
    : theta_hat_(std::move(theta0)),
      k_theta_(k_theta),
      beta_theta_(beta_theta),
      theta_max_(theta_max),
      gamma_cap_(gamma_cap) {
  if (gamma0 <= 0.0) throw ValidationError("sysid.gamma0 must be positive");
  if (theta_max_ <= 0.0) throw ValidationError("sysid.theta_max must be positive");
  P_ = MatrixXd::Identity(p1(), p1()) / gamma0;
  if (theta_hat_.norm() > theta_max_)
    theta_hat_ *= theta_max_ / theta_hat_.norm();
}

MatrixXd ThetaEstimator::gamma() const { return P_.inverse(); }

void icl_derivatives(const MatrixXd& theta, const MatrixXd& P,
                     const HistoryStack& stack, double k_theta,
                     double beta_theta, double gamma_cap, MatrixXd& dtheta,
                     MatrixXd& dP) {
  double lam_min_P = min_eig(0.5 * (P + P.transpose()));
  if (lam_min_P <= 0.0)
    throw GammaNotSPD("adaptation gain lost positive definiteness");
  MatrixXd gamma_now = P.inverse();

  // The radial projection onto the norm ball is applied after the step.
  MatrixXd sum = MatrixXd::Zero(theta.rows(), theta.cols());
  for (const auto& e : stack.entries()) {
    VectorXd residual = e.dx - e.U_int - theta.transpose() * e.Y_int;
    sum += e.Y_int * residual.transpose();
  }
  dtheta = k_theta * gamma_now * sum;

  double beta_eff = beta_theta;
  if (gamma_cap > 0.0 && lam_min_P <= 1.0 / gamma_cap) beta_eff = 0.0;
  dP = -beta_eff * P;
  if (!stack.entries().empty()) dP += k_theta * stack.gram();
}

void ThetaEstimator::derivatives(const HistoryStack& stack, MatrixXd& dtheta,
                                 MatrixXd& dP) const {
  icl_derivatives(theta_hat_, P_, stack, k_theta_, beta_theta_, gamma_cap_,
                  dtheta, dP);
}

void ThetaEstimator::apply_step(const MatrixXd& theta_new, const MatrixXd& P_new) {
  theta_hat_ = theta_new;
  double norm = theta_hat_.norm();
  if (norm > theta_max_) theta_hat_ *= theta_max_ / norm;
  P_ = 0.5 * (P_new + P_new.transpose());
}

void ThetaEstimator::icl_step(const HistoryStack& stack, double dt) {
  MatrixXd dtheta, dP;
  derivatives(stack, dtheta, dP);
  apply_step(theta_hat_ + dt * dtheta, P_ + dt * dP);
}

}  // namespace hyreach::sysid
