#pragma once

#include <Eigen/Dense>
#include <vector>

#include "hyreach/errors.hpp"

namespace hyreach::sysid {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// One recorded window of input-output integrals over [t - dt_window, t]:
/// Y_int = integral of the drift basis Y(x(tau)), U_int = integral of
/// g(x(tau)) u(tau), dx = x(t) - x(t - dt_window).
struct StackEntry {
  VectorXd Y_int;
  VectorXd U_int;
  VectorXd dx;
  double t = 0.0;
};

/// A single trajectory sample used to form window integrals.
struct WindowSample {
  double t = 0.0;
  VectorXd x;
  VectorXd Y;   // basis at x
  VectorXd gu;  // g(x) u
};

/// Fixed-capacity history stack. When full, a candidate replaces the entry
/// whose removal maximizes the minimum eigenvalue of the regressor Gram sum,
/// and only if that does not decrease it, so the excitation level is
/// monotone non-decreasing.
class HistoryStack {
 public:
  HistoryStack() = default;
  HistoryStack(int capacity, double dt_window);

  int capacity() const { return capacity_; }
  double dt_window() const { return dt_window_; }
  const std::vector<StackEntry>& entries() const { return entries_; }

  /// Trapezoidal-rule integrals over the trailing dt_window of `samples`
  /// (which must span at least dt_window); the resulting entry is offered
  /// to the stack. Returns true if it was inserted. Throws WindowTooShort.
  bool accumulate(const std::vector<WindowSample>& samples);

  /// Offers a precomputed entry (used by pre-population).
  bool offer(const StackEntry& entry);

  /// Minimum eigenvalue of sum_i Y_i Y_i^T; zero when empty.
  double excitation_level() const;

  MatrixXd gram() const;

  /// One line per entry: t, the basis integral, the input integral and the
  /// state difference, space separated at full precision.
  void dump(std::ostream& out) const;

  /// Reads entries produced by dump(); existing entries are replaced.
  void load(std::istream& in, int p1, int n);

 private:
  int capacity_ = 0;
  double dt_window_ = 0.0;
  std::vector<StackEntry> entries_;
};

/// Update-law right-hand side for the weight estimate and the inverse
/// adaptation gain P = Gamma^{-1}:
///   theta' = k Gamma sum_i Y_i (dx_i - U_i - theta^T Y_i)^T
///   P'     = -beta P + k sum_i Y_i Y_i^T
/// The forgetting term is gated once Gamma reaches gamma_cap (0 disables).
void icl_derivatives(const MatrixXd& theta, const MatrixXd& P,
                     const HistoryStack& stack, double k_theta,
                     double beta_theta, double gamma_cap, MatrixXd& dtheta,
                     MatrixXd& dP);

/// Integral concurrent-learning estimator of the drift weights theta
/// (p1 x n). The gain matrix evolves by a forgetting-factor law and is
/// propagated through its inverse, which is linear and well conditioned at
/// practical step sizes; the estimate is kept inside a Frobenius-norm ball
/// by projection.
class ThetaEstimator {
 public:
  ThetaEstimator() = default;
  ThetaEstimator(MatrixXd theta0, double gamma0, double k_theta,
                 double beta_theta, double theta_max,
                 double gamma_cap = 0.0);

  const MatrixXd& theta_hat() const { return theta_hat_; }
  MatrixXd gamma() const;
  int p1() const { return static_cast<int>(theta_hat_.rows()); }

  /// Time derivatives of (theta_hat, P = Gamma^{-1}) for the current stack.
  /// The caller integrates; projection and symmetrization are applied by
  /// apply_step(). Throws GammaNotSPD if the gain matrix lost definiteness.
  void derivatives(const HistoryStack& stack, MatrixXd& dtheta,
                   MatrixXd& dP) const;

  /// Writes back an integrated step, projecting theta onto the norm ball
  /// and symmetrizing the gain.
  void apply_step(const MatrixXd& theta_new, const MatrixXd& P_new);

  /// One explicit Euler step of both update laws with the stack frozen.
  void icl_step(const HistoryStack& stack, double dt);

  // Raw inverse-gain access for external integrators.
  const MatrixXd& P() const { return P_; }

 private:
  MatrixXd theta_hat_;
  MatrixXd P_;  // inverse of the adaptation gain
  double k_theta_ = 0.0;
  double beta_theta_ = 0.0;
  double theta_max_ = 0.0;
  double gamma_cap_ = 0.0;  // 0 disables the forgetting cap
};

}  // namespace hyreach::sysid
