#pragma once

#include <Eigen/Dense>
#include <memory>
#include <vector>

#include "hyreach/cost.hpp"
#include "hyreach/plant.hpp"

namespace hyreach::adp {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Basis for local value-function approximation. sigma(y, e) is evaluated at
/// a query point y with kernel centers placed relative to the current error
/// state e; probe_radius shapes the off-policy sampling radius.
class ValueBasis {
 public:
  virtual ~ValueBasis() = default;
  virtual int size() const = 0;  // number of weights L
  virtual int dim() const = 0;   // state dimension n
  virtual VectorXd sigma(const VectorXd& y, const VectorXd& e) const = 0;
  /// Gradient with respect to the query point, L x n.
  virtual MatrixXd grad_sigma(const VectorXd& y, const VectorXd& e) const = 0;
  virtual double probe_radius(const VectorXd& e) const = 0;
};

/// State-following kernels sigma_i(y) = y^T c_i(e) with centers
/// c_i(e) = e + nu(e) d_i on a regular simplex (L = n + 1) and radius
/// shaping nu(e) = a e^T e / (1 + e^T e), so centers collapse onto the goal
/// as the error vanishes.
class StafKernelBasis : public ValueBasis {
 public:
  StafKernelBasis(int n, double a);
  int size() const override { return n_ + 1; }
  int dim() const override { return n_; }
  VectorXd sigma(const VectorXd& y, const VectorXd& e) const override;
  MatrixXd grad_sigma(const VectorXd& y, const VectorXd& e) const override;
  double probe_radius(const VectorXd& e) const override;
  VectorXd center(int i, const VectorXd& e) const;
  const std::vector<VectorXd>& offsets() const { return offsets_; }

 private:
  int n_;
  double a_;
  std::vector<VectorXd> offsets_;  // n + 1 unit simplex directions
};

/// Exact scalar basis sigma(y) = y^2 for problems with a known quadratic
/// value form; probes keep a fixed amplitude so excitation persists at the
/// origin.
class QuadraticBasis1d : public ValueBasis {
 public:
  explicit QuadraticBasis1d(double probe_amplitude)
      : probe_amplitude_(probe_amplitude) {}
  int size() const override { return 1; }
  int dim() const override { return 1; }
  VectorXd sigma(const VectorXd& y, const VectorXd&) const override;
  MatrixXd grad_sigma(const VectorXd& y, const VectorXd&) const override;
  double probe_radius(const VectorXd&) const override { return probe_amplitude_; }

 private:
  double probe_amplitude_;
};

/// Critic weights with a recursive least-squares gain. The gain obeys
/// Gamma' = beta Gamma - kc1 Gamma Lambda Gamma - kc2/N Gamma sum Lambda_i
/// Gamma and is propagated through P = Gamma^{-1}; a cap gates the
/// forgetting term so the gain cannot grow without bound.
struct CriticState {
  VectorXd Wc;
  MatrixXd P;  // inverse gain
  double kc1 = 0.0, kc2 = 0.0, gamma1 = 1.0, beta = 0.0;
  double gamma_cap = 0.0;  // 0 disables
  int N = 1;

  MatrixXd gamma() const { return P.inverse(); }
};

struct ActorState {
  VectorXd Wa;
  double ka1 = 0.0, ka2 = 0.0;
};

/// One Bellman-error evaluation point: regressor, normalizer and error.
struct BellmanSample {
  VectorXd omega;
  double rho = 1.0;
  double delta = 0.0;
  MatrixXd G_sigma;  // grad_sigma G R^{-1} G^T grad_sigma^T at the point
  VectorXd mu;       // policy evaluated at the point
};

/// Estimated value: Wc^T sigma(y, c(e)) + bounded barrier at y.
double value_hat(const ValueBasis& basis, const VectorXd& y, const VectorXd& e,
                 const VectorXd& Wc, const cost::RecenteredBarrier& barrier);

/// Estimated policy:
/// mu = -1/2 R^{-1} G(y)^T (grad_sigma^T Wa + grad bounded-barrier^T).
VectorXd policy_hat(const ValueBasis& basis, const VectorXd& y, const VectorXd& e,
                    const VectorXd& Wa, const cost::CostSpec& cost,
                    const cost::RecenteredBarrier& barrier,
                    const plant::AuxiliarySystem& aux);

/// Bellman residual at y: stage cost plus the directional derivative of the
/// estimated value along the estimated closed-loop flow.
double bellman_error(const ValueBasis& basis, const VectorXd& y, const VectorXd& e,
                     const VectorXd& Wc, const VectorXd& Wa,
                     const MatrixXd& theta_hat, const cost::CostSpec& cost,
                     const cost::RecenteredBarrier& barrier,
                     const plant::AuxiliarySystem& aux);

/// Builds the regressor omega, normalizer rho, Bellman error and G_sigma at
/// a single evaluation point y.
BellmanSample bellman_sample(const ValueBasis& basis, const VectorXd& y,
                             const VectorXd& e, const VectorXd& Wc,
                             const VectorXd& Wa, const MatrixXd& theta_hat,
                             const cost::CostSpec& cost,
                             const cost::RecenteredBarrier& barrier,
                             const plant::AuxiliarySystem& aux, double gamma1);

/// N off-policy probe points inside the ball of radius probe_radius(e)
/// around e; a single probe rotates at omega_probe rad/s in the leading
/// coordinate plane, and multiple probes are spread uniformly in phase.
std::vector<VectorXd> sample_offpolicy(const ValueBasis& basis, const VectorXd& e,
                                       double t, int N, double omega_probe);

/// Derivatives of the critic weights and inverse gain for one on-policy
/// sample plus the off-policy set. Throws GammaNotSPD.
void critic_derivatives(const CriticState& critic, const BellmanSample& on_policy,
                        const std::vector<BellmanSample>& off_policy,
                        VectorXd& dWc, MatrixXd& dP);

/// Actor derivative: consensus toward the critic, damping, plus the terms
/// that cancel the actor-critic coupling in the closed-loop analysis.
VectorXd actor_derivatives(const ActorState& actor, const CriticState& critic,
                           const BellmanSample& on_policy,
                           const std::vector<BellmanSample>& off_policy);

/// Explicit Euler steps (engine integration composes raw derivatives).
void critic_step(CriticState& critic, const BellmanSample& on_policy,
                 const std::vector<BellmanSample>& off_policy, double dt);
void actor_step(ActorState& actor, const CriticState& critic,
                const BellmanSample& on_policy,
                const std::vector<BellmanSample>& off_policy, double dt);

/// Online excitation monitor over the normalized regressor outer products.
/// Feeds Lambda = omega omega^T / rho^2 (on-policy) and the mean off-policy
/// Lambda each sample; reports sliding-window minimum eigenvalues.
class ExcitationMonitor {
 public:
  explicit ExcitationMonitor(int L) : L_(L) {}

  void record(double t, const MatrixXd& lambda_on, const MatrixXd& lambda_off_mean);

  struct Report {
    double c1 = 0.0;  // min over windows of lambda_min(integral of mean off-policy)
    double c2 = 0.0;  // min over samples of lambda_min(mean off-policy)
    double c3 = 0.0;  // min over windows of lambda_min(integral of on-policy)
    double window = 0.0;
    bool c1_positive = false;
  };

  /// Window integrals use trapezoidal sums; `t_end` limits the report to the
  /// learning phase (negative = everything recorded).
  Report report(double window, double t_end = -1.0) const;

 private:
  int L_;
  std::vector<double> times_;
  std::vector<MatrixXd> lambda_on_, lambda_off_;
};

}  // namespace hyreach::adp
