#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hyreach/errors.hpp"

namespace hyreach::plant {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Control-affine plant dx/dt = f(x) + g(x) u with known input directions g
/// and drift f that is linear in a known basis: f(x) = theta^T Y(x). The
/// true drift (equivalently theta_true) is used only by the simulator; the
/// controller path sees only the basis Y and weight estimates.
struct ControlAffinePlant {
  int n = 0;  // state dimension
  int m = 0;  // input dimension
  int p1 = 0; // basis dimension
  std::function<VectorXd(const VectorXd&)> f;      // ground truth drift
  std::function<MatrixXd(const VectorXd&)> g;      // input directions
  std::function<VectorXd(const VectorXd&)> basis;  // Y : R^n -> R^p1
  std::optional<MatrixXd> theta_true;              // p1 x n, when known
  double g_bar = 0.0;  // positive bound on ||g|| over the operating region
};

/// The benchmark two-state nonlinear plant with diagonal input matrix
/// g = diag(sin(2 x1) + 2, cos(2 x1) + 2) and an exact three-function drift
/// basis Y(x) = [x1, x2, x2 (1 - (cos(2 x1) + 2)^2)].
ControlAffinePlant make_benchmark2d();

/// Scalar plant dx/dt = a x + b u with basis Y(x) = [x].
ControlAffinePlant make_linear1d(double a, double b);

/// Drift theta^T Y(x) over a named basis ("linear" or "benchmark2d") with a
/// constant input matrix.
ControlAffinePlant make_custom_basis(const MatrixXd& theta,
                                     const std::string& basis_name,
                                     const MatrixXd& g_const);

/// Moore-Penrose left inverse (g^T g)^{-1} g^T. Throws RankDeficient when
/// the condition number of g exceeds `cond_threshold`.
MatrixXd pseudo_inverse(const MatrixXd& g_val, double cond_threshold = 1e8);

/// A region of interest {x : h(x) >= 0} labeled by an observation. The
/// default disk form is h(x) = radius - ||x - center||; a custom h (with
/// optional analytic gradient) may be supplied instead.
struct Roi {
  int obs = -1;
  std::string name;
  VectorXd center;
  double radius = 0.0;
  std::optional<VectorXd> goal;  // interior goal override (default: center)
  std::function<double(const VectorXd&)> h_custom;            // optional
  std::function<VectorXd(const VectorXd&)> grad_h_custom;     // optional

  double h(const VectorXd& x) const;
  /// Gradient of h; central differences when only a custom h is given.
  VectorXd grad_h(const VectorXd& x) const;
};

class RoiSet {
 public:
  RoiSet() = default;
  explicit RoiSet(std::vector<Roi> rois);

  const std::vector<Roi>& all() const { return rois_; }
  const Roi& by_obs(int obs) const;
  bool has_obs(int obs) const;

  /// Observations whose region contains x (closed regions; at most one for
  /// disjoint ROIs).
  std::vector<int> membership(const VectorXd& x) const;

  /// Throws ValidationError naming the overlapping pair. Disk pairs are
  /// checked via center distance; custom regions are sampled.
  void check_disjoint() const;

 private:
  std::vector<Roi> rois_;
};

/// Error coordinates around a goal point x_d interior to the target ROI:
/// e = x - x_d. The drift estimate F_hat and steady-state input cancel at
/// the goal when the weight estimate is exact.
class AuxiliarySystem {
 public:
  AuxiliarySystem() = default;
  AuxiliarySystem(const ControlAffinePlant& plant, VectorXd x_d,
                  const MatrixXd& theta_hat_at_construction);

  const VectorXd& x_d() const { return x_d_; }
  /// Steady-state input estimate frozen at construction time.
  const VectorXd& u_d_hat() const { return u_d_hat_; }

  VectorXd z(const VectorXd& e) const { return e + x_d_; }
  VectorXd z_inv(const VectorXd& x) const { return x - x_d_; }

  /// Estimated drift of the error system:
  /// F_hat(y, th) = th^T Y(z(y)) - g(z(y)) g^+(x_d) th^T Y(x_d).
  VectorXd F_hat(const VectorXd& y, const MatrixXd& theta_hat) const;

  /// Input matrix in error coordinates, G(y) = g(z(y)).
  MatrixXd G(const VectorXd& y) const;

  /// Steady-state input for the current weight estimate:
  /// u_d(th) = -g^+(x_d) th^T Y(x_d).
  VectorXd u_d(const MatrixXd& theta_hat) const;

 private:
  VectorXd x_d_;
  VectorXd u_d_hat_;
  MatrixXd g_dagger_xd_;
  VectorXd basis_at_xd_;
  std::function<MatrixXd(const VectorXd&)> g_;
  std::function<VectorXd(const VectorXd&)> basis_;
};

/// Builds the auxiliary system for the ROI of `target_obs`, with the goal at
/// the ROI center (or the configured override point).
AuxiliarySystem retarget(const ControlAffinePlant& plant, const RoiSet& rois,
                         int target_obs, const MatrixXd& theta_hat,
                         const std::optional<VectorXd>& x_d_override = {});

}  // namespace hyreach::plant
