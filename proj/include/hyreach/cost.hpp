#pragma once

#include <Eigen/Dense>
#include <vector>

#include "hyreach/plant.hpp"

namespace hyreach::cost {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Quadratic stage-cost weights: Q(e) = q_scale ||e||^2 and a symmetric
/// positive definite input weight R.
struct CostSpec {
  double q_scale = 1.0;
  MatrixXd R;

  void validate() const;
  double Q(const VectorXd& e) const { return q_scale * e.squaredNorm(); }
  MatrixXd R_inv() const { return R.inverse(); }
  double lambda_min_R() const;
};

/// Recentered barrier over the regions forbidden in the current segment.
/// Each region contributes (b(z(e)) - b(x_d) - grad b(x_d)^T e)^2 with
/// b = -1/h, so the barrier vanishes with zero gradient at the goal and
/// blows up toward any forbidden boundary. A scale factor multiplies the
/// whole sum.
class RecenteredBarrier {
 public:
  RecenteredBarrier() = default;
  /// `forbidden` lists the regions to avoid; x_d must lie strictly outside
  /// all of them.
  RecenteredBarrier(std::vector<plant::Roi> forbidden, VectorXd x_d, double scale);

  bool empty() const { return regions_.empty(); }
  const VectorXd& x_d() const { return x_d_; }

  /// True when z(e) lies strictly outside every forbidden region.
  bool in_domain(const VectorXd& e) const;

  /// Scaled barrier value; exactly zero at e = 0. Throws BarrierDomain when
  /// z(e) lies inside or on a forbidden region.
  double value(const VectorXd& e) const;

  /// Gradient of value() with respect to e.
  VectorXd gradient(const VectorXd& e) const;

  /// Bounded barrier B/(1+B), in [0, 1).
  double bounded(const VectorXd& e) const;

  /// Gradient of bounded(): grad B / (1+B)^2.
  VectorXd bounded_gradient(const VectorXd& e) const;

 private:
  struct Region {
    plant::Roi roi;
    double b_at_xd = 0.0;
    VectorXd grad_b_at_xd;
  };

  double b(const Region& r, const VectorXd& x) const;
  VectorXd grad_b(const Region& r, const VectorXd& x) const;

  std::vector<Region> regions_;
  VectorXd x_d_;
  double scale_ = 1.0;
};

/// Reach-avoid stage cost r(e, mu) = Q(e) + mu^T R mu + B(e).
double stage_cost(const CostSpec& cost, const RecenteredBarrier& barrier,
                  const VectorXd& e, const VectorXd& mu);

}  // namespace hyreach::cost
