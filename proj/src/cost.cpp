#include "hyreach/cost.hpp"

#include <cmath>

namespace hyreach::cost {

void CostSpec::validate() const {
  if (q_scale <= 0.0) throw ValidationError("cost.Q_scale must be positive");
  if (R.rows() != R.cols() || R.rows() == 0)
    throw ValidationError("cost.R must be square and non-empty");
  if (!R.isApprox(R.transpose(), 1e-12))
    throw ValidationError("cost.R must be symmetric");
  if (lambda_min_R() <= 0.0)
    throw ValidationError("cost.R must be positive definite");
}

double CostSpec::lambda_min_R() const {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(R);
  return es.eigenvalues().minCoeff();
}

RecenteredBarrier::RecenteredBarrier(std::vector<plant::Roi> forbidden,
                                     VectorXd x_d, double scale)
    : x_d_(std::move(x_d)), scale_(scale) {
  for (auto& roi : forbidden) {
    Region r;
    r.roi = std::move(roi);
    double h_d = r.roi.h(x_d_);
    if (h_d >= 0.0)
      throw BarrierDomain("goal point lies inside forbidden region '" +
                          r.roi.name + "'");
    r.b_at_xd = -1.0 / h_d;
    r.grad_b_at_xd = grad_b(r, x_d_);
    regions_.push_back(std::move(r));
  }
}

double RecenteredBarrier::b(const Region& r, const VectorXd& x) const {
  double h = r.roi.h(x);
  if (h >= 0.0)
    throw BarrierDomain("state lies inside or on forbidden region '" +
                        r.roi.name + "'");
  return -1.0 / h;
}

VectorXd RecenteredBarrier::grad_b(const Region& r, const VectorXd& x) const {
  double h = r.roi.h(x);
  // d/dx (-1/h) = grad h / h^2
  return r.roi.grad_h(x) / (h * h);
}

bool RecenteredBarrier::in_domain(const VectorXd& e) const {
  VectorXd x = e + x_d_;
  for (const auto& r : regions_)
    if (r.roi.h(x) >= 0.0) return false;
  return true;
}

double RecenteredBarrier::value(const VectorXd& e) const {
  if (regions_.empty()) return 0.0;
  VectorXd x = e + x_d_;
  double sum = 0.0;
  for (const auto& r : regions_) {
    double term = b(r, x) - r.b_at_xd - r.grad_b_at_xd.dot(e);
    sum += term * term;
  }
  return scale_ * sum;
}

VectorXd RecenteredBarrier::gradient(const VectorXd& e) const {
  VectorXd g = VectorXd::Zero(x_d_.size());
  if (regions_.empty()) return g;
  VectorXd x = e + x_d_;
  for (const auto& r : regions_) {
    double term = b(r, x) - r.b_at_xd - r.grad_b_at_xd.dot(e);
    g += 2.0 * term * (grad_b(r, x) - r.grad_b_at_xd);
  }
  return scale_ * g;
}

double RecenteredBarrier::bounded(const VectorXd& e) const {
  double B = value(e);
  return B / (1.0 + B);
}

VectorXd RecenteredBarrier::bounded_gradient(const VectorXd& e) const {
  if (regions_.empty()) return VectorXd::Zero(x_d_.size());
  double B = value(e);
  double denom = (1.0 + B) * (1.0 + B);
  return gradient(e) / denom;
}

double stage_cost(const CostSpec& cost, const RecenteredBarrier& barrier,
                  const VectorXd& e, const VectorXd& mu) {
  return cost.Q(e) + mu.dot(cost.R * mu) + barrier.value(e);
}

}  // namespace hyreach::cost
