#include "hyreach/plant.hpp"

#include <cmath>

namespace hyreach::plant {

namespace {

VectorXd benchmark_basis(const VectorXd& x) {
  VectorXd y(3);
  double c = std::cos(2.0 * x[0]) + 2.0;
  y << x[0], x[1], x[1] * (1.0 - c * c);
  return y;
}

MatrixXd benchmark_theta() {
  MatrixXd theta(3, 2);
  theta << -1.0, -0.5,
            1.0,  0.0,
            0.0, -0.5;
  return theta;
}

MatrixXd benchmark_g(const VectorXd& x) {
  MatrixXd g(2, 2);
  g << std::sin(2.0 * x[0]) + 2.0, 0.0,
       0.0, std::cos(2.0 * x[0]) + 2.0;
  return g;
}

}  // namespace

ControlAffinePlant make_benchmark2d() {
  ControlAffinePlant p;
  p.n = 2;
  p.m = 2;
  p.p1 = 3;
  p.basis = benchmark_basis;
  p.theta_true = benchmark_theta();
  MatrixXd theta = *p.theta_true;
  p.f = [theta](const VectorXd& x) -> VectorXd {
    return theta.transpose() * benchmark_basis(x);
  };
  p.g = benchmark_g;
  p.g_bar = 3.0;
  return p;
}

ControlAffinePlant make_linear1d(double a, double b) {
  ControlAffinePlant p;
  p.n = 1;
  p.m = 1;
  p.p1 = 1;
  p.basis = [](const VectorXd& x) { return x; };
  MatrixXd theta(1, 1);
  theta << a;
  p.theta_true = theta;
  p.f = [a](const VectorXd& x) -> VectorXd { return a * x; };
  p.g = [b](const VectorXd&) -> MatrixXd {
    MatrixXd g(1, 1);
    g << b;
    return g;
  };
  p.g_bar = std::abs(b);
  return p;
}

ControlAffinePlant make_custom_basis(const MatrixXd& theta,
                                     const std::string& basis_name,
                                     const MatrixXd& g_const) {
  ControlAffinePlant p;
  p.n = static_cast<int>(theta.cols());
  p.m = static_cast<int>(g_const.cols());
  p.p1 = static_cast<int>(theta.rows());
  if (g_const.rows() != p.n)
    throw ValidationError("custom plant: g has " + std::to_string(g_const.rows()) +
                          " rows, expected " + std::to_string(p.n));
  if (basis_name == "linear") {
    if (p.p1 != p.n)
      throw ValidationError("custom plant: linear basis needs theta with n rows");
    p.basis = [](const VectorXd& x) { return x; };
  } else if (basis_name == "benchmark2d") {
    if (p.n != 2 || p.p1 != 3)
      throw ValidationError("custom plant: benchmark2d basis needs n=2, p1=3");
    p.basis = benchmark_basis;
  } else {
    throw ValidationError("custom plant: unknown basis '" + basis_name + "'");
  }
  p.theta_true = theta;
  auto basis = p.basis;
  p.f = [theta, basis](const VectorXd& x) -> VectorXd {
    return theta.transpose() * basis(x);
  };
  p.g = [g_const](const VectorXd&) { return g_const; };
  p.g_bar = g_const.norm();
  return p;
}

MatrixXd pseudo_inverse(const MatrixXd& g_val, double cond_threshold) {
  Eigen::JacobiSVD<MatrixXd> svd(g_val);
  const auto& sv = svd.singularValues();
  double smax = sv(0);
  double smin = sv(sv.size() - 1);
  if (!(smin > 0.0) || smax / smin > cond_threshold)
    throw RankDeficient("input matrix is rank deficient or ill conditioned "
                        "(condition estimate " +
                        std::to_string(smin > 0.0 ? smax / smin : 0.0) + ")");
  return (g_val.transpose() * g_val).inverse() * g_val.transpose();
}

double Roi::h(const VectorXd& x) const {
  if (h_custom) return h_custom(x);
  return radius - (x - center).norm();
}

VectorXd Roi::grad_h(const VectorXd& x) const {
  if (grad_h_custom) return grad_h_custom(x);
  if (h_custom) {
    // Central differences for user-supplied regions.
    const double step = 1e-6;
    VectorXd g(x.size());
    VectorXd xp = x, xm = x;
    for (int i = 0; i < x.size(); ++i) {
      xp[i] += step;
      xm[i] -= step;
      g[i] = (h_custom(xp) - h_custom(xm)) / (2.0 * step);
      xp[i] = x[i];
      xm[i] = x[i];
    }
    return g;
  }
  VectorXd d = x - center;
  double norm = d.norm();
  if (norm < 1e-12)
    throw BarrierDomain("gradient of a disk region is undefined at its center");
  return -d / norm;
}

RoiSet::RoiSet(std::vector<Roi> rois) : rois_(std::move(rois)) {}

const Roi& RoiSet::by_obs(int obs) const {
  for (const auto& r : rois_)
    if (r.obs == obs) return r;
  throw ValidationError("no ROI for observation index " + std::to_string(obs));
}

bool RoiSet::has_obs(int obs) const {
  for (const auto& r : rois_)
    if (r.obs == obs) return true;
  return false;
}

std::vector<int> RoiSet::membership(const VectorXd& x) const {
  std::vector<int> out;
  for (const auto& r : rois_)
    if (r.h(x) >= 0.0) out.push_back(r.obs);
  return out;
}

void RoiSet::check_disjoint() const {
  for (std::size_t i = 0; i < rois_.size(); ++i) {
    for (std::size_t j = i + 1; j < rois_.size(); ++j) {
      const Roi& a = rois_[i];
      const Roi& b = rois_[j];
      bool overlap;
      if (!a.h_custom && !b.h_custom) {
        overlap = (a.center - b.center).norm() <= a.radius + b.radius;
      } else {
        // Sample each region's reference point in the other.
        overlap = a.h(b.center) >= 0.0 || b.h(a.center) >= 0.0;
      }
      if (overlap)
        throw ValidationError("regions '" + a.name + "' and '" + b.name +
                              "' overlap");
    }
  }
}

AuxiliarySystem::AuxiliarySystem(const ControlAffinePlant& plant, VectorXd x_d,
                                 const MatrixXd& theta_hat)
    : x_d_(std::move(x_d)), g_(plant.g), basis_(plant.basis) {
  g_dagger_xd_ = pseudo_inverse(g_(x_d_));
  basis_at_xd_ = basis_(x_d_);
  u_d_hat_ = u_d(theta_hat);
}

VectorXd AuxiliarySystem::F_hat(const VectorXd& y, const MatrixXd& theta_hat) const {
  VectorXd x = z(y);
  return theta_hat.transpose() * basis_(x) -
         g_(x) * (g_dagger_xd_ * (theta_hat.transpose() * basis_at_xd_));
}

MatrixXd AuxiliarySystem::G(const VectorXd& y) const { return g_(z(y)); }

VectorXd AuxiliarySystem::u_d(const MatrixXd& theta_hat) const {
  return -g_dagger_xd_ * (theta_hat.transpose() * basis_at_xd_);
}

AuxiliarySystem retarget(const ControlAffinePlant& plant, const RoiSet& rois,
                         int target_obs, const MatrixXd& theta_hat,
                         const std::optional<VectorXd>& x_d_override) {
  const Roi& roi = rois.by_obs(target_obs);
  VectorXd x_d = x_d_override ? *x_d_override : (roi.goal ? *roi.goal : roi.center);
  if (roi.h(x_d) <= 0.0)
    throw ValidationError("goal point for '" + roi.name +
                          "' is not interior to its region");
  return AuxiliarySystem(plant, std::move(x_d), theta_hat);
}

}  // namespace hyreach::plant
