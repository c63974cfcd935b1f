#include <doctest.h>

#include <cmath>
#include <random>

#include "hyreach/plant.hpp"
#include "hyreach/sysid.hpp"

using namespace hyreach;
using namespace hyreach::sysid;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

std::mt19937_64 g_rng(99);
double upm1() { return 2.0 * ((g_rng() >> 11) * 0x1.0p-53) - 1.0; }

// Simulates the true benchmark plant for one window under a constant input
// and returns the sampled trajectory.
std::vector<WindowSample> simulate_window(const plant::ControlAffinePlant& p,
                                          VectorXd x, const VectorXd& u,
                                          double span, double dt) {
  std::vector<WindowSample> out;
  double t = 0.0;
  auto push = [&]() {
    WindowSample ws;
    ws.t = t;
    ws.x = x;
    ws.Y = p.basis(x);
    ws.gu = p.g(x) * u;
    out.push_back(ws);
  };
  push();
  int steps = static_cast<int>(std::round(span / dt));
  for (int k = 0; k < steps; ++k) {
    auto f = [&](const VectorXd& xs) -> VectorXd { return p.f(xs) + p.g(xs) * u; };
    VectorXd k1 = f(x), k2 = f(x + 0.5 * dt * k1), k3 = f(x + 0.5 * dt * k2),
             k4 = f(x + dt * k3);
    x += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    t += dt;
    push();
  }
  return out;
}

HistoryStack benchmark_stack(const plant::ControlAffinePlant& p, int M = 20,
                             double window = 0.2) {
  HistoryStack stack(M, window);
  for (int i = 0; i < M; ++i) {
    VectorXd x(2), u(2);
    x << 1.5 * upm1(), 0.3 * upm1();
    u << 0.5 * upm1(), 0.5 * upm1();
    stack.accumulate(simulate_window(p, x, u, window, 1e-3));
  }
  return stack;
}

}  // namespace

TEST_SUITE("sysid") {

TEST_CASE("constant trajectory integrates exactly") {
  plant::ControlAffinePlant p = plant::make_benchmark2d();
  HistoryStack stack(4, 0.2);
  VectorXd x(2);
  x << 0.7, -0.4;
  VectorXd u = VectorXd::Zero(2);
  // Hold x constant by hand: samples all identical, u = 0.
  std::vector<WindowSample> samples;
  for (int k = 0; k <= 200; ++k) {
    WindowSample ws;
    ws.t = 1e-3 * k;
    ws.x = x;
    ws.Y = p.basis(x);
    ws.gu = p.g(x) * u;
    samples.push_back(ws);
  }
  REQUIRE(stack.accumulate(samples));
  const StackEntry& e = stack.entries().front();
  CHECK((e.Y_int - 0.2 * p.basis(x)).norm() < 1e-12);
  CHECK(e.U_int.norm() == 0.0);
  CHECK(e.dx.norm() == 0.0);
}

TEST_CASE("window too short") {
  HistoryStack stack(4, 0.2);
  std::vector<WindowSample> samples;
  for (int k = 0; k <= 10; ++k) {
    WindowSample ws;
    ws.t = 1e-3 * k;
    ws.x = VectorXd::Zero(2);
    ws.Y = VectorXd::Zero(3);
    ws.gu = VectorXd::Zero(2);
    samples.push_back(ws);
  }
  CHECK_THROWS_AS(stack.accumulate(samples), WindowTooShort);
}

TEST_CASE("excitation level") {
  HistoryStack empty(4, 0.2);
  CHECK(empty.excitation_level() == 0.0);

  // One entry is rank one, so the minimum eigenvalue stays zero for p1 > 1.
  HistoryStack one(4, 0.2);
  StackEntry e;
  e.Y_int = VectorXd::Zero(3);
  e.Y_int << 1.0, 0.5, -0.2;
  e.U_int = VectorXd::Zero(2);
  e.dx = VectorXd::Zero(2);
  one.offer(e);
  CHECK(one.excitation_level() == doctest::Approx(0.0).epsilon(1e-12));

  plant::ControlAffinePlant p = plant::make_benchmark2d();
  HistoryStack stack = benchmark_stack(p);
  CHECK(stack.excitation_level() > 0.003);
}

TEST_CASE("duplicate offers to a rank-rich stack are rejected") {
  // Orthonormal regressors: no replacement by a duplicate can raise the
  // minimum eigenvalue, so the offer must be declined.
  HistoryStack stack(3, 0.2);
  for (int i = 0; i < 3; ++i) {
    StackEntry e;
    e.Y_int = VectorXd::Zero(3);
    e.Y_int[i] = 1.0;
    e.U_int = VectorXd::Zero(2);
    e.dx = VectorXd::Zero(2);
    REQUIRE(stack.offer(e));
  }
  double before = stack.excitation_level();
  CHECK(before == doctest::Approx(1.0));
  CHECK_FALSE(stack.offer(stack.entries().front()));
  CHECK(stack.excitation_level() == doctest::Approx(before));
}

TEST_CASE("replacement policy never decreases excitation") {
  plant::ControlAffinePlant p = plant::make_benchmark2d();
  HistoryStack stack = benchmark_stack(p, 10);

  // Random offers: the level is monotone non-decreasing.
  double level = stack.excitation_level();
  for (int i = 0; i < 15; ++i) {
    VectorXd x(2), u(2);
    x << 1.5 * upm1(), 0.3 * upm1();
    u << 0.5 * upm1(), 0.5 * upm1();
    auto samples = simulate_window(p, x, u, 0.2, 1e-3);
    HistoryStack probe(1, 0.2);
    probe.accumulate(samples);
    stack.offer(probe.entries().front());
    double now = stack.excitation_level();
    CHECK(now >= level - 1e-12);
    level = now;
  }
}

TEST_CASE("exact weights are a fixed point") {
  plant::ControlAffinePlant p = plant::make_benchmark2d();
  HistoryStack stack = benchmark_stack(p);
  ThetaEstimator est(*p.theta_true, 20.0, 15.0, 10.0, 20.0);
  MatrixXd dtheta, dP;
  est.derivatives(stack, dtheta, dP);
  // Residuals vanish up to quadrature error of the recorded data.
  CHECK(dtheta.norm() < 1e-2);
  // Relative to the scale of the update law this is numerically zero: a
  // unit weight error produces an update of size k Gamma lambda ~ O(100).
  MatrixXd dtheta_wrong, dP2;
  ThetaEstimator wrong(MatrixXd::Zero(3, 2), 20.0, 15.0, 10.0, 20.0);
  wrong.derivatives(stack, dtheta_wrong, dP2);
  CHECK(dtheta_wrong.norm() > 1e3 * dtheta.norm());
}

TEST_CASE("empty stack freezes the estimate and forgets") {
  ThetaEstimator est(MatrixXd::Ones(3, 2), 20.0, 15.0, 10.0, 20.0);
  HistoryStack stack(4, 0.2);
  MatrixXd gamma0 = est.gamma();
  est.icl_step(stack, 1e-3);
  CHECK((est.theta_hat() - MatrixXd::Ones(3, 2)).norm() == 0.0);
  // Gamma grows by the forgetting term alone.
  MatrixXd gamma1 = est.gamma();
  CHECK(gamma1(0, 0) > gamma0(0, 0));
  CHECK(gamma1(0, 0) == doctest::Approx(20.0 / (1.0 - 10.0 * 1e-3)).epsilon(1e-9));
}

TEST_CASE("projection keeps the estimate inside the ball") {
  plant::ControlAffinePlant p = plant::make_benchmark2d();
  HistoryStack stack = benchmark_stack(p);
  double theta_max = 1.0;  // deliberately tight
  ThetaEstimator est(MatrixXd::Constant(3, 2, 5.0), 20.0, 15.0, 10.0, theta_max);
  CHECK(est.theta_hat().norm() <= theta_max + 1e-15);
  for (int k = 0; k < 2000; ++k) {
    est.icl_step(stack, 1e-3);
    REQUIRE(est.theta_hat().norm() <= theta_max + 1e-12);
  }
}

TEST_CASE("gamma must be positive definite") {
  ThetaEstimator est(MatrixXd::Zero(3, 2), 20.0, 15.0, 10.0, 20.0);
  HistoryStack stack(4, 0.2);
  MatrixXd bad = -MatrixXd::Identity(3, 3);
  est.apply_step(MatrixXd::Zero(3, 2), bad);
  MatrixXd dtheta, dP;
  CHECK_THROWS_AS(est.derivatives(stack, dtheta, dP), GammaNotSPD);
}

TEST_CASE("benchmark identification run converges within 5 seconds") {
  plant::ControlAffinePlant p = plant::make_benchmark2d();
  HistoryStack stack = benchmark_stack(p);
  MatrixXd theta0(3, 2);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 2; ++c) theta0(r, c) = 5.0 * upm1();
  ThetaEstimator est(theta0, 20.0, 15.0, 10.0, 20.0, 200.0);

  const double dt = 1e-3;
  double t_below_0p1 = -1.0;
  double gamma_min_seen = 1e300, gamma_max_seen = 0.0;
  for (int k = 0; k < 5000; ++k) {
    // RK4 on the update laws with the stack frozen.
    MatrixXd th0 = est.theta_hat(), P0 = est.P();
    MatrixXd k1t, k1p, k2t, k2p, k3t, k3p, k4t, k4p;
    est.derivatives(stack, k1t, k1p);
    icl_derivatives(th0 + 0.5 * dt * k1t, P0 + 0.5 * dt * k1p, stack, 15.0, 10.0,
                    200.0, k2t, k2p);
    icl_derivatives(th0 + 0.5 * dt * k2t, P0 + 0.5 * dt * k2p, stack, 15.0, 10.0,
                    200.0, k3t, k3p);
    icl_derivatives(th0 + dt * k3t, P0 + dt * k3p, stack, 15.0, 10.0, 200.0, k4t,
                    k4p);
    est.apply_step(th0 + dt / 6.0 * (k1t + 2.0 * k2t + 2.0 * k3t + k4t),
                   P0 + dt / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p));

    Eigen::SelfAdjointEigenSolver<MatrixXd> es(est.gamma());
    gamma_min_seen = std::min(gamma_min_seen, es.eigenvalues().minCoeff());
    gamma_max_seen = std::max(gamma_max_seen, es.eigenvalues().maxCoeff());

    double err = (*p.theta_true - est.theta_hat()).norm();
    if (t_below_0p1 < 0.0 && err < 0.1) t_below_0p1 = dt * (k + 1);
  }
  double final_err = (*p.theta_true - est.theta_hat()).norm();
  CAPTURE(final_err);
  CHECK(t_below_0p1 > 0.0);
  CHECK(t_below_0p1 < 5.0);
  CHECK(final_err < 0.01 * p.theta_true->norm());

  // Eigenvalue corridor along the run.
  CHECK(gamma_min_seen > 0.0);
  CHECK(gamma_max_seen < 10.0 * 20.0);
}

}  // TEST_SUITE
