#include <doctest.h>

#include <cmath>
#include <random>

#include "hyreach/cost.hpp"

using namespace hyreach;
using namespace hyreach::cost;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

VectorXd vec2(double a, double b) {
  VectorXd v(2);
  v << a, b;
  return v;
}

plant::Roi disk(int obs, const std::string& name, const VectorXd& c, double r) {
  plant::Roi roi;
  roi.obs = obs;
  roi.name = name;
  roi.center = c;
  roi.radius = r;
  return roi;
}

// The benchmark avoid set around a goal at the origin.
RecenteredBarrier benchmark_barrier(double scale = 1.0) {
  return RecenteredBarrier(
      {disk(3, "o4", vec2(0.6, 2.2), 0.5), disk(4, "o5", vec2(-0.9, -1.1), 0.5)},
      VectorXd::Zero(2), scale);
}

CostSpec benchmark_cost() {
  CostSpec c;
  c.q_scale = 1.0;
  c.R = 2.0 * MatrixXd::Identity(2, 2);
  c.validate();
  return c;
}

std::mt19937_64 g_rng(12345);
double u01() { return (g_rng() >> 11) * 0x1.0p-53; }

// A safe probe point: outside both forbidden disks with margin.
VectorXd safe_point(const RecenteredBarrier& rb, double margin) {
  for (;;) {
    VectorXd e = vec2(6.0 * u01() - 3.0, 6.0 * u01() - 3.0);
    VectorXd x = e;  // x_d = 0
    bool ok = (x - vec2(0.6, 2.2)).norm() > 0.5 + margin &&
              (x - vec2(-0.9, -1.1)).norm() > 0.5 + margin && rb.in_domain(e);
    if (ok) return e;
  }
}

}  // namespace

TEST_SUITE("cost") {

TEST_CASE("barrier vanishes at the goal and without forbidden regions") {
  RecenteredBarrier rb = benchmark_barrier();
  CHECK(rb.value(VectorXd::Zero(2)) == 0.0);
  CHECK(rb.gradient(VectorXd::Zero(2)).norm() < 1e-15);

  RecenteredBarrier none({}, VectorXd::Zero(2), 1.0);
  CHECK(none.value(vec2(1.0, -2.0)) == 0.0);
  CHECK(none.bounded(vec2(1.0, -2.0)) == 0.0);
}

TEST_CASE("barrier matches an independent term-by-term evaluation") {
  double scale = 0.01;
  RecenteredBarrier rb = benchmark_barrier(scale);
  for (int k = 0; k < 100; ++k) {
    VectorXd e = safe_point(rb, 0.01);
    // Literal recentered-barrier formula, written out independently:
    // sum over forbidden o of (b(z(e)) - b(x_d) - grad b(x_d)^T e)^2 with
    // b = -1/h and h = r - ||x - c||.
    auto b_of = [](const VectorXd& x, const VectorXd& c, double r) {
      return -1.0 / (r - (x - c).norm());
    };
    auto grad_b_of = [](const VectorXd& x, const VectorXd& c, double r) {
      double h = r - (x - c).norm();
      VectorXd grad_h = -(x - c) / (x - c).norm();
      return VectorXd((grad_h / (h * h)).eval());
    };
    VectorXd xd = VectorXd::Zero(2);
    double expect = 0.0;
    const VectorXd centers[2] = {vec2(0.6, 2.2), vec2(-0.9, -1.1)};
    for (const auto& c : centers) {
      double term = b_of(e + xd, c, 0.5) - b_of(xd, c, 0.5) -
                    grad_b_of(xd, c, 0.5).dot(e);
      expect += term * term;
    }
    expect *= scale;
    CHECK(rb.value(e) == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("barrier domain errors") {
  RecenteredBarrier rb = benchmark_barrier();
  VectorXd inside = vec2(0.6, 2.2);
  CHECK_THROWS_AS(rb.value(inside), BarrierDomain);
  VectorXd boundary = vec2(0.6, 2.2 - 0.5);
  CHECK_THROWS_AS(rb.value(boundary), BarrierDomain);
  CHECK_FALSE(rb.in_domain(inside));

  // The goal itself may not sit inside a forbidden region.
  CHECK_THROWS_AS(RecenteredBarrier({disk(3, "o4", vec2(0.0, 0.1), 0.5)},
                                    VectorXd::Zero(2), 1.0),
                  BarrierDomain);
}

TEST_CASE("bounded barrier range and monotone growth toward the boundary") {
  RecenteredBarrier rb = benchmark_barrier();
  CHECK(rb.bounded(VectorXd::Zero(2)) == 0.0);

  // March along the ray from the goal toward the region around (0.6, 2.2).
  VectorXd dir = vec2(0.6, 2.2).normalized();
  double boundary_dist = vec2(0.6, 2.2).norm() - 0.5;
  double prev = -1.0;
  for (double frac : {0.3, 0.6, 0.8, 0.9, 0.96, 0.99, 0.999, 0.99999}) {
    double v = rb.bounded(VectorXd(frac * boundary_dist * dir));
    CHECK(v >= 0.0);
    CHECK(v < 1.0);
    CHECK(v > prev);
    prev = v;
  }
  CHECK(prev > 0.999);  // approaches one at the boundary
}

TEST_CASE("bounded barrier gradient agrees with central differences") {
  RecenteredBarrier rb = benchmark_barrier(0.01);
  const double step = 1e-6;
  int checked = 0;
  while (checked < 100) {
    VectorXd e = safe_point(rb, 0.05);
    VectorXd grad = rb.bounded_gradient(e);
    if (grad.norm() < 1e-10) continue;  // relative error undefined at flat spots
    VectorXd fd(2);
    for (int i = 0; i < 2; ++i) {
      VectorXd ep = e, em = e;
      ep[i] += step;
      em[i] -= step;
      fd[i] = (rb.bounded(ep) - rb.bounded(em)) / (2.0 * step);
    }
    CHECK((grad - fd).norm() / grad.norm() < 1e-5);
    ++checked;
  }
}

TEST_CASE("stage cost") {
  CostSpec c = benchmark_cost();
  RecenteredBarrier none({}, VectorXd::Zero(2), 1.0);
  CHECK(stage_cost(c, none, VectorXd::Zero(2), VectorXd::Zero(2)) == 0.0);

  // Q = ||e||^2, R = 2 I: e = (1,0), mu = (1,0) away from the barrier.
  CHECK(stage_cost(c, none, vec2(1.0, 0.0), vec2(1.0, 0.0)) ==
        doctest::Approx(3.0).epsilon(1e-15));

  // The barrier scale multiplies the whole sum.
  RecenteredBarrier rb1 = benchmark_barrier(1.0);
  RecenteredBarrier rb001 = benchmark_barrier(0.01);
  VectorXd e = vec2(0.4, 0.9);
  CHECK(rb001.value(e) == doctest::Approx(0.01 * rb1.value(e)).epsilon(1e-12));
}

TEST_CASE("stage cost dominates the input quadratic") {
  CostSpec c = benchmark_cost();
  RecenteredBarrier rb = benchmark_barrier(0.01);
  double lam = c.lambda_min_R();
  for (int k = 0; k < 50; ++k) {
    VectorXd e = safe_point(rb, 0.01);
    VectorXd mu = vec2(4.0 * u01() - 2.0, 4.0 * u01() - 2.0);
    CHECK(stage_cost(c, rb, e, mu) >= lam * mu.squaredNorm() - 1e-12);
  }
}

TEST_CASE("barrier unaffected by regions that are not forbidden") {
  // Only the forbidden list enters the sum; other regions are irrelevant by
  // construction, checked by comparing one- and two-region barriers.
  RecenteredBarrier one({disk(3, "o4", vec2(0.6, 2.2), 0.5)}, VectorXd::Zero(2), 1.0);
  RecenteredBarrier two = benchmark_barrier();
  VectorXd e = vec2(0.5, 1.0);
  // Values differ (two regions), but removing the second region's term
  // recovers the one-region value.
  auto b_term = [&](const VectorXd& c) {
    auto b = [&](const VectorXd& x) { return -1.0 / (0.5 - (x - c).norm()); };
    double h0 = 0.5 - c.norm();
    VectorXd grad_b0 = (c / c.norm()) / (h0 * h0);
    double term = b(e) - (-1.0 / h0) - grad_b0.dot(e);
    return term * term;
  };
  CHECK(two.value(e) - b_term(vec2(-0.9, -1.1)) ==
        doctest::Approx(one.value(e)).epsilon(1e-12));
}

TEST_CASE("cost spec validation") {
  CostSpec bad;
  bad.q_scale = 1.0;
  bad.R = MatrixXd::Zero(2, 2);
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad.R = -MatrixXd::Identity(2, 2);
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  CostSpec asym;
  asym.R = MatrixXd::Identity(2, 2);
  asym.R(0, 1) = 0.5;
  CHECK_THROWS_AS(asym.validate(), ValidationError);
}

}  // TEST_SUITE
