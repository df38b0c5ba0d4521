#include <cmath>

#include <gtest/gtest.h>

#include "safexfer/case_studies.hpp"
#include "safexfer/lipschitz_estimate.hpp"

namespace sx = safexfer;
using sx::Vec;

namespace {

sx::Box interval(double lo, double hi) { return {Vec::Constant(1, lo), Vec::Constant(1, hi)}; }

}  // namespace

TEST(Estimate, Doubling) {
  sx::EstimateOptions o;
  o.pairs = 1000;
  const double e = sx::estimate_lipschitz([](const Vec& x) { return Vec(2 * x); },
                                          interval(-1, 1), o);
  EXPECT_GE(e, 2.0);
  EXPECT_LE(e, 2.2 + 1e-12);
}

TEST(Estimate, ConstantMapIsZero) {
  const double e = sx::estimate_lipschitz([](const Vec&) { return Vec::Constant(2, 3.0); },
                                          interval(-1, 1), {});
  EXPECT_EQ(e, 0.0);
}

TEST(Estimate, PendulumStateSlopeBelowDeclared) {
  const auto def = sx::load_benchmark("pendulum", sx::Scale::kDesk);
  const Vec u = Vec::Zero(1);
  sx::EstimateOptions o;
  // Compared against the raw quotient: the largest true slope is
  // 1 + g tau / l = 1.098 and 1.1 x 1.098 would overshoot the declared 1.1.
  o.safety_factor = 1.0;
  const double e = sx::estimate_lipschitz(
      [&](const Vec& x) { return def.source.step(x, u); }, def.source.state_box, o);
  EXPECT_LE(e, *def.source.lip_state);
  EXPECT_GT(e, 1.09);
}

TEST(Estimate, DcMotorInputSlope) {
  const auto def = sx::load_benchmark("dc-motor", sx::Scale::kDesk);
  const auto j = sx::joint_lipschitz(def.source, {});
  EXPECT_GE(j.lip_input, 0.02 - 1e-12);
  EXPECT_LE(j.lip_input, 0.022 * (1 + 1e-6));  // quotient roundoff on short pairs
}

TEST(Estimate, DroneInputSlope) {
  const auto def = sx::load_benchmark("quadrotor", sx::Scale::kDesk);
  const auto j = sx::joint_lipschitz(def.source, {});
  // Each state row is driven by one input: the infinity-norm slope is
  // max(tau, tau^2/2) = 0.01, below the declared 0.01005.
  EXPECT_GE(j.lip_input, 0.01 * (1 - 1e-9));
  EXPECT_LE(j.lip_input, 1.1 * 0.01005);
}

TEST(Estimate, InputFreeSystemHasZeroInputSlope) {
  sx::DtSystem sys;
  sys.name = "autonomous";
  sys.state_box = interval(-1, 1);
  sys.input_box = interval(-1, 1);
  sys.transition = [](const Vec& x, const Vec&) { return Vec(0.5 * x); };
  const auto j = sx::joint_lipschitz(sys, {});
  EXPECT_EQ(j.lip_input, 0.0);
  EXPECT_NEAR(j.lip_state, 0.55, 1e-9);
}

TEST(Estimate, MorePairsNeverLower) {
  const auto def = sx::load_benchmark("pendulum", sx::Scale::kDesk);
  const Vec u = Vec::Constant(1, 0.3);
  auto f = [&](const Vec& x) { return def.target.step(x, u); };
  double last = 0.0;
  for (std::uint64_t n : {10, 100, 1000, 5000}) {
    sx::EstimateOptions o;
    o.pairs = n;
    const double e = sx::estimate_lipschitz(f, def.target.state_box, o);
    EXPECT_GE(e, last);
    last = e;
  }
}

TEST(Estimate, LinearMapConvergesToOperatorNorm) {
  Eigen::Matrix2d a;
  a << 0.8, -0.5, 0.3, 0.2;  // infinity operator norm 1.3
  const sx::Box box(Vec::Constant(2, -1), Vec::Constant(2, 1));
  sx::EstimateOptions o;
  o.pairs = 100000;
  const double e = sx::estimate_lipschitz([&](const Vec& x) { return Vec(a * x); }, box, o);
  EXPECT_NEAR(e, 1.1 * 1.3, 0.02 * 1.1 * 1.3);
  EXPECT_LE(e, 1.1 * 1.3 * (1 + 1e-12));
}
