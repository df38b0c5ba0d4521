#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "safexfer/case_studies.hpp"
#include "safexfer/certify.hpp"
#include "safexfer/parallel.hpp"
#include "safexfer/rng.hpp"

namespace sx = safexfer;
using sx::Vec;

namespace {

sx::Box square(double r) { return {Vec::Constant(2, -r), Vec::Constant(2, r)}; }

// x+ = 0.5 x + u with the zero controller; B = |x|_inf - 0.75.
struct Contracting {
  sx::DtSystem sys;
  sx::ControlLaw k;
  sx::BarrierCertificate b{[](const Vec& x) { return sx::inf_norm(x) - 0.75; }, 1.0, 0.1};
  sx::SafetySpec spec{sx::RegionSpec::box(square(0.1), square(1.005)),
                      sx::RegionSpec::complement_of(square(0.9), square(1.005)), 500};

  Contracting() {
    sys.name = "contracting";
    sys.state_box = square(1.005);
    sys.input_box = square(1.0);
    sys.transition = [](const Vec& x, const Vec& u) { return Vec(0.5 * x + u); };
    sys.lip_state = 0.5;
    sys.lip_input = 1.0;
    k.map = [](const Vec&) { return Vec(Vec::Zero(2)); };
    k.lip = 0.0;
  }
};

// Exact conditions at an arbitrary state, no grid slack.
bool exact_violation(const sx::BarrierCertificate& b, const sx::DtSystem& sys,
                     const sx::ControlLaw& k, const sx::SafetySpec& spec, const Vec& x) {
  const double bx = b(x);
  if (spec.initial.contains(x) && bx > -b.eta()) return true;
  if (spec.unsafe.contains(x) && !(bx > b.eta())) return true;
  if (bx <= 0.0 && b(sys.step(x, k(x))) > -b.eta()) return true;
  return false;
}

void expect_sound(const sx::BarrierCertificate& b, const sx::DtSystem& sys,
                  const sx::ControlLaw& k, const sx::SafetySpec& spec, double eps,
                  std::uint64_t samples) {
  const auto g = sx::build_grid(sys.state_box, eps);
  ASSERT_TRUE(sx::verify_cbc_on_grid(b, sys, k, spec, g).all_ok()) << sys.name;
  sx::Rng rng(2024);
  const sx::Box& box = sys.state_box;
  for (std::uint64_t i = 0; i < samples; ++i) {
    Vec x(box.dim());
    for (int a = 0; a < box.dim(); ++a) x[a] = rng.uniform(box.lower(a), box.upper(a));
    ASSERT_FALSE(exact_violation(b, sys, k, spec, x)) << sys.name << " at " << x.transpose();
  }
}

}  // namespace

TEST(Conditions, InitialSlackAtCentre) {
  Contracting c;
  const auto g = sx::build_grid(c.sys.state_box, 0.01);
  const auto centre = g.nearest_index(Vec::Zero(2));
  ASSERT_NEAR(sx::inf_norm(g.point(centre)), 0.0, 1e-12);
  const auto pc = sx::conditions_at(c.b, c.sys, c.k, c.spec, g, centre);
  ASSERT_TRUE(pc.initial.has_value());
  EXPECT_NEAR(*pc.initial, -0.75 + 0.005 + 0.1, 1e-12);
  EXPECT_FALSE(pc.unsafe.has_value());
}

TEST(Conditions, StraddlingCellsAreCheckedForBothRegions) {
  Contracting c;
  const auto g = sx::build_grid(c.sys.state_box, 0.3);
  Vec probe(2);
  probe << 0.1, 0.0;  // on the initial-set boundary
  const auto idx = g.nearest_index(probe);
  const sx::Box cell = g.cell(idx);
  ASSERT_TRUE(cell.lower(0) < 0.1 && cell.upper(0) > 0.1);
  EXPECT_TRUE(sx::conditions_at(c.b, c.sys, c.k, c.spec, g, idx).initial.has_value());
}

TEST(Verify, ContractingSystemPasses) {
  Contracting c;
  const auto g = sx::build_grid(c.sys.state_box, 0.01);
  const auto v = sx::verify_cbc_on_grid(c.b, c.sys, c.k, c.spec, g);
  EXPECT_TRUE(v.all_ok());
  EXPECT_EQ(v.total_violations(), 0u);
  EXPECT_GT(v.checked[0], 0u);
  EXPECT_GT(v.checked[1], 0u);
  EXPECT_GT(v.checked[2], 0u);
  for (int j = 0; j < 3; ++j) EXPECT_EQ(v.ok[j], v.worst[j] <= 0.0);
}

TEST(Verify, LiteralDecreaseRuleFailsAtInteriorMinimum) {
  Contracting c;
  const auto g = sx::build_grid(c.sys.state_box, 0.01);
  sx::VerifyOptions o;
  o.decrease = sx::DecreaseRule::kEverywhere;
  const auto v = sx::verify_cbc_on_grid(c.b, c.sys, c.k, c.spec, g, o);
  EXPECT_FALSE(v.ok[2]);
  EXPECT_TRUE(v.ok[0]);
  EXPECT_TRUE(v.ok[1]);
  EXPECT_EQ(v.checked[2], g.size());
}

TEST(Verify, ReportsViolationsWithCap) {
  Contracting c;
  // Too small a margin band for an unsafe set this close.
  c.spec.unsafe = sx::RegionSpec::complement_of(square(0.8), c.sys.state_box);
  const auto g = sx::build_grid(c.sys.state_box, 0.01);
  sx::VerifyOptions o;
  o.violation_cap = 5;
  const auto v = sx::verify_cbc_on_grid(c.b, c.sys, c.k, c.spec, g, o);
  EXPECT_FALSE(v.ok[1]);
  EXPECT_GT(v.violation_count[1], 5u);
  EXPECT_EQ(v.violations.size(), 5u);
  for (const auto& viol : v.violations) {
    EXPECT_EQ(viol.condition, sx::kUnsafeCondition);
    EXPECT_GT(viol.value, 0.0);
  }
}

TEST(Verify, ResultDoesNotDependOnThreadCount) {
  const auto def = sx::load_benchmark("dc-motor", sx::Scale::kDesk);
  const auto g = sx::build_grid(def.source.state_box, def.epsilon());
  sx::set_worker_threads(1);
  const auto a = sx::verify_cbc_on_grid(def.source_cbc, def.source, def.source_controller,
                                        def.spec, g);
  sx::set_worker_threads(3);
  const auto b = sx::verify_cbc_on_grid(def.source_cbc, def.source, def.source_controller,
                                        def.spec, g);
  sx::set_worker_threads(0);
  EXPECT_EQ(a.worst, b.worst);
  EXPECT_EQ(a.checked, b.checked);
}

TEST(Verify, Faults) {
  Contracting c;
  const auto other = sx::build_grid(square(2.0), 0.1);
  EXPECT_THROW(sx::verify_cbc_on_grid(c.b, c.sys, c.k, c.spec, other), sx::Fault);
  auto bare = c.sys;
  bare.lip_input.reset();
  const auto g = sx::build_grid(c.sys.state_box, 0.1);
  EXPECT_THROW(sx::verify_cbc_on_grid(c.b, bare, c.k, c.spec, g), sx::Fault);
}

TEST(Soundness, DenseSamplingFindsNoExactViolation) {
  Contracting c;
  expect_sound(c.b, c.sys, c.k, c.spec, 0.01, 1000000);
  const auto dc = sx::load_benchmark("dc-motor", sx::Scale::kDesk);
  expect_sound(dc.source_cbc, dc.source, dc.source_controller, dc.spec, dc.epsilon(), 1000000);
}

TEST(Validity, PaperExamples) {
  // Expected values worked out by hand from the published constants.
  const auto pend = sx::check_validity({2.0, 0.07637, 9e-4, 2.5e-4, 2.2});
  EXPECT_TRUE(pend.valid);
  EXPECT_NEAR(pend.lhs, -0.07389, 1e-15);
  const auto dc = sx::check_validity({10.0, 0.0211, 4e-4, 1e-3, 2.2});
  EXPECT_TRUE(dc.valid);
  EXPECT_NEAR(dc.lhs, -0.0067, 1e-15);
  const auto drone = sx::check_validity({0.269, 0.1, 0.2, 7e-4, 2.02});
  EXPECT_TRUE(drone.valid);
  EXPECT_NEAR(drone.lhs, -0.0454737, 1e-15);
}

TEST(Validity, BoundaryIsValid) {
  EXPECT_TRUE(sx::check_validity({1.0, 0.5, 1.0, 0.0, 1.0}).valid);
  EXPECT_FALSE(sx::check_validity({1.0, 0.5, 1.0, 1e-9, 1.0}).valid);
}

TEST(Validity, MonotoneInEveryCost) {
  sx::Rng rng(1);
  for (int i = 0; i < 20000; ++i) {
    const sx::ValidityInputs v{rng.uniform(0, 10), rng.uniform(1e-4, 0.2), rng.uniform(1e-4, 0.3),
                               rng.uniform(0, 0.01), rng.uniform(1, 5)};
    const auto base = sx::check_validity(v);
    for (int field = 0; field < 4; ++field) {
      auto w = v;
      const double bump = rng.uniform(0, 1);
      if (field == 0) w.lip_B += bump;
      if (field == 1) w.epsilon += bump;
      if (field == 2) w.mismatch += bump;
      if (field == 3) w.lip_dagger += bump;
      const auto r = sx::check_validity(w);
      ASSERT_GE(r.lhs, base.lhs);
      if (!base.valid) ASSERT_FALSE(r.valid);
    }
  }
}

TEST(Mismatch, IdenticalLoopsGiveZero) {
  const auto def = sx::load_benchmark("pendulum", sx::Scale::kDesk);
  const auto g = sx::build_grid(def.source.state_box, 0.01);
  EXPECT_EQ(sx::mismatch_E(def.source, def.source_controller, def.source, def.source_controller, g),
            0.0);
}

TEST(Mismatch, MaxOverGridPoints) {
  sx::DtSystem src;
  src.state_box = sx::Box(Vec::Constant(1, 0.0), Vec::Constant(1, 2.0));
  src.input_box = src.state_box;
  src.transition = [](const Vec& x, const Vec& u) { return Vec(x + u); };
  sx::DtSystem tgt = src;
  tgt.transition = [](const Vec& x, const Vec& u) {
    return Vec(x + u + Vec::Constant(1, x[0] < 1.0 ? 0.3 : 0.7));
  };
  sx::ControlLaw zero;
  zero.map = [](const Vec&) { return Vec(Vec::Zero(1)); };
  const auto g = sx::build_grid(src.state_box, 1.0);
  ASSERT_EQ(g.size(), 2u);
  EXPECT_DOUBLE_EQ(sx::mismatch_E(src, zero, tgt, zero, g), 0.7);
  const auto gap = sx::closed_loop_gap(src, zero, tgt, zero, g);
  EXPECT_DOUBLE_EQ(gap.max_gap, 0.7);
  EXPECT_DOUBLE_EQ(gap.half_mean_sq, (0.09 + 0.49) / 4);
}

TEST(Mismatch, NonFiniteFaults) {
  sx::DtSystem src;
  src.state_box = sx::Box(Vec::Constant(1, 0.0), Vec::Constant(1, 2.0));
  src.input_box = src.state_box;
  src.transition = [](const Vec& x, const Vec&) { return x; };
  sx::DtSystem tgt = src;
  tgt.transition = [](const Vec& x, const Vec&) { return Vec(x / 0.0); };
  sx::ControlLaw zero;
  zero.map = [](const Vec&) { return Vec(Vec::Zero(1)); };
  EXPECT_THROW(sx::mismatch_E(src, zero, tgt, zero, sx::build_grid(src.state_box, 0.5)),
               sx::Fault);
}

TEST(Chain, IdenticalLoopsHoldWithZeroMismatch) {
  for (const auto& name : {"pendulum", "dc-motor"}) {
    const auto def = sx::load_benchmark(name, sx::Scale::kDesk);
    const auto g = sx::build_grid(def.source.state_box, def.epsilon());
    sx::ChainOptions o;
    o.samples = 20000;
    const auto r = sx::transfer_chain_check(def.source, def.source_controller, def.source,
                                            def.source_controller, def.source_cbc, g, o);
    EXPECT_EQ(r.mismatch, 0.0);
    EXPECT_EQ(r.violation_count, 0u) << name;
    const double lcl = sx::closed_loop_lipschitz(def.source, def.source_controller);
    EXPECT_DOUBLE_EQ(r.lip_dagger, 2 * lcl);
    for (const auto& [bound, excess] : r.max_excess) EXPECT_LE(excess, 1e-12) << bound;
  }
}

TEST(Chain, UnderstatedBarrierSlopeIsCaught) {
  const auto def = sx::load_benchmark("dc-motor", sx::Scale::kDesk);
  const auto g = sx::build_grid(def.source.state_box, def.epsilon());
  sx::ChainOptions o;
  o.samples = 20000;
  const auto r = sx::transfer_chain_check(def.source, def.source_controller, def.target,
                                          def.source_controller,
                                          def.source_cbc.with_lip(def.source_cbc.lip() / 2), g, o);
  EXPECT_GT(r.violation_count, 0u);
  bool slope = false;
  for (const auto& v : r.violations) slope |= v.bound == "barrier-slope";
  EXPECT_TRUE(slope);
}
