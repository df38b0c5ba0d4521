#include <cmath>
#include <numbers>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "safexfer/grid.hpp"
#include "safexfer/rng.hpp"

namespace sx = safexfer;
using sx::Vec;

namespace {

sx::Box cube(int dim, double lo, double hi) {
  return {Vec::Constant(dim, lo), Vec::Constant(dim, hi)};
}

}  // namespace

TEST(Grid, UnitSquareHalves) {
  const auto g = sx::build_grid(cube(2, -1, 1), 1.0);
  ASSERT_EQ(g.size(), 4u);
  EXPECT_EQ(g.cells_per_axis(), (std::vector<std::uint64_t>{2, 2}));
  const double expected[4][2] = {{-0.5, -0.5}, {-0.5, 0.5}, {0.5, -0.5}, {0.5, 0.5}};
  int i = 0;
  for (const auto& p : sx::iterate_points(g)) {
    EXPECT_EQ(p.index, static_cast<std::uint64_t>(i));
    EXPECT_DOUBLE_EQ(p.state[0], expected[i][0]);
    EXPECT_DOUBLE_EQ(p.state[1], expected[i][1]);
    ++i;
  }
  EXPECT_EQ(i, 4);
  EXPECT_DOUBLE_EQ(sx::cover_radius(g), 0.5);
}

TEST(Grid, DroneGridCount) {
  const auto g = sx::build_grid(cube(4, -3, 3), 0.2);
  EXPECT_EQ(g.cells_per_axis(), (std::vector<std::uint64_t>(4, 30)));
  EXPECT_EQ(g.size(), 810000u);
  EXPECT_NEAR(sx::cover_radius(g), 0.1, 1e-15);
}

TEST(Grid, PendulumPaperGridCount) {
  const double q = std::numbers::pi / 4;
  const auto g = sx::build_grid(cube(2, -q, q), 9e-4);
  EXPECT_EQ(g.cells_per_axis(), (std::vector<std::uint64_t>{1746, 1746}));
  EXPECT_EQ(g.size(), 3048516u);
  // Independent oracle: walk a fine 1-D slice and check every position lies
  // within epsilon/2 of its nearest centre.
  const double w = g.cell_width(0);
  EXPECT_LE(w, 9e-4);
  EXPECT_GT(2 * q / 1745, 9e-4);  // one fewer cell would be too wide
  for (int s = 0; s <= 200000; ++s) {
    const double x = -q + 2 * q * s / 200000.0;
    double best = INFINITY;
    const long k = std::lround(std::floor((x + q) / w));
    for (long j = std::max(0L, k - 1); j <= std::min(1745L, k + 1); ++j) {
      best = std::min(best, std::abs(x - (-q + (j + 0.5) * w)));
    }
    ASSERT_LE(best, 4.5e-4 + 1e-12) << x;
  }
}

TEST(Grid, SingleCell) {
  const auto g = sx::build_grid(sx::Box(Vec::Constant(1, 2.0), Vec::Constant(1, 3.0)), 5.0);
  ASSERT_EQ(g.size(), 1u);
  EXPECT_DOUBLE_EQ(g.point(0)[0], 2.5);
}

TEST(Grid, Faults) {
  EXPECT_THROW(sx::build_grid(cube(2, -1, 1), 0.0), sx::Fault);
  EXPECT_THROW(sx::build_grid(cube(2, -1, 1), -0.1), sx::Fault);
  EXPECT_THROW(sx::build_grid(cube(2, 1, 1), 0.1), sx::Fault);
  EXPECT_THROW(sx::build_grid(cube(4, -3, 3), 1e-3), sx::Fault);  // 6000^4 cells
  EXPECT_THROW(sx::build_grid(cube(2, -1, 1), 0.01, 1000), sx::Fault);
}

TEST(Grid, DroneStreamHasNoDuplicates) {
  const auto g = sx::build_grid(cube(4, -3, 3), 0.2);
  std::set<std::vector<double>> seen;
  std::uint64_t n = 0;
  for (const auto& p : sx::iterate_points(g)) {
    seen.insert(std::vector<double>(p.state.data(), p.state.data() + 4));
    ++n;
  }
  EXPECT_EQ(n, 810000u);
  EXPECT_EQ(seen.size(), 810000u);
}

TEST(Grid, CoverFuzz) {
  const sx::Box box(Vec::Constant(3, -1.0), (Vec(3) << 2.0, 0.5, 1.7).finished());
  const auto g = sx::build_grid(box, 0.07);
  EXPECT_LE(sx::cover_radius(g), g.epsilon() / 2);
  sx::Rng rng(5);
  for (int i = 0; i < 100000; ++i) {
    Vec x(3);
    for (int a = 0; a < 3; ++a) x[a] = rng.uniform(box.lower(a), box.upper(a));
    const Vec c = g.point(g.nearest_index(x));
    ASSERT_LE(sx::inf_norm(x - c), g.epsilon() / 2 + 1e-12);
    ASSERT_TRUE(g.cell(g.nearest_index(x)).contains(x));
  }
}

TEST(Grid, CellsTileTheBox) {
  const sx::Box box((Vec(2) << -0.3, 1.0).finished(), (Vec(2) << 0.9, 1.35).finished());
  const auto g = sx::build_grid(box, 0.013);
  double total = 0.0;
  for (std::uint64_t i = 0; i < g.size(); ++i) total += g.cell(i).volume();
  EXPECT_NEAR(total, box.volume(), 1e-9 * box.volume());
}

TEST(Grid, Deterministic) {
  const auto a = sx::build_grid(cube(2, -1, 1), 0.03);
  const auto b = sx::build_grid(cube(2, -1, 1), 0.03);
  ASSERT_EQ(a.size(), b.size());
  for (std::uint64_t i = 0; i < a.size(); ++i) ASSERT_EQ(a.point(i), b.point(i));
}

TEST(Grid, SubRangesPartitionTheStream) {
  const auto g = sx::build_grid(cube(2, -1, 1), 0.1);
  std::uint64_t next = 0;
  for (std::uint64_t first = 0; first < g.size(); first += 37) {
    for (const auto& p : sx::iterate_points(g, first, std::min(g.size(), first + 37))) {
      ASSERT_EQ(p.index, next++);
    }
  }
  EXPECT_EQ(next, g.size());
}
