#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <vector>

#include "safexfer/grid.hpp"
#include "safexfer/model.hpp"

namespace safexfer {

struct Trajectory {
  std::vector<Vec> states;
  std::vector<Vec> inputs;  // one fewer than states
  bool entered_unsafe = false;
  std::optional<int> first_unsafe_step;
  // States are never clamped; leaving the state box is recorded instead.
  bool left_state_box = false;
  std::optional<int> first_exit_step;
};

Trajectory simulate(const DtSystem& sys, const ControlLaw& k, const Vec& x0, int steps,
                    const SafetySpec& spec);

// Corners of the first initial-set member, then uniform samples from the
// initial set, `count` states in total.
std::vector<Vec> sample_initial_states(const SafetySpec& spec, int count, std::uint64_t seed);

// Columns: rollout, step, x0..., u0... (inputs empty on the last state).
void write_trajectories_csv(const std::vector<Trajectory>& rollouts,
                            const std::filesystem::path& path);

// Fixed coordinates for axes outside a 2-D map, keyed by axis index.
using SliceSpec = std::map<int, double>;
// Parses "axis=value".
std::pair<int, double> parse_slice(const std::string& text);

struct ViolationMapStats {
  std::uint64_t rows = 0;
  std::uint64_t violations = 0;
};

// Grid for a violation map: `resolution` cells across the widest axis, the
// same cell width on the other free axes, and a single cell on pinned axes.
SampleGrid map_grid(const Box& state_box, int resolution, const SliceSpec& slice = {});

// One row per point of a 2-D map over the free axes of `map_grid` (the
// remaining axes pinned by `slice`): coordinates, B(x), B(next)-B(x)+eta, and a
// flag set where the state lies in {B <= 0} but its successor misses
// {B <= -eta}. Faults when the free axes are not exactly two.
ViolationMapStats violation_map(const BarrierCertificate& b, const DtSystem& sys,
                                const ControlLaw& k, const SampleGrid& map_grid,
                                const SliceSpec& slice, const std::filesystem::path& path);

}  // namespace safexfer
