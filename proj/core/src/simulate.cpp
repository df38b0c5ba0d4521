#include "safexfer/simulate.hpp"

#include <algorithm>
#include <cmath>

#include "safexfer/csv.hpp"
#include "safexfer/rng.hpp"

namespace safexfer {

Trajectory simulate(const DtSystem& sys, const ControlLaw& k, const Vec& x0, int steps,
                    const SafetySpec& spec) {
  if (steps < 1) throw Fault("simulate: steps must be at least 1");
  if (!sys.state_box.contains(x0)) throw Fault("simulate: initial state outside the state box");
  Trajectory t;
  t.states.reserve(static_cast<std::size_t>(steps) + 1);
  t.inputs.reserve(static_cast<std::size_t>(steps));
  t.states.push_back(x0);
  auto record = [&](const Vec& x, int step) {
    if (!sys.state_box.contains(x)) {
      if (!t.left_state_box) t.first_exit_step = step;
      t.left_state_box = true;
      return;
    }
    if (!t.entered_unsafe && spec.unsafe.contains(x)) {
      t.entered_unsafe = true;
      t.first_unsafe_step = step;
    }
  };
  record(x0, 0);
  for (int s = 1; s <= steps; ++s) {
    const Vec& x = t.states.back();
    const Vec u = k(x);
    Vec next = sys.step(x, u);
    if (!u.allFinite() || !next.allFinite()) {
      throw Fault("simulate: non-finite state at step " + std::to_string(s));
    }
    t.inputs.push_back(u);
    t.states.push_back(std::move(next));
    record(t.states.back(), s);
  }
  return t;
}

std::vector<Vec> sample_initial_states(const SafetySpec& spec, int count, std::uint64_t seed) {
  std::vector<Vec> out;
  if (count <= 0) return out;
  const RegionSpec& init = spec.initial;
  const int dim = init.state_box().dim();
  if (init.kind() != RegionKind::kComplementOfBox) {
    const Box& first = init.members().front();
    for (unsigned mask = 0; mask < (1u << dim) && static_cast<int>(out.size()) < count; ++mask) {
      Vec c(dim);
      for (int i = 0; i < dim; ++i) c[i] = (mask >> i) & 1u ? first.upper(i) : first.lower(i);
      out.push_back(c);
    }
  }
  Rng rng(seed);
  auto uniform_in = [&](const Box& b) {
    Vec x(dim);
    for (int i = 0; i < dim; ++i) x[i] = rng.uniform(b.lower(i), b.upper(i));
    return x;
  };
  while (static_cast<int>(out.size()) < count) {
    switch (init.kind()) {
      case RegionKind::kBox:
        out.push_back(uniform_in(init.members().front()));
        break;
      case RegionKind::kUnion:
        out.push_back(uniform_in(init.members()[rng.below(init.members().size())]));
        break;
      case RegionKind::kComplementOfBox: {
        const Vec x = uniform_in(init.state_box());
        if (init.contains(x)) out.push_back(x);
        break;
      }
    }
  }
  return out;
}

void write_trajectories_csv(const std::vector<Trajectory>& rollouts,
                            const std::filesystem::path& path) {
  std::vector<std::string> header{"rollout", "step"};
  if (!rollouts.empty()) {
    for (int i = 0; i < rollouts.front().states.front().size(); ++i) header.push_back("x" + std::to_string(i));
    if (!rollouts.front().inputs.empty()) {
      for (int i = 0; i < rollouts.front().inputs.front().size(); ++i) {
        header.push_back("u" + std::to_string(i));
      }
    }
  }
  CsvWriter csv(path, header);
  for (std::size_t r = 0; r < rollouts.size(); ++r) {
    const auto& t = rollouts[r];
    const int m = t.inputs.empty() ? 0 : static_cast<int>(t.inputs.front().size());
    for (std::size_t s = 0; s < t.states.size(); ++s) {
      csv.add(static_cast<long long>(r)).add(static_cast<long long>(s)).add(t.states[s]);
      if (s < t.inputs.size()) {
        csv.add(t.inputs[s]);
      } else {
        for (int i = 0; i < m; ++i) csv.add(std::string());
      }
      csv.end_row();
    }
  }
}

std::pair<int, double> parse_slice(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos) throw Fault("slice '" + text + "' must look like axis=value");
  try {
    std::size_t used = 0;
    const int axis = std::stoi(text.substr(0, eq), &used);
    if (used != eq) throw std::invalid_argument("axis");
    const std::string rest = text.substr(eq + 1);
    const double value = std::stod(rest, &used);
    if (used != rest.size()) throw std::invalid_argument("value");
    return {axis, value};
  } catch (const std::exception&) {
    throw Fault("slice '" + text + "' must look like axis=value");
  }
}

SampleGrid map_grid(const Box& state_box, int resolution, const SliceSpec& slice) {
  if (resolution < 1) throw Fault("map_grid: resolution must be at least 1");
  double width = 0.0;
  for (int i = 0; i < state_box.dim(); ++i) width = std::max(width, state_box.width(i));
  const double eps = width / resolution;
  std::vector<std::uint64_t> cells(state_box.dim(), 1);
  for (int i = 0; i < state_box.dim(); ++i) {
    if (slice.count(i)) continue;
    const Box axis(Vec::Constant(1, state_box.lower(i)), Vec::Constant(1, state_box.upper(i)));
    cells[i] = build_grid(axis, eps).cells_per_axis()[0];
  }
  return SampleGrid(state_box, eps, std::move(cells));
}

ViolationMapStats violation_map(const BarrierCertificate& b, const DtSystem& sys,
                                const ControlLaw& k, const SampleGrid& map_grid,
                                const SliceSpec& slice, const std::filesystem::path& path) {
  const int dim = map_grid.dim();
  std::vector<int> free_axes;
  for (int i = 0; i < dim; ++i) {
    if (!slice.count(i)) free_axes.push_back(i);
  }
  for (const auto& [axis, value] : slice) {
    if (axis < 0 || axis >= dim) throw Fault("violation_map: slice axis out of range");
  }
  if (free_axes.size() != 2) {
    throw Fault("violation_map: a slice must pin all but two axes (state dimension " +
                std::to_string(dim) + ")");
  }
  std::vector<std::string> header;
  for (int i = 0; i < dim; ++i) header.push_back("x" + std::to_string(i));
  for (const char* h : {"barrier", "barrier_next", "decrease_gap", "violation"}) header.push_back(h);
  CsvWriter csv(path, header);

  const auto n0 = map_grid.cells_per_axis()[free_axes[0]];
  const auto n1 = map_grid.cells_per_axis()[free_axes[1]];
  const Vec centre = map_grid.point(0);
  ViolationMapStats stats;
  for (std::uint64_t i = 0; i < n0; ++i) {
    for (std::uint64_t j = 0; j < n1; ++j) {
      Vec x = centre;
      for (const auto& [axis, value] : slice) x[axis] = value;
      const Box& box = map_grid.state_box();
      x[free_axes[0]] = box.lower(free_axes[0]) +
                        map_grid.cell_width(free_axes[0]) * (static_cast<double>(i) + 0.5);
      x[free_axes[1]] = box.lower(free_axes[1]) +
                        map_grid.cell_width(free_axes[1]) * (static_cast<double>(j) + 0.5);
      const double bx = b(x);
      const double bn = b(sys.step(x, k(x)));
      const bool flag = bx <= 0.0 && !(bn <= -b.eta());
      csv.add(x).add(bx).add(bn).add(bn - bx + b.eta()).add(static_cast<long long>(flag ? 1 : 0));
      csv.end_row();
      ++stats.rows;
      if (flag) ++stats.violations;
    }
  }
  return stats;
}

}  // namespace safexfer
