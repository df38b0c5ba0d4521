#include "safexfer/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace safexfer {

SampleGrid::SampleGrid(Box state_box, double epsilon,
                       std::vector<std::uint64_t> cells)
    : box_(std::move(state_box)), epsilon_(epsilon), cells_(std::move(cells)) {
  width_.resize(box_.dim());
  size_ = 1;
  for (int i = 0; i < box_.dim(); ++i) {
    width_[i] = box_.width(i) / static_cast<double>(cells_[i]);
    size_ *= cells_[i];
  }
}

Vec SampleGrid::point(std::uint64_t index) const {
  Vec x(dim());
  for (int i = dim() - 1; i >= 0; --i) {
    const std::uint64_t c = index % cells_[i];
    index /= cells_[i];
    x[i] = box_.lower(i) + width_[i] * (static_cast<double>(c) + 0.5);
  }
  return x;
}

Box SampleGrid::cell(std::uint64_t index) const {
  Vec lo(dim());
  Vec hi(dim());
  for (int i = dim() - 1; i >= 0; --i) {
    const std::uint64_t c = index % cells_[i];
    index /= cells_[i];
    lo[i] = box_.lower(i) + width_[i] * static_cast<double>(c);
    // The last cell ends exactly on the box bound so cells tile the box.
    hi[i] = c + 1 == cells_[i] ? box_.upper(i)
                               : box_.lower(i) + width_[i] * static_cast<double>(c + 1);
  }
  return Box(lo, hi);
}

std::uint64_t SampleGrid::nearest_index(const Vec& x) const {
  require_dim(x, dim(), "SampleGrid::nearest_index");
  std::uint64_t index = 0;
  for (int i = 0; i < dim(); ++i) {
    double t = std::floor((x[i] - box_.lower(i)) / width_[i]);
    t = std::clamp(t, 0.0, static_cast<double>(cells_[i] - 1));
    index = index * cells_[i] + static_cast<std::uint64_t>(t);
  }
  return index;
}

SampleGrid build_grid(const Box& state_box, double epsilon,
                      std::uint64_t max_cells) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw Fault("build_grid: epsilon must be positive");
  }
  std::vector<std::uint64_t> cells(state_box.dim());
  double total = 1.0;
  for (int i = 0; i < state_box.dim(); ++i) {
    const double w = state_box.width(i);
    if (!(w > 0.0)) throw Fault("build_grid: degenerate box on axis " + std::to_string(i));
    // Smallest count whose realised width does not exceed epsilon; the
    // correction absorbs quotients like 6/0.2 landing a hair above 30.
    double n = std::ceil(w / epsilon);
    while (n > 1.0 && w / (n - 1.0) <= epsilon) n -= 1.0;
    while (w / n > epsilon) n += 1.0;
    total *= n;
    if (total > static_cast<double>(max_cells)) {
      std::ostringstream msg;
      msg << "build_grid: epsilon " << epsilon << " needs more than " << max_cells
          << " cells; use a larger epsilon";
      throw Fault(msg.str());
    }
    cells[i] = static_cast<std::uint64_t>(n);
  }
  return SampleGrid(state_box, epsilon, std::move(cells));
}

double cover_radius(const SampleGrid& g) {
  double r = 0.0;
  for (int i = 0; i < g.dim(); ++i) r = std::max(r, 0.5 * g.cell_width(i));
  return r;
}

PointRange iterate_points(const SampleGrid& g) { return {g, 0, g.size()}; }

PointRange iterate_points(const SampleGrid& g, std::uint64_t first,
                          std::uint64_t last) {
  if (first > last || last > g.size()) throw Fault("iterate_points: bad index range");
  return {g, first, last};
}

}  // namespace safexfer
