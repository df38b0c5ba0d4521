#pragma once

#include <cstdint>
#include <iterator>
#include <vector>

#include "safexfer/model.hpp"

namespace safexfer {

inline constexpr std::uint64_t kDefaultMaxCells = 100'000'000;

// Uniform partition of a box into cells of width <= epsilon along every axis.
// Points are cell centres, generated on demand from their index. Index order
// is row-major with the last axis varying fastest.
class SampleGrid {
 public:
  SampleGrid(Box state_box, double epsilon, std::vector<std::uint64_t> cells);

  const Box& state_box() const { return box_; }
  double epsilon() const { return epsilon_; }
  int dim() const { return box_.dim(); }
  const std::vector<std::uint64_t>& cells_per_axis() const { return cells_; }
  std::uint64_t size() const { return size_; }
  double cell_width(int axis) const { return width_[axis]; }

  Vec point(std::uint64_t index) const;
  Box cell(std::uint64_t index) const;
  // Index of the cell containing x (points on shared faces go to the upper
  // cell, points on the outer boundary to the adjacent cell).
  std::uint64_t nearest_index(const Vec& x) const;

 private:
  Box box_;
  double epsilon_;
  std::vector<std::uint64_t> cells_;
  Vec width_;
  std::uint64_t size_ = 0;
};

SampleGrid build_grid(const Box& state_box, double epsilon,
                      std::uint64_t max_cells = kDefaultMaxCells);

double cover_radius(const SampleGrid& g);

struct GridPoint {
  std::uint64_t index;
  Vec state;
};

// Forward range over the grid points in index order; a sub-range can be taken
// for data-parallel sweeps.
class PointRange {
 public:
  class iterator {
   public:
    using iterator_category = std::input_iterator_tag;
    using value_type = GridPoint;
    using difference_type = std::ptrdiff_t;
    using pointer = void;
    using reference = GridPoint;

    iterator() = default;
    iterator(const SampleGrid* g, std::uint64_t i) : grid_(g), index_(i) {}
    GridPoint operator*() const { return {index_, grid_->point(index_)}; }
    iterator& operator++() {
      ++index_;
      return *this;
    }
    iterator operator++(int) {
      iterator old = *this;
      ++index_;
      return old;
    }
    bool operator==(const iterator& o) const { return index_ == o.index_; }

   private:
    const SampleGrid* grid_ = nullptr;
    std::uint64_t index_ = 0;
  };

  PointRange(const SampleGrid& g, std::uint64_t first, std::uint64_t last)
      : grid_(&g), first_(first), last_(last) {}
  iterator begin() const { return {grid_, first_}; }
  iterator end() const { return {grid_, last_}; }
  std::uint64_t size() const { return last_ - first_; }

 private:
  const SampleGrid* grid_;
  std::uint64_t first_;
  std::uint64_t last_;
};

PointRange iterate_points(const SampleGrid& g);
PointRange iterate_points(const SampleGrid& g, std::uint64_t first,
                          std::uint64_t last);

}  // namespace safexfer
