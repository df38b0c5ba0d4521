#include "safexfer/model.hpp"

#include <algorithm>
#include <cmath>

namespace safexfer {

Box::Box(Vec lower, Vec upper) : lower_(std::move(lower)), upper_(std::move(upper)) {
  if (lower_.size() < 1) throw Fault("Box: dimension must be at least 1");
  if (lower_.size() != upper_.size()) throw Fault("Box: bound dimensions differ");
  for (int i = 0; i < dim(); ++i) {
    if (!std::isfinite(lower_[i]) || !std::isfinite(upper_[i]) ||
        lower_[i] > upper_[i]) {
      throw Fault("Box: invalid bounds on axis " + std::to_string(i));
    }
  }
}

double Box::volume() const {
  double v = 1.0;
  for (int i = 0; i < dim(); ++i) v *= width(i);
  return v;
}

bool Box::contains(const Vec& x) const {
  require_dim(x, dim(), "Box::contains");
  for (int i = 0; i < dim(); ++i) {
    if (x[i] < lower_[i] || x[i] > upper_[i]) return false;
  }
  return true;
}

bool Box::contains(const Box& other) const {
  if (other.dim() != dim()) throw Fault("Box::contains: dimension mismatch");
  for (int i = 0; i < dim(); ++i) {
    if (other.lower_[i] < lower_[i] || other.upper_[i] > upper_[i]) return false;
  }
  return true;
}

bool Box::intersects(const Box& other) const {
  if (other.dim() != dim()) throw Fault("Box::intersects: dimension mismatch");
  for (int i = 0; i < dim(); ++i) {
    if (other.upper_[i] < lower_[i] || other.lower_[i] > upper_[i]) return false;
  }
  return true;
}

std::optional<Box> Box::intersection(const Box& other) const {
  if (!intersects(other)) return std::nullopt;
  return Box(lower_.cwiseMax(other.lower_), upper_.cwiseMin(other.upper_));
}

Vec clamp_to_box(const Box& b, const Vec& x) {
  require_dim(x, b.dim(), "clamp_to_box");
  return x.cwiseMax(b.lower()).cwiseMin(b.upper());
}

namespace {

Box clip_member(const Box& member, const Box& state_box) {
  auto clipped = state_box.intersection(member);
  if (!clipped) throw Fault("RegionSpec: member lies outside the state box");
  return *clipped;
}

}  // namespace

RegionSpec RegionSpec::box(const Box& member, const Box& state_box) {
  return RegionSpec(RegionKind::kBox, {clip_member(member, state_box)}, state_box);
}

RegionSpec RegionSpec::complement_of(const Box& removed, const Box& state_box) {
  return RegionSpec(RegionKind::kComplementOfBox,
                    {clip_member(removed, state_box)}, state_box);
}

RegionSpec RegionSpec::union_of(const std::vector<Box>& members,
                                const Box& state_box) {
  if (members.empty()) throw Fault("RegionSpec: union needs at least one member");
  std::vector<Box> clipped;
  clipped.reserve(members.size());
  for (const auto& m : members) clipped.push_back(clip_member(m, state_box));
  return RegionSpec(RegionKind::kUnion, std::move(clipped), state_box);
}

bool RegionSpec::contains(const Vec& x) const {
  require_dim(x, state_box_.dim(), "region_contains");
  switch (kind_) {
    case RegionKind::kBox:
      return members_[0].contains(x);
    case RegionKind::kComplementOfBox:
      return state_box_.contains(x) && !members_[0].contains(x);
    case RegionKind::kUnion:
      return std::any_of(members_.begin(), members_.end(),
                         [&](const Box& m) { return m.contains(x); });
  }
  return false;
}

bool RegionSpec::intersects(const Box& cell) const {
  switch (kind_) {
    case RegionKind::kBox:
      return members_[0].intersects(cell);
    case RegionKind::kComplementOfBox:
      // The removed box is closed, so a cell meets the remainder unless it
      // sits entirely inside the removed box.
      return state_box_.intersects(cell) && !members_[0].contains(cell);
    case RegionKind::kUnion:
      return std::any_of(members_.begin(), members_.end(),
                         [&](const Box& m) { return m.intersects(cell); });
  }
  return false;
}

bool region_contains(const RegionSpec& r, const Vec& x) { return r.contains(x); }

Eigen::MatrixXd ControlLaw::evaluate_batch(const Eigen::MatrixXd& states) const {
  if (batch) return batch(states);
  Eigen::MatrixXd out;
  for (Eigen::Index j = 0; j < states.cols(); ++j) {
    Vec u = map(states.col(j));
    if (j == 0) out.resize(u.size(), states.cols());
    out.col(j) = u;
  }
  return out;
}

BarrierCertificate::BarrierCertificate(ScalarField eval, double lip, double eta)
    : eval_(std::move(eval)), lip_(lip), eta_(eta) {
  if (!eval_) throw Fault("BarrierCertificate: missing evaluation map");
  if (!(eta_ > 0.0)) throw Fault("BarrierCertificate: eta must be positive");
  if (!(lip_ >= 0.0)) throw Fault("BarrierCertificate: Lipschitz constant must be non-negative");
}

}  // namespace safexfer
