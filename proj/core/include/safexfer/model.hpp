#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "safexfer/types.hpp"

namespace safexfer {

// Axis-aligned box [lower, upper].
class Box {
 public:
  Box() = default;
  Box(Vec lower, Vec upper);

  int dim() const { return static_cast<int>(lower_.size()); }
  const Vec& lower() const { return lower_; }
  const Vec& upper() const { return upper_; }
  double lower(int i) const { return lower_[i]; }
  double upper(int i) const { return upper_[i]; }
  double width(int i) const { return upper_[i] - lower_[i]; }
  Vec center() const { return 0.5 * (lower_ + upper_); }
  double volume() const;

  bool contains(const Vec& x) const;
  bool contains(const Box& other) const;
  bool intersects(const Box& other) const;
  // Returns the overlap, or nullopt when the boxes are disjoint.
  std::optional<Box> intersection(const Box& other) const;

 private:
  Vec lower_;
  Vec upper_;
};

Vec clamp_to_box(const Box& b, const Vec& x);

enum class RegionKind { kBox, kComplementOfBox, kUnion };

// A subset of the state box. Members are clipped to the enclosing box at
// construction so the "members lie inside the state box" invariant holds even
// when a configured region pokes outside it.
class RegionSpec {
 public:
  static RegionSpec box(const Box& member, const Box& state_box);
  static RegionSpec complement_of(const Box& removed, const Box& state_box);
  static RegionSpec union_of(const std::vector<Box>& members,
                             const Box& state_box);

  RegionKind kind() const { return kind_; }
  const std::vector<Box>& members() const { return members_; }
  const Box& state_box() const { return state_box_; }

  bool contains(const Vec& x) const;
  // True when the closed cell shares at least one point with the region. Used
  // to decide which grid cells a region condition must hold on.
  bool intersects(const Box& cell) const;

 private:
  RegionSpec(RegionKind kind, std::vector<Box> members, Box state_box)
      : kind_(kind), members_(std::move(members)), state_box_(std::move(state_box)) {}

  RegionKind kind_ = RegionKind::kBox;
  std::vector<Box> members_;
  Box state_box_;
};

bool region_contains(const RegionSpec& r, const Vec& x);

using TransitionMap = std::function<Vec(const Vec& x, const Vec& u)>;
using StateMap = std::function<Vec(const Vec& x)>;
using ScalarField = std::function<double(const Vec& x)>;
// Evaluates a controller on many states at once; states are columns.
using BatchStateMap =
    std::function<Eigen::MatrixXd(const Eigen::MatrixXd& states)>;

struct DtSystem {
  std::string name;
  Box state_box;
  Box input_box;
  TransitionMap transition;
  std::optional<double> lip_state;
  std::optional<double> lip_input;

  Vec step(const Vec& x, const Vec& u) const { return transition(x, u); }
};

enum class ControlKind { kAnalytic, kNeural };

struct ControlLaw {
  ControlKind kind = ControlKind::kAnalytic;
  StateMap map;  // already clamped to the input box
  std::optional<double> lip;
  BatchStateMap batch;  // optional fast path, same values as `map`

  Vec operator()(const Vec& x) const { return map(x); }
  Eigen::MatrixXd evaluate_batch(const Eigen::MatrixXd& states) const;
};

class BarrierCertificate {
 public:
  BarrierCertificate(ScalarField eval, double lip, double eta);

  double operator()(const Vec& x) const { return eval_(x); }
  const ScalarField& eval() const { return eval_; }
  double lip() const { return lip_; }
  double eta() const { return eta_; }
  BarrierCertificate with_lip(double lip) const { return {eval_, lip, eta_}; }
  BarrierCertificate with_eta(double eta) const { return {eval_, lip_, eta}; }

 private:
  ScalarField eval_;
  double lip_;
  double eta_;
};

struct SafetySpec {
  RegionSpec initial;
  RegionSpec unsafe;
  int horizon = 500;
};

}  // namespace safexfer
