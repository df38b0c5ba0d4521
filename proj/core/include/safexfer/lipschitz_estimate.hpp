#pragma once

#include <cstdint>
#include <functional>

#include "safexfer/model.hpp"

namespace safexfer {

struct EstimateOptions {
  std::uint64_t pairs = 10000;
  std::uint64_t seed = 0;
  double safety_factor = 1.1;
  // Half-width of the local perturbation pairs, relative to each axis width.
  double perturbation = 1e-4;
};

using VectorMap = std::function<Vec(const Vec&)>;

// safety_factor times the largest sampled difference quotient. Even-numbered
// pairs are drawn uniformly from the domain, odd-numbered pairs are a uniform
// point and a small perturbation of it. Pair i depends only on the seed and
// the pairs before it, so more pairs can only raise the estimate.
double estimate_lipschitz(const VectorMap& map, const Box& domain,
                          const EstimateOptions& opts);

struct JointLipschitz {
  double lip_state;
  double lip_input;
};

// State slope with the input held fixed within each pair, input slope with the
// state held fixed.
JointLipschitz joint_lipschitz(const DtSystem& sys, const EstimateOptions& opts);

}  // namespace safexfer
