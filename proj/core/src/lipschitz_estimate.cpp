#include "safexfer/lipschitz_estimate.hpp"

#include <algorithm>
#include <cmath>

#include "safexfer/rng.hpp"

namespace safexfer {

namespace {

Vec sample_in(const Box& b, Rng& rng) {
  Vec x(b.dim());
  for (int i = 0; i < b.dim(); ++i) x[i] = rng.uniform(b.lower(i), b.upper(i));
  return x;
}

Vec perturb_in(const Box& b, const Vec& x, double rel, Rng& rng) {
  Vec y(b.dim());
  for (int i = 0; i < b.dim(); ++i) {
    const double r = rel * b.width(i);
    y[i] = std::clamp(x[i] + rng.uniform(-r, r), b.lower(i), b.upper(i));
  }
  return y;
}

void draw_pair(const Box& b, std::uint64_t i, double rel, Rng& rng, Vec& a, Vec& c) {
  a = sample_in(b, rng);
  c = (i % 2 == 0) ? sample_in(b, rng) : perturb_in(b, a, rel, rng);
}

void require_finite(const Vec& v, const char* what) {
  if (!v.allFinite()) throw Fault(std::string(what) + ": map returned a non-finite value");
}

void validate(const Box& domain, const EstimateOptions& opts) {
  if (opts.pairs < 1) throw Fault("estimate_lipschitz: need at least one pair");
  for (int i = 0; i < domain.dim(); ++i) {
    if (!(domain.width(i) > 0.0)) throw Fault("estimate_lipschitz: degenerate domain");
  }
}

}  // namespace

double estimate_lipschitz(const VectorMap& map, const Box& domain,
                          const EstimateOptions& opts) {
  validate(domain, opts);
  Rng rng(opts.seed);
  double best = 0.0;
  Vec a;
  Vec b;
  for (std::uint64_t i = 0; i < opts.pairs; ++i) {
    draw_pair(domain, i, opts.perturbation, rng, a, b);
    const double dx = inf_norm(a - b);
    if (dx == 0.0) continue;
    const Vec fa = map(a);
    const Vec fb = map(b);
    require_finite(fa, "estimate_lipschitz");
    require_finite(fb, "estimate_lipschitz");
    best = std::max(best, inf_norm(fa - fb) / dx);
  }
  return opts.safety_factor * best;
}

JointLipschitz joint_lipschitz(const DtSystem& sys, const EstimateOptions& opts) {
  validate(sys.state_box, opts);
  Rng rng(opts.seed);
  double lx = 0.0;
  double lu = 0.0;
  Vec a;
  Vec b;
  for (std::uint64_t i = 0; i < opts.pairs; ++i) {
    // State pair, shared input.
    draw_pair(sys.state_box, i, opts.perturbation, rng, a, b);
    Vec u = sample_in(sys.input_box, rng);
    double d = inf_norm(a - b);
    if (d > 0.0) {
      const Vec fa = sys.step(a, u);
      const Vec fb = sys.step(b, u);
      require_finite(fa, "joint_lipschitz");
      require_finite(fb, "joint_lipschitz");
      lx = std::max(lx, inf_norm(fa - fb) / d);
    }
    // Input pair, shared state.
    const Vec x = sample_in(sys.state_box, rng);
    draw_pair(sys.input_box, i, opts.perturbation, rng, a, b);
    d = inf_norm(a - b);
    if (d > 0.0) {
      const Vec fa = sys.step(x, a);
      const Vec fb = sys.step(x, b);
      require_finite(fa, "joint_lipschitz");
      require_finite(fb, "joint_lipschitz");
      lu = std::max(lu, inf_norm(fa - fb) / d);
    }
  }
  return {opts.safety_factor * lx, opts.safety_factor * lu};
}

}  // namespace safexfer
