#include "safexfer/certify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "safexfer/csv.hpp"
#include "safexfer/parallel.hpp"
#include "safexfer/rng.hpp"

namespace safexfer {

namespace {

constexpr std::uint64_t kChunk = 4096;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kRoundoff = 1e-12;

Eigen::MatrixXd chunk_states(const SampleGrid& g, std::uint64_t first, std::uint64_t last) {
  Eigen::MatrixXd xs(g.dim(), static_cast<Eigen::Index>(last - first));
  for (std::uint64_t i = first; i < last; ++i) {
    xs.col(static_cast<Eigen::Index>(i - first)) = g.point(i);
  }
  return xs;
}

void require_same_box(const Box& a, const Box& b, const char* what) {
  if (a.dim() != b.dim() || a.lower() != b.lower() || a.upper() != b.upper()) {
    throw Fault(std::string(what) + ": state boxes differ");
  }
}

// Everything a single grid point needs, given its successor.
struct Slack {
  double lip_B;
  double lip_cl;
  double half_eps;
  double eta;
};

PointConditions evaluate_point(const BarrierCertificate& b, const SafetySpec& spec,
                               const Box& cell, const Vec& x, const Vec& next,
                               const Slack& s, DecreaseRule rule) {
  PointConditions pc{};
  pc.barrier = b(x);
  pc.barrier_next = b(next);
  if (!std::isfinite(pc.barrier) || !std::isfinite(pc.barrier_next)) {
    throw Fault("barrier evaluation is not finite");
  }
  const double cell_slack = s.lip_B * s.half_eps;
  if (spec.initial.intersects(cell)) pc.initial = pc.barrier + cell_slack + s.eta;
  if (spec.unsafe.intersects(cell)) {
    // Strict inequality B - slack > eta, as "value <= 0".
    pc.unsafe = std::nextafter(s.eta, std::numeric_limits<double>::infinity()) -
                (pc.barrier - cell_slack);
  }
  const double next_slack = s.lip_B * s.lip_cl * s.half_eps;
  if (rule == DecreaseRule::kEverywhere) {
    pc.decrease = pc.barrier_next - pc.barrier + next_slack + cell_slack + s.eta;
  } else if (pc.barrier - cell_slack <= 0.0) {
    pc.decrease = pc.barrier_next + next_slack + s.eta;
  }
  return pc;
}

Slack make_slack(const BarrierCertificate& b, const DtSystem& sys, const ControlLaw& k,
                 const SampleGrid& g) {
  require_same_box(sys.state_box, g.state_box(), "verify_cbc_on_grid");
  return {b.lip(), closed_loop_lipschitz(sys, k), 0.5 * g.epsilon(), b.eta()};
}

}  // namespace

double closed_loop_lipschitz(const DtSystem& sys, const ControlLaw& k) {
  if (!sys.lip_state || !sys.lip_input || !k.lip) {
    throw Fault("missing Lipschitz constant for " + (sys.name.empty() ? "system" : sys.name));
  }
  return *sys.lip_state + *sys.lip_input * *k.lip;
}

PointConditions conditions_at(const BarrierCertificate& b, const DtSystem& sys,
                              const ControlLaw& k, const SafetySpec& spec,
                              const SampleGrid& g, std::uint64_t index,
                              const VerifyOptions& opts) {
  const Slack s = make_slack(b, sys, k, g);
  const Vec x = g.point(index);
  return evaluate_point(b, spec, g.cell(index), x, sys.step(x, k(x)), s, opts.decrease);
}

CertificationVerdict verify_cbc_on_grid(const BarrierCertificate& b, const DtSystem& sys,
                                        const ControlLaw& k, const SafetySpec& spec,
                                        const SampleGrid& g, const VerifyOptions& opts) {
  const Slack s = make_slack(b, sys, k, g);
  const std::uint64_t chunks = chunk_count(g.size(), kChunk);
  std::vector<CertificationVerdict> partial(chunks);

  for_each_chunk(g.size(), kChunk, [&](std::uint64_t c, std::uint64_t first, std::uint64_t last) {
    CertificationVerdict& v = partial[c];
    v.worst.fill(kNegInf);
    const Eigen::MatrixXd xs = chunk_states(g, first, last);
    const Eigen::MatrixXd us = k.evaluate_batch(xs);
    for (std::uint64_t i = first; i < last; ++i) {
      const auto col = static_cast<Eigen::Index>(i - first);
      const Vec x = xs.col(col);
      const Vec next = sys.step(x, us.col(col));
      const PointConditions pc = evaluate_point(b, spec, g.cell(i), x, next, s, opts.decrease);
      const std::array<std::optional<double>, 3> values{pc.initial, pc.unsafe, pc.decrease};
      for (int j = 0; j < 3; ++j) {
        if (!values[j]) continue;
        const double val = *values[j];
        ++v.checked[j];
        v.worst[j] = std::max(v.worst[j], val);
        if (!(val <= 0.0)) {
          ++v.violation_count[j];
          if (v.violations.size() < opts.violation_cap) v.violations.push_back({x, j + 1, val});
        }
      }
    }
  });

  CertificationVerdict out;
  out.worst.fill(kNegInf);
  for (const auto& p : partial) {
    for (int j = 0; j < 3; ++j) {
      out.worst[j] = std::max(out.worst[j], p.worst[j]);
      out.checked[j] += p.checked[j];
      out.violation_count[j] += p.violation_count[j];
    }
    for (const auto& viol : p.violations) {
      if (out.violations.size() >= opts.violation_cap) break;
      out.violations.push_back(viol);
    }
  }
  for (int j = 0; j < 3; ++j) out.ok[j] = out.violation_count[j] == 0;
  return out;
}

ValidityResult check_validity(const ValidityInputs& v) {
  const double lhs = v.lip_B * (v.lip_dagger * v.epsilon / 2.0 + v.mismatch) - v.eta;
  return {lhs <= 0.0, lhs};
}

GapStats closed_loop_gap(const DtSystem& src, const ControlLaw& k, const DtSystem& tgt,
                         const ControlLaw& k_hat, const SampleGrid& g) {
  require_same_box(src.state_box, tgt.state_box, "mismatch_E");
  require_same_box(src.state_box, g.state_box(), "mismatch_E");
  const std::uint64_t chunks = chunk_count(g.size(), kChunk);
  std::vector<GapStats> partial(chunks);
  for_each_chunk(g.size(), kChunk, [&](std::uint64_t c, std::uint64_t first, std::uint64_t last) {
    const Eigen::MatrixXd xs = chunk_states(g, first, last);
    const Eigen::MatrixXd us = k.evaluate_batch(xs);
    const Eigen::MatrixXd uh = k_hat.evaluate_batch(xs);
    GapStats st;
    for (Eigen::Index j = 0; j < xs.cols(); ++j) {
      const Vec x = xs.col(j);
      const Vec gap = src.step(x, us.col(j)) - tgt.step(x, uh.col(j));
      if (!gap.allFinite()) {
        std::string where;
        for (int i = 0; i < x.size(); ++i) where += (i ? "," : "") + format_real(x[i]);
        throw Fault("mismatch_E: non-finite dynamics output at (" + where + ")");
      }
      st.max_gap = std::max(st.max_gap, inf_norm(gap));
      st.half_mean_sq += gap.squaredNorm();
    }
    partial[c] = st;
  });
  GapStats out;
  for (const auto& p : partial) {
    out.max_gap = std::max(out.max_gap, p.max_gap);
    out.half_mean_sq += p.half_mean_sq;
  }
  out.half_mean_sq /= 2.0 * static_cast<double>(g.size());
  return out;
}

double mismatch_E(const DtSystem& src, const ControlLaw& k, const DtSystem& tgt,
                  const ControlLaw& k_hat, const SampleGrid& g) {
  return closed_loop_gap(src, k, tgt, k_hat, g).max_gap;
}

ChainReport transfer_chain_check(const DtSystem& src, const ControlLaw& k,
                                 const DtSystem& tgt, const ControlLaw& k_hat,
                                 const BarrierCertificate& b, const SampleGrid& g,
                                 const ChainOptions& opts) {
  require_same_box(src.state_box, g.state_box(), "transfer_chain_check");
  require_same_box(tgt.state_box, g.state_box(), "transfer_chain_check");
  const double lip_src = closed_loop_lipschitz(src, k);
  const double lip_tgt = closed_loop_lipschitz(tgt, k_hat);
  ChainReport report;
  report.samples = opts.samples;
  report.mismatch = opts.mismatch ? *opts.mismatch : mismatch_E(src, k, tgt, k_hat, g);
  report.lip_dagger = lip_src + lip_tgt;
  const double half_eps = 0.5 * g.epsilon();
  const double gap_bound = report.lip_dagger * half_eps + report.mismatch;
  const double decrease_bound = b.lip() * gap_bound - b.eta();

  const std::vector<std::string> names{"source-step",   "target-step",  "successor-gap",
                                       "barrier-slope", "barrier-gap", "target-decrease"};
  std::vector<double> excess(names.size(), kNegInf);
  auto audit = [&](std::size_t which, double lhs, double rhs, const Vec& x) {
    const double e = lhs - rhs;
    excess[which] = std::max(excess[which], e);
    // Several bounds are tight for affine maps; allow for rounding.
    if (e > kRoundoff * (1.0 + std::abs(lhs) + std::abs(rhs))) {
      ++report.violation_count;
      if (report.violations.size() < opts.violation_cap) {
        report.violations.push_back({x, names[which], e});
      }
    }
  };

  Rng rng(opts.seed);
  const Box& box = g.state_box();
  for (std::uint64_t s = 0; s < opts.samples; ++s) {
    Vec x(box.dim());
    for (int i = 0; i < box.dim(); ++i) x[i] = rng.uniform(box.lower(i), box.upper(i));
    const Vec xi = g.point(g.nearest_index(x));
    const double d = inf_norm(x - xi);
    const Vec fx = src.step(x, k(x));
    const Vec fxi = src.step(xi, k(xi));
    const Vec gx = tgt.step(x, k_hat(x));
    const Vec gxi = tgt.step(xi, k_hat(xi));
    const double bx = b(x);
    const double bxi = b(xi);
    const double bgx = b(gx);
    const double bfx = b(fx);
    audit(0, inf_norm(fx - fxi), lip_src * d, x);
    audit(1, inf_norm(gx - gxi), lip_tgt * d, x);
    audit(2, inf_norm(fx - gx), gap_bound, x);
    audit(3, std::abs(bx - bxi), b.lip() * d, x);
    audit(4, std::abs(bgx - bfx), b.lip() * inf_norm(gx - fx), x);
    if (opts.check_target_decrease) {
      if (opts.decrease == DecreaseRule::kEverywhere) {
        audit(5, bgx - bx, decrease_bound, x);
      } else if (bx <= 0.0) {
        audit(5, bgx, decrease_bound, x);
      }
    }
  }
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (i == 5 && !opts.check_target_decrease) continue;
    report.max_excess.emplace_back(names[i], excess[i]);
  }
  return report;
}

void write_verdict_csv(const CertificationVerdict& v, const std::filesystem::path& path) {
  const int dim = v.violations.empty() ? 0 : static_cast<int>(v.violations.front().state.size());
  std::vector<std::string> header{"condition", "value"};
  for (int i = 0; i < dim; ++i) header.push_back("x" + std::to_string(i));
  CsvWriter csv(path, header);
  for (const auto& viol : v.violations) {
    csv.add(static_cast<long long>(viol.condition)).add(viol.value).add(viol.state);
    csv.end_row();
  }
}

void write_verdict_summary(const CertificationVerdict& v, std::ostream& out) {
  static const char* const kNames[3] = {"initial", "unsafe", "decrease"};
  for (int j = 0; j < 3; ++j) {
    out << kNames[j] << ".ok = " << (v.ok[j] ? "true" : "false") << '\n'
        << kNames[j] << ".worst = " << format_real(v.worst[j]) << '\n'
        << kNames[j] << ".checked = " << v.checked[j] << '\n'
        << kNames[j] << ".violations = " << v.violation_count[j] << '\n';
  }
}

}  // namespace safexfer
