#include "safexfer/pipeline.hpp"

#include <fstream>
#include <memory>
#include <sstream>

#include "safexfer/controllers.hpp"
#include "safexfer/csv.hpp"

namespace safexfer {

void apply_overrides(BenchmarkDef& def, const RunOverrides& o) {
  if (o.epsilon) {
    if (def.scale == Scale::kPaper) {
      def.epsilon_paper = *o.epsilon;
    } else {
      def.epsilon_desk = *o.epsilon;
    }
  }
  if (o.learning_rate) def.transfer.learning_rate = *o.learning_rate;
  if (o.max_rounds) def.transfer.max_outer_rounds = *o.max_rounds;
  if (o.seed) def.transfer.seed = *o.seed;
}

BarrierCertificate inherited_certificate(const BarrierCertificate& source, double validity_lhs) {
  return source.with_eta(-validity_lhs);
}

namespace {

class Summary {
 public:
  template <class T>
  void put(const std::string& key, const T& value) {
    std::ostringstream s;
    s << value;
    lines_ << key << " = " << s.str() << '\n';
  }
  void put_real(const std::string& key, double v) { lines_ << key << " = " << format_real(v) << '\n'; }
  void put_verdict(const std::string& prefix, const CertificationVerdict& v) {
    std::ostringstream s;
    write_verdict_summary(v, s);
    std::istringstream in(s.str());
    for (std::string line; std::getline(in, line);) lines_ << prefix << '.' << line << '\n';
  }
  void write(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << lines_.str();
    if (!out) throw Fault("cannot write " + path.string());
  }

 private:
  std::ostringstream lines_;
};

std::uint64_t run_rollouts(const DtSystem& sys, const ControlLaw& k, const BenchmarkDef& def,
                           const std::filesystem::path& path) {
  const auto starts =
      sample_initial_states(def.spec, def.rollouts.count, def.transfer.seed + 1);
  std::vector<Trajectory> rollouts;
  rollouts.reserve(starts.size());
  std::uint64_t unsafe = 0;
  for (const auto& x0 : starts) {
    rollouts.push_back(simulate(sys, k, x0, def.rollouts.horizon, def.spec));
    if (rollouts.back().entered_unsafe || rollouts.back().left_state_box) ++unsafe;
  }
  write_trajectories_csv(rollouts, path);
  return unsafe;
}

}  // namespace

RunOutcome full_run(const BenchmarkDef& def, const FullRunOptions& opts) {
  RunOutcome outcome;
  Summary summary;
  auto log = [&](const std::string& m) {
    if (opts.log) opts.log(m);
  };
  const auto& dir = opts.out_dir;
  try {
    std::filesystem::create_directories(dir);
    summary.put("benchmark", def.name);
    summary.put("scale", scale_name(def.scale));
    summary.put("seed", def.transfer.seed);

    outcome.stage = "verify-source";
    const SampleGrid grid = build_grid(def.source.state_box, def.epsilon());
    summary.put_real("epsilon", grid.epsilon());
    summary.put("grid.points", grid.size());
    summary.put_real("grid.cover_radius", cover_radius(grid));
    summary.put_real("barrier.lip", def.source_cbc.lip());
    summary.put_real("barrier.eta", def.source_cbc.eta());
    log("verifying source closed loop on " + std::to_string(grid.size()) + " grid points");
    outcome.source_verdict = verify_cbc_on_grid(def.source_cbc, def.source,
                                                 def.source_controller, def.spec, grid);
    summary.put_verdict("source", *outcome.source_verdict);
    write_verdict_csv(*outcome.source_verdict, dir / "source_verdict.csv");
    if (!outcome.source_verdict->all_ok()) {
      throw Fault("source barrier certificate fails on the grid (" +
                  std::to_string(outcome.source_verdict->total_violations()) + " violations)");
    }

    outcome.stage = "transfer";
    log("training inverse-dynamics controller");
    TransferResult tr = run_transfer(def.source, def.source_controller, def.source_cbc,
                                     def.target, grid, def.transfer, opts.on_round);
    tr.report.final_controller = "controller.bin";
    save_mlp(*tr.network, dir / "controller.bin");
    write_transfer_trace(tr.report, dir / "transfer_trace.csv");
    outcome.transfer = tr.report;
    const RoundRecord& last = tr.report.rounds.back();
    summary.put("transfer.converged", tr.report.converged ? "true" : "false");
    summary.put("transfer.rounds", tr.report.rounds.size());
    summary.put("transfer.iterations", tr.report.total_iterations);
    summary.put_real("transfer.mismatch", last.mismatch);
    summary.put_real("transfer.lip_khat", last.lip_khat);
    summary.put_real("transfer.lip_dagger", last.lip_dagger);
    summary.put_real("transfer.validity_lhs", last.validity_lhs);
    if (!tr.report.converged) {
      outcome.exit_code = kExitNotConverged;
      summary.put("safety_claim", "none");
      summary.put("exit_code", outcome.exit_code);
      summary.put("stage", outcome.stage);
      summary.write(dir / "summary.txt");
      return outcome;
    }

    outcome.stage = "certify-target";
    const BarrierCertificate inherited = inherited_certificate(def.source_cbc, last.validity_lhs);
    summary.put_real("target.eta", inherited.eta());
    outcome.target_verdict =
        verify_cbc_on_grid(inherited, def.target, tr.controller, def.spec, grid);
    summary.put_verdict("target", *outcome.target_verdict);
    write_verdict_csv(*outcome.target_verdict, dir / "target_verdict.csv");
    if (!outcome.target_verdict->all_ok()) {
      throw Fault("target closed loop fails certification despite the validity condition");
    }

    outcome.stage = "simulate";
    outcome.unsafe_rollouts = run_rollouts(def.target, tr.controller, def, dir / "rollouts.csv");
    outcome.baseline_unsafe_rollouts =
        run_rollouts(def.target, def.source_controller, def, dir / "baseline_rollouts.csv");
    summary.put("rollouts.count", def.rollouts.count);
    summary.put("rollouts.horizon", def.rollouts.horizon);
    summary.put("rollouts.unsafe", outcome.unsafe_rollouts);
    summary.put("baseline_rollouts.unsafe", outcome.baseline_unsafe_rollouts);
    if (outcome.unsafe_rollouts != 0) {
      throw Fault("certified controller produced an unsafe rollout");
    }

    outcome.stage = "report";
    SliceSpec slice = opts.slice;
    if (grid.dim() > 2 && slice.empty()) {
      // Default drone-style slice: positions free, velocities pinned at zero.
      for (int i = 1; i < grid.dim(); i += 2) slice[i] = 0.0;
    }
    const SampleGrid map_grid =
        safexfer::map_grid(def.source.state_box, opts.map_resolution, slice);
    const auto m1 = violation_map(def.source_cbc, def.source, def.source_controller, map_grid,
                                  slice, dir / "map_source.csv");
    const auto m2 = violation_map(def.source_cbc, def.target, def.source_controller, map_grid,
                                  slice, dir / "map_target_source_controller.csv");
    const auto m3 = violation_map(inherited, def.target, tr.controller, map_grid, slice,
                                  dir / "map_target_transferred.csv");
    summary.put("map.source.violations", m1.violations);
    summary.put("map.target_source_controller.violations", m2.violations);
    summary.put("map.target_transferred.violations", m3.violations);

    outcome.exit_code = kExitCertified;
    summary.put("safety_claim", "certified");
  } catch (const Fault& f) {
    outcome.exit_code = kExitFault;
    outcome.message = f.what();
    summary.put("fault", f.what());
  } catch (const std::exception& e) {
    outcome.exit_code = kExitFault;
    outcome.message = e.what();
    summary.put("fault", e.what());
  }
  summary.put("exit_code", outcome.exit_code);
  summary.put("stage", outcome.stage);
  try {
    summary.write(dir / "summary.txt");
  } catch (const std::exception& e) {
    if (outcome.message.empty()) outcome.message = e.what();
    outcome.exit_code = kExitFault;
  }
  return outcome;
}

}  // namespace safexfer
