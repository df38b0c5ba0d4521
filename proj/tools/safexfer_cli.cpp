// Command-line front end: verify-source, transfer, simulate, violation-map,
// full-run.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "safexfer/case_studies.hpp"
#include "safexfer/parallel.hpp"
#include "safexfer/certify.hpp"
#include "safexfer/controllers.hpp"
#include "safexfer/csv.hpp"
#include "safexfer/pipeline.hpp"
#include "safexfer/simulate.hpp"
#include "safexfer/transfer.hpp"

namespace fs = std::filesystem;
using namespace safexfer;

namespace {

struct Options {
  std::string benchmark;
  std::string config;
  std::string scale = "desk";
  std::optional<std::uint64_t> seed;
  std::string out = "out";
  std::optional<double> epsilon;
  std::optional<double> lr;
  std::optional<int> max_rounds;
  std::vector<std::string> slices;
  std::string system = "target";
  std::string controller;
  int map_resolution = 200;
  unsigned threads = 0;
};

BenchmarkDef load(const Options& o) {
  const Scale scale = parse_scale(o.scale);
  if (o.benchmark.empty() == o.config.empty()) {
    throw Fault("give exactly one of --benchmark or --config");
  }
  BenchmarkDef def =
      o.config.empty() ? load_benchmark(o.benchmark, scale) : load_benchmark_file(o.config, scale);
  apply_overrides(def, {o.epsilon, o.lr, o.max_rounds, o.seed});
  return def;
}

SliceSpec slices(const Options& o) {
  SliceSpec s;
  for (const auto& text : o.slices) s.insert(parse_slice(text));
  return s;
}

void log_round(const RoundRecord& r) {
  spdlog::info("round {:>3}  iters {:>6}  loss {:.3e}  E {:.3e}  Lk^ {:.3g}  L+ {:.4g}  lhs {:+.4e}",
               r.round, r.iterations, r.loss, r.mismatch, r.lip_khat, r.lip_dagger,
               r.validity_lhs);
}

// The controller under study: a trained network when --controller is given,
// the shipped source controller otherwise.
ControlLaw pick_controller(const Options& o, const BenchmarkDef& def, const DtSystem& sys) {
  if (o.controller.empty()) return def.source_controller;
  auto net = std::make_shared<const Mlp>(load_mlp(o.controller));
  return make_neural_controller(net, sys.input_box);
}

const DtSystem& pick_system(const Options& o, const BenchmarkDef& def) {
  if (o.system == "source") return def.source;
  if (o.system == "target") return def.target;
  throw Fault("--system must be source or target");
}

int verify_source(const Options& o) {
  const BenchmarkDef def = load(o);
  fs::create_directories(o.out);
  const SampleGrid grid = build_grid(def.source.state_box, def.epsilon());
  spdlog::info("{} ({}): epsilon {} -> {} grid points", def.name, scale_name(def.scale),
               def.epsilon(), grid.size());
  const auto verdict =
      verify_cbc_on_grid(def.source_cbc, def.source, def.source_controller, def.spec, grid);
  write_verdict_csv(verdict, fs::path(o.out) / "source_verdict.csv");
  write_verdict_summary(verdict, std::cout);
  return verdict.all_ok() ? kExitCertified : kExitFault;
}

int transfer(const Options& o) {
  const BenchmarkDef def = load(o);
  fs::create_directories(o.out);
  const SampleGrid grid = build_grid(def.source.state_box, def.epsilon());
  const auto verdict =
      verify_cbc_on_grid(def.source_cbc, def.source, def.source_controller, def.spec, grid);
  if (!verdict.all_ok()) {
    write_verdict_summary(verdict, std::cerr);
    throw Fault("source barrier certificate fails on the grid", "verify-source");
  }
  const TransferResult tr = run_transfer(def.source, def.source_controller, def.source_cbc,
                                         def.target, grid, def.transfer, log_round);
  save_mlp(*tr.network, fs::path(o.out) / "controller.bin");
  write_transfer_trace(tr.report, fs::path(o.out) / "transfer_trace.csv");
  std::cout << "converged = " << (tr.report.converged ? "true" : "false") << '\n'
            << "iterations = " << tr.report.total_iterations << '\n';
  return tr.report.converged ? kExitCertified : kExitNotConverged;
}

int simulate_cmd(const Options& o) {
  const BenchmarkDef def = load(o);
  fs::create_directories(o.out);
  const DtSystem& sys = pick_system(o, def);
  const ControlLaw k = pick_controller(o, def, sys);
  const auto starts = sample_initial_states(def.spec, def.rollouts.count, def.transfer.seed + 1);
  std::vector<Trajectory> rollouts;
  int unsafe = 0;
  for (const auto& x0 : starts) {
    rollouts.push_back(simulate(sys, k, x0, def.rollouts.horizon, def.spec));
    if (rollouts.back().entered_unsafe || rollouts.back().left_state_box) ++unsafe;
  }
  write_trajectories_csv(rollouts, fs::path(o.out) / "rollouts.csv");
  std::cout << "rollouts = " << rollouts.size() << "\nunsafe = " << unsafe << '\n';
  return kExitCertified;
}

int violation_map_cmd(const Options& o) {
  const BenchmarkDef def = load(o);
  fs::create_directories(o.out);
  const DtSystem& sys = pick_system(o, def);
  const ControlLaw k = pick_controller(o, def, sys);
  const SliceSpec slice = slices(o);
  const auto stats = violation_map(def.source_cbc, sys, k,
                                   map_grid(sys.state_box, o.map_resolution, slice), slice,
                                   fs::path(o.out) / "violation_map.csv");
  std::cout << "rows = " << stats.rows << "\nviolations = " << stats.violations << '\n';
  return kExitCertified;
}

int full_run_cmd(const Options& o) {
  const BenchmarkDef def = load(o);
  FullRunOptions opts;
  opts.out_dir = o.out;
  opts.map_resolution = o.map_resolution;
  opts.slice = slices(o);
  opts.log = [](const std::string& m) { spdlog::info("{}", m); };
  opts.on_round = log_round;
  const RunOutcome r = full_run(def, opts);
  if (r.exit_code == kExitFault) {
    spdlog::error("[{}] {}", r.stage, r.message);
  } else if (r.exit_code == kExitNotConverged) {
    spdlog::warn("transfer did not converge; no safety claim");
  } else {
    spdlog::info("certified; {} of {} rollouts unsafe", r.unsafe_rollouts, def.rollouts.count);
  }
  return r.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Safety-controller transfer through a learned inverse-dynamics controller"};
  app.require_subcommand(1);
  Options o;

  auto common = [&o](CLI::App* sub) {
    sub->add_option("--benchmark", o.benchmark, "Shipped benchmark: pendulum, dc-motor, quadrotor");
    sub->add_option("--config", o.config, "Benchmark JSON file");
    sub->add_option("--scale", o.scale, "paper or desk")->check(CLI::IsMember({"paper", "desk"}));
    sub->add_option("--seed", o.seed, "Seed for training and rollouts");
    sub->add_option("--out", o.out, "Output directory");
    sub->add_option("--epsilon", o.epsilon, "Grid parameter override");
    sub->add_option("--lr", o.lr, "Learning-rate override");
    sub->add_option("--max-rounds", o.max_rounds, "Outer-round budget override");
    sub->add_option("--threads", o.threads, "Worker threads for grid sweeps (0 = all cores)");
  };
  auto with_system = [&o](CLI::App* sub) {
    sub->add_option("--system", o.system, "source or target")->check(CLI::IsMember({"source", "target"}));
    sub->add_option("--controller", o.controller, "Trained controller file (default: source controller)");
  };
  auto with_map = [&o](CLI::App* sub) {
    sub->add_option("--slice", o.slices, "Pin an axis for maps of 4-D systems, e.g. 1=0");
    sub->add_option("--map-resolution", o.map_resolution, "Cells per map axis");
  };

  auto* verify = app.add_subcommand("verify-source", "Grid-verify the source certificate");
  common(verify);
  auto* train = app.add_subcommand("transfer", "Train the target controller");
  common(train);
  auto* sim = app.add_subcommand("simulate", "Roll out a closed loop from the initial set");
  common(sim);
  with_system(sim);
  auto* map = app.add_subcommand("violation-map", "Emit a decrease-condition map as CSV");
  common(map);
  with_system(map);
  with_map(map);
  auto* full = app.add_subcommand("full-run", "Verify, transfer, certify, simulate, report");
  common(full);
  with_map(full);

  CLI11_PARSE(app, argc, argv);
  spdlog::set_pattern("[%H:%M:%S] %v");
  set_worker_threads(o.threads);
  try {
    if (verify->parsed()) return verify_source(o);
    if (train->parsed()) return transfer(o);
    if (sim->parsed()) return simulate_cmd(o);
    if (map->parsed()) return violation_map_cmd(o);
    if (full->parsed()) return full_run_cmd(o);
  } catch (const Fault& f) {
    spdlog::error("{}{}", f.stage().empty() ? "" : "[" + f.stage() + "] ", f.what());
    return kExitFault;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitFault;
  }
  return kExitFault;
}
