#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>

#include "safexfer/case_studies.hpp"
#include "safexfer/certify.hpp"
#include "safexfer/simulate.hpp"
#include "safexfer/transfer.hpp"

namespace safexfer {

// Process exit codes of a pipeline run.
inline constexpr int kExitCertified = 0;
inline constexpr int kExitFault = 1;
inline constexpr int kExitNotConverged = 2;

struct RunOverrides {
  std::optional<double> epsilon;
  std::optional<double> learning_rate;
  std::optional<int> max_rounds;
  std::optional<std::uint64_t> seed;
};

// Applies the overrides in place; the seed drives both training and rollouts.
void apply_overrides(BenchmarkDef& def, const RunOverrides& o);

struct RunOutcome {
  int exit_code = kExitFault;
  std::string stage;    // last stage entered
  std::string message;  // fault text, empty on success
  std::optional<CertificationVerdict> source_verdict;
  std::optional<TransferReport> transfer;
  std::optional<CertificationVerdict> target_verdict;
  std::uint64_t unsafe_rollouts = 0;
  std::uint64_t baseline_unsafe_rollouts = 0;
};

using LogFn = std::function<void(const std::string&)>;

struct FullRunOptions {
  std::filesystem::path out_dir;
  // Cells per free axis of the emitted violation maps.
  int map_resolution = 200;
  SliceSpec slice;  // used when the state has more than two axes
  LogFn log;
  RoundCallback on_round;
};

// verify-source -> transfer -> certify-target -> simulate -> report. Writes
// the bundle into out_dir:
//   summary.txt, source_verdict.csv, transfer_trace.csv, controller.bin,
//   target_verdict.csv, rollouts.csv, baseline_rollouts.csv,
//   map_source.csv, map_target_source_controller.csv, map_target_transferred.csv
// Faults are caught and reported through the outcome with their stage.
RunOutcome full_run(const BenchmarkDef& def, const FullRunOptions& opts);

// The certificate the target closed loop inherits from a converged transfer:
// the source barrier with its margin reduced to -validity_lhs.
BarrierCertificate inherited_certificate(const BarrierCertificate& source, double validity_lhs);

}  // namespace safexfer
