#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <vector>

#include <Eigen/Core>

#include "safexfer/certify.hpp"
#include "safexfer/grid.hpp"
#include "safexfer/mlp.hpp"
#include "safexfer/model.hpp"

namespace safexfer {

struct TransferConfig {
  std::vector<int> hidden = {200, 200, 200, 200};
  int max_outer_rounds = 10;
  int inner_iterations_per_round = 1000;
  int batch_size = 1024;
  double learning_rate = 5e-6;
  // Learning rate is multiplied by lr_decay after every lr_decay_every
  // training rounds (0 disables the schedule).
  double lr_decay = 1.0;
  int lr_decay_every = 0;
  double lipschitz_penalty = 0.0;
  double init_scale = 1.0;
  // Finite-difference step for the target's input sensitivity, relative to
  // the width of each input axis.
  double fd_step = 1e-6;
  std::uint64_t seed = 0;
};

struct RoundRecord {
  int round;
  std::uint64_t iterations;  // Adam steps taken before this evaluation
  double learning_rate;
  double loss;               // full-grid training loss
  double mismatch;           // E
  double lip_khat;
  double lip_dagger;
  double validity_lhs;
};

struct TransferReport {
  std::vector<RoundRecord> rounds;
  bool converged = false;
  std::uint64_t total_iterations = 0;
  std::filesystem::path final_controller;
};

struct LossAndGradient {
  double loss;
  ParameterGradients grads;
};

// L = 1/(2N) sum ||f(x, k(x)) - g(x, clamp(net(x)))||^2 over the batch
// columns, with its gradient in the network parameters. The target is a black
// box, so its input sensitivity comes from central differences (one-sided at
// the input bounds); clamped outputs contribute no gradient.
LossAndGradient training_loss(const DtSystem& src, const ControlLaw& k, const DtSystem& tgt,
                              const Mlp& net, const Eigen::MatrixXd& batch,
                              double fd_step = 1e-6);

double resolve_lip_dagger(double lx, double lu, double lk, double lx_hat, double lu_hat,
                          double lk_hat);

struct TransferResult {
  TransferReport report;
  std::shared_ptr<const Mlp> network;
  ControlLaw controller;
};

using RoundCallback = std::function<void(const RoundRecord&)>;

// Trains the inverse-dynamics controller until the validity condition holds
// with values computed after the most recent update, or the round budget is
// spent. Round 0 evaluates the untrained network.
TransferResult run_transfer(const DtSystem& src, const ControlLaw& k,
                            const BarrierCertificate& b, const DtSystem& tgt,
                            const SampleGrid& g, const TransferConfig& cfg,
                            const RoundCallback& on_round = {});

void write_transfer_trace(const TransferReport& report, const std::filesystem::path& path);

}  // namespace safexfer
