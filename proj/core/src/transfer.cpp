#include "safexfer/transfer.hpp"

#include <cmath>
#include <limits>

#include "safexfer/controllers.hpp"
#include "safexfer/csv.hpp"
#include "safexfer/rng.hpp"

namespace safexfer {

LossAndGradient training_loss(const DtSystem& src, const ControlLaw& k, const DtSystem& tgt,
                              const Mlp& net, const Eigen::MatrixXd& batch, double fd_step) {
  const Eigen::Index n = batch.cols();
  if (n == 0) throw Fault("training_loss: empty batch");
  const Box& ub = tgt.input_box;
  const int m = ub.dim();
  if (net.output_dim() != m) throw Fault("training_loss: network output does not match inputs");

  const Eigen::MatrixXd raw = forward_batch(net, batch);
  const Eigen::MatrixXd ref_u = k.evaluate_batch(batch);
  Eigen::MatrixXd upstream(m, n);
  double total = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    const Vec x = batch.col(j);
    const Vec u_raw = raw.col(j);
    const Vec u = clamp_to_box(ub, u_raw);
    const Vec residual = tgt.step(x, u) - src.step(x, ref_u.col(j));
    total += residual.squaredNorm();
    // d/du of 1/2 |residual|^2 is J^T residual, J the target's input Jacobian.
    for (int a = 0; a < m; ++a) {
      const bool inside = u_raw[a] >= ub.lower(a) && u_raw[a] <= ub.upper(a);
      if (!inside) {
        upstream(a, j) = 0.0;
        continue;
      }
      const double h = fd_step * ub.width(a);
      Vec up = u;
      Vec dn = u;
      up[a] = std::min(u[a] + h, ub.upper(a));
      dn[a] = std::max(u[a] - h, ub.lower(a));
      const double span = up[a] - dn[a];
      if (!(span > 0.0)) {
        upstream(a, j) = 0.0;
        continue;
      }
      const Vec column = (tgt.step(x, up) - tgt.step(x, dn)) / span;
      upstream(a, j) = column.dot(residual);
    }
  }
  const double scale = 1.0 / static_cast<double>(n);
  const double loss = 0.5 * total * scale;
  if (!std::isfinite(loss)) throw Fault("training_loss: non-finite loss");
  upstream *= scale;
  return {loss, backward_batch(net, batch, upstream)};
}

double resolve_lip_dagger(double lx, double lu, double lk, double lx_hat, double lu_hat,
                          double lk_hat) {
  if (lx < 0 || lu < 0 || lk < 0 || lx_hat < 0 || lu_hat < 0 || lk_hat < 0) {
    throw Fault("resolve_lip_dagger: Lipschitz constants must be non-negative");
  }
  return lx + lu * lk + lx_hat + lu_hat * lk_hat;
}

namespace {

void validate(const TransferConfig& cfg) {
  if (cfg.max_outer_rounds < 0 || cfg.inner_iterations_per_round < 1 || cfg.batch_size < 1 ||
      !(cfg.learning_rate > 0.0) || !(cfg.lr_decay > 0.0) || cfg.lr_decay_every < 0 ||
      cfg.lipschitz_penalty < 0.0 || !(cfg.fd_step > 0.0) || !(cfg.init_scale > 0.0)) {
    throw Fault("TransferConfig: invalid setting");
  }
  for (int h : cfg.hidden) {
    if (h < 1) throw Fault("TransferConfig: hidden layer widths must be positive");
  }
}

double learning_rate_for(const TransferConfig& cfg, int round) {
  if (cfg.lr_decay_every <= 0) return cfg.learning_rate;
  return cfg.learning_rate * std::pow(cfg.lr_decay, (round - 1) / cfg.lr_decay_every);
}

}  // namespace

TransferResult run_transfer(const DtSystem& src, const ControlLaw& k,
                            const BarrierCertificate& b, const DtSystem& tgt,
                            const SampleGrid& g, const TransferConfig& cfg,
                            const RoundCallback& on_round) {
  validate(cfg);
  if (!tgt.lip_state || !tgt.lip_input) throw Fault("run_transfer: target Lipschitz data missing");
  if (g.size() > std::numeric_limits<std::uint32_t>::max()) {
    throw Fault("run_transfer: grid too large for mini-batch indexing");
  }
  const double lip_src = closed_loop_lipschitz(src, k);

  std::vector<int> dims{g.dim()};
  dims.insert(dims.end(), cfg.hidden.begin(), cfg.hidden.end());
  dims.push_back(tgt.input_box.dim());
  auto net = std::make_shared<Mlp>(Mlp::he_uniform(dims, cfg.seed, cfg.init_scale));
  AdamState adam = AdamState::for_network(*net, cfg.learning_rate);

  Rng rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::uint32_t> order(g.size());
  for (std::uint32_t i = 0; i < order.size(); ++i) order[i] = i;
  std::size_t cursor = order.size();  // forces a shuffle on first use

  const auto batch = static_cast<std::size_t>(std::min<std::uint64_t>(cfg.batch_size, g.size()));
  Eigen::MatrixXd xs(g.dim(), static_cast<Eigen::Index>(batch));

  TransferReport report;
  for (int round = 0;; ++round) {
    if (round > 0) {
      adam.learning_rate = learning_rate_for(cfg, round);
      for (int it = 0; it < cfg.inner_iterations_per_round; ++it) {
        for (std::size_t j = 0; j < batch; ++j) {
          if (cursor == order.size()) {
            rng.shuffle(order);
            cursor = 0;
          }
          xs.col(static_cast<Eigen::Index>(j)) = g.point(order[cursor++]);
        }
        LossAndGradient lg = training_loss(src, k, tgt, *net, xs, cfg.fd_step);
        if (cfg.lipschitz_penalty > 0.0) {
          ParameterGradients pen = lipschitz_bound_subgradient(*net);
          pen *= cfg.lipschitz_penalty;
          lg.grads += pen;
        }
        adam_step(*net, lg.grads, adam);
        ++report.total_iterations;
      }
    }
    // Fresh values after the last update, every round.
    const ControlLaw k_hat = make_neural_controller(net, tgt.input_box);
    const GapStats gap = closed_loop_gap(src, k, tgt, k_hat, g);
    const double lip_khat = *k_hat.lip;
    const double lip_dagger = lip_src + resolve_lip_dagger(0, 0, 0, *tgt.lip_state,
                                                           *tgt.lip_input, lip_khat);
    const ValidityResult v =
        check_validity({b.lip(), b.eta(), g.epsilon(), gap.max_gap, lip_dagger});
    RoundRecord rec{round,    report.total_iterations, round > 0 ? adam.learning_rate : 0.0,
                    gap.half_mean_sq, gap.max_gap,     lip_khat,
                    lip_dagger, v.lhs};
    report.rounds.push_back(rec);
    if (on_round) on_round(rec);
    if (v.valid) {
      report.converged = true;
      return {report, net, k_hat};
    }
    if (round >= cfg.max_outer_rounds) return {report, net, k_hat};
  }
}

void write_transfer_trace(const TransferReport& report, const std::filesystem::path& path) {
  CsvWriter csv(path, {"round", "iterations", "learning_rate", "loss", "mismatch", "lip_khat",
                       "lip_dagger", "validity_lhs"});
  for (const auto& r : report.rounds) {
    csv.add(static_cast<long long>(r.round))
        .add(static_cast<long long>(r.iterations))
        .add(r.learning_rate)
        .add(r.loss)
        .add(r.mismatch)
        .add(r.lip_khat)
        .add(r.lip_dagger)
        .add(r.validity_lhs);
    csv.end_row();
  }
}

}  // namespace safexfer
