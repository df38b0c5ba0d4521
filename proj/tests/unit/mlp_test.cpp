#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "safexfer/controllers.hpp"
#include "safexfer/mlp.hpp"
#include "safexfer/rng.hpp"

namespace sx = safexfer;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

sx::DenseLayer layer(MatrixXd w, VectorXd b) { return {std::move(w), std::move(b)}; }

VectorXd vec(std::initializer_list<double> v) {
  VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

VectorXd random_vector(sx::Rng& rng, int n, double r = 1.0) {
  VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = rng.uniform(-r, r);
  return v;
}

// Central-difference derivative of upstream . forward with respect to one
// parameter, perturbed in place.
double fd_param(sx::Mlp& net, double& param, const VectorXd& x, const VectorXd& up, double h) {
  const double saved = param;
  param = saved + h;
  const double fp = up.dot(sx::forward(net, x));
  param = saved - h;
  const double fm = up.dot(sx::forward(net, x));
  param = saved;
  return (fp - fm) / (2 * h);
}

}  // namespace

TEST(Forward, LinearOutputLayer) {
  const sx::Mlp net({layer(MatrixXd::Constant(1, 1, 2.0), VectorXd::Zero(1))});
  EXPECT_EQ(sx::forward(net, vec({3}))[0], 6.0);
}

TEST(Forward, ReluKillsNegativePreActivation) {
  const sx::Mlp net({layer(MatrixXd::Constant(1, 1, 1.0), vec({-1})),
                     layer(MatrixXd::Constant(1, 1, 1.0), VectorXd::Zero(1))});
  EXPECT_EQ(sx::forward(net, vec({0.5}))[0], 0.0);
  EXPECT_EQ(sx::forward(net, vec({3}))[0], 2.0);
}

TEST(Forward, ZeroNetworkOutputsZero) {
  const auto net = sx::Mlp::zeros({3, 5, 2});
  EXPECT_TRUE(sx::forward(net, vec({1, -2, 7})).isZero(0));
}

TEST(Forward, BatchMatchesSingle) {
  const auto net = sx::Mlp::he_uniform({3, 8, 8, 2}, 4);
  sx::Rng rng(1);
  MatrixXd xs(3, 20);
  for (int c = 0; c < 20; ++c) xs.col(c) = random_vector(rng, 3);
  const MatrixXd ys = sx::forward_batch(net, xs);
  // Matrix-matrix and matrix-vector products may round differently.
  for (int c = 0; c < 20; ++c) EXPECT_TRUE(ys.col(c).isApprox(sx::forward(net, xs.col(c)), 1e-14));
}

TEST(Forward, RejectsBadInput) {
  const auto net = sx::Mlp::he_uniform({2, 4, 1}, 0);
  EXPECT_THROW(sx::forward(net, vec({1})), sx::Fault);
  EXPECT_THROW(sx::forward(net, vec({NAN, 0})), sx::Fault);
}

TEST(Mlp, RejectsBrokenChains) {
  EXPECT_THROW(sx::Mlp({layer(MatrixXd::Zero(2, 3), VectorXd::Zero(2)),
                        layer(MatrixXd::Zero(1, 3), VectorXd::Zero(1))}),
               sx::Fault);
  EXPECT_THROW(sx::Mlp({layer(MatrixXd::Constant(1, 1, INFINITY), VectorXd::Zero(1))}),
               sx::Fault);
}

TEST(Backward, LinearCase) {
  const sx::Mlp net({layer(MatrixXd::Constant(1, 1, 2.0), VectorXd::Zero(1))});
  const auto g = sx::backward(net, vec({3}), vec({1}));
  EXPECT_EQ(g.layers[0].weights(0, 0), 3.0);
  EXPECT_EQ(g.layers[0].bias[0], 1.0);
}

TEST(Backward, MatchesFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto net = sx::Mlp::he_uniform({4, 16, 16, 2}, seed);
    sx::Rng rng(100 + seed);
    const VectorXd x = random_vector(rng, 4);
    const VectorXd up = random_vector(rng, 2);
    const auto g = sx::backward(net, x, up);
    for (std::size_t l = 0; l < net.layers().size(); ++l) {
      auto& L = net.mutable_layers()[l];
      for (Eigen::Index i = 0; i < L.weights.size(); ++i) {
        const double fd = fd_param(net, L.weights.data()[i], x, up, 1e-5);
        const double an = g.layers[l].weights.data()[i];
        ASSERT_LE(std::abs(an - fd), std::max(1e-6, 1e-4 * std::abs(fd))) << l << "," << i;
      }
      for (Eigen::Index i = 0; i < L.bias.size(); ++i) {
        const double fd = fd_param(net, L.bias[i], x, up, 1e-5);
        ASSERT_LE(std::abs(g.layers[l].bias[i] - fd), std::max(1e-6, 1e-4 * std::abs(fd)));
      }
    }
  }
}

TEST(Backward, DeadLayerGivesZeroGradient) {
  auto net = sx::Mlp::he_uniform({2, 6, 1}, 9);
  net.mutable_layers()[0].bias.setConstant(-100.0);
  const auto g = sx::backward(net, vec({0.1, 0.2}), vec({1}));
  EXPECT_TRUE(g.layers[0].weights.isZero(0));
  EXPECT_TRUE(g.layers[0].bias.isZero(0));
  EXPECT_TRUE(g.layers[1].weights.isZero(0));
  EXPECT_EQ(g.layers[1].bias[0], 1.0);
}

TEST(Backward, BatchIsSumOfSingles) {
  const auto net = sx::Mlp::he_uniform({2, 5, 3}, 2);
  sx::Rng rng(8);
  MatrixXd xs(2, 6), ups(3, 6);
  auto total = sx::ParameterGradients::zeros_like(net);
  for (int c = 0; c < 6; ++c) {
    xs.col(c) = random_vector(rng, 2);
    ups.col(c) = random_vector(rng, 3);
    total += sx::backward(net, xs.col(c), ups.col(c));
  }
  const auto batch = sx::backward_batch(net, xs, ups);
  for (std::size_t l = 0; l < total.layers.size(); ++l) {
    EXPECT_TRUE(batch.layers[l].weights.isApprox(total.layers[l].weights, 1e-12));
    EXPECT_TRUE(batch.layers[l].bias.isApprox(total.layers[l].bias, 1e-12));
  }
}

TEST(Adam, FirstStepOnScalar) {
  sx::Mlp net({layer(MatrixXd::Constant(1, 1, 1.0), VectorXd::Zero(1))});
  auto st = sx::AdamState::for_network(net, 1e-3);
  auto g = sx::ParameterGradients::zeros_like(net);
  g.layers[0].weights(0, 0) = 1.0;
  sx::adam_step(net, g, st);
  // m_hat = v_hat = 1, so the step is lr * 1 / (1 + 1e-8).
  EXPECT_NEAR(net.layers()[0].weights(0, 0), 1.0 - 1e-3 / (1.0 + 1e-8), 1e-15);
  EXPECT_NEAR(net.layers()[0].weights(0, 0), 0.999, 1e-10);
  EXPECT_EQ(st.step_count, 1u);
}

TEST(Adam, ZeroGradientLeavesParameters) {
  auto net = sx::Mlp::he_uniform({2, 4, 1}, 1);
  const auto before = net;
  auto st = sx::AdamState::for_network(net, 1e-3);
  sx::adam_step(net, sx::ParameterGradients::zeros_like(net), st);
  EXPECT_EQ(st.step_count, 1u);
  for (std::size_t l = 0; l < net.layers().size(); ++l) {
    EXPECT_EQ(net.layers()[l].weights, before.layers()[l].weights);
    EXPECT_EQ(net.layers()[l].bias, before.layers()[l].bias);
  }
}

TEST(Adam, DeterministicRuns) {
  auto run = [] {
    auto net = sx::Mlp::he_uniform({2, 8, 1}, 21);
    auto st = sx::AdamState::for_network(net, 1e-2);
    sx::Rng rng(3);
    for (int i = 0; i < 50; ++i) {
      const VectorXd x = random_vector(rng, 2);
      sx::adam_step(net, sx::backward(net, x, sx::forward(net, x)), st);
    }
    std::ostringstream out;
    sx::serialize(net, out);
    return out.str();
  };
  EXPECT_EQ(run(), run());
}

TEST(LipschitzBound, Examples) {
  EXPECT_EQ(sx::lipschitz_upper_bound(
                sx::Mlp({layer(MatrixXd::Constant(1, 1, 2.0), VectorXd::Zero(1))})),
            2.0);
  MatrixXd w1(2, 2), w2(1, 2);
  w1 << 1, -1, 0.5, 0.5;  // row sums 2, 1
  w2 << 1, -2;            // row sum 3
  EXPECT_EQ(sx::lipschitz_upper_bound(
                sx::Mlp({layer(w1, VectorXd::Zero(2)), layer(w2, VectorXd::Zero(1))})),
            6.0);
}

TEST(LipschitzBound, DominatesSampledQuotients) {
  const auto net = std::make_shared<const sx::Mlp>(sx::Mlp::he_uniform({3, 16, 16, 2}, 13));
  const double bound = sx::lipschitz_upper_bound(*net);
  const sx::Box u(sx::Vec::Constant(2, -0.3), sx::Vec::Constant(2, 0.3));
  const auto clamped = sx::make_neural_controller(net, u);
  EXPECT_EQ(*clamped.lip, bound);
  sx::Rng rng(77);
  for (int i = 0; i < 10000; ++i) {
    const VectorXd x = random_vector(rng, 3, 2.0);
    const VectorXd y = i % 2 ? VectorXd(x + random_vector(rng, 3, 1e-3)) : random_vector(rng, 3, 2.0);
    const double dx = (x - y).lpNorm<Eigen::Infinity>();
    const double q = (sx::forward(*net, x) - sx::forward(*net, y)).lpNorm<Eigen::Infinity>() / dx;
    ASSERT_LE(q, bound * (1 + 1e-12));
    const double qc = sx::inf_norm(clamped(sx::Vec(x)) - clamped(sx::Vec(y))) / dx;
    ASSERT_LE(qc, bound * (1 + 1e-12));
  }
}

TEST(LipschitzBound, SubgradientMatchesFiniteDifference) {
  auto net = sx::Mlp::he_uniform({2, 5, 4, 1}, 31);
  const auto g = sx::lipschitz_bound_subgradient(net);
  for (std::size_t l = 0; l < net.layers().size(); ++l) {
    auto& w = net.mutable_layers()[l].weights;
    for (Eigen::Index i = 0; i < w.size(); ++i) {
      const double saved = w.data()[i];
      const double h = 1e-7;
      w.data()[i] = saved + h;
      const double up = sx::lipschitz_upper_bound(net);
      w.data()[i] = saved - h;
      const double dn = sx::lipschitz_upper_bound(net);
      w.data()[i] = saved;
      // Away from ties the bound is smooth in each weight.
      EXPECT_NEAR(g.layers[l].weights.data()[i], (up - dn) / (2 * h), 1e-5);
    }
    EXPECT_TRUE(g.layers[l].bias.isZero(0));
  }
}

TEST(ReluNetwork, PiecewiseLinearWithinActivationPattern) {
  const auto net = sx::Mlp::he_uniform({2, 16, 16, 1}, 42);
  sx::Rng rng(6);
  int tested = 0;
  for (int i = 0; i < 200; ++i) {
    const VectorXd x = random_vector(rng, 2);
    const VectorXd d = random_vector(rng, 2, 1e-6);
    // Same activation pattern at x, x+d and x+2d (checked via the gradient).
    const auto g0 = sx::backward(net, x, vec({1}));
    const auto g1 = sx::backward(net, x + d, vec({1}));
    const auto g2 = sx::backward(net, x + 2 * d, vec({1}));
    auto mask = [](const sx::ParameterGradients& g) {
      std::vector<bool> m;
      for (const auto& l : g.layers)
        for (Eigen::Index j = 0; j < l.bias.size(); ++j) m.push_back(l.bias[j] != 0.0);
      return m;
    };
    if (mask(g0) != mask(g1) || mask(g1) != mask(g2)) continue;
    const double f0 = sx::forward(net, x)[0];
    const double f1 = sx::forward(net, x + d)[0];
    const double f2 = sx::forward(net, x + 2 * d)[0];
    EXPECT_NEAR(f2 - f1, f1 - f0, 1e-12);
    ++tested;
  }
  EXPECT_GT(tested, 150);
}

TEST(Serialize, RoundTripLargeNetwork) {
  const auto net = sx::Mlp::he_uniform({4, 200, 200, 200, 200, 1}, 5);
  std::stringstream buf;
  sx::serialize(net, buf);
  const auto back = sx::deserialize(buf);
  EXPECT_EQ(back.dims(), net.dims());
  sx::Rng rng(9);
  for (int i = 0; i < 100; ++i) {
    const VectorXd x = random_vector(rng, 4);
    EXPECT_EQ(sx::forward(back, x), sx::forward(net, x));
  }
}

TEST(Serialize, FileRoundTripIsBitExact) {
  const auto net = sx::Mlp::he_uniform({2, 7, 1}, 12);
  const auto path = std::filesystem::temp_directory_path() / "safexfer_mlp_roundtrip.bin";
  sx::save_mlp(net, path);
  const auto back = sx::load_mlp(path);
  for (std::size_t l = 0; l < net.layers().size(); ++l) {
    EXPECT_EQ(back.layers()[l].weights, net.layers()[l].weights);
    EXPECT_EQ(back.layers()[l].bias, net.layers()[l].bias);
  }
  std::filesystem::remove(path);
}

TEST(Serialize, Faults) {
  const auto net = sx::Mlp::he_uniform({2, 7, 1}, 12);
  std::stringstream buf;
  sx::serialize(net, buf);
  const std::string bytes = buf.str();

  std::stringstream truncated(bytes.substr(0, bytes.size() - 3));
  EXPECT_THROW(sx::deserialize(truncated), sx::Fault);

  std::string bad_magic = bytes;
  bad_magic[0] = 'X';
  std::stringstream m(bad_magic);
  EXPECT_THROW(sx::deserialize(m), sx::Fault);

  std::string bad_version = bytes;
  bad_version[8] = 9;
  std::stringstream v(bad_version);
  EXPECT_THROW(sx::deserialize(v), sx::Fault);

  std::stringstream trailing(bytes + "x");
  EXPECT_THROW(sx::deserialize(trailing), sx::Fault);

  std::stringstream out;
  EXPECT_THROW(sx::serialize(sx::Mlp(), out), sx::Fault);
  EXPECT_THROW(sx::load_mlp("/nonexistent/controller.bin"), sx::Fault);
}
