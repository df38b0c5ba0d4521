#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include <Eigen/Core>

#include "safexfer/types.hpp"

namespace safexfer {

struct DenseLayer {
  Eigen::MatrixXd weights;  // out x in
  Eigen::VectorXd bias;     // out
};

// Fully connected network: ReLU on hidden layers, identity on the output.
class Mlp {
 public:
  Mlp() = default;
  explicit Mlp(std::vector<DenseLayer> layers);

  // dims = {input, hidden..., output}.
  static Mlp zeros(const std::vector<int>& dims);
  // Weights and biases uniform in +-scale*sqrt(6/fan_in).
  static Mlp he_uniform(const std::vector<int>& dims, std::uint64_t seed,
                        double scale = 1.0);

  int input_dim() const;
  int output_dim() const;
  std::vector<int> dims() const;
  std::size_t parameter_count() const;
  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& mutable_layers() { return layers_; }

 private:
  std::vector<DenseLayer> layers_;
};

// Same shape as the network parameters.
struct ParameterGradients {
  std::vector<DenseLayer> layers;

  static ParameterGradients zeros_like(const Mlp& net);
  ParameterGradients& operator+=(const ParameterGradients& other);
  ParameterGradients& operator*=(double s);
  double squared_norm() const;
};

Eigen::VectorXd forward(const Mlp& net, const Eigen::VectorXd& x);
// States are columns; returns one output column per input column.
Eigen::MatrixXd forward_batch(const Mlp& net, const Eigen::MatrixXd& xs);

// Gradient of upstream . forward(net, x) with respect to every parameter.
ParameterGradients backward(const Mlp& net, const Eigen::VectorXd& x,
                            const Eigen::VectorXd& upstream);
// Sum of per-column gradients.
ParameterGradients backward_batch(const Mlp& net, const Eigen::MatrixXd& xs,
                                  const Eigen::MatrixXd& upstream);

struct AdamState {
  std::vector<DenseLayer> first_moment;
  std::vector<DenseLayer> second_moment;
  std::uint64_t step_count = 0;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps_stab = 1e-8;

  static AdamState for_network(const Mlp& net, double learning_rate);
};

void adam_step(Mlp& net, const ParameterGradients& grads, AdamState& st);

// Product over layers of the max absolute row sum of W: a sound infinity-norm
// Lipschitz bound for ReLU networks.
double lipschitz_upper_bound(const Mlp& net);
// A subgradient of lipschitz_upper_bound with respect to the weights (bias
// entries are zero). Ties between rows resolve to the lowest row index.
ParameterGradients lipschitz_bound_subgradient(const Mlp& net);

void serialize(const Mlp& net, std::ostream& out);
Mlp deserialize(std::istream& in);
void save_mlp(const Mlp& net, const std::filesystem::path& path);
Mlp load_mlp(const std::filesystem::path& path);

}  // namespace safexfer
