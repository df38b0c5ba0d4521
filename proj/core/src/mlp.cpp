#include "safexfer/mlp.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "safexfer/rng.hpp"

namespace safexfer {

namespace {

void check_finite(const Eigen::MatrixXd& m, std::size_t layer, const char* what) {
  if (!m.allFinite()) {
    throw Fault(std::string(what) + ": non-finite value at layer " + std::to_string(layer));
  }
}

}  // namespace

Mlp::Mlp(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) throw Fault("Mlp: empty layer list");
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& l = layers_[i];
    if (l.weights.rows() < 1 || l.weights.cols() < 1 || l.bias.size() != l.weights.rows()) {
      throw Fault("Mlp: malformed layer " + std::to_string(i));
    }
    if (i > 0 && l.weights.cols() != layers_[i - 1].weights.rows()) {
      throw Fault("Mlp: layer " + std::to_string(i) + " does not chain");
    }
    check_finite(l.weights, i, "Mlp");
    check_finite(l.bias, i, "Mlp");
  }
}

Mlp Mlp::zeros(const std::vector<int>& dims) {
  if (dims.size() < 2) throw Fault("Mlp: need at least input and output dims");
  std::vector<DenseLayer> layers;
  for (std::size_t i = 1; i < dims.size(); ++i) {
    layers.push_back({Eigen::MatrixXd::Zero(dims[i], dims[i - 1]),
                      Eigen::VectorXd::Zero(dims[i])});
  }
  return Mlp(std::move(layers));
}

Mlp Mlp::he_uniform(const std::vector<int>& dims, std::uint64_t seed, double scale) {
  Mlp net = zeros(dims);
  Rng rng(seed);
  for (auto& l : net.layers_) {
    const double a = scale * std::sqrt(6.0 / static_cast<double>(l.weights.cols()));
    for (Eigen::Index r = 0; r < l.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weights.cols(); ++c) l.weights(r, c) = rng.uniform(-a, a);
    }
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) l.bias(r) = rng.uniform(-a, a);
  }
  return net;
}

int Mlp::input_dim() const {
  return layers_.empty() ? 0 : static_cast<int>(layers_.front().weights.cols());
}

int Mlp::output_dim() const {
  return layers_.empty() ? 0 : static_cast<int>(layers_.back().weights.rows());
}

std::vector<int> Mlp::dims() const {
  std::vector<int> d;
  if (layers_.empty()) return d;
  d.push_back(input_dim());
  for (const auto& l : layers_) d.push_back(static_cast<int>(l.weights.rows()));
  return d;
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l.weights.size() + l.bias.size();
  return n;
}

ParameterGradients ParameterGradients::zeros_like(const Mlp& net) {
  ParameterGradients g;
  for (const auto& l : net.layers()) {
    g.layers.push_back({Eigen::MatrixXd::Zero(l.weights.rows(), l.weights.cols()),
                        Eigen::VectorXd::Zero(l.bias.size())});
  }
  return g;
}

ParameterGradients& ParameterGradients::operator+=(const ParameterGradients& other) {
  if (other.layers.size() != layers.size()) throw Fault("ParameterGradients: shape mismatch");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    layers[i].weights += other.layers[i].weights;
    layers[i].bias += other.layers[i].bias;
  }
  return *this;
}

ParameterGradients& ParameterGradients::operator*=(double s) {
  for (auto& l : layers) {
    l.weights *= s;
    l.bias *= s;
  }
  return *this;
}

double ParameterGradients::squared_norm() const {
  double s = 0.0;
  for (const auto& l : layers) s += l.weights.squaredNorm() + l.bias.squaredNorm();
  return s;
}

Eigen::MatrixXd forward_batch(const Mlp& net, const Eigen::MatrixXd& xs) {
  if (xs.rows() != net.input_dim()) throw Fault("forward: input dimension mismatch");
  check_finite(xs, 0, "forward input");
  const auto& layers = net.layers();
  Eigen::MatrixXd a = xs;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    Eigen::MatrixXd z = layers[i].weights * a;
    z.colwise() += layers[i].bias;
    if (i + 1 < layers.size()) z = z.cwiseMax(0.0);
    check_finite(z, i, "forward");
    a = std::move(z);
  }
  return a;
}

Eigen::VectorXd forward(const Mlp& net, const Eigen::VectorXd& x) {
  return forward_batch(net, x);
}

ParameterGradients backward_batch(const Mlp& net, const Eigen::MatrixXd& xs,
                                  const Eigen::MatrixXd& upstream) {
  const auto& layers = net.layers();
  if (xs.rows() != net.input_dim()) throw Fault("backward: input dimension mismatch");
  if (upstream.rows() != net.output_dim() || upstream.cols() != xs.cols()) {
    throw Fault("backward: upstream shape mismatch");
  }
  // Keep every layer's activation for the reverse sweep.
  std::vector<Eigen::MatrixXd> acts;
  acts.reserve(layers.size());
  acts.push_back(xs);
  for (std::size_t i = 0; i + 1 < layers.size(); ++i) {
    Eigen::MatrixXd z = layers[i].weights * acts.back();
    z.colwise() += layers[i].bias;
    acts.push_back(z.cwiseMax(0.0));
  }
  ParameterGradients g;
  g.layers.resize(layers.size());
  Eigen::MatrixXd delta = upstream;
  for (std::size_t i = layers.size(); i-- > 0;) {
    g.layers[i].weights = delta * acts[i].transpose();
    g.layers[i].bias = delta.rowwise().sum();
    check_finite(g.layers[i].weights, i, "backward");
    if (i > 0) {
      Eigen::MatrixXd back = layers[i].weights.transpose() * delta;
      // ReLU derivative: 1 where the activation was strictly positive.
      delta = (acts[i].array() > 0.0).select(back, 0.0);
    }
  }
  return g;
}

ParameterGradients backward(const Mlp& net, const Eigen::VectorXd& x,
                            const Eigen::VectorXd& upstream) {
  return backward_batch(net, x, upstream);
}

AdamState AdamState::for_network(const Mlp& net, double learning_rate) {
  AdamState st;
  st.first_moment = ParameterGradients::zeros_like(net).layers;
  st.second_moment = st.first_moment;
  st.learning_rate = learning_rate;
  return st;
}

void adam_step(Mlp& net, const ParameterGradients& grads, AdamState& st) {
  auto& layers = net.mutable_layers();
  if (grads.layers.size() != layers.size() || st.first_moment.size() != layers.size()) {
    throw Fault("adam_step: shape mismatch");
  }
  ++st.step_count;
  const double t = static_cast<double>(st.step_count);
  const double c1 = 1.0 - std::pow(st.beta1, t);
  const double c2 = 1.0 - std::pow(st.beta2, t);
  auto update = [&](auto& param, const auto& g, auto& m, auto& v) {
    if (g.size() != param.size()) throw Fault("adam_step: shape mismatch");
    m = st.beta1 * m + (1.0 - st.beta1) * g;
    v = st.beta2 * v + (1.0 - st.beta2) * g.cwiseProduct(g);
    param.array() -= st.learning_rate * (m.array() / c1) /
                     ((v.array() / c2).sqrt() + st.eps_stab);
  };
  for (std::size_t i = 0; i < layers.size(); ++i) {
    update(layers[i].weights, grads.layers[i].weights, st.first_moment[i].weights,
           st.second_moment[i].weights);
    update(layers[i].bias, grads.layers[i].bias, st.first_moment[i].bias,
           st.second_moment[i].bias);
  }
}

double lipschitz_upper_bound(const Mlp& net) {
  double bound = 1.0;
  for (const auto& l : net.layers()) bound *= l.weights.cwiseAbs().rowwise().sum().maxCoeff();
  return bound;
}

ParameterGradients lipschitz_bound_subgradient(const Mlp& net) {
  const auto& layers = net.layers();
  std::vector<double> norms;
  std::vector<Eigen::Index> rows;
  for (const auto& l : layers) {
    Eigen::Index r = 0;
    norms.push_back(l.weights.cwiseAbs().rowwise().sum().maxCoeff(&r));
    rows.push_back(r);
  }
  ParameterGradients g = ParameterGradients::zeros_like(net);
  for (std::size_t i = 0; i < layers.size(); ++i) {
    double others = 1.0;
    for (std::size_t j = 0; j < layers.size(); ++j) {
      if (j != i) others *= norms[j];
    }
    const auto row = layers[i].weights.row(rows[i]);
    for (Eigen::Index c = 0; c < row.size(); ++c) {
      const double w = row(c);
      g.layers[i].weights(rows[i], c) = w > 0.0 ? others : (w < 0.0 ? -others : 0.0);
    }
  }
  return g;
}

// Binary layout, all integers and floats little-endian:
//   8-byte magic "SXFRMLP\0", u32 version, u32 layer count L,
//   (L+1) u64 layer widths, then per layer the weights in row-major order
//   followed by the biases, as IEEE-754 binary64.
namespace {

constexpr std::array<char, 8> kMagic = {'S', 'X', 'F', 'R', 'M', 'L', 'P', '\0'};
constexpr std::uint32_t kFormatVersion = 1;
constexpr std::uint64_t kMaxWidth = 1u << 20;

template <class T>
void put_le(std::ostream& out, T value) {
  std::array<char, sizeof(T)> bytes;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    bytes[i] = static_cast<char>((value >> (8 * i)) & 0xffu);
  }
  out.write(bytes.data(), bytes.size());
}

template <class T>
T get_le(std::istream& in) {
  std::array<unsigned char, sizeof(T)> bytes;
  if (!in.read(reinterpret_cast<char*>(bytes.data()), bytes.size())) {
    throw Fault("deserialize: truncated network file");
  }
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) value |= static_cast<T>(bytes[i]) << (8 * i);
  return value;
}

void put_f64(std::ostream& out, double v) { put_le(out, std::bit_cast<std::uint64_t>(v)); }
double get_f64(std::istream& in) { return std::bit_cast<double>(get_le<std::uint64_t>(in)); }

}  // namespace

void serialize(const Mlp& net, std::ostream& out) {
  if (net.layers().empty()) throw Fault("serialize: empty layer list");
  out.write(kMagic.data(), kMagic.size());
  put_le<std::uint32_t>(out, kFormatVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(net.layers().size()));
  for (int d : net.dims()) put_le<std::uint64_t>(out, static_cast<std::uint64_t>(d));
  for (const auto& l : net.layers()) {
    for (Eigen::Index r = 0; r < l.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weights.cols(); ++c) put_f64(out, l.weights(r, c));
    }
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) put_f64(out, l.bias(r));
  }
  if (!out) throw Fault("serialize: write failed");
}

Mlp deserialize(std::istream& in) {
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size())) throw Fault("deserialize: truncated network file");
  if (magic != kMagic) throw Fault("deserialize: bad magic header");
  const auto version = get_le<std::uint32_t>(in);
  if (version != kFormatVersion) {
    throw Fault("deserialize: unsupported format version " + std::to_string(version));
  }
  const auto count = get_le<std::uint32_t>(in);
  if (count == 0 || count > 1024) throw Fault("deserialize: bad layer count");
  std::vector<std::uint64_t> dims(count + 1);
  for (auto& d : dims) {
    d = get_le<std::uint64_t>(in);
    if (d == 0 || d > kMaxWidth) throw Fault("deserialize: bad layer width");
  }
  std::vector<DenseLayer> layers;
  for (std::uint32_t i = 0; i < count; ++i) {
    DenseLayer l{Eigen::MatrixXd(dims[i + 1], dims[i]), Eigen::VectorXd(dims[i + 1])};
    for (Eigen::Index r = 0; r < l.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weights.cols(); ++c) l.weights(r, c) = get_f64(in);
    }
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) l.bias(r) = get_f64(in);
    layers.push_back(std::move(l));
  }
  if (in.peek() != std::char_traits<char>::eof()) throw Fault("deserialize: trailing bytes");
  return Mlp(std::move(layers));
}

void save_mlp(const Mlp& net, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Fault("save_mlp: cannot open " + path.string());
  serialize(net, out);
}

Mlp load_mlp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Fault("load_mlp: cannot open " + path.string());
  return deserialize(in);
}

}  // namespace safexfer
