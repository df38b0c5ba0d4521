#include "safexfer/case_studies.hpp"

#include <cmath>
#include <fstream>
#include <iterator>
#include <map>
#include <numbers>
#include <regex>

#include "json.hpp"
#include "safexfer/barriers.hpp"
#include "safexfer/controllers.hpp"
#include "safexfer/lipschitz_estimate.hpp"

namespace safexfer {

// Defined in the generated embedded_configs.cpp.
const std::map<std::string, std::string>& embedded_benchmark_configs();

Vec pendulum_dynamics(const Vec& x, const Vec& u, const PendulumParams& p) {
  require_dim(x, 2, "pendulum_dynamics state");
  require_dim(u, 1, "pendulum_dynamics input");
  Vec next(2);
  next[0] = x[0] + p.tau * x[1];
  next[1] = x[1] + (p.g * p.tau / p.l) * std::sin(x[0] + u[0] / (p.m * p.l * p.l));
  return next;
}

Vec dc_motor_dynamics(const Vec& x, const Vec& u, const DcMotorParams& p) {
  require_dim(x, 2, "dc_motor_dynamics state");
  require_dim(u, 1, "dc_motor_dynamics input");
  Vec next(2);
  next[0] = x[0] + p.tau * (-(p.R / p.L) * x[0] - (p.K / p.L) * x[1] + u[0] / p.L);
  next[1] = x[1] + p.tau * ((p.K / p.J) * x[0] - (p.b / p.J) * x[1]);
  return next;
}

Vec quadrotor_dynamics(const Vec& x, const Vec& u, int sign, double tau) {
  require_dim(x, 4, "quadrotor_dynamics state");
  require_dim(u, 2, "quadrotor_dynamics input");
  if (sign != 1 && sign != -1) throw Fault("quadrotor_dynamics: sign must be +1 or -1");
  const double s = static_cast<double>(sign);
  const double half_sq = 0.5 * tau * tau;
  Vec next(4);
  next[0] = x[0] + tau * x[1] + s * half_sq * u[0];
  next[1] = x[1] + s * tau * u[0];
  next[2] = x[2] + tau * x[3] + s * half_sq * u[1];
  next[3] = x[3] + s * tau * u[1];
  return next;
}

Scale parse_scale(const std::string& s) {
  if (s == "paper") return Scale::kPaper;
  if (s == "desk") return Scale::kDesk;
  throw Fault("unknown scale '" + s + "' (expected paper or desk)");
}

const char* scale_name(Scale s) { return s == Scale::kPaper ? "paper" : "desk"; }

namespace {

using nlohmann::json;

const json& member(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) {
    throw Fault(std::string("config: missing key '") + key + "'");
  }
  return j.at(key);
}

// Numbers may be written literally or as multiples of pi, e.g. "-pi/4" or
// "2*pi/3", so that shipped files can quote constants exactly as published.
double real(const json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    static const std::regex kPi(
        R"(^\s*([+-])?\s*(?:([0-9]*\.?[0-9]+(?:[eE][+-]?[0-9]+)?)\s*\*\s*)?pi\s*(?:/\s*([0-9]*\.?[0-9]+))?\s*$)");
    std::smatch m;
    const std::string s = j.get<std::string>();
    if (std::regex_match(s, m, kPi)) {
      double v = std::numbers::pi;
      if (m[2].matched) v *= std::stod(m[2].str());
      if (m[3].matched) v /= std::stod(m[3].str());
      return m[1].matched && m[1].str() == "-" ? -v : v;
    }
    throw Fault("config: cannot read number '" + s + "'");
  }
  throw Fault("config: expected a number, got " + j.dump());
}

double real_or(const json& j, const char* key, double fallback) {
  return j.contains(key) ? real(j.at(key)) : fallback;
}

std::optional<double> optional_real(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return real(j.at(key));
}

Vec vec(const json& j) {
  if (!j.is_array() || j.empty() || j.size() > static_cast<std::size_t>(kMaxDim)) {
    throw Fault("config: expected a non-empty array, got " + j.dump());
  }
  Vec v(static_cast<int>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<int>(i)] = real(j[i]);
  return v;
}

Eigen::MatrixXd matrix(const json& j) {
  if (!j.is_array() || j.empty() || !j[0].is_array()) {
    throw Fault("config: expected a matrix, got " + j.dump());
  }
  Eigen::MatrixXd m(j.size(), j[0].size());
  for (std::size_t r = 0; r < j.size(); ++r) {
    if (j[r].size() != j[0].size()) throw Fault("config: ragged matrix");
    for (std::size_t c = 0; c < j[r].size(); ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = real(j[r][c]);
    }
  }
  return m;
}

Box box(const json& j) { return Box(vec(member(j, "lower")), vec(member(j, "upper"))); }

RegionSpec region(const json& j, const Box& state_box) {
  const std::string kind = member(j, "kind").get<std::string>();
  std::vector<Box> members;
  for (const auto& m : member(j, "members")) members.push_back(box(m));
  if (members.empty()) throw Fault("config: region without members");
  if (kind == "box") {
    if (members.size() != 1) throw Fault("config: box region takes one member");
    return RegionSpec::box(members[0], state_box);
  }
  if (kind == "complement-of-box") {
    if (members.size() != 1) throw Fault("config: complement-of-box region takes one member");
    return RegionSpec::complement_of(members[0], state_box);
  }
  if (kind == "union") return RegionSpec::union_of(members, state_box);
  throw Fault("config: unknown region kind '" + kind + "'");
}

TransitionMap dynamics(const json& j) {
  const std::string kind = member(j, "dynamics").get<std::string>();
  const json params = j.value("params", json::object());
  if (kind == "pendulum") {
    PendulumParams p;
    p.m = real_or(params, "m", p.m);
    p.l = real_or(params, "l", p.l);
    p.tau = real_or(params, "tau", p.tau);
    p.g = real_or(params, "g", p.g);
    return [p](const Vec& x, const Vec& u) { return pendulum_dynamics(x, u, p); };
  }
  if (kind == "dc-motor") {
    DcMotorParams p;
    p.R = real_or(params, "R", p.R);
    p.L = real_or(params, "L", p.L);
    p.K = real_or(params, "K", p.K);
    p.J = real_or(params, "J", p.J);
    p.b = real_or(params, "b", p.b);
    p.tau = real_or(params, "tau", p.tau);
    return [p](const Vec& x, const Vec& u) { return dc_motor_dynamics(x, u, p); };
  }
  if (kind == "quadrotor") {
    const int sign = static_cast<int>(real_or(params, "sign", 1.0));
    const double tau = real_or(params, "tau", 0.01);
    if (sign != 1 && sign != -1) throw Fault("config: quadrotor sign must be +1 or -1");
    return [sign, tau](const Vec& x, const Vec& u) { return quadrotor_dynamics(x, u, sign, tau); };
  }
  if (kind == "linear") {
    const Eigen::MatrixXd a = matrix(member(params, "A"));
    const Eigen::MatrixXd b = matrix(member(params, "B"));
    if (a.rows() != a.cols() || b.rows() != a.rows()) throw Fault("config: bad linear system shape");
    return [a, b](const Vec& x, const Vec& u) -> Vec {
      require_dim(x, static_cast<int>(a.cols()), "linear dynamics state");
      require_dim(u, static_cast<int>(b.cols()), "linear dynamics input");
      return a * x + b * u;
    };
  }
  throw Fault("config: unknown dynamics '" + kind + "'");
}

DtSystem system(const json& j, const std::string& name, const Box& state_box,
                const Box& input_box) {
  DtSystem sys{name, state_box, input_box, dynamics(j), optional_real(j, "lip_state"),
               optional_real(j, "lip_input")};
  if (!sys.lip_state || !sys.lip_input) {
    // Constants not declared: fall back to the sampled estimate.
    const JointLipschitz est = joint_lipschitz(sys, EstimateOptions{});
    if (!sys.lip_state) sys.lip_state = est.lip_state;
    if (!sys.lip_input) sys.lip_input = est.lip_input;
  }
  return sys;
}

ControlLaw controller(const json& j, const Box& state_box, const Box& input_box) {
  FeedbackLaw law;
  law.linear = matrix(member(j, "linear"));
  const auto m = law.linear.rows();
  const auto n = law.linear.cols();
  if (m != input_box.dim() || n != state_box.dim()) throw Fault("config: controller shape mismatch");
  law.offset = j.contains("offset") ? Eigen::VectorXd(vec(j.at("offset"))) : Eigen::VectorXd::Zero(m);
  law.saturating = j.contains("saturating") ? matrix(j.at("saturating")) : Eigen::MatrixXd::Zero(m, n);
  law.saturation =
      j.contains("saturation") ? Eigen::VectorXd(vec(j.at("saturation"))) : Eigen::VectorXd::Zero(m);
  law.input_box = input_box;
  return make_feedback_controller(law, optional_real(j, "lip"));
}

BarrierCertificate barrier(const json& j, const Box& state_box) {
  const std::string kind = member(j, "kind").get<std::string>();
  const double gain = real_or(j, "gain", 1.0);
  const double eta = real(member(j, "eta"));
  const std::optional<double> lip = optional_real(j, "lip");
  if (!(gain > 0.0)) throw Fault("config: barrier gain must be positive");
  if (kind == "max-affine") {
    std::vector<AffinePiece> pieces;
    for (const auto& p : member(j, "pieces")) {
      const Vec normal = gain * vec(member(p, "normal"));
      const double offset = gain * real(member(p, "offset"));
      if (normal.size() != state_box.dim()) throw Fault("config: barrier piece dimension mismatch");
      pieces.push_back({normal, offset});
      if (j.value("symmetric", false)) pieces.push_back({-normal, offset});
    }
    return make_max_affine_barrier(std::move(pieces), eta, lip);
  }
  if (kind == "quadratic") {
    return make_quadratic_barrier(gain * matrix(member(j, "P")), gain * real(member(j, "c")),
                                  state_box, eta, lip);
  }
  throw Fault("config: unknown barrier kind '" + kind + "'");
}

TransferConfig transfer_config(const json& j) {
  TransferConfig cfg;
  if (j.contains("hidden")) cfg.hidden = j.at("hidden").get<std::vector<int>>();
  cfg.max_outer_rounds = j.value("max_outer_rounds", cfg.max_outer_rounds);
  cfg.inner_iterations_per_round = j.value("inner_iterations", cfg.inner_iterations_per_round);
  cfg.batch_size = j.value("batch_size", cfg.batch_size);
  cfg.learning_rate = real_or(j, "learning_rate", cfg.learning_rate);
  cfg.lr_decay = real_or(j, "lr_decay", cfg.lr_decay);
  cfg.lr_decay_every = j.value("lr_decay_every", cfg.lr_decay_every);
  cfg.lipschitz_penalty = real_or(j, "lipschitz_penalty", cfg.lipschitz_penalty);
  cfg.init_scale = real_or(j, "init_scale", cfg.init_scale);
  cfg.fd_step = real_or(j, "fd_step", cfg.fd_step);
  cfg.seed = j.value("seed", cfg.seed);
  return cfg;
}

}  // namespace

std::vector<std::string> benchmark_names() {
  std::vector<std::string> names;
  for (const auto& [name, text] : embedded_benchmark_configs()) names.push_back(name);
  return names;
}

const std::string& benchmark_config_text(const std::string& name) {
  const auto& all = embedded_benchmark_configs();
  const auto it = all.find(name);
  if (it == all.end()) throw Fault("unknown benchmark '" + name + "'");
  return it->second;
}

namespace {

json parse_config(const std::string& text, const std::string& origin) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw Fault("config " + origin + ": " + e.what());
  }
}

BenchmarkDef build_benchmark(const json& config, Scale scale);

}  // namespace

BenchmarkDef load_benchmark(const std::string& name, Scale scale) {
  return build_benchmark(parse_config(benchmark_config_text(name), name), scale);
}

BenchmarkDef load_benchmark_config(const std::string& config_text, Scale scale) {
  return build_benchmark(parse_config(config_text, "text"), scale);
}

BenchmarkDef load_benchmark_file(const std::filesystem::path& path, Scale scale) {
  std::ifstream in(path);
  if (!in) throw Fault("cannot read config " + path.string());
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return build_benchmark(parse_config(text, path.string()), scale);
}

namespace {

BenchmarkDef build_benchmark(const json& config, Scale scale) {
  try {
    // Scale-specific sections are merged over the base tree.
    json j = config;
    if (j.contains("scales")) {
      const json overrides = j.at("scales").value(scale_name(scale), json::object());
      j.erase("scales");
      j.merge_patch(overrides);
    }
    const std::string name = member(j, "name").get<std::string>();
    const Box state_box = box(member(j, "state_box"));
    const Box input_box = box(member(j, "input_box"));
    DtSystem source = system(member(j, "source"), name + "/source", state_box, input_box);
    DtSystem target = system(member(j, "target"), name + "/target", state_box, input_box);
    RolloutSettings rollouts;
    if (j.contains("rollouts")) {
      rollouts.count = j.at("rollouts").value("count", rollouts.count);
      rollouts.horizon = j.at("rollouts").value("horizon", rollouts.horizon);
    }
    SafetySpec spec{region(member(j, "initial"), state_box), region(member(j, "unsafe"), state_box),
                    rollouts.horizon};
    return BenchmarkDef{name,
                        scale,
                        std::move(source),
                        std::move(target),
                        std::move(spec),
                        controller(member(j, "controller"), state_box, input_box),
                        barrier(member(j, "barrier"), state_box),
                        real(member(j, "epsilon_paper")),
                        real(member(j, "epsilon_desk")),
                        transfer_config(j.value("transfer", json::object())),
                        rollouts};
  } catch (const json::exception& e) {
    throw Fault(std::string("config: ") + e.what());
  }
}

}  // namespace

}  // namespace safexfer
