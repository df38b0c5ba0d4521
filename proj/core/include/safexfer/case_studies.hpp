#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "safexfer/model.hpp"
#include "safexfer/transfer.hpp"

namespace safexfer {

struct PendulumParams {
  double m = 1.0;
  double l = 1.0;
  double tau = 0.01;
  double g = 9.8;
};

// (theta + tau omega, omega + (g tau / l) sin(theta + u / (m l^2))); the input
// acts inside the sine.
Vec pendulum_dynamics(const Vec& x, const Vec& u, const PendulumParams& p);

struct DcMotorParams {
  double R = 1.0;
  double L = 0.5;
  double K = 0.01;
  double J = 0.05;
  double b = 1.0;
  double tau = 0.01;
};

// State is (armature current, shaft speed), input is the voltage.
Vec dc_motor_dynamics(const Vec& x, const Vec& u, const DcMotorParams& p);

// Two decoupled double integrators (x, vx, y, vy) driven by accelerations;
// sign = -1 negates the input matrix.
Vec quadrotor_dynamics(const Vec& x, const Vec& u, int sign, double tau = 0.01);

enum class Scale { kPaper, kDesk };
Scale parse_scale(const std::string& s);
const char* scale_name(Scale s);

struct RolloutSettings {
  int count = 100;
  int horizon = 500;
};

struct BenchmarkDef {
  std::string name;
  Scale scale;
  DtSystem source;
  DtSystem target;
  SafetySpec spec;
  ControlLaw source_controller;
  BarrierCertificate source_cbc;
  double epsilon_paper;
  double epsilon_desk;
  TransferConfig transfer;
  RolloutSettings rollouts;

  double epsilon() const { return scale == Scale::kPaper ? epsilon_paper : epsilon_desk; }
};

std::vector<std::string> benchmark_names();
// Shipped configuration text for a benchmark name.
const std::string& benchmark_config_text(const std::string& name);

BenchmarkDef load_benchmark(const std::string& name, Scale scale);
// `config_text` is the JSON document of a benchmark file.
BenchmarkDef load_benchmark_config(const std::string& config_text, Scale scale);
BenchmarkDef load_benchmark_file(const std::filesystem::path& path, Scale scale);

}  // namespace safexfer
