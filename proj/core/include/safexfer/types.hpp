#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace safexfer {

// Small state/input vectors live on the stack; every case study has at most
// four state axes and two input axes.
inline constexpr int kMaxDim = 8;
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;

// Raised on any precondition or numerical failure. `stage` is filled in by the
// pipeline driver so the CLI can report which step failed.
class Fault : public std::runtime_error {
 public:
  explicit Fault(const std::string& what, std::string stage = {})
      : std::runtime_error(what), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

inline double inf_norm(const Vec& v) {
  return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
}

inline void require_dim(const Vec& v, int dim, const char* what) {
  if (v.size() != dim) {
    throw Fault(std::string(what) + ": dimension mismatch (got " +
                std::to_string(v.size()) + ", expected " +
                std::to_string(dim) + ")");
  }
}

}  // namespace safexfer
