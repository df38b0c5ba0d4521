#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "safexfer/grid.hpp"
#include "safexfer/model.hpp"

namespace safexfer {

// Barrier conditions, numbered as they appear in verdicts and CSV files.
enum Condition : int { kInitialCondition = 1, kUnsafeCondition = 2, kDecreaseCondition = 3 };

// How the per-step decrease is required.
//  kSublevel:   B(x) <= 0  implies  B(next) <= -eta. Together with the two set
//               conditions this makes {B <= 0} forward invariant.
//  kEverywhere: B(next) - B(x) <= -eta for every state. Stronger, and
//               unsatisfiable whenever B has an interior minimiser whose
//               successor stays in the state box.
enum class DecreaseRule { kSublevel, kEverywhere };

struct VerifyOptions {
  DecreaseRule decrease = DecreaseRule::kSublevel;
  std::size_t violation_cap = 10000;
};

struct Violation {
  Vec state;
  int condition;
  double value;
};

// Each condition is rewritten as "value <= 0". ok[i] holds exactly when the
// worst value is <= 0; worst is -inf when no grid point was subject to it.
struct CertificationVerdict {
  std::array<bool, 3> ok{true, true, true};
  std::array<double, 3> worst{};
  std::array<std::uint64_t, 3> checked{};
  std::array<std::uint64_t, 3> violation_count{};
  std::vector<Violation> violations;

  bool all_ok() const { return ok[0] && ok[1] && ok[2]; }
  std::uint64_t total_violations() const {
    return violation_count[0] + violation_count[1] + violation_count[2];
  }
};

// Condition values at one grid point; nullopt where the condition does not
// apply to that cell.
struct PointConditions {
  double barrier;
  double barrier_next;
  std::optional<double> initial;
  std::optional<double> unsafe;
  std::optional<double> decrease;
};

// Closed-loop slope Lx + Lu*Lk; faults when any constant is missing.
double closed_loop_lipschitz(const DtSystem& sys, const ControlLaw& k);

PointConditions conditions_at(const BarrierCertificate& b, const DtSystem& sys,
                              const ControlLaw& k, const SafetySpec& spec,
                              const SampleGrid& g, std::uint64_t index,
                              const VerifyOptions& opts = {});

CertificationVerdict verify_cbc_on_grid(const BarrierCertificate& b,
                                        const DtSystem& sys, const ControlLaw& k,
                                        const SafetySpec& spec, const SampleGrid& g,
                                        const VerifyOptions& opts = {});

struct ValidityInputs {
  double lip_B;
  double eta;
  double epsilon;
  double mismatch;
  double lip_dagger;
};

struct ValidityResult {
  bool valid;
  double lhs;
};

// lhs = lip_B * (lip_dagger * epsilon / 2 + mismatch) - eta; valid iff lhs <= 0.
ValidityResult check_validity(const ValidityInputs& v);

struct GapStats {
  double max_gap = 0.0;        // max infinity-norm gap
  double half_mean_sq = 0.0;   // (1/2N) sum of squared Euclidean gaps
};

// Both statistics of the closed-loop successor gap over every grid point.
GapStats closed_loop_gap(const DtSystem& src, const ControlLaw& k, const DtSystem& tgt,
                         const ControlLaw& k_hat, const SampleGrid& g);

// Largest closed-loop successor gap over the grid points.
double mismatch_E(const DtSystem& src, const ControlLaw& k, const DtSystem& tgt,
                  const ControlLaw& k_hat, const SampleGrid& g);

struct ChainViolation {
  Vec state;
  std::string bound;
  double excess;
};

struct ChainOptions {
  std::uint64_t samples = 100000;
  std::uint64_t seed = 0;
  DecreaseRule decrease = DecreaseRule::kSublevel;
  // Grid mismatch; computed when absent.
  std::optional<double> mismatch;
  // The target-decrease bound rests on the source grid conditions; callers
  // that have not established them can switch it off.
  bool check_target_decrease = true;
  std::size_t violation_cap = 1000;
};

// Empirical audit of the inequalities behind the transfer argument, at random
// states x paired with the centre xi of their grid cell:
//   source-step     |F(x) - F(xi)|   <= (Lx + Lu Lk) |x - xi|
//   target-step     |G(x) - G(xi)|   <= (Lx^ + Lu^ Lk^) |x - xi|
//   successor-gap   |F(x) - G(x)|    <= L_dagger eps/2 + E
//   barrier-slope   |B(x) - B(xi)|   <= L_B |x - xi|
//   barrier-gap     |B(G(x)) - B(F(x))| <= L_B |G(x) - F(x)|
//   target-decrease B(G(x)) <= L_B (L_dagger eps/2 + E) - eta  when B(x) <= 0
//                   (kEverywhere: B(G(x)) - B(x) <= the same right-hand side)
// where F and G are the source and target closed loops. A bound counts as
// violated when it fails by more than 1e-12 relative to the values compared.
struct ChainReport {
  std::uint64_t samples = 0;
  double mismatch = 0.0;
  double lip_dagger = 0.0;
  std::uint64_t violation_count = 0;
  std::vector<ChainViolation> violations;
  // Largest (lhs - rhs) seen for each bound; <= 0 when it held everywhere.
  std::vector<std::pair<std::string, double>> max_excess;
};

ChainReport transfer_chain_check(const DtSystem& src, const ControlLaw& k,
                                 const DtSystem& tgt, const ControlLaw& k_hat,
                                 const BarrierCertificate& b, const SampleGrid& g,
                                 const ChainOptions& opts);

// One row per recorded violation: condition,value,x0,x1,...
void write_verdict_csv(const CertificationVerdict& v, const std::filesystem::path& path);
void write_verdict_summary(const CertificationVerdict& v, std::ostream& out);

}  // namespace safexfer
