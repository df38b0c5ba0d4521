#include "safexfer/barriers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace safexfer {

double max_affine_lipschitz(const std::vector<AffinePiece>& pieces) {
  double lip = 0.0;
  for (const auto& p : pieces) lip = std::max(lip, p.normal.cwiseAbs().sum());
  return lip;
}

BarrierCertificate make_max_affine_barrier(std::vector<AffinePiece> pieces, double eta,
                                           std::optional<double> lip) {
  if (pieces.empty()) throw Fault("max-affine barrier: no pieces");
  const auto dim = pieces.front().normal.size();
  for (const auto& p : pieces) {
    if (p.normal.size() != dim) throw Fault("max-affine barrier: inconsistent piece dimensions");
  }
  const double l = lip ? *lip : max_affine_lipschitz(pieces);
  auto eval = [pieces = std::move(pieces)](const Vec& x) {
    double b = -std::numeric_limits<double>::infinity();
    for (const auto& p : pieces) b = std::max(b, p.normal.dot(x) - p.offset);
    return b;
  };
  return BarrierCertificate(std::move(eval), l, eta);
}

double quadratic_lipschitz(const Eigen::MatrixXd& p, const Box& box) {
  const int n = box.dim();
  if (p.rows() != n || p.cols() != n) throw Fault("quadratic barrier: P has the wrong shape");
  double best = 0.0;
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = (mask >> i) & 1u ? box.upper(i) : box.lower(i);
    best = std::max(best, (2.0 * p * v).cwiseAbs().sum());
  }
  return best;
}

BarrierCertificate make_quadratic_barrier(const Eigen::MatrixXd& p, double c, const Box& box,
                                          double eta, std::optional<double> lip) {
  const Eigen::MatrixXd sym = 0.5 * (p + p.transpose());
  const double l = lip ? *lip : quadratic_lipschitz(sym, box);
  auto eval = [sym, c](const Vec& x) {
    const Eigen::VectorXd xd = x;
    return xd.dot(sym * xd) - c;
  };
  return BarrierCertificate(std::move(eval), l, eta);
}

}  // namespace safexfer
