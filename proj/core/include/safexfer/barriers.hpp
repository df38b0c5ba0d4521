#pragma once

#include <optional>
#include <vector>

#include <Eigen/Core>

#include "safexfer/model.hpp"

namespace safexfer {

struct AffinePiece {
  Vec normal;
  double offset;
};

// B(x) = max_j (normal_j . x - offset_j). Its infinity-norm Lipschitz constant
// is the largest l1 norm among the normals.
double max_affine_lipschitz(const std::vector<AffinePiece>& pieces);
BarrierCertificate make_max_affine_barrier(std::vector<AffinePiece> pieces, double eta,
                                           std::optional<double> lip = std::nullopt);

// B(x) = x'Px - c on a box. The gradient 2Px is linear, so the largest l1 norm
// of the gradient over the box is attained at a vertex.
double quadratic_lipschitz(const Eigen::MatrixXd& p, const Box& box);
BarrierCertificate make_quadratic_barrier(const Eigen::MatrixXd& p, double c, const Box& box,
                                          double eta, std::optional<double> lip = std::nullopt);

}  // namespace safexfer
