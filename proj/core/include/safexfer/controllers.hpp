#pragma once

#include <memory>
#include <optional>

#include <Eigen/Core>

#include "safexfer/mlp.hpp"
#include "safexfer/model.hpp"

namespace safexfer {

// u = clamp(linear x + offset + s * tanh(saturating x / s), input_box), where
// the tanh term is applied per input row and dropped for rows with s = 0.
// With saturating = 0 this is plain clamped linear feedback.
struct FeedbackLaw {
  Eigen::MatrixXd linear;      // inputs x states
  Eigen::VectorXd offset;      // inputs
  Eigen::MatrixXd saturating;  // inputs x states
  Eigen::VectorXd saturation;  // inputs, >= 0
  Box input_box;
};

// Max over rows of sum_j |linear_ij| + |saturating_ij|; tanh has slope <= 1
// and clamping is non-expansive.
double feedback_lipschitz_bound(const FeedbackLaw& law);

// lip defaults to feedback_lipschitz_bound when not declared.
ControlLaw make_feedback_controller(const FeedbackLaw& law,
                                    std::optional<double> lip = std::nullopt);

// clamp(net(x), input_box); lip is the network's row-sum product bound.
ControlLaw make_neural_controller(std::shared_ptr<const Mlp> net, const Box& input_box);

}  // namespace safexfer
