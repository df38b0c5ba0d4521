#include "safexfer/controllers.hpp"

#include <cmath>

namespace safexfer {

namespace {

void validate(const FeedbackLaw& law) {
  const auto m = law.input_box.dim();
  const auto n = law.linear.cols();
  if (law.linear.rows() != m || law.offset.size() != m || law.saturating.rows() != m ||
      law.saturating.cols() != n || law.saturation.size() != m) {
    throw Fault("FeedbackLaw: inconsistent dimensions");
  }
  if ((law.saturation.array() < 0.0).any()) throw Fault("FeedbackLaw: negative saturation");
}

}  // namespace

double feedback_lipschitz_bound(const FeedbackLaw& law) {
  validate(law);
  return (law.linear.cwiseAbs() + law.saturating.cwiseAbs()).rowwise().sum().maxCoeff();
}

ControlLaw make_feedback_controller(const FeedbackLaw& law, std::optional<double> lip) {
  validate(law);
  ControlLaw k;
  k.kind = ControlKind::kAnalytic;
  k.lip = lip ? *lip : feedback_lipschitz_bound(law);
  k.map = [law](const Vec& x) {
    require_dim(x, static_cast<int>(law.linear.cols()), "feedback controller");
    Vec u = law.linear * x + law.offset;
    for (int r = 0; r < u.size(); ++r) {
      const double s = law.saturation[r];
      if (s > 0.0) u[r] += s * std::tanh(law.saturating.row(r).dot(x) / s);
    }
    return clamp_to_box(law.input_box, u);
  };
  return k;
}

ControlLaw make_neural_controller(std::shared_ptr<const Mlp> net, const Box& input_box) {
  if (!net || net->output_dim() != input_box.dim()) {
    throw Fault("neural controller: output dimension does not match the input box");
  }
  ControlLaw k;
  k.kind = ControlKind::kNeural;
  k.lip = lipschitz_upper_bound(*net);
  const Eigen::VectorXd lo = input_box.lower();
  const Eigen::VectorXd hi = input_box.upper();
  k.map = [net, input_box](const Vec& x) {
    const Eigen::VectorXd xd = x;
    const Vec u = forward(*net, xd);
    return clamp_to_box(input_box, u);
  };
  k.batch = [net, lo, hi](const Eigen::MatrixXd& xs) -> Eigen::MatrixXd {
    Eigen::MatrixXd u = forward_batch(*net, xs);
    return u.cwiseMax(lo.replicate(1, u.cols())).cwiseMin(hi.replicate(1, u.cols()));
  };
  return k;
}

}  // namespace safexfer
