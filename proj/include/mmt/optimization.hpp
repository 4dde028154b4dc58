#pragma once

#include <vector>

#include "mmt/geometry.hpp"

// Gradient/Hessian assembly and the Tikhonov-regularized Newton step shared
// by all modalities.

namespace mmt {

// Variation parameterizations are expressed in the model frame so that
// contributions from multiple cameras can be summed directly.
enum class VariationFrame { kModel };

// Accumulated gradient g and Hessian H of the log joint PDF at theta = 0.
struct NormalEquations {
  Vec6 g = Vec6::Zero();
  Mat6 H = Mat6::Zero();
  VariationFrame frame = VariationFrame::kModel;

  // Rank-one update from a scalar residual model: adds weight * r * j to g
  // and -weight * j^T j to H for log-likelihood -weight/2 * (r(theta))².
  void add_scalar_residual(double weight, double residual, const Vec6& jacobian) {
    g += -weight * residual * jacobian;
    H += -weight * (jacobian * jacobian.transpose());
  }
};

struct OptimizerConfig {
  double lambda_r = 1000.0;   // rotational regularization
  double lambda_t = 30000.0;  // translational regularization
  int outer_iterations = 5;   // correspondence iterations per frame
  int inner_iterations = 2;   // Newton iterations per correspondence set
};

struct SingularStepError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Componentwise sum in declaration order.
NormalEquations assemble(const std::vector<NormalEquations>& contribs);

// theta = (-H + blockdiag(lambda_r I3, lambda_t I3))^-1 g via Cholesky;
// throws SingularStepError when the damped system is not positive definite.
Variation solve_step(const NormalEquations& ne, const OptimizerConfig& cfg);

// Contributions are already expressed in the shared model-frame
// parameterization; asserts the frame tag and forwards.
NormalEquations camera_transform_contribs(const NormalEquations& ne,
                                          const Pose& camera_extrinsics);

}  // namespace mmt
