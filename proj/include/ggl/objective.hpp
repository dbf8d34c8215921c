// Primal objective of the joint model:
//   sum_k ( -log det Theta^(k) + <S^(k), Theta^(k)> ) + P(Theta).
#pragma once

#include <limits>

#include "ggl/ensemble.hpp"
#include "ggl/proxops.hpp"
#include "ggl/spectral.hpp"

namespace ggl {

// +infinity when any block is not positive definite.
inline double primal_objective(const Ensemble& theta, const ProblemData& data,
                               const GglParams& params) {
  if (theta.classes() != data.classes() || theta.dim() != data.dim())
    throw std::invalid_argument("primal_objective: shape mismatch");
  double v = 0.0;
  for (int k = 0; k < theta.classes(); ++k) {
    const EigDecomp eig = eig_sym(theta.block(k));
    if (eig.d.minCoeff() <= 0.0) return std::numeric_limits<double>::infinity();
    v += -log_det_from_eigs(eig.d) + data.covariances[static_cast<size_t>(k)].cwiseProduct(theta.block(k)).sum();
  }
  return v + ggl_penalty(theta, params);
}

}  // namespace ggl
