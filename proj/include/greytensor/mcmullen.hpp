#pragma once

#include "greytensor/sym_tensor.hpp"

namespace greytensor {

/// Residual tensor and max-norm of the McMullen relation
///   2*pi * sum_s s * Phi_{k-r+s}^{r-s,s}  -  Q * sum_s Phi_{k-r+s}^{r-s,s-2}
/// in dimension `dim`. Labels that are undefined (negative exponents, k out of
/// 0..d, or a normal exponent on a volume tensor) contribute zero.
///
/// The family is taken in this library's normalization, where the surface
/// tensors Phi_{d-1} integrate against the full boundary measure. The relation
/// holds for the half-measure curvature measure C_{d-1}, so Phi_{d-1} members
/// are scaled by 1/2 before they enter the residual.
struct McMullenResidual {
  SymTensor residual;
  double max_norm = 0.0;
  /// Labels whose coefficient was nonzero.
  std::vector<TensorIndex> used;
};

/// Throws ConfigError naming the first required label absent from `family`.
[[nodiscard]] McMullenResidual mcmullen_relation(int k, int r, const TensorFamily& family, int dim);

[[nodiscard]] inline double mcmullen_residual(int k, int r, const TensorFamily& family, int dim) {
  return mcmullen_relation(k, r, family, dim).max_norm;
}

/// Labels the relation (k, r) needs; empty when it is trivially 0 = 0.
[[nodiscard]] std::vector<TensorIndex> mcmullen_required(int k, int r, int dim);

/// Scale applied to a family member before it enters the relation.
[[nodiscard]] double mcmullen_member_scale(const TensorIndex& idx, int dim);

}  // namespace greytensor
