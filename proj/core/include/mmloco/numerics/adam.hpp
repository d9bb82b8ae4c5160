#pragma once

#include "mmloco/numerics/tensor.hpp"

namespace mmloco::numerics {

// Bias-corrected Adam state for a single parameter tensor.
struct AdamState {
  long step_count = 0;
  Tensor first_moment;
  Tensor second_moment;
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static AdamState for_shape(const Shape& s, double lr);
};

// In-place update of `param`; moments and step count advance in `state`.
void adam_step(Tensor& param, const Tensor& grad, AdamState& state);

}  // namespace mmloco::numerics
