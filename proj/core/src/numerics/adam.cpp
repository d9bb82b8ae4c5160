#include "mmloco/numerics/adam.hpp"

#include <cmath>

namespace mmloco::numerics {

AdamState AdamState::for_shape(const Shape& s, double lr) {
  AdamState st;
  st.first_moment = Tensor::zeros(s);
  st.second_moment = Tensor::zeros(s);
  st.lr = lr;
  return st;
}

void adam_step(Tensor& param, const Tensor& grad, AdamState& state) {
  require(param.same_shape(grad), "adam_step: parameter/gradient shape mismatch");
  require(param.same_shape(state.first_moment) && param.same_shape(state.second_moment),
          "adam_step: moment shape mismatch");
  state.step_count += 1;
  double b1t = 1.0 - std::pow(state.beta1, static_cast<double>(state.step_count));
  double b2t = 1.0 - std::pow(state.beta2, static_cast<double>(state.step_count));
  for (std::size_t i = 0; i < param.numel(); ++i) {
    double g = grad.data[i];
    double m = state.beta1 * state.first_moment.data[i] + (1.0 - state.beta1) * g;
    double v = state.beta2 * state.second_moment.data[i] + (1.0 - state.beta2) * g * g;
    state.first_moment.data[i] = m;
    state.second_moment.data[i] = v;
    double m_hat = m / b1t;
    double v_hat = v / b2t;
    param.data[i] -= state.lr * m_hat / (std::sqrt(v_hat) + state.eps);
  }
  require_finite(param, "adam_step");
}

}  // namespace mmloco::numerics
