#include "mmloco/trainer/gae.hpp"

#include <cmath>

namespace mmloco::trainer {

using namespace mmloco::numerics;

AdvantageResult gae_advantages(const RolloutBatch& b, double gamma, double lambda,
                               bool normalize) {
  const std::size_t T = b.steps, E = b.envs, R = b.rows();
  require(R > 0, "gae_advantages: empty batch");
  AdvantageResult out;
  out.advantages = Tensor::zeros({R});
  out.returns = Tensor::zeros({R});

  std::vector<double> gae(E, 0.0);
  for (std::size_t t = T; t-- > 0;) {
    for (std::size_t e = 0; e < E; ++e) {
      std::size_t row = t * E + e;
      double not_done = 1.0 - b.dones.data[row];
      double next_value = (t + 1 < T) ? b.values.data[(t + 1) * E + e] : b.last_values.data[e];
      double delta =
          b.rewards.data[row] + gamma * next_value * not_done - b.values.data[row];
      gae[e] = delta + gamma * lambda * not_done * gae[e];
      out.advantages.data[row] = gae[e];
      out.returns.data[row] = gae[e] + b.values.data[row];
    }
  }

  if (normalize) {
    double mean = 0.0;
    for (double v : out.advantages.data) mean += v;
    mean /= static_cast<double>(R);
    double var = 0.0;
    for (double v : out.advantages.data) var += (v - mean) * (v - mean);
    var /= static_cast<double>(R);
    double inv = 1.0 / (std::sqrt(var) + 1e-8);
    for (double& v : out.advantages.data) v = (v - mean) * inv;
  }
  return out;
}

}  // namespace mmloco::trainer
