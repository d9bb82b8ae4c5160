#include "mmloco/encoders/net.hpp"

#include <cmath>

namespace mmloco::encoders {

using namespace mmloco::numerics;

Tensor xavier_uniform(Shape s, RngStream& rng) {
  std::size_t fan_in = s.size() >= 1 ? s[0] : 1;
  std::size_t fan_out = s.size() >= 2 ? s[1] : s[0];
  double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Tensor t = Tensor::zeros(std::move(s));
  for (double& v : t.data) v = rng.uniform(-limit, limit);
  return t;
}

Linear::Linear(const std::string& name, std::size_t in, std::size_t out, RngStream& rng)
    : weight(name + "/w", xavier_uniform({in, out}, rng)),
      bias(name + "/b", Tensor::zeros({out})) {}

Var Linear::operator()(Ctx& ctx, const Var& x) {
  return add(matmul(x, ctx.use(weight)), ctx.use(bias));
}

void Linear::collect(std::vector<Parameter*>& out) {
  out.push_back(&weight);
  out.push_back(&bias);
}

Mlp::Mlp(const std::string& name, const std::vector<std::size_t>& dims, RngStream& rng) {
  for (std::size_t i = 0; i + 1 < dims.size(); ++i)
    layers.emplace_back(name + "/l" + std::to_string(i), dims[i], dims[i + 1], rng);
}

Var Mlp::operator()(Ctx& ctx, const Var& x) {
  Var h = x;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    h = layers[i](ctx, h);
    if (i + 1 < layers.size()) h = elu(h);
  }
  return h;
}

void Mlp::collect(std::vector<Parameter*>& out) {
  for (Linear& l : layers) l.collect(out);
}

LayerNormParams::LayerNormParams(const std::string& name, std::size_t dim)
    : gain(name + "/g", Tensor::full({dim}, 1.0)), bias(name + "/b", Tensor::zeros({dim})) {}

Var LayerNormParams::operator()(Ctx& ctx, const Var& x) {
  return layer_norm(x, ctx.use(gain), ctx.use(bias));
}

void LayerNormParams::collect(std::vector<Parameter*>& out) {
  out.push_back(&gain);
  out.push_back(&bias);
}

}  // namespace mmloco::encoders
