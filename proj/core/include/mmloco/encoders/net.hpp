#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "mmloco/numerics/ops.hpp"
#include "mmloco/support/rng.hpp"

namespace mmloco::encoders {

using numerics::Shape;
using numerics::Tape;
using numerics::Tensor;
using numerics::Var;

// Named trainable tensor. Gradients are written back by the trainer after
// each backward pass; the name keys the checkpoint record.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;

  Parameter() = default;
  Parameter(std::string n, Tensor v)
      : name(std::move(n)), value(std::move(v)), grad(Tensor::zeros(value.shape)) {}
};

// Per-forward-pass context. In train mode parameters enter the tape as
// gradient leaves; otherwise they are constants and nothing is recorded.
struct Ctx {
  Tape& tape;
  bool train = true;
  std::unordered_map<const Parameter*, Var> bound;

  explicit Ctx(Tape& t, bool tr = true) : tape(t), train(tr) {}

  Var use(Parameter& p) {
    auto it = bound.find(&p);
    if (it != bound.end()) return it->second;
    Var v = train ? tape.leaf(p.value) : numerics::constant(p.value);
    bound.emplace(&p, v);
    return v;
  }

  // Gradient of the last backward pass w.r.t. p (zeros if p was unused).
  Tensor grad(const Parameter& p) const {
    auto it = bound.find(&p);
    if (it == bound.end()) return Tensor::zeros(p.value.shape);
    return tape.grad(it->second);
  }
};

Tensor xavier_uniform(Shape s, RngStream& rng);

struct Linear {
  Parameter weight;  // [in, out]
  Parameter bias;    // [out]

  Linear() = default;
  Linear(const std::string& name, std::size_t in, std::size_t out, RngStream& rng);

  // x: [rows, in] -> [rows, out]
  Var operator()(Ctx& ctx, const Var& x);
  void collect(std::vector<Parameter*>& out);
};

// MLP with ELU between layers, linear output.
struct Mlp {
  std::vector<Linear> layers;

  Mlp() = default;
  Mlp(const std::string& name, const std::vector<std::size_t>& dims, RngStream& rng);

  Var operator()(Ctx& ctx, const Var& x);
  void collect(std::vector<Parameter*>& out);
};

struct LayerNormParams {
  Parameter gain;  // [dim], ones
  Parameter bias;  // [dim], zeros

  LayerNormParams() = default;
  LayerNormParams(const std::string& name, std::size_t dim);

  Var operator()(Ctx& ctx, const Var& x);
  void collect(std::vector<Parameter*>& out);
};

}  // namespace mmloco::encoders
