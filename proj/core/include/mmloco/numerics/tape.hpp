#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "mmloco/numerics/tensor.hpp"

namespace mmloco::numerics {

class Tape;

// Handle to a tensor that may be recorded on a tape. node < 0 marks an
// untracked constant: ops that see only constants stay off the tape entirely.
struct Var {
  std::shared_ptr<const Tensor> value;
  Tape* tape = nullptr;
  int node = -1;

  Var() = default;
  Var(std::shared_ptr<const Tensor> v, Tape* t, int n) : value(std::move(v)), tape(t), node(n) {}

  const Tensor& val() const { return *value; }
  bool tracked() const { return node >= 0; }
  const Shape& shape() const { return value->shape; }
};

Var constant(Tensor t);
Var constant(double scalar);

// Reverse-mode tape. Nodes are appended in execution order, which is a valid
// topological order by construction; backward walks it once in reverse.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Registers a gradient leaf (network parameter or checked input).
  Var leaf(Tensor value);
  Var leaf(std::shared_ptr<const Tensor> value);

  // Used by ops: records an interior node whose pull function scatters the
  // node's gradient into its parents' gradients.
  using PullFn = std::function<void(const Tensor& grad_out, Tape& tape)>;
  Var record(std::shared_ptr<const Tensor> value, PullFn pull);

  // Accumulates g into the gradient slot of node i.
  void add_grad(int node, const Tensor& g);
  void add_grad_at(int node, std::size_t flat_index, double g);

  // Gradient of a scalar loss w.r.t. every leaf. Non-scalar loss is an error.
  void backward(const Var& loss);

  // Gradient of the last backward() w.r.t. v (zeros if v was unreachable).
  Tensor grad(const Var& v) const;

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    std::shared_ptr<const Tensor> value;
    PullFn pull;             // empty for leaves
    Tensor grad;
    bool grad_alloc = false;
  };

  Tensor& grad_slot(int node);

  std::vector<Node> nodes_;
  bool ran_backward_ = false;
};

}  // namespace mmloco::numerics
