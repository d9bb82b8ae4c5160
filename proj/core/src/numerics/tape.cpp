#include "mmloco/numerics/tape.hpp"

#include <stdexcept>

namespace mmloco::numerics {

Var constant(Tensor t) {
  return Var(std::make_shared<const Tensor>(std::move(t)), nullptr, -1);
}

Var constant(double scalar) { return constant(Tensor(scalar)); }

Var Tape::leaf(Tensor value) { return leaf(std::make_shared<const Tensor>(std::move(value))); }

Var Tape::leaf(std::shared_ptr<const Tensor> value) {
  nodes_.push_back(Node{value, PullFn{}, Tensor{}, false});
  return Var(std::move(value), this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::record(std::shared_ptr<const Tensor> value, PullFn pull) {
  nodes_.push_back(Node{value, std::move(pull), Tensor{}, false});
  return Var(std::move(value), this, static_cast<int>(nodes_.size()) - 1);
}

Tensor& Tape::grad_slot(int node) {
  Node& n = nodes_[static_cast<std::size_t>(node)];
  if (!n.grad_alloc) {
    n.grad = Tensor::zeros(n.value->shape);
    n.grad_alloc = true;
  }
  return n.grad;
}

void Tape::add_grad(int node, const Tensor& g) {
  Tensor& slot = grad_slot(node);
  if (!slot.same_shape(g))
    throw std::runtime_error("tape: gradient shape " + shape_str(g.shape) +
                             " does not match node shape " + shape_str(slot.shape));
  for (std::size_t i = 0; i < slot.data.size(); ++i) slot.data[i] += g.data[i];
}

void Tape::add_grad_at(int node, std::size_t flat_index, double g) {
  grad_slot(node).data[flat_index] += g;
}

void Tape::backward(const Var& loss) {
  if (loss.tape != this || !loss.tracked())
    throw std::invalid_argument("tape: backward on a variable from another tape");
  if (!loss.val().is_scalar())
    throw std::invalid_argument("tape: backward requires a scalar loss, got shape " +
                                shape_str(loss.val().shape));
  // Reset gradients from any previous pass.
  for (Node& n : nodes_) n.grad_alloc = false;
  grad_slot(loss.node).data[0] = 1.0;
  for (int i = loss.node; i >= 0; --i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (!n.grad_alloc || !n.pull) continue;
    n.pull(n.grad, *this);
  }
  ran_backward_ = true;
}

Tensor Tape::grad(const Var& v) const {
  if (v.tape != this || !v.tracked())
    throw std::invalid_argument("tape: grad of a variable not on this tape");
  if (!ran_backward_) throw std::logic_error("tape: grad() before backward()");
  const Node& n = nodes_[static_cast<std::size_t>(v.node)];
  if (!n.grad_alloc) return Tensor::zeros(n.value->shape);
  return n.grad;
}

}  // namespace mmloco::numerics
