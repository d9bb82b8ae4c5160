#pragma once

#include <vector>

#include "mmloco/numerics/tape.hpp"

namespace mmloco::numerics {

// Elementwise binary ops. Broadcasting is deliberately narrow: same shape,
// scalar on either side, or a rank-1 vector against the trailing dimension.
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var div(const Var& a, const Var& b);

// Elementwise min/max; ties route the gradient to the first operand.
Var minimum(const Var& a, const Var& b);
Var maximum(const Var& a, const Var& b);

Var neg(const Var& x);
Var square(const Var& x);
Var tanh(const Var& x);
Var exp(const Var& x);
Var log(const Var& x);
Var sqrt(const Var& x);
Var softplus(const Var& x);
Var elu(const Var& x);
Var relu(const Var& x);

// Pass-through gradient strictly inside (lo, hi), zero outside.
Var clamp(const Var& x, double lo, double hi);

// [m,k] x [k,n] -> [m,n]
Var matmul(const Var& a, const Var& b);

Var reshape(const Var& x, Shape s);
// Swap axes 1 and 2 of a rank-3 tensor.
Var transpose_12(const Var& x);
// Repeat a tensor along a new trailing axis of size n.
Var expand_last(const Var& x, std::size_t n);
// Repeat a rank-2 tensor along a new middle axis: [B,K] -> [B,n,K].
Var expand_axis1(const Var& x, std::size_t n);
Var concat(const std::vector<Var>& xs, std::size_t axis);

Var sum_all(const Var& x);
Var mean_all(const Var& x);
Var sum_axis(const Var& x, std::size_t axis);
Var mean_axis(const Var& x, std::size_t axis);
// Population variance (1/n) along axis.
Var variance_axis(const Var& x, std::size_t axis);
// Max along axis; gradient goes only to the argmax, lowest index on ties.
Var max_axis(const Var& x, std::size_t axis);

// Normalization over the trailing axis with learnable gain/bias (rank-1).
Var layer_norm(const Var& x, const Var& gain, const Var& bias, double eps = 1e-6);

// Mean squared error over all elements.
Var mse(const Var& a, const Var& b);

// Untracked tensor utilities.
Tensor gather_rows(const Tensor& x, const std::vector<std::size_t>& rows);

}  // namespace mmloco::numerics
