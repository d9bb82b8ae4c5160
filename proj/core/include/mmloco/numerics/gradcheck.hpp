#pragma once

#include <functional>
#include <vector>

#include "mmloco/numerics/ops.hpp"

namespace mmloco::numerics {

// Scalar-valued differentiable function under test: given a tape and an input
// leaf, returns the scalar loss variable.
using ScalarFn = std::function<Var(Tape&, const Var&)>;

// Max over coordinates of |analytic - central difference| / max(1, |analytic|).
// `coords` restricts the check to a coordinate subset (all when empty), which
// keeps checks on wide networks inside the runtime budget.
double finite_difference_check(const ScalarFn& f, const Tensor& x, double eps = 1e-5,
                               const std::vector<std::size_t>& coords = {});

}  // namespace mmloco::numerics
