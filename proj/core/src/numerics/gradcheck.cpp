#include "mmloco/numerics/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace mmloco::numerics {

double finite_difference_check(const ScalarFn& f, const Tensor& x, double eps,
                               const std::vector<std::size_t>& coords) {
  Tensor analytic;
  {
    Tape tape;
    Var xv = tape.leaf(x);
    Var loss = f(tape, xv);
    tape.backward(loss);
    analytic = tape.grad(xv);
  }
  auto eval = [&f](const Tensor& at) {
    Tape tape;
    Var xv = tape.leaf(at);
    return f(tape, xv).val().scalar();
  };
  std::vector<std::size_t> idx = coords;
  if (idx.empty()) {
    idx.resize(x.numel());
    for (std::size_t i = 0; i < x.numel(); ++i) idx[i] = i;
  }
  double worst = 0.0;
  Tensor probe = x;
  for (std::size_t i : idx) {
    double orig = probe.data[i];
    probe.data[i] = orig + eps;
    double up = eval(probe);
    probe.data[i] = orig - eps;
    double down = eval(probe);
    probe.data[i] = orig;
    double numeric = (up - down) / (2.0 * eps);
    double a = analytic.data[i];
    double err = std::abs(a - numeric) / std::max(1.0, std::abs(a));
    worst = std::max(worst, err);
  }
  return worst;
}

}  // namespace mmloco::numerics
