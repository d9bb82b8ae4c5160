#include "mmloco/numerics/ops.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

namespace mmloco::numerics {

namespace {

Tape* common_tape(std::initializer_list<const Var*> vs) {
  Tape* t = nullptr;
  for (const Var* v : vs) {
    if (!v->tracked()) continue;
    if (t && t != v->tape) throw std::invalid_argument("op: inputs live on different tapes");
    t = v->tape;
  }
  return t;
}

Var finish(const char* name, Tensor out, Tape* tape, Tape::PullFn pull) {
  require_finite(out, name);
  auto holder = std::make_shared<const Tensor>(std::move(out));
  if (!tape) return Var(holder, nullptr, -1);
  return tape->record(holder, std::move(pull));
}

enum class Bcast { kSame, kScalarL, kScalarR, kRowR };

Bcast bcast_kind(const char* name, const Tensor& a, const Tensor& b) {
  if (a.same_shape(b)) return Bcast::kSame;
  if (b.is_scalar()) return Bcast::kScalarR;
  if (a.is_scalar()) return Bcast::kScalarL;
  if (b.rank() == 1 && a.rank() >= 2 && a.shape.back() == b.numel()) return Bcast::kRowR;
  throw std::invalid_argument(std::string(name) + ": incompatible shapes " + shape_str(a.shape) +
                              " and " + shape_str(b.shape));
}

// Applies f(a_i, b_i) under the broadcast rules above.
template <class F>
Tensor ew_forward(Bcast k, const Tensor& a, const Tensor& b, F f) {
  switch (k) {
    case Bcast::kSame: {
      Tensor out = Tensor::zeros(a.shape);
      for (std::size_t i = 0; i < a.numel(); ++i) out.data[i] = f(a.data[i], b.data[i]);
      return out;
    }
    case Bcast::kScalarR: {
      Tensor out = Tensor::zeros(a.shape);
      double s = b.data[0];
      for (std::size_t i = 0; i < a.numel(); ++i) out.data[i] = f(a.data[i], s);
      return out;
    }
    case Bcast::kScalarL: {
      Tensor out = Tensor::zeros(b.shape);
      double s = a.data[0];
      for (std::size_t i = 0; i < b.numel(); ++i) out.data[i] = f(s, b.data[i]);
      return out;
    }
    case Bcast::kRowR: {
      Tensor out = Tensor::zeros(a.shape);
      std::size_t cols = b.numel();
      std::size_t rows = a.numel() / cols;
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c)
          out.data[r * cols + c] = f(a.data[r * cols + c], b.data[c]);
      return out;
    }
  }
  throw std::logic_error("unreachable");
}

// Scatters elementwise partials back through the broadcast. da/db evaluate
// the local partial with the operand values at a flat position.
template <class Da, class Db>
Tape::PullFn ew_pull(Bcast k, const Var& a, const Var& b, std::shared_ptr<const Tensor> av,
                     std::shared_ptr<const Tensor> bv, Da da, Db db) {
  int na = a.node, nb = b.node;
  return [k, na, nb, av, bv, da, db](const Tensor& g, Tape& tape) {
    const Tensor& A = *av;
    const Tensor& B = *bv;
    switch (k) {
      case Bcast::kSame:
        if (na >= 0)
          for (std::size_t i = 0; i < g.numel(); ++i)
            tape.add_grad_at(na, i, g.data[i] * da(A.data[i], B.data[i]));
        if (nb >= 0)
          for (std::size_t i = 0; i < g.numel(); ++i)
            tape.add_grad_at(nb, i, g.data[i] * db(A.data[i], B.data[i]));
        break;
      case Bcast::kScalarR: {
        double s = B.data[0];
        if (na >= 0)
          for (std::size_t i = 0; i < g.numel(); ++i)
            tape.add_grad_at(na, i, g.data[i] * da(A.data[i], s));
        if (nb >= 0) {
          double acc = 0.0;
          for (std::size_t i = 0; i < g.numel(); ++i) acc += g.data[i] * db(A.data[i], s);
          tape.add_grad_at(nb, 0, acc);
        }
        break;
      }
      case Bcast::kScalarL: {
        double s = A.data[0];
        if (nb >= 0)
          for (std::size_t i = 0; i < g.numel(); ++i)
            tape.add_grad_at(nb, i, g.data[i] * db(s, B.data[i]));
        if (na >= 0) {
          double acc = 0.0;
          for (std::size_t i = 0; i < g.numel(); ++i) acc += g.data[i] * da(s, B.data[i]);
          tape.add_grad_at(na, 0, acc);
        }
        break;
      }
      case Bcast::kRowR: {
        std::size_t cols = B.numel();
        std::size_t rows = A.numel() / cols;
        if (na >= 0)
          for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < cols; ++c) {
              std::size_t i = r * cols + c;
              tape.add_grad_at(na, i, g.data[i] * da(A.data[i], B.data[c]));
            }
        if (nb >= 0)
          for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < cols; ++c) {
              std::size_t i = r * cols + c;
              tape.add_grad_at(nb, c, g.data[i] * db(A.data[i], B.data[c]));
            }
        break;
      }
    }
  };
}

template <class F, class Da, class Db>
Var ew_binary(const char* name, const Var& a, const Var& b, F f, Da da, Db db) {
  Bcast k = bcast_kind(name, a.val(), b.val());
  Tensor out = ew_forward(k, a.val(), b.val(), f);
  Tape* tape = common_tape({&a, &b});
  Tape::PullFn pull;
  if (tape) pull = ew_pull(k, a, b, a.value, b.value, da, db);
  return finish(name, std::move(out), tape, std::move(pull));
}

template <class F, class DyDx>
Var ew_unary(const char* name, const Var& x, F f, DyDx dydx) {
  const Tensor& X = x.val();
  Tensor out = Tensor::zeros(X.shape);
  for (std::size_t i = 0; i < X.numel(); ++i) out.data[i] = f(X.data[i]);
  require_finite(out, name);
  auto holder = std::make_shared<const Tensor>(std::move(out));
  Tape* tape = common_tape({&x});
  if (!tape) return Var(holder, nullptr, -1);
  int nx = x.node;
  auto xv = x.value;
  // Some partials reuse the output (tanh, exp, sqrt): capture the holder.
  return tape->record(holder, [nx, xv, holder, dydx](const Tensor& g, Tape& tape2) {
    for (std::size_t i = 0; i < g.numel(); ++i)
      tape2.add_grad_at(nx, i, g.data[i] * dydx(xv->data[i], holder->data[i]));
  });
}

// (outer, n, inner) decomposition of a shape around `axis`.
struct AxisSplit {
  std::size_t outer, n, inner;
};

AxisSplit split_axis(const char* name, const Shape& s, std::size_t axis) {
  if (axis >= s.size())
    throw std::invalid_argument(std::string(name) + ": axis " + std::to_string(axis) +
                                " out of range for shape " + shape_str(s));
  AxisSplit sp{1, s[axis], 1};
  for (std::size_t i = 0; i < axis; ++i) sp.outer *= s[i];
  for (std::size_t i = axis + 1; i < s.size(); ++i) sp.inner *= s[i];
  return sp;
}

Shape drop_axis(const Shape& s, std::size_t axis) {
  Shape out;
  for (std::size_t i = 0; i < s.size(); ++i)
    if (i != axis) out.push_back(s[i]);
  return out;
}

void mm_nn(const double* A, const double* B, double* C, std::size_t m, std::size_t k,
           std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    double* ci = C + i * n;
    const double* ai = A + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      double a = ai[p];
      const double* bp = B + p * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += a * bp[j];
    }
  }
}

// C[m,n] += A[m,k] * B[n,k]^T
void mm_nt(const double* A, const double* B, double* C, std::size_t m, std::size_t k,
           std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = A + i * k;
    for (std::size_t j = 0; j < n; ++j) {
      const double* bj = B + j * k;
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += ai[p] * bj[p];
      C[i * n + j] += acc;
    }
  }
}

// C[k,n] += A[m,k]^T * B[m,n]
void mm_tn(const double* A, const double* B, double* C, std::size_t m, std::size_t k,
           std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = A + i * k;
    const double* bi = B + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      double a = ai[p];
      double* cp = C + p * n;
      for (std::size_t j = 0; j < n; ++j) cp[j] += a * bi[j];
    }
  }
}

double stable_softplus(double x) {
  if (x > 30.0) return x;
  if (x < -30.0) return std::exp(x);
  return std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0.0) {
    double e = std::exp(-x);
    return 1.0 / (1.0 + e);
  }
  double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Var add(const Var& a, const Var& b) {
  return ew_binary(
      "add", a, b, [](double x, double y) { return x + y; },
      [](double, double) { return 1.0; }, [](double, double) { return 1.0; });
}

Var sub(const Var& a, const Var& b) {
  return ew_binary(
      "sub", a, b, [](double x, double y) { return x - y; },
      [](double, double) { return 1.0; }, [](double, double) { return -1.0; });
}

Var mul(const Var& a, const Var& b) {
  return ew_binary(
      "mul", a, b, [](double x, double y) { return x * y; },
      [](double, double y) { return y; }, [](double x, double) { return x; });
}

Var div(const Var& a, const Var& b) {
  return ew_binary(
      "div", a, b, [](double x, double y) { return x / y; },
      [](double, double y) { return 1.0 / y; },
      [](double x, double y) { return -x / (y * y); });
}

Var minimum(const Var& a, const Var& b) {
  return ew_binary(
      "minimum", a, b, [](double x, double y) { return x <= y ? x : y; },
      [](double x, double y) { return x <= y ? 1.0 : 0.0; },
      [](double x, double y) { return x <= y ? 0.0 : 1.0; });
}

Var maximum(const Var& a, const Var& b) {
  return ew_binary(
      "maximum", a, b, [](double x, double y) { return x >= y ? x : y; },
      [](double x, double y) { return x >= y ? 1.0 : 0.0; },
      [](double x, double y) { return x >= y ? 0.0 : 1.0; });
}

Var neg(const Var& x) {
  return ew_unary(
      "neg", x, [](double v) { return -v; }, [](double, double) { return -1.0; });
}

Var square(const Var& x) {
  return ew_unary(
      "square", x, [](double v) { return v * v; }, [](double v, double) { return 2.0 * v; });
}

Var tanh(const Var& x) {
  return ew_unary(
      "tanh", x, [](double v) { return std::tanh(v); },
      [](double, double y) { return 1.0 - y * y; });
}

Var exp(const Var& x) {
  return ew_unary(
      "exp", x, [](double v) { return std::exp(v); }, [](double, double y) { return y; });
}

Var log(const Var& x) {
  return ew_unary(
      "log", x, [](double v) { return std::log(v); }, [](double v, double) { return 1.0 / v; });
}

Var sqrt(const Var& x) {
  return ew_unary(
      "sqrt", x, [](double v) { return std::sqrt(v); },
      [](double, double y) { return 0.5 / y; });
}

Var softplus(const Var& x) {
  return ew_unary(
      "softplus", x, [](double v) { return stable_softplus(v); },
      [](double v, double) { return sigmoid(v); });
}

Var elu(const Var& x) {
  return ew_unary(
      "elu", x, [](double v) { return v > 0.0 ? v : std::expm1(v); },
      [](double v, double y) { return v > 0.0 ? 1.0 : y + 1.0; });
}

Var relu(const Var& x) {
  return ew_unary(
      "relu", x, [](double v) { return v > 0.0 ? v : 0.0; },
      [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Var clamp(const Var& x, double lo, double hi) {
  require(lo <= hi, "clamp: lo > hi");
  return ew_unary(
      "clamp", x,
      [lo, hi](double v) { return v < lo ? lo : (v > hi ? hi : v); },
      [lo, hi](double v, double) { return (v > lo && v < hi) ? 1.0 : 0.0; });
}

Var matmul(const Var& a, const Var& b) {
  const Tensor& A = a.val();
  const Tensor& B = b.val();
  require(A.rank() == 2 && B.rank() == 2,
          "matmul: expects rank-2 tensors, got " + shape_str(A.shape) + " and " +
              shape_str(B.shape));
  require(A.shape[1] == B.shape[0], "matmul: inner dimensions disagree: " + shape_str(A.shape) +
                                        " x " + shape_str(B.shape));
  std::size_t m = A.shape[0], k = A.shape[1], n = B.shape[1];
  Tensor out = Tensor::zeros({m, n});
  mm_nn(A.data.data(), B.data.data(), out.data.data(), m, k, n);
  Tape* tape = common_tape({&a, &b});
  Tape::PullFn pull;
  if (tape) {
    int na = a.node, nb = b.node;
    auto av = a.value, bv = b.value;
    pull = [na, nb, av, bv, m, k, n](const Tensor& g, Tape& tape2) {
      if (na >= 0) {
        Tensor da = Tensor::zeros({m, k});
        mm_nt(g.data.data(), bv->data.data(), da.data.data(), m, n, k);
        tape2.add_grad(na, da);
      }
      if (nb >= 0) {
        Tensor db = Tensor::zeros({k, n});
        mm_tn(av->data.data(), g.data.data(), db.data.data(), m, k, n);
        tape2.add_grad(nb, db);
      }
    };
  }
  return finish("matmul", std::move(out), tape, std::move(pull));
}

Var reshape(const Var& x, Shape s) {
  const Tensor& X = x.val();
  require(shape_numel(s) == X.numel(),
          "reshape: " + shape_str(X.shape) + " -> " + shape_str(s) + " changes element count");
  Tensor out(std::move(s), X.data);
  Tape* tape = common_tape({&x});
  Tape::PullFn pull;
  if (tape) {
    int nx = x.node;
    Shape orig = X.shape;
    pull = [nx, orig](const Tensor& g, Tape& tape2) {
      tape2.add_grad(nx, Tensor(orig, g.data));
    };
  }
  return finish("reshape", std::move(out), tape, std::move(pull));
}

Var transpose_12(const Var& x) {
  const Tensor& X = x.val();
  require(X.rank() == 3, "transpose_12: expects rank-3, got " + shape_str(X.shape));
  std::size_t b = X.shape[0], t = X.shape[1], c = X.shape[2];
  Tensor out = Tensor::zeros({b, c, t});
  for (std::size_t i = 0; i < b; ++i)
    for (std::size_t j = 0; j < t; ++j)
      for (std::size_t p = 0; p < c; ++p)
        out.data[(i * c + p) * t + j] = X.data[(i * t + j) * c + p];
  Tape* tape = common_tape({&x});
  Tape::PullFn pull;
  if (tape) {
    int nx = x.node;
    pull = [nx, b, t, c](const Tensor& g, Tape& tape2) {
      Tensor dx = Tensor::zeros({b, t, c});
      for (std::size_t i = 0; i < b; ++i)
        for (std::size_t p = 0; p < c; ++p)
          for (std::size_t j = 0; j < t; ++j)
            dx.data[(i * t + j) * c + p] = g.data[(i * c + p) * t + j];
      tape2.add_grad(nx, dx);
    };
  }
  return finish("transpose_12", std::move(out), tape, std::move(pull));
}

Var expand_last(const Var& x, std::size_t n) {
  const Tensor& X = x.val();
  require(n > 0, "expand_last: n must be positive");
  Shape s = X.shape;
  s.push_back(n);
  Tensor out = Tensor::zeros(s);
  for (std::size_t i = 0; i < X.numel(); ++i)
    for (std::size_t j = 0; j < n; ++j) out.data[i * n + j] = X.data[i];
  Tape* tape = common_tape({&x});
  Tape::PullFn pull;
  if (tape) {
    int nx = x.node;
    std::size_t m = X.numel();
    pull = [nx, m, n](const Tensor& g, Tape& tape2) {
      for (std::size_t i = 0; i < m; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) acc += g.data[i * n + j];
        tape2.add_grad_at(nx, i, acc);
      }
    };
  }
  return finish("expand_last", std::move(out), tape, std::move(pull));
}

Var expand_axis1(const Var& x, std::size_t n) {
  const Tensor& X = x.val();
  require(X.rank() == 2, "expand_axis1: expects rank-2, got " + shape_str(X.shape));
  require(n > 0, "expand_axis1: n must be positive");
  std::size_t b = X.shape[0], k = X.shape[1];
  Tensor out = Tensor::zeros({b, n, k});
  for (std::size_t i = 0; i < b; ++i)
    for (std::size_t j = 0; j < n; ++j)
      std::memcpy(out.data.data() + (i * n + j) * k, X.data.data() + i * k, k * sizeof(double));
  Tape* tape = common_tape({&x});
  Tape::PullFn pull;
  if (tape) {
    int nx = x.node;
    pull = [nx, b, n, k](const Tensor& g, Tape& tape2) {
      for (std::size_t i = 0; i < b; ++i)
        for (std::size_t j = 0; j < n; ++j)
          for (std::size_t c = 0; c < k; ++c)
            tape2.add_grad_at(nx, i * k + c, g.data[(i * n + j) * k + c]);
    };
  }
  return finish("expand_axis1", std::move(out), tape, std::move(pull));
}

Var concat(const std::vector<Var>& xs, std::size_t axis) {
  require(!xs.empty(), "concat: empty input list");
  const Shape& ref = xs[0].val().shape;
  require(axis < ref.size(), "concat: axis out of range");
  std::size_t total = 0;
  for (const Var& v : xs) {
    const Shape& s = v.val().shape;
    require(s.size() == ref.size(), "concat: rank mismatch");
    for (std::size_t i = 0; i < s.size(); ++i)
      require(i == axis || s[i] == ref[i], "concat: shapes differ off-axis");
    total += s[axis];
  }
  Shape out_shape = ref;
  out_shape[axis] = total;
  Tensor out = Tensor::zeros(out_shape);
  AxisSplit sp = split_axis("concat", out_shape, axis);
  std::size_t offset = 0;
  std::vector<std::size_t> offsets;
  for (const Var& v : xs) {
    offsets.push_back(offset);
    const Tensor& X = v.val();
    std::size_t nx = X.shape[axis];
    for (std::size_t o = 0; o < sp.outer; ++o)
      std::memcpy(out.data.data() + (o * sp.n + offset) * sp.inner,
                  X.data.data() + o * nx * sp.inner, nx * sp.inner * sizeof(double));
    offset += nx;
  }
  std::vector<const Var*> ptrs;
  for (const Var& v : xs) ptrs.push_back(&v);
  Tape* tape = nullptr;
  for (const Var* p : ptrs)
    if (p->tracked()) {
      if (tape && tape != p->tape) throw std::invalid_argument("concat: inputs on different tapes");
      tape = p->tape;
    }
  Tape::PullFn pull;
  if (tape) {
    std::vector<int> nodes;
    std::vector<std::size_t> sizes;
    for (const Var& v : xs) {
      nodes.push_back(v.node);
      sizes.push_back(v.val().shape[axis]);
    }
    pull = [nodes, sizes, offsets, sp](const Tensor& g, Tape& tape2) {
      for (std::size_t idx = 0; idx < nodes.size(); ++idx) {
        if (nodes[idx] < 0) continue;
        std::size_t nx = sizes[idx];
        for (std::size_t o = 0; o < sp.outer; ++o)
          for (std::size_t j = 0; j < nx * sp.inner; ++j) {
            double gv = g.data[(o * sp.n + offsets[idx]) * sp.inner + j];
            tape2.add_grad_at(nodes[idx], o * nx * sp.inner + j, gv);
          }
      }
    };
  }
  return finish("concat", std::move(out), tape, std::move(pull));
}

Var sum_all(const Var& x) {
  const Tensor& X = x.val();
  double acc = 0.0;
  for (double v : X.data) acc += v;
  Tape* tape = common_tape({&x});
  Tape::PullFn pull;
  if (tape) {
    int nx = x.node;
    std::size_t n = X.numel();
    pull = [nx, n](const Tensor& g, Tape& tape2) {
      double gv = g.data[0];
      for (std::size_t i = 0; i < n; ++i) tape2.add_grad_at(nx, i, gv);
    };
  }
  return finish("sum_all", Tensor(acc), tape, std::move(pull));
}

Var mean_all(const Var& x) {
  const Tensor& X = x.val();
  require(X.numel() > 0, "mean_all: empty tensor");
  double acc = 0.0;
  for (double v : X.data) acc += v;
  double n = static_cast<double>(X.numel());
  Tape* tape = common_tape({&x});
  Tape::PullFn pull;
  if (tape) {
    int nx = x.node;
    std::size_t cnt = X.numel();
    pull = [nx, cnt, n](const Tensor& g, Tape& tape2) {
      double gv = g.data[0] / n;
      for (std::size_t i = 0; i < cnt; ++i) tape2.add_grad_at(nx, i, gv);
    };
  }
  return finish("mean_all", Tensor(acc / n), tape, std::move(pull));
}

namespace {

template <class Accum, class Pull>
Var reduce_axis(const char* name, const Var& x, std::size_t axis, Accum accum, Pull make_pull) {
  const Tensor& X = x.val();
  AxisSplit sp = split_axis(name, X.shape, axis);
  require(sp.n > 0, std::string(name) + ": reduction over empty axis");
  Tensor out = Tensor::zeros(drop_axis(X.shape, axis));
  accum(X, sp, out);
  Tape* tape = common_tape({&x});
  Tape::PullFn pull;
  if (tape) pull = make_pull(x.node, x.value, sp);
  return finish(name, std::move(out), tape, std::move(pull));
}

}  // namespace

Var sum_axis(const Var& x, std::size_t axis) {
  return reduce_axis(
      "sum_axis", x, axis,
      [](const Tensor& X, AxisSplit sp, Tensor& out) {
        for (std::size_t o = 0; o < sp.outer; ++o)
          for (std::size_t j = 0; j < sp.n; ++j)
            for (std::size_t i = 0; i < sp.inner; ++i)
              out.data[o * sp.inner + i] += X.data[(o * sp.n + j) * sp.inner + i];
      },
      [](int nx, std::shared_ptr<const Tensor>, AxisSplit sp) {
        return [nx, sp](const Tensor& g, Tape& tape2) {
          for (std::size_t o = 0; o < sp.outer; ++o)
            for (std::size_t j = 0; j < sp.n; ++j)
              for (std::size_t i = 0; i < sp.inner; ++i)
                tape2.add_grad_at(nx, (o * sp.n + j) * sp.inner + i, g.data[o * sp.inner + i]);
        };
      });
}

Var mean_axis(const Var& x, std::size_t axis) {
  return reduce_axis(
      "mean_axis", x, axis,
      [](const Tensor& X, AxisSplit sp, Tensor& out) {
        for (std::size_t o = 0; o < sp.outer; ++o)
          for (std::size_t j = 0; j < sp.n; ++j)
            for (std::size_t i = 0; i < sp.inner; ++i)
              out.data[o * sp.inner + i] += X.data[(o * sp.n + j) * sp.inner + i];
        double inv = 1.0 / static_cast<double>(sp.n);
        for (double& v : out.data) v *= inv;
      },
      [](int nx, std::shared_ptr<const Tensor>, AxisSplit sp) {
        return [nx, sp](const Tensor& g, Tape& tape2) {
          double inv = 1.0 / static_cast<double>(sp.n);
          for (std::size_t o = 0; o < sp.outer; ++o)
            for (std::size_t j = 0; j < sp.n; ++j)
              for (std::size_t i = 0; i < sp.inner; ++i)
                tape2.add_grad_at(nx, (o * sp.n + j) * sp.inner + i,
                                  g.data[o * sp.inner + i] * inv);
        };
      });
}

Var variance_axis(const Var& x, std::size_t axis) {
  // Population variance: mean((x - mean)^2).
  return reduce_axis(
      "variance_axis", x, axis,
      [](const Tensor& X, AxisSplit sp, Tensor& out) {
        for (std::size_t o = 0; o < sp.outer; ++o)
          for (std::size_t i = 0; i < sp.inner; ++i) {
            double mean = 0.0;
            for (std::size_t j = 0; j < sp.n; ++j) mean += X.data[(o * sp.n + j) * sp.inner + i];
            mean /= static_cast<double>(sp.n);
            double acc = 0.0;
            for (std::size_t j = 0; j < sp.n; ++j) {
              double d = X.data[(o * sp.n + j) * sp.inner + i] - mean;
              acc += d * d;
            }
            out.data[o * sp.inner + i] = acc / static_cast<double>(sp.n);
          }
      },
      [](int nx, std::shared_ptr<const Tensor> xv, AxisSplit sp) {
        return [nx, xv, sp](const Tensor& g, Tape& tape2) {
          const Tensor& X = *xv;
          double inv_n = 1.0 / static_cast<double>(sp.n);
          for (std::size_t o = 0; o < sp.outer; ++o)
            for (std::size_t i = 0; i < sp.inner; ++i) {
              double mean = 0.0;
              for (std::size_t j = 0; j < sp.n; ++j) mean += X.data[(o * sp.n + j) * sp.inner + i];
              mean *= inv_n;
              double gv = g.data[o * sp.inner + i];
              for (std::size_t j = 0; j < sp.n; ++j) {
                std::size_t idx = (o * sp.n + j) * sp.inner + i;
                tape2.add_grad_at(nx, idx, gv * 2.0 * (X.data[idx] - mean) * inv_n);
              }
            }
        };
      });
}

Var max_axis(const Var& x, std::size_t axis) {
  const Tensor& X = x.val();
  AxisSplit sp = split_axis("max_axis", X.shape, axis);
  require(sp.n > 0, "max_axis: reduction over empty axis");
  Tensor out = Tensor::zeros(drop_axis(X.shape, axis));
  // Ties resolve to the lowest index so the backward routing is deterministic.
  std::vector<std::size_t> arg(out.numel(), 0);
  for (std::size_t o = 0; o < sp.outer; ++o)
    for (std::size_t i = 0; i < sp.inner; ++i) {
      double best = X.data[(o * sp.n + 0) * sp.inner + i];
      std::size_t best_j = 0;
      for (std::size_t j = 1; j < sp.n; ++j) {
        double v = X.data[(o * sp.n + j) * sp.inner + i];
        if (v > best) {
          best = v;
          best_j = j;
        }
      }
      out.data[o * sp.inner + i] = best;
      arg[o * sp.inner + i] = best_j;
    }
  Tape* tape = common_tape({&x});
  Tape::PullFn pull;
  if (tape) {
    int nx = x.node;
    pull = [nx, arg, sp](const Tensor& g, Tape& tape2) {
      for (std::size_t o = 0; o < sp.outer; ++o)
        for (std::size_t i = 0; i < sp.inner; ++i) {
          std::size_t j = arg[o * sp.inner + i];
          tape2.add_grad_at(nx, (o * sp.n + j) * sp.inner + i, g.data[o * sp.inner + i]);
        }
    };
  }
  return finish("max_axis", std::move(out), tape, std::move(pull));
}

Var layer_norm(const Var& x, const Var& gain, const Var& bias, double eps) {
  const Shape& s = x.val().shape;
  require(!s.empty(), "layer_norm: scalar input");
  std::size_t c = s.back();
  require(gain.val().rank() == 1 && gain.val().numel() == c, "layer_norm: gain shape mismatch");
  require(bias.val().rank() == 1 && bias.val().numel() == c, "layer_norm: bias shape mismatch");
  std::size_t axis = s.size() - 1;
  Var mu = expand_last(mean_axis(x, axis), c);
  Var var = expand_last(variance_axis(x, axis), c);
  Var normed = div(sub(x, mu), sqrt(add(var, constant(eps))));
  return add(mul(normed, gain), bias);
}

Var mse(const Var& a, const Var& b) {
  require(a.val().same_shape(b.val()), "mse: shape mismatch " + shape_str(a.val().shape) + " vs " +
                                           shape_str(b.val().shape));
  return mean_all(square(sub(a, b)));
}

Tensor gather_rows(const Tensor& x, const std::vector<std::size_t>& rows) {
  require(x.rank() == 2, "gather_rows: expects rank-2");
  std::size_t c = x.shape[1];
  Tensor out = Tensor::zeros({rows.size(), c});
  for (std::size_t r = 0; r < rows.size(); ++r) {
    require(rows[r] < x.shape[0], "gather_rows: index out of range");
    std::memcpy(out.data.data() + r * c, x.data.data() + rows[r] * c, c * sizeof(double));
  }
  return out;
}

}  // namespace mmloco::numerics
