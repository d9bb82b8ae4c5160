#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace mmloco::numerics {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& s);
std::string shape_str(const Shape& s);

// Dense row-major 64-bit tensor. Every operation in this library checks that
// its result is finite; NaN/Inf anywhere is treated as a hard error.
struct Tensor {
  Shape shape;
  std::vector<double> data;

  Tensor() = default;
  Tensor(Shape s, std::vector<double> d);
  explicit Tensor(double scalar);

  static Tensor zeros(Shape s);
  static Tensor full(Shape s, double v);

  std::size_t numel() const { return data.size(); }
  std::size_t rank() const { return shape.size(); }
  std::size_t dim(std::size_t i) const { return shape.at(i); }

  bool is_scalar() const { return numel() == 1; }
  double scalar() const;

  double& at(std::size_t i) { return data[i]; }
  double at(std::size_t i) const { return data[i]; }
  double& at2(std::size_t r, std::size_t c) { return data[r * shape[1] + c]; }
  double at2(std::size_t r, std::size_t c) const { return data[r * shape[1] + c]; }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }
  bool all_finite() const;
};

// Throws if t contains NaN/Inf; `where` names the producing operation.
void require_finite(const Tensor& t, const char* where);
void require(bool cond, const std::string& msg);

}  // namespace mmloco::numerics
