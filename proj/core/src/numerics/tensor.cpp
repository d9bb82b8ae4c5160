#include "mmloco/numerics/tensor.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace mmloco::numerics {

std::size_t shape_numel(const Shape& s) {
  std::size_t n = 1;
  for (std::size_t d : s) n *= d;
  return n;
}

std::string shape_str(const Shape& s) {
  std::ostringstream out;
  out << "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out << ",";
    out << s[i];
  }
  out << "]";
  return out.str();
}

Tensor::Tensor(Shape s, std::vector<double> d) : shape(std::move(s)), data(std::move(d)) {
  if (shape_numel(shape) != data.size())
    throw std::invalid_argument("tensor: shape " + shape_str(shape) + " does not match " +
                                std::to_string(data.size()) + " values");
}

Tensor::Tensor(double scalar) : shape{}, data{scalar} {}

Tensor Tensor::zeros(Shape s) {
  std::size_t n = shape_numel(s);
  return Tensor(std::move(s), std::vector<double>(n, 0.0));
}

Tensor Tensor::full(Shape s, double v) {
  std::size_t n = shape_numel(s);
  return Tensor(std::move(s), std::vector<double>(n, v));
}

double Tensor::scalar() const {
  if (!is_scalar()) throw std::invalid_argument("tensor: scalar() on shape " + shape_str(shape));
  return data[0];
}

bool Tensor::all_finite() const {
  for (double v : data)
    if (!std::isfinite(v)) return false;
  return true;
}

void require_finite(const Tensor& t, const char* where) {
  if (!t.all_finite())
    throw std::runtime_error(std::string("non-finite value produced by ") + where);
}

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

}  // namespace mmloco::numerics
