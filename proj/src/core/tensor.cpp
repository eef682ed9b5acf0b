#include "raf/tensor.hpp"

#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>
#include <utility>

#include "raf/errors.hpp"

namespace raf {

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

std::string shape_str(const Shape& shape) {
  std::ostringstream out;
  out << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << ", ";
    out << shape[i];
  }
  out << ')';
  return out.str();
}

Tensor::Tensor(Shape shape, double fill)
    : shape_(std::move(shape)), data_(shape_size(shape_), fill) {
  RAF_REQUIRE(shape_.size() <= 3, "tensor rank above 3: " + shape_str(shape_));
}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  RAF_REQUIRE(shape_.size() <= 3, "tensor rank above 3: " + shape_str(shape_));
  RAF_REQUIRE(data_.size() == shape_size(shape_),
              "tensor data length " + std::to_string(data_.size()) +
                  " does not match shape " + shape_str(shape_));
}

Tensor Tensor::vector(std::vector<double> values) {
  const std::size_t n = values.size();
  return Tensor(Shape{n}, std::move(values));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols,
                      std::vector<double> values) {
  return Tensor(Shape{rows, cols}, std::move(values));
}

double Tensor::item() const {
  RAF_REQUIRE(data_.size() == 1,
              "item() on tensor of shape " + shape_str(shape_));
  return data_[0];
}

bool Tensor::all_finite() const noexcept {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

Tensor Tensor::reshaped(Shape shape) const {
  RAF_REQUIRE(shape_size(shape) == data_.size(),
              "cannot reshape " + shape_str(shape_) + " to " + shape_str(shape));
  return Tensor(std::move(shape), data_);
}

}  // namespace raf
