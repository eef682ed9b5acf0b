#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace raf {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_str(const Shape& shape);

/// Dense row-major tensor of doubles, rank 0 to 3.
class Tensor {
 public:
  Tensor() : Tensor(Shape{}, 0.0) {}
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor scalar(double value) { return Tensor(Shape{}, value); }
  static Tensor vector(std::vector<double> values);
  /// rows x cols matrix from row-major values.
  static Tensor matrix(std::size_t rows, std::size_t cols,
                       std::vector<double> values);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  /// Element of a rank-2 tensor.
  double& at(std::size_t r, std::size_t c) { return data_[r * shape_[1] + c]; }
  double at(std::size_t r, std::size_t c) const {
    return data_[r * shape_[1] + c];
  }

  /// Value of a single-element tensor.
  double item() const;

  bool all_finite() const noexcept;
  Tensor reshaped(Shape shape) const;

 private:
  Shape shape_;
  std::vector<double> data_;
};

}  // namespace raf
