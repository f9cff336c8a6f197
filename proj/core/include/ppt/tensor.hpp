#pragma once

#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

namespace ppt {

/// Dense row-major tensor of 64-bit floats. Plain value semantics; gradient
/// bookkeeping lives on the tape (see autodiff.hpp), not here.
class Tensor {
public:
  Tensor() = default;

  /// Zero-filled tensor of the given shape.
  explicit Tensor(std::vector<int> shape);
  Tensor(std::vector<int> shape, std::vector<double> data);

  static Tensor zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }
  static Tensor full(std::vector<int> shape, double value);
  static Tensor scalar(double value) { return Tensor({1}, {value}); }

  /// Row vector 1xN / matrix from nested initializer list.
  static Tensor row(std::initializer_list<double> values);
  static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);
  static Tensor identity(int n);

  const std::vector<int>& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int dim(int axis) const { return shape_[static_cast<size_t>(axis)]; }
  int64_t size() const { return static_cast<int64_t>(data_.size()); }
  bool empty() const { return data_.empty(); }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }
  double* ptr() { return data_.data(); }
  const double* ptr() const { return data_.data(); }

  double& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }
  double operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }

  /// Row-major 2-d access; no bounds checking beyond debug asserts.
  double& at(int i, int j) { return data_[static_cast<size_t>(i) * cols() + static_cast<size_t>(j)]; }
  double at(int i, int j) const { return data_[static_cast<size_t>(i) * cols() + static_cast<size_t>(j)]; }

  /// Number of rows/cols for rank-2 tensors (rank-1 counts as one row).
  int rows() const { return rank() == 2 ? shape_[0] : 1; }
  int cols() const { return rank() == 2 ? shape_[1] : (rank() == 1 ? shape_[0] : 0); }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
  bool all_finite() const;

  std::string shape_str() const;
  static std::string shape_str(const std::vector<int>& shape);
  static int64_t shape_size(const std::vector<int>& shape);

private:
  std::vector<int> shape_;
  std::vector<double> data_;
};

}  // namespace ppt
