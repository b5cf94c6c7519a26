// Copyright (c) 2026 the snnt authors. Apache-2.0 license.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace snnt {

// Dimension sizes, outermost first. Rank 0 (empty shape) holds one scalar.
using Shape = std::vector<int>;

int64_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

// Dense row-major real array. Values are stored as 64-bit floats; a
// computation record may round op results to 32-bit (see Precision).
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape);  // zero-filled
  Tensor(Shape shape, std::vector<double> data);

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }
  static Tensor full(Shape shape, double value);
  static Tensor scalar(double value) { return Tensor({}, {value}); }
  static Tensor vec(std::vector<double> data);

  const Shape& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int dim(int i) const { return shape_[static_cast<size_t>(i)]; }
  int64_t size() const { return static_cast<int64_t>(data_.size()); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& values() { return data_; }
  const std::vector<double>& values() const { return data_; }

  double& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }
  double operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }

  // Rank-2 access, row major.
  double& at(int r, int c) { return data_[static_cast<size_t>(r) * shape_[1] + c]; }
  double at(int r, int c) const { return data_[static_cast<size_t>(r) * shape_[1] + c]; }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
  bool all_finite() const;

  bool operator==(const Tensor& other) const {
    return shape_ == other.shape_ && data_ == other.data_;
  }

 private:
  Shape shape_;
  std::vector<double> data_;
};

}  // namespace snnt
