// Copyright (c) 2026 the snnt authors. Apache-2.0 license.
#include "snnt/tensor.hpp"

#include <cmath>
#include <sstream>

#include "snnt/errors.hpp"

namespace snnt {

int64_t shape_numel(const Shape& shape) {
  int64_t n = 1;
  for (int d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ",";
    os << shape[i];
  }
  os << "]";
  return os.str();
}

Tensor::Tensor(Shape shape) : shape_(std::move(shape)) {
  for (int d : shape_) {
    if (d <= 0) throw ShapeError("non-positive dimension in shape " + shape_str(shape_));
  }
  data_.assign(static_cast<size_t>(shape_numel(shape_)), 0.0);
}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  for (int d : shape_) {
    if (d <= 0) throw ShapeError("non-positive dimension in shape " + shape_str(shape_));
  }
  if (shape_numel(shape_) != static_cast<int64_t>(data_.size())) {
    throw ShapeError("shape " + shape_str(shape_) + " does not match " +
                     std::to_string(data_.size()) + " values");
  }
}

Tensor Tensor::full(Shape shape, double value) {
  Tensor t(std::move(shape));
  for (auto& v : t.data_) v = value;
  return t;
}

Tensor Tensor::vec(std::vector<double> data) {
  Shape shape{static_cast<int>(data.size())};
  return Tensor(std::move(shape), std::move(data));
}

bool Tensor::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

}  // namespace snnt
