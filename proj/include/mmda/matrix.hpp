#pragma once

#include <cstdint>
#include <initializer_list>
#include <vector>

#include "mmda/errors.hpp"

namespace mmda::numerics {

using idx = std::int64_t;

/// Dense row-major matrix of doubles. The single tensor type the whole
/// pipeline is built on; vectors are 1xN or Nx1 matrices.
class Matrix {
 public:
  Matrix() = default;
  Matrix(idx rows, idx cols) : rows_(rows), cols_(cols), v_(check_dims(rows, cols), 0.0) {}

  static Matrix from(std::initializer_list<std::initializer_list<double>> rows);
  static Matrix identity(idx n);
  static Matrix full(idx rows, idx cols, double value);

  idx rows() const { return rows_; }
  idx cols() const { return cols_; }
  idx size() const { return rows_ * cols_; }
  bool empty() const { return v_.empty(); }

  double& operator()(idx r, idx c) { return v_[static_cast<std::size_t>(r * cols_ + c)]; }
  double operator()(idx r, idx c) const { return v_[static_cast<std::size_t>(r * cols_ + c)]; }
  double* data() { return v_.data(); }
  const double* data() const { return v_.data(); }
  double* row(idx r) { return v_.data() + r * cols_; }
  const double* row(idx r) const { return v_.data() + r * cols_; }

  std::vector<double>& values() { return v_; }
  const std::vector<double>& values() const { return v_; }

  void fill(double value) { v_.assign(v_.size(), value); }
  bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }
  bool all_finite() const;

 private:
  static std::size_t check_dims(idx rows, idx cols) {
    if (rows < 0 || cols < 0) throw ShapeError("matrix dimensions must be non-negative");
    return static_cast<std::size_t>(rows * cols);
  }

  idx rows_ = 0;
  idx cols_ = 0;
  std::vector<double> v_;
};

}  // namespace mmda::numerics
