#include "mmda/matrix.hpp"

#include <cmath>

namespace mmda::numerics {

Matrix Matrix::from(std::initializer_list<std::initializer_list<double>> rows) {
  const idx r = static_cast<idx>(rows.size());
  const idx c = r > 0 ? static_cast<idx>(rows.begin()->size()) : 0;
  Matrix m(r, c);
  idx i = 0;
  for (const auto& row : rows) {
    if (static_cast<idx>(row.size()) != c) throw ShapeError("ragged initializer");
    idx j = 0;
    for (double v : row) m(i, j++) = v;
    ++i;
  }
  return m;
}

Matrix Matrix::identity(idx n) {
  Matrix m(n, n);
  for (idx i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::full(idx rows, idx cols, double value) {
  Matrix m(rows, cols);
  m.fill(value);
  return m;
}

bool Matrix::all_finite() const {
  for (double x : v_) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

}  // namespace mmda::numerics
