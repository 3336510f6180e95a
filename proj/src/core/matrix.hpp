#pragma once

#include <cassert>
#include <cstddef>
#include <span>
#include <vector>

namespace tal {

using Vec = std::vector<double>;

// Dense row-major matrix of doubles. Small enough on purpose: the whole
// pipeline runs on desk-scale shapes, so plain loops beat any dependency.
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(static_cast<size_t>(rows) * cols, fill) {}

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  double& operator()(int r, int c) {
    assert(r >= 0 && r < rows_ && c >= 0 && c < cols_);
    return data_[static_cast<size_t>(r) * cols_ + c];
  }
  double operator()(int r, int c) const {
    assert(r >= 0 && r < rows_ && c >= 0 && c < cols_);
    return data_[static_cast<size_t>(r) * cols_ + c];
  }

  std::span<double> row(int r) {
    return {data_.data() + static_cast<size_t>(r) * cols_, static_cast<size_t>(cols_)};
  }
  std::span<const double> row(int r) const {
    return {data_.data() + static_cast<size_t>(r) * cols_, static_cast<size_t>(cols_)};
  }

  Vec& data() { return data_; }
  const Vec& data() const { return data_; }

  void fill(double v) { data_.assign(data_.size(), v); }

  bool operator==(const Matrix&) const = default;

 private:
  int rows_ = 0;
  int cols_ = 0;
  Vec data_;
};

// y = A x
inline void matvec(const Matrix& a, std::span<const double> x, std::span<double> y) {
  assert(static_cast<int>(x.size()) == a.cols() && static_cast<int>(y.size()) == a.rows());
  for (int r = 0; r < a.rows(); ++r) {
    double acc = 0.0;
    const auto row = a.row(r);
    for (int c = 0; c < a.cols(); ++c) acc += row[c] * x[c];
    y[r] = acc;
  }
}

// y += A x
inline void matvec_add(const Matrix& a, std::span<const double> x, std::span<double> y) {
  assert(static_cast<int>(x.size()) == a.cols() && static_cast<int>(y.size()) == a.rows());
  for (int r = 0; r < a.rows(); ++r) {
    double acc = 0.0;
    const auto row = a.row(r);
    for (int c = 0; c < a.cols(); ++c) acc += row[c] * x[c];
    y[r] += acc;
  }
}

// y += A^T x
inline void tmatvec_add(const Matrix& a, std::span<const double> x, std::span<double> y) {
  assert(static_cast<int>(x.size()) == a.rows() && static_cast<int>(y.size()) == a.cols());
  for (int r = 0; r < a.rows(); ++r) {
    const double xr = x[r];
    const auto row = a.row(r);
    for (int c = 0; c < a.cols(); ++c) y[c] += row[c] * xr;
  }
}

// A += u v^T
inline void add_outer(Matrix& a, std::span<const double> u, std::span<const double> v) {
  assert(static_cast<int>(u.size()) == a.rows() && static_cast<int>(v.size()) == a.cols());
  for (int r = 0; r < a.rows(); ++r) {
    const double ur = u[r];
    auto row = a.row(r);
    for (int c = 0; c < a.cols(); ++c) row[c] += ur * v[c];
  }
}

}  // namespace tal
