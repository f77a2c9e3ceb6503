#pragma once

// Minimal dense row-major storage and the handful of BLAS-2 kernels the
// network needs. Everything is double precision.

#include <cstddef>
#include <span>
#include <vector>

namespace morphdis {

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<double> flat() { return data_; }
  std::span<const double> flat() const { return data_; }

  void fill(double v) { data_.assign(data_.size(), v); }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// y = W x + b
inline void affine(const Matrix& w, std::span<const double> x,
                   std::span<const double> b, std::span<double> y) {
  for (std::size_t r = 0; r < w.rows(); ++r) {
    const double* wr = w.row(r).data();
    double acc = b[r];
    for (std::size_t c = 0; c < w.cols(); ++c) acc += wr[c] * x[c];
    y[r] = acc;
  }
}

// dx += W^T dy
inline void affine_transpose_acc(const Matrix& w, std::span<const double> dy,
                                 std::span<double> dx) {
  for (std::size_t r = 0; r < w.rows(); ++r) {
    const double* wr = w.row(r).data();
    const double g = dy[r];
    for (std::size_t c = 0; c < w.cols(); ++c) dx[c] += wr[c] * g;
  }
}

// W += u v^T
inline void outer_acc(Matrix& w, std::span<const double> u,
                      std::span<const double> v) {
  for (std::size_t r = 0; r < w.rows(); ++r) {
    double* wr = w.row(r).data();
    const double g = u[r];
    for (std::size_t c = 0; c < w.cols(); ++c) wr[c] += g * v[c];
  }
}

}  // namespace morphdis
