#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace rmc {

// Dense row-major matrix of doubles. Storage order is part of the contract:
// file output and trace accumulation traverse entries in row-major order.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols);
  // Takes ownership of `data` (row-major, size rows*cols); rejects NaN/Inf.
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }
  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }

  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

  static Matrix identity(std::size_t n);

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transposed(const Matrix& a);
Matrix left_columns(const Matrix& a, std::size_t k);
Matrix hcat(const Matrix& a, const Matrix& b);

double frobenius_norm(const Matrix& a);
double max_abs(const Matrix& a);
double max_abs_diff(const Matrix& a, const Matrix& b);

// max |u^T u - I|, the usual orthonormality defect
double orthonormality_defect(const Matrix& u);

}  // namespace rmc
