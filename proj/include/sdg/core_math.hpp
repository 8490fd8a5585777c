#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <span>
#include <vector>

namespace sdg {

/// Flat array of reals: model parameters or any gradient over them.
class ParamVector {
 public:
  ParamVector() = default;
  explicit ParamVector(std::size_t n, double fill = 0.0) : values_(n, fill) {}
  ParamVector(std::initializer_list<double> init) : values_(init) {}
  explicit ParamVector(std::vector<double> values) : values_(std::move(values)) {}

  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  std::span<double> span() noexcept { return values_; }
  std::span<const double> span() const noexcept { return values_; }
  const std::vector<double>& values() const noexcept { return values_; }

  auto begin() noexcept { return values_.begin(); }
  auto end() noexcept { return values_.end(); }
  auto begin() const noexcept { return values_.begin(); }
  auto end() const noexcept { return values_.end(); }

  bool operator==(const ParamVector&) const = default;

 private:
  std::vector<double> values_;
};

/// Row-major dense matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), values_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> values);
  // Nested-list literal; all rows must have equal length.
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {values_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {values_.data() + r * cols_, cols_}; }

  std::span<const double> data() const noexcept { return values_; }
  std::span<double> data() noexcept { return values_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

// Vector arithmetic. All binary operations throw DimensionError on length mismatch.
ParamVector vec_axpy(double a, const ParamVector& x, const ParamVector& y);
ParamVector vec_add(const ParamVector& x, const ParamVector& y);
ParamVector vec_sub(const ParamVector& x, const ParamVector& y);
ParamVector vec_scale(double a, const ParamVector& x);
double dot(const ParamVector& x, const ParamVector& y);
double norm2(const ParamVector& x);
bool all_finite(std::span<const double> xs);

/// Sum of `terms` taken in sorted order, so the result depends only on the
/// multiset of terms and not on their arrangement.
double sorted_sum(std::vector<double> terms);

/// Sample covariance (1/(B-1) normalization) of the columns of `features`.
/// Throws InsufficientDataError when there are fewer than two rows.
Matrix covariance(const Matrix& features);

/// Stacks rows of `a` on top of rows of `b`.
Matrix vstack(const Matrix& a, const Matrix& b);

/// Squared Frobenius norm of a - b.
double frobenius_sq_diff(const Matrix& a, const Matrix& b);

using ScalarFn = std::function<double(const ParamVector&)>;

/// Central-difference gradient, one pair of evaluations per coordinate.
/// Throws ParameterError for h <= 0 and NumericError on a non-finite evaluation.
ParamVector finite_diff_grad(const ScalarFn& f, const ParamVector& x, double h = 1e-5);

}  // namespace sdg
