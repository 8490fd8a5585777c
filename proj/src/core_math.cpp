#include "sdg/core_math.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sdg/errors.hpp"

namespace sdg {
namespace {

void require_same_length(const ParamVector& x, const ParamVector& y, const char* op) {
  if (x.size() != y.size()) {
    throw DimensionError(std::string(op) + ": length mismatch (" + std::to_string(x.size()) +
                         " vs " + std::to_string(y.size()) + ")");
  }
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows_ * cols_) {
    throw DimensionError("Matrix: storage length does not equal rows*cols");
  }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  values_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw DimensionError("Matrix: ragged initializer");
    values_.insert(values_.end(), r.begin(), r.end());
  }
}

ParamVector vec_axpy(double a, const ParamVector& x, const ParamVector& y) {
  require_same_length(x, y, "vec_axpy");
  ParamVector out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = a * x[i] + y[i];
  return out;
}

ParamVector vec_add(const ParamVector& x, const ParamVector& y) { return vec_axpy(1.0, x, y); }

ParamVector vec_sub(const ParamVector& x, const ParamVector& y) {
  require_same_length(x, y, "vec_sub");
  ParamVector out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] - y[i];
  return out;
}

ParamVector vec_scale(double a, const ParamVector& x) {
  ParamVector out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = a * x[i];
  return out;
}

double dot(const ParamVector& x, const ParamVector& y) {
  require_same_length(x, y, "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

double norm2(const ParamVector& x) { return std::sqrt(dot(x, x)); }

bool all_finite(std::span<const double> xs) {
  for (double v : xs) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

Matrix covariance(const Matrix& features) {
  const std::size_t n = features.rows();
  const std::size_t d = features.cols();
  if (n < 2) throw InsufficientDataError("covariance: need at least 2 samples");

  // Sorted sums keep the result exactly invariant under row permutations.
  std::vector<double> column(n);
  std::vector<double> mean(d, 0.0);
  for (std::size_t c = 0; c < d; ++c) {
    for (std::size_t r = 0; r < n; ++r) column[r] = features(r, c);
    mean[c] = sorted_sum(column) / static_cast<double>(n);
  }

  Matrix cov(d, d);
  const double scale = 1.0 / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = i; j < d; ++j) {
      for (std::size_t r = 0; r < n; ++r) column[r] = (features(r, i) - mean[i]) * (features(r, j) - mean[j]);
      cov(i, j) = sorted_sum(column) * scale;
      cov(j, i) = cov(i, j);
    }
  }
  return cov;
}

double sorted_sum(std::vector<double> terms) {
  std::sort(terms.begin(), terms.end());
  double total = 0.0;
  for (double t : terms) total += t;
  return total;
}

Matrix vstack(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) throw DimensionError("vstack: column mismatch");
  Matrix out(a.rows() + b.rows(), a.cols());
  auto dst = out.data();
  std::copy(a.data().begin(), a.data().end(), dst.begin());
  std::copy(b.data().begin(), b.data().end(), dst.begin() + static_cast<std::ptrdiff_t>(a.data().size()));
  return out;
}

double frobenius_sq_diff(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw DimensionError("frobenius_sq_diff: shape mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i) {
    const double d = a.data()[i] - b.data()[i];
    s += d * d;
  }
  return s;
}

ParamVector finite_diff_grad(const ScalarFn& f, const ParamVector& x, double h) {
  if (!(h > 0.0)) throw ParameterError("finite_diff_grad: h must be positive");
  ParamVector grad(x.size());
  ParamVector probe = x;
  for (std::size_t p = 0; p < x.size(); ++p) {
    probe[p] = x[p] + h;
    const double up = f(probe);
    probe[p] = x[p] - h;
    const double down = f(probe);
    probe[p] = x[p];
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw NumericError("finite_diff_grad: non-finite function value at coordinate " + std::to_string(p));
    }
    grad[p] = (up - down) / (2.0 * h);
  }
  return grad;
}

}  // namespace sdg
