#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "svidr/autodiff.hpp"
#include "svidr/errors.hpp"

namespace svidr {

template <class T>
using Vec = std::vector<T>;

// Dense row-major matrix, sized for desk-scale problems (Q <= ~60).
template <class T>
class Mat {
 public:
  Mat() = default;
  Mat(std::size_t rows, std::size_t cols, T init = T(0))
      : rows_(rows), cols_(cols), data_(rows * cols, init) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  T& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  const T& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  T* row(std::size_t i) { return data_.data() + i * cols_; }
  const T* row(std::size_t i) const { return data_.data() + i * cols_; }

  Vec<T>& data() { return data_; }
  const Vec<T>& data() const { return data_; }

  static Mat identity(std::size_t n) {
    Mat m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = T(1);
    return m;
  }

 private:
  std::size_t rows_ = 0, cols_ = 0;
  Vec<T> data_;
};

inline std::size_t packed_size(std::size_t dim) { return dim * (dim + 1) / 2; }

// index of entry (i, j), j <= i, in packed row-major lower-triangular storage
inline std::size_t packed_index(std::size_t i, std::size_t j) {
  return i * (i + 1) / 2 + j;
}

// Lower-triangular matrix in packed row-major storage. The row-major slot
// order (row 0 diagonal first, then row 1 sub-diagonal and diagonal, ...) is
// load-bearing: variational parameter vectors use the same order.
template <class T>
struct LowerTriangular {
  std::size_t dim = 0;
  Vec<T> entries;  // packed_size(dim) values

  LowerTriangular() = default;
  explicit LowerTriangular(std::size_t d) : dim(d), entries(packed_size(d), T(0)) {}

  T& at(std::size_t i, std::size_t j) { return entries[packed_index(i, j)]; }
  const T& at(std::size_t i, std::size_t j) const { return entries[packed_index(i, j)]; }

  Mat<T> dense() const {
    Mat<T> m(dim, dim);
    for (std::size_t i = 0; i < dim; ++i)
      for (std::size_t j = 0; j <= i; ++j) m(i, j) = at(i, j);
    return m;
  }

  static LowerTriangular identity(std::size_t d) {
    LowerTriangular l(d);
    for (std::size_t i = 0; i < d; ++i) l.at(i, i) = T(1);
    return l;
  }
};

// Log-Cholesky vector: packed row-major lower triangle with the diagonal
// slots holding logs of the Cholesky diagonal.
struct LogCholVector {
  std::size_t dim = 0;
  Vec<double> values;

  LogCholVector() = default;
  explicit LogCholVector(std::size_t d) : dim(d), values(packed_size(d), 0.0) {}
};

// Cholesky factorization A = L L^T of a symmetric positive-definite matrix.
// Templated so gradients can flow through the factorization on the tape.
template <class T>
LowerTriangular<T> cholesky(const Mat<T>& a) {
  using std::sqrt;
  const std::size_t n = a.rows();
  if (a.cols() != n) throw DimensionMismatch("cholesky: matrix not square");
  LowerTriangular<T> l(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      T s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l.at(i, k) * l.at(j, k);
      if (i == j) {
        if (value(s) <= 1e-300)
          throw NotPositiveDefinite("cholesky: nonpositive pivot at row " + std::to_string(i));
        l.at(i, i) = sqrt(s);
      } else {
        l.at(i, j) = s / l.at(j, j);
      }
    }
  }
  return l;
}

enum class TriSolveMode { lower, lower_transposed };

// Solve L x = b (forward) or L^T x = b (backward).
template <class T>
Vec<T> solve_triangular(const LowerTriangular<T>& l, const Vec<T>& b, TriSolveMode mode) {
  const std::size_t n = l.dim;
  if (b.size() != n) throw DimensionMismatch("solve_triangular: rhs length mismatch");
  Vec<T> x(n, T(0));
  if (mode == TriSolveMode::lower) {
    for (std::size_t i = 0; i < n; ++i) {
      T s = b[i];
      for (std::size_t j = 0; j < i; ++j) s -= l.at(i, j) * x[j];
      x[i] = s / l.at(i, i);
    }
  } else {
    for (std::size_t ii = n; ii-- > 0;) {
      T s = b[ii];
      for (std::size_t j = ii + 1; j < n; ++j) s -= l.at(j, ii) * x[j];
      x[ii] = s / l.at(ii, ii);
    }
  }
  return x;
}

// psi^{-1}: expand a log-Cholesky vector, exponentiating the diagonal slots.
// Templated on the entry type so variational parameters stay on the tape.
template <class T>
LowerTriangular<T> log_chol_expand(const Vec<T>& values, std::size_t dim) {
  using std::exp;
  if (values.size() != packed_size(dim))
    throw DimensionMismatch("log_chol_expand: bad vector length");
  LowerTriangular<T> l(dim);
  for (std::size_t i = 0; i < dim; ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      const T& v = values[packed_index(i, j)];
      l.at(i, j) = (i == j) ? exp(v) : v;
    }
  return l;
}

inline LowerTriangular<double> log_chol_expand(const LogCholVector& l) {
  return log_chol_expand(l.values, l.dim);
}

// psi: exact inverse of log_chol_expand.
inline LogCholVector log_chol_compress(const LowerTriangular<double>& l) {
  LogCholVector out(l.dim);
  for (std::size_t i = 0; i < l.dim; ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      const double v = l.at(i, j);
      if (i == j) {
        if (v <= 0.0)
          throw NonPositiveDiagonal("log_chol_compress: nonpositive diagonal");
        out.values[packed_index(i, j)] = std::log(v);
      } else {
        out.values[packed_index(i, j)] = v;
      }
    }
  return out;
}

// Orthonormal basis of the orthogonal complement of c, via the Householder
// reflector that maps c onto a multiple of e_1 (QR of the Q x 1 matrix [c]).
// Returns the Q x (Q-1) matrix of the trailing columns of the reflector.
inline Mat<double> nullspace_basis(const Vec<double>& c) {
  const std::size_t q = c.size();
  double norm2 = 0.0;
  for (double v : c) norm2 += v * v;
  const double norm = std::sqrt(norm2);
  if (norm == 0.0) throw ZeroVector("nullspace_basis: zero vector");

  Vec<double> v = c;
  v[0] += (c[0] >= 0.0 ? norm : -norm);
  double vtv = 0.0;
  for (double x : v) vtv += x * x;

  Mat<double> z(q, q - 1);
  for (std::size_t i = 0; i < q; ++i)
    for (std::size_t j = 1; j < q; ++j)
      z(i, j - 1) = (i == j ? 1.0 : 0.0) - 2.0 * v[i] * v[j] / vtv;
  return z;
}

// Numerical rank by Gaussian elimination with partial pivoting; pivots below
// tol * max initial |diagonal| count as zero.
inline std::size_t numeric_rank(Mat<double> a, double rel_tol = 1e-8) {
  const std::size_t m = a.rows(), n = a.cols();
  double scale = 0.0;
  for (std::size_t i = 0; i < std::min(m, n); ++i) scale = std::max(scale, std::fabs(a(i, i)));
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) scale = std::max(scale, std::fabs(a(i, j)));
  if (scale == 0.0) return 0;
  const double tol = rel_tol * scale;

  std::size_t rank = 0;
  std::size_t row = 0;
  for (std::size_t col = 0; col < n && row < m; ++col) {
    std::size_t piv = row;
    for (std::size_t i = row + 1; i < m; ++i)
      if (std::fabs(a(i, col)) > std::fabs(a(piv, col))) piv = i;
    if (std::fabs(a(piv, col)) <= tol) continue;
    if (piv != row)
      for (std::size_t j = 0; j < n; ++j) std::swap(a(row, j), a(piv, j));
    for (std::size_t i = row + 1; i < m; ++i) {
      const double f = a(i, col) / a(row, col);
      for (std::size_t j = col; j < n; ++j) a(i, j) -= f * a(row, j);
    }
    ++row;
    ++rank;
  }
  return rank;
}

// C = A^T B
inline Mat<double> mat_atb(const Mat<double>& a, const Mat<double>& b) {
  if (a.rows() != b.rows()) throw DimensionMismatch("mat_atb");
  Mat<double> c(a.cols(), b.cols());
  for (std::size_t k = 0; k < a.rows(); ++k)
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double aki = a(k, i);
      if (aki == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aki * b(k, j);
    }
  return c;
}

// C = A B
inline Mat<double> mat_ab(const Mat<double>& a, const Mat<double>& b) {
  if (a.cols() != b.rows()) throw DimensionMismatch("mat_ab");
  Mat<double> c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  return c;
}

inline Vec<double> mat_vec(const Mat<double>& a, const Vec<double>& x) {
  if (a.cols() != x.size()) throw DimensionMismatch("mat_vec");
  Vec<double> y(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) s += a(i, j) * x[j];
    y[i] = s;
  }
  return y;
}

}  // namespace svidr
