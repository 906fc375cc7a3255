#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <sstream>
#include <vector>

#include "seq2seq/core.hpp"

namespace seq2seq {

// Dense row-major matrix. Doubles as a weight matrix and as a SeqMatrix
// (columns are token embeddings); sequence-level entry points check n >= 2.
template <typename T>
class Matrix {
 public:
  Matrix() : rows_(0), cols_(0) {}
  Matrix(std::size_t rows, std::size_t cols, const T& fill = T(0))
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix zero(std::size_t rows, std::size_t cols) { return Matrix(rows, cols); }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = T(1);
    return m;
  }

  static Matrix from_rows(const std::vector<std::vector<T>>& rows) {
    if (rows.empty()) return Matrix();
    Matrix m(rows.size(), rows[0].size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != m.cols_) throw ShapeError("from_rows: ragged rows");
      for (std::size_t j = 0; j < m.cols_; ++j) m(i, j) = rows[i][j];
    }
    return m;
  }

  static Matrix column(const std::vector<T>& v) {
    Matrix m(v.size(), 1);
    for (std::size_t i = 0; i < v.size(); ++i) m(i, 0) = v[i];
    return m;
  }

  static Matrix row(const std::vector<T>& v) {
    Matrix m(1, v.size());
    for (std::size_t j = 0; j < v.size(); ++j) m(0, j) = v[j];
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  T& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  const T& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  bool operator==(const Matrix& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_ && data_ == o.data_;
  }
  bool operator!=(const Matrix& o) const { return !(*this == o); }

  Matrix operator+(const Matrix& o) const {
    check_same_shape(o, "add");
    Matrix r = *this;
    for (std::size_t i = 0; i < data_.size(); ++i) r.data_[i] += o.data_[i];
    return r;
  }

  Matrix operator-(const Matrix& o) const {
    check_same_shape(o, "sub");
    Matrix r = *this;
    for (std::size_t i = 0; i < data_.size(); ++i) r.data_[i] -= o.data_[i];
    return r;
  }

  Matrix operator*(const Matrix& o) const {
    if (cols_ != o.rows_) throw ShapeError("matmul: inner dimensions differ");
    Matrix r(rows_, o.cols_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t k = 0; k < cols_; ++k) {
        const T& a = (*this)(i, k);
        if (a == T(0)) continue;
        for (std::size_t j = 0; j < o.cols_; ++j) r(i, j) += a * o(k, j);
      }
    return r;
  }

  Matrix scaled(const T& s) const {
    Matrix r = *this;
    for (auto& x : r.data_) x *= s;
    return r;
  }

  Matrix transpose() const {
    Matrix r(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) r(j, i) = (*this)(i, j);
    return r;
  }

  std::vector<T> col(std::size_t j) const {
    std::vector<T> v(rows_);
    for (std::size_t i = 0; i < rows_; ++i) v[i] = (*this)(i, j);
    return v;
  }

  std::vector<T> row_vec(std::size_t i) const {
    std::vector<T> v(cols_);
    for (std::size_t j = 0; j < cols_; ++j) v[j] = (*this)(i, j);
    return v;
  }

  // Permutes columns: result column j = this column perm[j].
  Matrix permute_columns(const std::vector<std::size_t>& perm) const {
    if (perm.size() != cols_) throw ShapeError("permute_columns: size mismatch");
    Matrix r(rows_, cols_);
    for (std::size_t j = 0; j < cols_; ++j)
      for (std::size_t i = 0; i < rows_; ++i) r(i, j) = (*this)(i, perm[j]);
    return r;
  }

  template <typename U>
  Matrix<U> cast() const {
    Matrix<U> r(rows_, cols_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) {
        if constexpr (std::is_same_v<U, double>) r(i, j) = to_double((*this)(i, j));
        else r(i, j) = U((*this)(i, j));
      }
    return r;
  }

  std::string to_string() const {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < rows_; ++i) {
      os << (i ? "; " : "");
      for (std::size_t j = 0; j < cols_; ++j) {
        if (j) os << " ";
        if constexpr (std::is_same_v<T, Rational>) os << rational_to_string((*this)(i, j));
        else os << (*this)(i, j);
      }
    }
    os << "]";
    return os.str();
  }

 private:
  void check_same_shape(const Matrix& o, const char* op) const {
    if (rows_ != o.rows_ || cols_ != o.cols_)
      throw ShapeError(std::string(op) + ": shape mismatch");
  }

  std::size_t rows_, cols_;
  std::vector<T> data_;
};

using ExactMatrix = Matrix<Rational>;
using FloatMatrix = Matrix<double>;

// Hardmax per column: argmax entries get 1/k where k is the number of ties.
// Exact mode ties on equality, float mode on the pinned 1e-12 relative
// tolerance.
template <typename T>
Matrix<T> hardmax_columns(const Matrix<T>& m) {
  Matrix<T> out(m.rows(), m.cols());
  for (std::size_t j = 0; j < m.cols(); ++j) {
    T best = m(0, j);
    for (std::size_t i = 1; i < m.rows(); ++i)
      if (m(i, j) > best) best = m(i, j);
    std::vector<std::size_t> ties;
    for (std::size_t i = 0; i < m.rows(); ++i)
      if (ScalarTraits<T>::tie(m(i, j), best)) ties.push_back(i);
    T share = T(1) / T(static_cast<int>(ties.size()));
    for (std::size_t i : ties) out(i, j) = share;
  }
  return out;
}

// Column-wise softmax of lambda*M with max subtraction. Transcendental, so
// exact mode is rejected.
template <typename T>
Matrix<T> softmax_columns(const Matrix<T>& m, double lambda) {
  if (lambda <= 0) throw std::invalid_argument("softmax_columns: lambda must be positive");
  if constexpr (ScalarTraits<T>::exact) {
    throw ModeError("softmax_columns: softmax is transcendental; exact mode not supported");
  } else {
    Matrix<T> out(m.rows(), m.cols());
    for (std::size_t j = 0; j < m.cols(); ++j) {
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < m.rows(); ++i) mx = std::max(mx, lambda * m(i, j));
      double sum = 0;
      for (std::size_t i = 0; i < m.rows(); ++i) {
        out(i, j) = std::exp(lambda * m(i, j) - mx);
        sum += out(i, j);
      }
      for (std::size_t i = 0; i < m.rows(); ++i) out(i, j) /= sum;
    }
    return out;
  }
}

// Entry-wise lp norm, p in [1, inf). Always computed in double.
template <typename T>
double entrywise_lp_norm(const Matrix<T>& m, double p) {
  if (p < 1) throw std::invalid_argument("entrywise_lp_norm: p must be >= 1");
  double acc = 0;
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j)
      acc += std::pow(std::abs(to_double(m(i, j))), p);
  return std::pow(acc, 1.0 / p);
}

template <typename T>
double max_abs_diff(const Matrix<T>& a, const Matrix<T>& b) {
  double mx = 0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      mx = std::max(mx, std::abs(to_double(a(i, j)) - to_double(b(i, j))));
  return mx;
}

// All permutations of [0, n) in lexicographic order.
inline std::vector<std::vector<std::size_t>> all_permutations(std::size_t n) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), std::size_t{0});
  std::vector<std::vector<std::size_t>> out;
  do {
    out.push_back(p);
  } while (std::next_permutation(p.begin(), p.end()));
  return out;
}

}  // namespace seq2seq
