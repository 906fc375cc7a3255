#pragma once

#include <cstddef>
#include <vector>

#include "seq2seq/matrix.hpp"

namespace seq2seq {

// Grid geometry for the constructive pipeline: delta = 1/q, the sentinel
// -delta^(-nd), the column-id vector u = (1, delta^-1, ..., delta^-(d-1)),
// and the id interval [t_l, t_r] separating distinct-column grid points from
// everything else.
struct GridParams {
  long q = 2;       // delta = 1/q, q >= 2
  std::size_t d = 1;
  std::size_t n = 2;

  GridParams() = default;
  GridParams(long q_, std::size_t d_, std::size_t n_) : q(q_), d(d_), n(n_) {
    if (q < 2) throw ConfigError("grid: delta^-1 must be an integer >= 2");
    if (d < 1) throw ConfigError("grid: d must be >= 1");
    if (n < 2) throw ConfigError("grid: n must be >= 2");
  }

  Rational delta() const { return Rational(1, q); }
  Rational inv_delta() const { return Rational(q); }

  long nd() const { return static_cast<long>(n) * static_cast<long>(d); }

  Rational sentinel() const { return -pow_int(delta(), -nd()); }

  std::vector<Rational> u() const {
    std::vector<Rational> v(d);
    for (std::size_t i = 0; i < d; ++i) v[i] = pow_int(delta(), -static_cast<long>(i));
    return v;
  }

  Matrix<Rational> u_row() const { return Matrix<Rational>::row(u()); }

  Rational t_l() const {
    return pow_int(delta(), -2 * nd() + 1) * (pow_int(delta(), -static_cast<long>(d)) - 1);
  }

  Rational t_r() const {
    return pow_int(delta(), -(2 * static_cast<long>(n) + 1) * static_cast<long>(d) + 1) *
           (pow_int(delta(), -static_cast<long>(d)) - 1);
  }

  // Number of distinct non-sentinel columns, (1/delta)^d.
  std::size_t num_columns() const {
    std::size_t c = 1;
    for (std::size_t i = 0; i < d; ++i) c *= static_cast<std::size_t>(q);
    return c;
  }

  // Column ids sweep [0 : delta : delta^(-d+1) - delta].
  std::vector<Rational> id_values() const {
    std::vector<Rational> ids(num_columns());
    for (std::size_t k = 0; k < ids.size(); ++k) ids[k] = Rational(static_cast<long>(k), q);
    return ids;
  }

  Rational column_id(const std::vector<Rational>& col) const {
    auto uv = u();
    Rational id = 0;
    for (std::size_t i = 0; i < d; ++i) id += uv[i] * col[i];
    return id;
  }

  Rational column_id(const Matrix<Rational>& m, std::size_t j) const {
    auto uv = u();
    Rational id = 0;
    for (std::size_t i = 0; i < d; ++i) id += uv[i] * m(i, j);
    return id;
  }

  // The k-th non-sentinel column in id order: its id is k*delta.
  std::vector<Rational> column_by_index(std::size_t k) const {
    std::vector<Rational> col(d);
    for (std::size_t i = 0; i < d; ++i) {
      col[i] = Rational(static_cast<long>(k % static_cast<std::size_t>(q)), q);
      k /= static_cast<std::size_t>(q);
    }
    return col;
  }

  Matrix<Rational> matrix_from_column_indices(const std::vector<std::size_t>& idx) const {
    Matrix<Rational> m(d, idx.size());
    for (std::size_t j = 0; j < idx.size(); ++j) {
      auto col = column_by_index(idx[j]);
      for (std::size_t i = 0; i < d; ++i) m(i, j) = col[i];
    }
    return m;
  }

  Matrix<Rational> cube_center(const Matrix<Rational>& grid_point) const {
    Matrix<Rational> c = grid_point;
    Rational half = delta() / 2;
    for (std::size_t i = 0; i < c.rows(); ++i)
      for (std::size_t j = 0; j < c.cols(); ++j) c(i, j) += half;
    return c;
  }
};

namespace gridenum {

// Enumerates all tuples (t_0, ..., t_{n-1}) with t_j in [0, base) and calls
// fn(tuple). Guarded by the caller for size.
template <typename Fn>
void all_tuples(std::size_t base, std::size_t n, Fn&& fn) {
  std::vector<std::size_t> t(n, 0);
  while (true) {
    fn(const_cast<const std::vector<std::size_t>&>(t));
    std::size_t j = 0;
    for (; j < n; ++j) {
      if (++t[j] < base) break;
      t[j] = 0;
    }
    if (j == n) break;
  }
}

}  // namespace gridenum

// All grid points of G_delta, as matrices. |G_delta| = (1/delta)^(dn).
inline std::vector<Matrix<Rational>> enumerate_grid(const GridParams& g,
                                                    std::size_t budget = 2000000) {
  std::size_t cols = g.num_columns();
  double size = std::pow(static_cast<double>(cols), static_cast<double>(g.n));
  if (size > static_cast<double>(budget)) throw BudgetError("grid enumeration exceeds budget");
  std::vector<Matrix<Rational>> out;
  gridenum::all_tuples(cols, g.n, [&](const std::vector<std::size_t>& t) {
    out.push_back(g.matrix_from_column_indices(t));
  });
  return out;
}

inline bool has_duplicate_columns(const Matrix<Rational>& m) {
  for (std::size_t a = 0; a < m.cols(); ++a)
    for (std::size_t b = a + 1; b < m.cols(); ++b) {
      bool eq = true;
      for (std::size_t i = 0; i < m.rows() && eq; ++i) eq = m(i, a) == m(i, b);
      if (eq) return true;
    }
  return false;
}

// Orbit representatives of the distinct-column grid G~_delta: strictly
// increasing column-index tuples. Expanding each by all permutations yields
// all of G~_delta.
inline std::vector<std::vector<std::size_t>> orbit_representatives(const GridParams& g) {
  std::size_t cols = g.num_columns();
  if (cols < g.n) return {};
  std::vector<std::vector<std::size_t>> reps;
  std::vector<std::size_t> idx(g.n);
  for (std::size_t j = 0; j < g.n; ++j) idx[j] = j;
  while (true) {
    reps.push_back(idx);
    // next strictly increasing combination
    std::size_t j = g.n;
    while (j > 0) {
      --j;
      if (idx[j] < cols - (g.n - j)) {
        ++idx[j];
        for (std::size_t k = j + 1; k < g.n; ++k) idx[k] = idx[k - 1] + 1;
        break;
      }
      if (j == 0) return reps;
    }
  }
}

// All columns of the extended grid: grid columns plus every column containing
// at least one sentinel entry. Total (1/delta + 1)^d.
inline std::vector<std::vector<Rational>> enumerate_extended_columns(const GridParams& g) {
  std::vector<std::vector<Rational>> cols;
  std::size_t base = static_cast<std::size_t>(g.q) + 1;  // values: sentinel, 0, ..., 1-delta
  gridenum::all_tuples(base, g.d, [&](const std::vector<std::size_t>& t) {
    std::vector<Rational> col(g.d);
    for (std::size_t i = 0; i < g.d; ++i)
      col[i] = t[i] == 0 ? g.sentinel() : Rational(static_cast<long>(t[i]) - 1, g.q);
    cols.push_back(col);
  });
  return cols;
}

// All points of G+_delta. |G+_delta| = (1/delta + 1)^(dn).
inline std::vector<Matrix<Rational>> enumerate_extended_grid(const GridParams& g,
                                                             std::size_t budget = 2000000) {
  auto cols = enumerate_extended_columns(g);
  double size = std::pow(static_cast<double>(cols.size()), static_cast<double>(g.n));
  if (size > static_cast<double>(budget))
    throw BudgetError("extended grid enumeration exceeds budget");
  std::vector<Matrix<Rational>> out;
  gridenum::all_tuples(cols.size(), g.n, [&](const std::vector<std::size_t>& t) {
    Matrix<Rational> m(g.d, g.n);
    for (std::size_t j = 0; j < g.n; ++j)
      for (std::size_t i = 0; i < g.d; ++i) m(i, j) = cols[t[j]][i];
    out.push_back(m);
  });
  return out;
}

// Lexicographic column order used for canonical (sorted-column) keys.
inline bool column_less(const Matrix<Rational>& m, std::size_t a, std::size_t b) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    if (m(i, a) != m(i, b)) return m(i, a) < m(i, b);
  }
  return false;
}

// Stable sort permutation: sorted column j is input column order[j].
inline std::vector<std::size_t> column_sort_order(const Matrix<Rational>& m) {
  std::vector<std::size_t> order(m.cols());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return column_less(m, a, b); });
  return order;
}

inline Matrix<Rational> sort_columns(const Matrix<Rational>& m) {
  return m.permute_columns(column_sort_order(m));
}

}  // namespace seq2seq
