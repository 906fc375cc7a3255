#pragma once

#include <functional>
#include <map>
#include <string>

#include "seq2seq/grid.hpp"

namespace seq2seq {

// Piecewise-constant target: a table from grid points L to output matrices
// A_L. Equivariant tables store only orbit representatives (column-sorted
// keys) and reconstruct f(L P) = f(L) P on lookup.
class PiecewiseConstantFn {
 public:
  PiecewiseConstantFn() = default;
  PiecewiseConstantFn(GridParams grid, bool equivariant)
      : grid_(grid), equivariant_(equivariant) {}

  const GridParams& grid() const { return grid_; }
  bool equivariant() const { return equivariant_; }
  std::size_t table_size() const { return table_.size(); }

  void set(const Matrix<Rational>& l, const Matrix<Rational>& a) {
    if (a.rows() != l.rows() || a.cols() != l.cols())
      throw ShapeError("target: A_L must be d x n");
    if (equivariant_) {
      auto order = column_sort_order(l);
      Matrix<Rational> key = l.permute_columns(order);
      Matrix<Rational> val = a.permute_columns(order);
      auto it = table_.find(key.to_string());
      if (it != table_.end() && it->second.value != val)
        throw ConfigError("target: conflicting values on one orbit (not equivariant)");
      check_stabilizer(key, val);
      table_[key.to_string()] = {key, val};
    } else {
      table_[l.to_string()] = {l, a};
    }
  }

  Matrix<Rational> value(const Matrix<Rational>& l) const {
    if (equivariant_) {
      auto order = column_sort_order(l);
      auto it = table_.find(l.permute_columns(order).to_string());
      if (it == table_.end()) return Matrix<Rational>::zero(l.rows(), l.cols());
      // L = Lbar P with Lbar sorted; f(L) column k = Abar column inv_order[k].
      std::vector<std::size_t> inv(order.size());
      for (std::size_t j = 0; j < order.size(); ++j) inv[order[j]] = j;
      return it->second.value.permute_columns(inv);
    }
    auto it = table_.find(l.to_string());
    if (it == table_.end()) return Matrix<Rational>::zero(l.rows(), l.cols());
    return it->second.value;
  }

  // Evaluates the piecewise-constant function at an arbitrary point: quantize
  // to the containing cube, zero outside [0,1]^(d x n).
  Matrix<Rational> evaluate(const Matrix<Rational>& x) const {
    Matrix<Rational> l(x.rows(), x.cols());
    Rational delta = grid_.delta();
    for (std::size_t i = 0; i < x.rows(); ++i)
      for (std::size_t j = 0; j < x.cols(); ++j) {
        if (x(i, j) < 0 || x(i, j) >= 1) return Matrix<Rational>::zero(x.rows(), x.cols());
        Rational scaled = x(i, j) / delta;
        BigInt k = numerator(scaled) / denominator(scaled);
        l(i, j) = Rational(k) * delta;
      }
    return value(l);
  }

  // Iterates (key matrix, value) pairs in deterministic key order.
  void for_each_entry(
      const std::function<void(const Matrix<Rational>&, const Matrix<Rational>&)>& fn) const {
    for (const auto& [k, e] : table_) fn(e.key, e.value);
  }

 private:
  struct Entry {
    Matrix<Rational> key, value;
  };
  void check_stabilizer(const Matrix<Rational>& key, const Matrix<Rational>& val) const {
    // equal key columns must carry equal value columns, else f is not a function
    for (std::size_t a = 0; a + 1 < key.cols(); ++a) {
      bool eq = true;
      for (std::size_t i = 0; i < key.rows() && eq; ++i) eq = key(i, a) == key(i, a + 1);
      if (!eq) continue;
      for (std::size_t i = 0; i < val.rows(); ++i)
        if (val(i, a) != val(i, a + 1))
          throw ConfigError("target: duplicate key columns with different values");
    }
  }

  GridParams grid_;
  bool equivariant_ = true;
  std::map<std::string, Entry> table_;
};

// Tabulates a black-box target at cube centers. For equivariant targets only
// orbit representatives are evaluated; equivariance of the table follows from
// equivariance of f.
inline PiecewiseConstantFn piecewise_constant_approx(
    const std::function<Matrix<Rational>(const Matrix<Rational>&)>& f, const GridParams& grid,
    bool equivariant, std::size_t budget = 2000000) {
  PiecewiseConstantFn out(grid, equivariant);
  auto tabulate = [&](const Matrix<Rational>& l) {
    Matrix<Rational> a = f(grid.cube_center(l));
    for (std::size_t i = 0; i < a.rows(); ++i)
      for (std::size_t j = 0; j < a.cols(); ++j) {
        double v = to_double(a(i, j));
        if (!std::isfinite(v)) throw ConfigError("target function produced non-finite output");
      }
    out.set(l, a);
  };
  if (equivariant) {
    // all multisets of column indices (non-decreasing tuples) cover every orbit
    std::size_t cols = grid.num_columns();
    std::vector<std::size_t> idx(grid.n, 0);
    std::size_t count = 0;
    while (true) {
      if (++count > budget) throw BudgetError("target tabulation exceeds budget");
      tabulate(grid.matrix_from_column_indices(idx));
      std::size_t j = grid.n;
      bool done = true;
      while (j > 0) {
        --j;
        if (idx[j] + 1 < cols) {
          ++idx[j];
          for (std::size_t k = j + 1; k < grid.n; ++k) idx[k] = idx[j];
          done = false;
          break;
        }
      }
      if (done) break;
    }
  } else {
    for (const auto& l : enumerate_grid(grid, budget)) tabulate(l);
  }
  return out;
}

// Builtin generators.

inline PiecewiseConstantFn make_constant_target(const GridParams& grid, const Rational& c) {
  // every output column equals c * ones, which is equivariant
  return piecewise_constant_approx(
      [&](const Matrix<Rational>& x) { return Matrix<Rational>(x.rows(), x.cols(), c); }, grid,
      /*equivariant=*/true);
}

inline PiecewiseConstantFn make_identity_target(const GridParams& grid) {
  return piecewise_constant_approx([](const Matrix<Rational>& x) { return x; }, grid,
                                   /*equivariant=*/true);
}

// Seeded random equivariant target: on each orbit representative, draw one
// value column per distinct grid column (entries are multiples of delta in
// [0, 1]), so the table respects column-permutation symmetry by construction.
inline PiecewiseConstantFn make_random_equivariant_target(const GridParams& grid,
                                                          std::uint64_t seed) {
  PiecewiseConstantFn out(grid, /*equivariant=*/true);
  std::size_t cols = grid.num_columns();
  std::vector<std::size_t> idx(grid.n, 0);
  while (true) {
    Matrix<Rational> key = grid.matrix_from_column_indices(idx);  // sorted: idx non-decreasing
    Rng rng(hash_combine(seed, hash_string(key.to_string())));
    Matrix<Rational> val(grid.d, grid.n);
    for (std::size_t j = 0; j < grid.n; ++j) {
      if (j > 0 && idx[j] == idx[j - 1]) {
        for (std::size_t i = 0; i < grid.d; ++i) val(i, j) = val(i, j - 1);
        continue;
      }
      for (std::size_t i = 0; i < grid.d; ++i)
        val(i, j) = Rational(static_cast<long>(rng.below(static_cast<std::uint64_t>(grid.q) + 1)),
                             grid.q);
    }
    out.set(key, val);
    std::size_t j = grid.n;
    bool done = true;
    while (j > 0) {
      --j;
      if (idx[j] + 1 < cols) {
        ++idx[j];
        for (std::size_t k = j + 1; k < grid.n; ++k) idx[k] = idx[j];
        done = false;
        break;
      }
    }
    if (done) return out;
  }
}

// Seeded random unconstrained target (for the positional pipeline); keys may
// live on a shifted per-column grid supplied by the caller.
inline PiecewiseConstantFn make_random_target_on(const std::vector<Matrix<Rational>>& points,
                                                 const GridParams& grid, std::uint64_t seed) {
  PiecewiseConstantFn out(grid, /*equivariant=*/false);
  for (const auto& l : points) {
    Rng rng(hash_combine(seed, hash_string(l.to_string())));
    Matrix<Rational> val(l.rows(), l.cols());
    for (std::size_t i = 0; i < val.rows(); ++i)
      for (std::size_t j = 0; j < val.cols(); ++j)
        val(i, j) = Rational(static_cast<long>(rng.below(static_cast<std::uint64_t>(grid.q) + 1)),
                             grid.q);
    out.set(l, val);
  }
  return out;
}

}  // namespace seq2seq
