#pragma once

#include <functional>
#include <map>
#include <set>
#include <string>

#include "seq2seq/construct.hpp"

namespace seq2seq {

struct VerificationReport {
  std::string property;
  std::string scope;
  bool pass = false;
  std::string counterexample;  // non-empty iff failed
  std::map<std::string, double> metrics;
  std::uint64_t seed = kDefaultSeed;

  void fail(const std::string& witness) {
    pass = false;
    if (counterexample.empty()) counterexample = witness;
  }
};

namespace detail {

inline Matrix<Rational> random_exact_matrix(Rng& rng, std::size_t d, std::size_t n,
                                            long denom = 64) {
  Matrix<Rational> m(d, n);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < n; ++j)
      m(i, j) = Rational(static_cast<long>(rng.below(static_cast<std::uint64_t>(denom) + 1)),
                         denom);
  return m;
}

inline Matrix<double> random_float_matrix(Rng& rng, std::size_t d, std::size_t n) {
  Matrix<double> m(d, n);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < n; ++j) m(i, j) = rng.uniform();
  return m;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Permutation equivariance
// ---------------------------------------------------------------------------

// Checks f(XP) = f(X)P over all n! permutations and `trials` random inputs.
// Exact scalars compare by equality; floats use the pinned 1e-9 tolerance.
// With expect_violation the roles flip: the check passes when a witness is
// found (BProj and SepConv are not equivariant).
template <typename T>
VerificationReport check_equivariance(const std::function<Matrix<T>(const Matrix<T>&)>& f,
                                      std::size_t d, std::size_t n, std::size_t trials,
                                      std::uint64_t seed = kDefaultSeed,
                                      bool expect_violation = false) {
  VerificationReport rep;
  rep.property = expect_violation ? "equivariance-violation" : "equivariance";
  rep.scope = "d=" + std::to_string(d) + " n=" + std::to_string(n) +
              " trials=" + std::to_string(trials);
  rep.seed = seed;
  rep.pass = true;
  Rng rng(seed);
  auto perms = all_permutations(n);
  std::string witness;
  bool violated = false;
  for (std::size_t t = 0; t < trials && !violated; ++t) {
    Matrix<T> x;
    if constexpr (ScalarTraits<T>::exact) x = detail::random_exact_matrix(rng, d, n);
    else x = detail::random_float_matrix(rng, d, n);
    Matrix<T> fx = f(x);
    for (const auto& p : perms) {
      Matrix<T> lhs = f(x.permute_columns(p));
      Matrix<T> rhs = fx.permute_columns(p);
      bool equal;
      if constexpr (ScalarTraits<T>::exact) equal = lhs == rhs;
      else equal = max_abs_diff(lhs, rhs) <= 1e-9;
      if (!equal) {
        violated = true;
        witness = "X=" + x.to_string() + " perm=[";
        for (std::size_t j = 0; j < p.size(); ++j)
          witness += (j ? "," : "") + std::to_string(p[j]);
        witness += "]";
        break;
      }
    }
  }
  if (expect_violation) {
    rep.pass = violated;
    if (!violated) rep.fail("no violation found over all trials");
    else rep.counterexample = witness;  // the witness is the point of this check
  } else if (violated) {
    rep.fail(witness);
  }
  rep.metrics["violations"] = violated ? 1.0 : 0.0;
  return rep;
}

// ---------------------------------------------------------------------------
// Contextual mapping lemma, Properties 1-4
// ---------------------------------------------------------------------------

namespace detail {

// Sentinel coverage: every point with exactly one sentinel-containing column
// plus `extra` seeded random points with >= 2 sentinel-containing columns.
inline std::vector<Matrix<Rational>> sentinel_sample_points(const GridParams& grid,
                                                            std::size_t extra,
                                                            std::uint64_t seed) {
  std::vector<Matrix<Rational>> out;
  auto ext_cols = enumerate_extended_columns(grid);
  std::vector<std::size_t> plain, tainted;
  for (std::size_t c = 0; c < ext_cols.size(); ++c) {
    bool has_sentinel = false;
    for (const auto& v : ext_cols[c]) has_sentinel = has_sentinel || v == grid.sentinel();
    (has_sentinel ? tainted : plain).push_back(c);
  }
  auto assemble = [&](const std::vector<std::size_t>& cols) {
    Matrix<Rational> m(grid.d, grid.n);
    for (std::size_t col = 0; col < grid.n; ++col)
      for (std::size_t i = 0; i < grid.d; ++i) m(i, col) = ext_cols[cols[col]][i];
    out.push_back(m);
  };
  // exactly one sentinel-containing column, the rest plain grid columns
  for (std::size_t j = 0; j < grid.n; ++j) {
    for (std::size_t tc : tainted) {
      gridenum::all_tuples(plain.size(), grid.n - 1, [&](const std::vector<std::size_t>& rest) {
        std::vector<std::size_t> cols(grid.n);
        std::size_t r = 0;
        for (std::size_t col = 0; col < grid.n; ++col)
          cols[col] = col == j ? tc : plain[rest[r++]];
        assemble(cols);
      });
    }
  }
  // seeded random points with at least two sentinel-containing columns
  Rng rng(seed);
  for (std::size_t t = 0; t < extra; ++t) {
    std::vector<std::size_t> cols(grid.n);
    cols[0] = tainted[rng.below(tainted.size())];
    cols[1] = tainted[rng.below(tainted.size())];
    for (std::size_t col = 2; col < grid.n; ++col) cols[col] = rng.below(ext_cols.size());
    assemble(cols);
  }
  return out;
}

}  // namespace detail

inline VerificationReport check_contextual_properties(const GridParams& grid,
                                                      std::uint64_t seed = kDefaultSeed,
                                                      std::size_t budget = 2000000) {
  VerificationReport rep;
  rep.property = "contextual-mapping";
  rep.seed = seed;
  rep.pass = true;
  auto mapper = build_contextual_mapper(grid);
  Rational t_l = mapper.t_l, t_r = mapper.t_r;
  auto in_interval = [&](const Rational& v) { return v >= t_l && v <= t_r; };
  auto ids_of = [&](const Matrix<Rational>& l) {
    Matrix<Rational> z = contextual_apply(mapper, l);
    std::vector<Rational> ids(grid.n);
    for (std::size_t j = 0; j < grid.n; ++j) ids[j] = grid.column_id(z, j);
    return ids;
  };

  auto points = enumerate_grid(grid, budget);
  std::size_t distinct_count = 0;
  for (const auto& l : points) {
    auto q = ids_of(l);
    if (!has_duplicate_columns(l)) {
      ++distinct_count;
      for (std::size_t a = 0; a < grid.n; ++a) {
        if (!in_interval(q[a]))
          rep.fail("property 3: q entry outside [t_l,t_r] at L=" + l.to_string());
        for (std::size_t b = a + 1; b < grid.n; ++b)
          if (q[a] == q[b]) rep.fail("property 1: duplicate q entries at L=" + l.to_string());
      }
    } else {
      for (const auto& v : q)
        if (in_interval(v))
          rep.fail("property 4: duplicate-column L has q entry in [t_l,t_r] at L=" +
                   l.to_string());
    }
  }

  // property 2: entries are globally distinct across orbit representatives
  std::set<Rational> all_entries;
  std::size_t expected = 0;
  for (const auto& idx : orbit_representatives(grid)) {
    auto q = ids_of(grid.matrix_from_column_indices(idx));
    for (const auto& v : q) all_entries.insert(v);
    expected += grid.n;
  }
  if (all_entries.size() != expected)
    rep.fail("property 2: q entries collide across non-permutation grid points");

  std::size_t sentinel_checked = 0;
  for (const auto& l : detail::sentinel_sample_points(grid, 100, seed)) {
    ++sentinel_checked;
    for (const auto& v : ids_of(l))
      if (in_interval(v))
        rep.fail("property 4: sentinel point has q entry in [t_l,t_r] at L=" + l.to_string());
  }

  rep.scope = "grid points=" + std::to_string(points.size()) +
              " sentinel points=" + std::to_string(sentinel_checked);
  rep.metrics["grid_points"] = static_cast<double>(points.size());
  rep.metrics["distinct_column_points"] = static_cast<double>(distinct_count);
  rep.metrics["orbit_representatives"] =
      static_cast<double>(orbit_representatives(grid).size());
  rep.metrics["q_entries_distinct"] = static_cast<double>(all_entries.size());
  return rep;
}

// ---------------------------------------------------------------------------
// End-to-end: gbar(X) = A_L on distinct-column cubes, 0 elsewhere
// ---------------------------------------------------------------------------

inline VerificationReport check_end_to_end(const ConstructionResult& result,
                                           const PiecewiseConstantFn& fbar,
                                           std::size_t budget = 2000000) {
  VerificationReport rep;
  rep.property = "end-to-end";
  rep.pass = true;
  const GridParams& grid = result.grid;
  Rational delta = grid.delta();
  std::vector<Rational> offsets = {delta / 2, delta / 8, delta * 7 / 8};

  auto points = result.positional ? positional_grid_points(grid, budget)
                                  : enumerate_grid(grid, budget);
  std::size_t mismatched_cubes = 0;
  for (const auto& l : points) {
    bool pinned = result.positional || !has_duplicate_columns(l);
    if (!pinned) ++mismatched_cubes;
    Matrix<Rational> expected = pinned ? fbar.value(l)
                                       : Matrix<Rational>::zero(grid.d, grid.n);
    Matrix<Rational> base = l;
    if (result.positional) base = l - *result.network.positional_encoding;
    for (const auto& off : offsets) {
      Matrix<Rational> x = base;
      for (std::size_t i = 0; i < x.rows(); ++i)
        for (std::size_t j = 0; j < x.cols(); ++j) x(i, j) += off;
      Matrix<Rational> y = network_forward(x, result.network);
      if (y != expected)
        rep.fail("gbar(X) != expected at L=" + l.to_string() +
                 " offset=" + rational_to_string(off));
    }
  }
  rep.scope = "cubes=" + std::to_string(points.size()) + " x3 points";
  rep.metrics["cubes"] = static_cast<double>(points.size());
  rep.metrics["mismatch_fraction"] =
      static_cast<double>(mismatched_cubes) / static_cast<double>(points.size());
  return rep;
}

// ---------------------------------------------------------------------------
// d_p distance estimation
// ---------------------------------------------------------------------------

using MatrixFn = std::function<Matrix<Rational>(const Matrix<Rational>&)>;

struct DpEstimate {
  double exact = 0;         // cube-sum over G_delta (valid for piecewise-constant f, g)
  double monte_carlo = 0;   // seeded uniform sampling over [0,1]^(d x n)
  double mc_std_error = 0;  // standard error of the p-th-power mean
  std::size_t samples = 0;
  std::uint64_t seed = kDefaultSeed;
};

inline DpEstimate estimate_dp(const MatrixFn& f, const MatrixFn& g, double p,
                              const GridParams& grid, std::uint64_t seed = kDefaultSeed,
                              std::size_t n_samples = 10000, std::size_t budget = 2000000) {
  if (p < 1) throw ConfigError("estimate_dp: p must be in [1, inf)");
  if (n_samples < 1) throw ConfigError("estimate_dp: N must be >= 1");
  DpEstimate est;
  est.samples = n_samples;
  est.seed = seed;

  double cube_volume = std::pow(to_double(grid.delta()), static_cast<double>(grid.nd()));
  double acc = 0;
  for (const auto& l : enumerate_grid(grid, budget)) {
    Matrix<Rational> c = grid.cube_center(l);
    double norm = entrywise_lp_norm(f(c) - g(c), p);
    acc += cube_volume * std::pow(norm, p);
  }
  est.exact = std::pow(acc, 1.0 / p);

  Rng rng(seed);
  double mean = 0, m2 = 0;
  for (std::size_t t = 1; t <= n_samples; ++t) {
    Matrix<Rational> x(grid.d, grid.n);
    for (std::size_t i = 0; i < grid.d; ++i)
      for (std::size_t j = 0; j < grid.n; ++j) {
        // rational conversion of a uniform double keeps both evaluations exact
        x(i, j) = Rational(static_cast<long long>(rng.uniform() * 9007199254740992.0),
                           9007199254740992LL);
      }
    double v = std::pow(entrywise_lp_norm(f(x) - g(x), p), p);
    double d1 = v - mean;
    mean += d1 / static_cast<double>(t);
    m2 += d1 * (v - mean);
  }
  est.monte_carlo = std::pow(mean, 1.0 / p);
  double variance = n_samples > 1 ? m2 / static_cast<double>(n_samples - 1) : 0.0;
  est.mc_std_error = std::sqrt(variance / static_cast<double>(n_samples));
  return est;
}

// ---------------------------------------------------------------------------
// Selective-shift oracle and injectivity sublemma
// ---------------------------------------------------------------------------

namespace detail {

// psi(Z; b) row-1 values straight from the case formula; hardmax ties at
// u^T Z_j == b average all columns, giving the mean of the ids.
inline std::vector<Rational> psi_formula(const GridParams& grid, const Matrix<Rational>& z,
                                         const Rational& b) {
  std::vector<Rational> ids(z.cols());
  for (std::size_t j = 0; j < z.cols(); ++j) ids[j] = grid.column_id(z, j);
  Rational mx = ids[0], mn = ids[0], sum = 0;
  for (const auto& v : ids) {
    mx = std::max(mx, v);
    mn = std::min(mn, v);
    sum += v;
  }
  Rational mean = sum / Rational(static_cast<long>(z.cols()));
  std::vector<Rational> out(z.cols());
  for (std::size_t j = 0; j < z.cols(); ++j)
    out[j] = ids[j] > b ? mx : (ids[j] < b ? mn : mean);
  return out;
}

inline Matrix<Rational> shift_layer_formula(const GridParams& grid, const Matrix<Rational>& z,
                                            const ExactAttn& layer) {
  Matrix<Rational> out = z;
  for (const auto& head : layer.heads) {
    Rational scale = head.w_o(0, 0);
    auto vals = psi_formula(grid, z, head.b_q[0]);
    for (std::size_t j = 0; j < z.cols(); ++j) out(0, j) += scale * vals[j];
  }
  return out;
}

// Scalar id dynamics of the shift sweep: each window (b, b') adds
// scale * (max - min) to every id strictly inside it.
inline std::vector<Rational> sweep_ids(const std::vector<ShiftWindow>& windows,
                                       std::vector<Rational> ids) {
  for (const auto& w : windows) {
    Rational mx = ids[0], mn = ids[0];
    for (const auto& v : ids) {
      mx = std::max(mx, v);
      mn = std::min(mn, v);
    }
    for (auto& v : ids)
      if (v > w.b_lo && v < w.b_hi) v += w.out_scale * (mx - mn);
  }
  return ids;
}

}  // namespace detail

inline VerificationReport check_shift_oracle(const GridParams& grid,
                                             std::uint64_t seed = kDefaultSeed,
                                             std::size_t budget = 2000000) {
  VerificationReport rep;
  rep.property = "shift-oracle";
  rep.seed = seed;
  rep.pass = true;
  auto mapper = build_contextual_mapper(grid);

  // matrix attention vs case formula, every mapper layer, every G+ point
  // plus 100 random exact inputs
  std::vector<Matrix<Rational>> inputs = enumerate_extended_grid(grid, budget);
  Rng rng(seed);
  for (std::size_t t = 0; t < 100; ++t)
    inputs.push_back(detail::random_exact_matrix(rng, grid.d, grid.n));
  std::size_t comparisons = 0;
  for (const auto& z : inputs) {
    for (const auto& layer : mapper.layers) {
      ++comparisons;
      if (attn_forward(z, layer) != detail::shift_layer_formula(grid, z, layer))
        rep.fail("matrix forward != case formula at Z=" + z.to_string());
    }
  }

  // injectivity sublemma: sorted id tuples -> max id after the sweep is
  // one-to-one and lands in the stated bounds
  long dd = static_cast<long>(grid.d);
  long nn = static_cast<long>(grid.n);
  Rational factor = pow_int(grid.delta(), -dd) - 1;
  Rational lower = pow_int(grid.delta(), -(nn - 1) * dd + 1) * factor;
  Rational upper =
      pow_int(grid.delta(), -nn * dd + 1) * factor - grid.delta() * factor * factor;
  std::map<Rational, std::vector<std::size_t>> table;
  std::size_t tuples = 0;
  for (const auto& idx : orbit_representatives(grid)) {
    ++tuples;
    std::vector<Rational> ids(grid.n);
    for (std::size_t j = 0; j < grid.n; ++j) ids[j] = Rational(static_cast<long>(idx[j]), grid.q);
    auto shifted = detail::sweep_ids(mapper.windows, ids);
    Rational ln = shifted[0];
    for (const auto& v : shifted) ln = std::max(ln, v);
    if (ln < lower || ln > upper)
      rep.fail("sublemma bounds violated for sorted tuple ending at l_n=" +
               rational_to_string(ln));
    auto [it, inserted] = table.emplace(ln, idx);
    if (!inserted) rep.fail("sublemma injectivity violated: two tuples share l_n=" +
                            rational_to_string(ln));
    // cross-check the scalar dynamics against the real attention stack
    Matrix<Rational> z = grid.matrix_from_column_indices(idx);
    for (std::size_t k = 0; k + 1 < mapper.layers.size(); ++k)
      z = attn_forward(z, mapper.layers[k]);
    std::vector<Rational> matrix_ids(grid.n);
    for (std::size_t j = 0; j < grid.n; ++j) matrix_ids[j] = grid.column_id(z, j);
    if (matrix_ids != shifted)
      rep.fail("scalar sweep oracle disagrees with attention stack at L=" + z.to_string());
  }

  // category-2 separation: duplicate-id tuples stay strictly below the
  // category-1 lower bound
  std::size_t dup_tuples = 0;
  gridenum::all_tuples(grid.num_columns(), grid.n, [&](const std::vector<std::size_t>& t) {
    bool dup = false;
    for (std::size_t a = 0; a < t.size() && !dup; ++a)
      for (std::size_t b = a + 1; b < t.size(); ++b) dup = dup || t[a] == t[b];
    if (!dup) return;
    ++dup_tuples;
    std::vector<Rational> ids(grid.n);
    for (std::size_t j = 0; j < grid.n; ++j) ids[j] = Rational(static_cast<long>(t[j]), grid.q);
    auto shifted = detail::sweep_ids(mapper.windows, ids);
    Rational ln = shifted[0];
    for (const auto& v : shifted) ln = std::max(ln, v);
    if (!(ln < lower))
      rep.fail("category-2 tuple reaches the category-1 id range, l_n=" +
               rational_to_string(ln));
  });

  rep.scope = "layer comparisons=" + std::to_string(comparisons) +
              " sorted tuples=" + std::to_string(tuples) +
              " duplicate tuples=" + std::to_string(dup_tuples);
  rep.metrics["comparisons"] = static_cast<double>(comparisons);
  rep.metrics["sorted_tuples"] = static_cast<double>(tuples);
  rep.metrics["lower_bound"] = to_double(lower);
  rep.metrics["upper_bound"] = to_double(upper);
  return rep;
}

}  // namespace seq2seq
