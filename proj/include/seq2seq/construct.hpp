#pragma once

#include <algorithm>

#include "seq2seq/sublayers.hpp"
#include "seq2seq/target.hpp"

namespace seq2seq {

using ExactFF = FFSublayer<Rational>;
using ExactAttn = AttnSublayer<Rational>;
using ExactPwl = PiecewiseLinear3<Rational>;

namespace build {

// Z -> Z + w2 * phi(w1 Z + b1 1_n^T), the r = 1 feed-forward shape every
// constructed layer uses.
inline ExactFF rank1_ff(const std::vector<Rational>& w1, const Rational& b1,
                        const std::vector<Rational>& w2, const ExactPwl& phi) {
  ExactFF layer;
  layer.w1 = Matrix<Rational>::row(w1);
  layer.b1 = {b1};
  layer.w2 = Matrix<Rational>::column(w2);
  layer.b2 = std::vector<Rational>(w2.size(), Rational(0));
  layer.activation = phi;
  if (!phi.has_constant_piece()) throw ConfigError("activation outside Phi (no constant piece)");
  return layer;
}

inline std::vector<Rational> basis(std::size_t d, std::size_t i) {
  std::vector<Rational> e(d, Rational(0));
  e[i] = 1;
  return e;
}

}  // namespace build

// ---------------------------------------------------------------------------
// Quantizer (feed-forward stack)
// ---------------------------------------------------------------------------

// Per row: one clipping layer sending (-inf, 0) and [1, inf) to the sentinel,
// then 1/delta layers each collapsing [v, v + delta) to v. Total d/delta + d.
inline std::vector<ExactFF> build_quantizer(const GridParams& grid) {
  std::vector<ExactFF> layers;
  Rational delta = grid.delta();
  for (std::size_t i = 0; i < grid.d; ++i) {
    ExactPwl clip;
    clip.c1 = 0;
    clip.c2 = 1;
    clip.lo = {Rational(-1), grid.sentinel()};
    clip.mid = {Rational(0), Rational(0)};
    clip.hi = {Rational(-1), grid.sentinel()};
    layers.push_back(build::rank1_ff(build::basis(grid.d, i), Rational(0),
                                     build::basis(grid.d, i), clip));
    for (long k = 0; k < grid.q; ++k) {
      ExactPwl snap;
      snap.c1 = 0;
      snap.c2 = delta;
      snap.lo = {Rational(0), Rational(0)};
      snap.mid = {Rational(-1), Rational(0)};
      snap.hi = {Rational(0), Rational(0)};
      layers.push_back(build::rank1_ff(build::basis(grid.d, i), -Rational(k, grid.q),
                                       build::basis(grid.d, i), snap));
    }
  }
  return layers;
}

// Quantizer for the positional pipeline: no clipping, dn/delta snap layers
// sweeping v in [0 : delta : n - delta] per row.
inline std::vector<ExactFF> build_positional_quantizer(const GridParams& grid) {
  std::vector<ExactFF> layers;
  Rational delta = grid.delta();
  for (std::size_t i = 0; i < grid.d; ++i) {
    for (long k = 0; k < grid.q * static_cast<long>(grid.n); ++k) {
      ExactPwl snap;
      snap.c1 = 0;
      snap.c2 = delta;
      snap.lo = {Rational(0), Rational(0)};
      snap.mid = {Rational(-1), Rational(0)};
      snap.hi = {Rational(0), Rational(0)};
      layers.push_back(build::rank1_ff(build::basis(grid.d, i), -Rational(k, grid.q),
                                       build::basis(grid.d, i), snap));
    }
  }
  return layers;
}

// ---------------------------------------------------------------------------
// Contextual mapper (attention stack)
// ---------------------------------------------------------------------------

// A selective-shift window (b, b') applied with hardmax heads, or the final
// global shift (no window).
struct ShiftWindow {
  Rational b_lo, b_hi;
  Rational out_scale;
};

namespace build {

inline AttentionHead<Rational> psi_head(const GridParams& grid, const Rational& b_q,
                                        const Rational& out_scale) {
  AttentionHead<Rational> h;
  h.w_k = grid.u_row();
  h.w_q = grid.u_row();
  h.w_v = grid.u_row();
  std::vector<Rational> e1(grid.d, Rational(0));
  e1[0] = out_scale;
  h.w_o = Matrix<Rational>::column(e1);
  h.b_q = {b_q};
  return h;
}

}  // namespace build

// Two hardmax heads implementing Z -> Z + out_scale * Psi(Z; b, b'): the
// first-row entry of every column whose id lies in (b, b') is shifted by
// out_scale * (max_k u^T Z_{:,k} - min_k u^T Z_{:,k}).
inline ExactAttn build_selective_shift_layer(const GridParams& grid, const Rational& b,
                                             const Rational& b_prime, const Rational& out_scale) {
  if (!(b < b_prime)) throw ConfigError("selective shift: requires b < b'");
  ExactAttn layer;
  layer.normalizer = NormalizerKind::Hardmax;
  layer.heads.push_back(build::psi_head(grid, b, out_scale));
  layer.heads.push_back(build::psi_head(grid, b_prime, -out_scale));
  return layer;
}

// Single-head layer Z -> Z + scale * psi(Z; 0).
inline ExactAttn build_global_shift_layer(const GridParams& grid, const Rational& scale) {
  ExactAttn layer;
  layer.normalizer = NormalizerKind::Hardmax;
  layer.heads.push_back(build::psi_head(grid, Rational(0), scale));
  return layer;
}

struct ContextualMapper {
  std::vector<ExactAttn> layers;
  std::vector<ShiftWindow> windows;  // the sweep, excluding the final layer
  Rational final_scale;
  std::vector<Rational> u;
  Rational t_l, t_r;
};

// delta^(-d) selective-shift layers sweeping column ids l in increasing
// order with half-width-delta/2 windows, plus one global-shift layer with
// scale delta^(-(n+1)d).
inline ContextualMapper build_contextual_mapper(const GridParams& grid) {
  ContextualMapper m;
  m.u = grid.u();
  m.t_l = grid.t_l();
  m.t_r = grid.t_r();
  Rational half = grid.delta() / 2;
  Rational scale = pow_int(grid.delta(), -static_cast<long>(grid.d));
  for (const Rational& l : grid.id_values()) {
    // window midpoints are offset by delta/2, so no grid id ever sits on a
    // hardmax decision boundary
    m.windows.push_back({l - half, l + half, scale});
    m.layers.push_back(build_selective_shift_layer(grid, l - half, l + half, scale));
  }
  m.final_scale =
      pow_int(grid.delta(), -(static_cast<long>(grid.n) + 1) * static_cast<long>(grid.d));
  m.layers.push_back(build_global_shift_layer(grid, m.final_scale));
  return m;
}

// Positional variant: the sweep covers per-position id ranges
// [s_j : delta : s_j + delta^(-d+1) - delta], s_j = (j-1) sum_k delta^(-k),
// and the final scale is n * delta^(-(n+1)d - 1).
inline ContextualMapper build_positional_contextual_mapper(const GridParams& grid) {
  ContextualMapper m;
  m.u = grid.u();
  Rational half = grid.delta() / 2;
  Rational scale = pow_int(grid.delta(), -static_cast<long>(grid.d));
  Rational s_step = 0;
  for (std::size_t k = 0; k < grid.d; ++k) s_step += pow_int(grid.delta(), -static_cast<long>(k));
  std::vector<Rational> ids;
  for (std::size_t j = 0; j < grid.n; ++j) {
    Rational s_j = Rational(static_cast<long>(j)) * s_step;
    for (const Rational& l : grid.id_values()) ids.push_back(s_j + l);
  }
  std::sort(ids.begin(), ids.end());
  for (const Rational& l : ids) {
    m.windows.push_back({l - half, l + half, scale});
    m.layers.push_back(build_selective_shift_layer(grid, l - half, l + half, scale));
  }
  m.final_scale =
      Rational(static_cast<long>(grid.n)) *
      pow_int(grid.delta(), -(static_cast<long>(grid.n) + 1) * static_cast<long>(grid.d) - 1);
  m.layers.push_back(build_global_shift_layer(grid, m.final_scale));
  // t bounds for the positional pipeline are derived from the enumerated
  // image when the value mapper is built
  m.t_l = 0;
  m.t_r = 0;
  return m;
}

inline Matrix<Rational> contextual_apply(const ContextualMapper& m, const Matrix<Rational>& l) {
  Matrix<Rational> z = l;
  for (const auto& layer : m.layers) z = attn_forward(z, layer);
  return z;
}

// ---------------------------------------------------------------------------
// Value mapper (feed-forward stack)
// ---------------------------------------------------------------------------

struct LayerCounts {
  std::size_t quantizer = 0;
  std::size_t contextual = 0;
  std::size_t value = 0;
  std::size_t total() const { return quantizer + contextual + value; }
};

struct ConstructionResult {
  Network<Rational> network;
  LayerCounts layer_counts;
  GridParams grid;
  std::vector<Rational> u;
  Rational t_l, t_r;
  bool positional = false;
};

namespace build {

struct ValueEntry {
  Rational id;                   // u^T g_c(L)_{:,j}
  std::vector<Rational> source;  // g_c(L)_{:,j}
  std::vector<Rational> target;  // (A_L)_{:,j}
};

// One layer per distinct contextual id: Z gets (A - g_c) added on the column
// whose id falls in the half-open window [id - delta/2, id + delta/2).
// Preceded by the out-of-interval guard and d negative-entry zeroing layers.
inline std::vector<ExactFF> value_stack(const GridParams& grid, const Rational& t_lo,
                                        const Rational& t_hi, const Rational& big_m,
                                        std::vector<ValueEntry> entries, std::size_t budget) {
  Rational delta = grid.delta();
  Rational half = delta / 2;
  std::sort(entries.begin(), entries.end(),
            [](const ValueEntry& a, const ValueEntry& b) { return a.id < b.id; });
  for (std::size_t i = 0; i + 1 < entries.size(); ++i) {
    if (entries[i + 1].id - entries[i].id < delta)
      throw ConfigError("value mapper: window collision, ids closer than delta");
  }
  for (const auto& e : entries) {
    if (e.id <= half) throw ConfigError("value mapper: id window overlaps zero");
    // a column already rewritten to its target value must stay out of every
    // later window, otherwise stacking the layers is not order-safe
    Rational target_id = 0;
    auto uv = grid.u();
    for (std::size_t i = 0; i < grid.d; ++i) target_id += uv[i] * e.target[i];
    for (const auto& other : entries) {
      if (target_id >= other.id - half && target_id < other.id + half)
        throw ConfigError("value mapper: target value id collides with a window");
    }
  }

  std::vector<ExactFF> layers;
  auto uv = grid.u();

  ExactPwl guard;
  guard.c1 = t_lo;
  guard.c2 = t_hi + delta;  // ids are delta-quantized; keeps t_hi itself inside
  guard.lo = {Rational(0), Rational(1)};
  guard.mid = {Rational(0), Rational(0)};
  guard.hi = {Rational(0), Rational(1)};
  std::vector<Rational> w2(grid.d, -(big_m + 1));
  layers.push_back(build::rank1_ff(uv, Rational(0), w2, guard));

  for (std::size_t i = 0; i < grid.d; ++i) {
    ExactPwl zero_neg;
    zero_neg.c1 = 0;
    zero_neg.c2 = 0;
    zero_neg.lo = {Rational(-1), Rational(0)};
    zero_neg.mid = {Rational(0), Rational(0)};
    zero_neg.hi = {Rational(0), Rational(0)};
    layers.push_back(build::rank1_ff(build::basis(grid.d, i), Rational(0),
                                     build::basis(grid.d, i), zero_neg));
  }

  for (const auto& e : entries) {
    ExactPwl window;
    window.c1 = -half;
    window.c2 = half;
    window.lo = {Rational(0), Rational(0)};
    window.mid = {Rational(0), Rational(1)};
    window.hi = {Rational(0), Rational(0)};
    std::vector<Rational> diff(grid.d);
    for (std::size_t i = 0; i < grid.d; ++i) diff[i] = e.target[i] - e.source[i];
    layers.push_back(build::rank1_ff(uv, -e.id, diff, window));
    if (layers.size() > budget) throw BudgetError("value mapper exceeds sublayer budget");
  }
  return layers;
}

}  // namespace build

// Value mapper for the permutation-equivariant pipeline: one window layer per
// contextual id of each orbit representative of the distinct-column grid.
inline std::vector<ExactFF> build_value_mapper(const GridParams& grid,
                                               const PiecewiseConstantFn& fbar,
                                               const ContextualMapper& mapper,
                                               std::size_t budget = kDefaultLayerBudget) {
  // M bounds every value (entry or id) the contextual mapper can emit on the
  // extended grid; M + 1 subtraction then makes out-of-interval tokens
  // strictly negative
  Rational big_m = 0;
  for (const auto& l : enumerate_extended_grid(grid)) {
    Matrix<Rational> z = contextual_apply(mapper, l);
    for (std::size_t j = 0; j < grid.n; ++j) {
      big_m = std::max(big_m, grid.column_id(z, j));
      for (std::size_t i = 0; i < grid.d; ++i) big_m = std::max(big_m, z(i, j));
    }
  }

  std::vector<build::ValueEntry> entries;
  for (const auto& rep : orbit_representatives(grid)) {
    Matrix<Rational> lbar = grid.matrix_from_column_indices(rep);
    Matrix<Rational> z = contextual_apply(mapper, lbar);
    Matrix<Rational> a = fbar.value(lbar);
    for (std::size_t j = 0; j < grid.n; ++j)
      entries.push_back({grid.column_id(z, j), z.col(j), a.col(j)});
    if (entries.size() > budget) throw BudgetError("value mapper exceeds sublayer budget");
  }
  return build::value_stack(grid, mapper.t_l, mapper.t_r, big_m, std::move(entries), budget);
}

inline ConstructionResult assemble_modified_network(const GridParams& grid,
                                                    const PiecewiseConstantFn& fbar,
                                                    std::size_t budget = kDefaultLayerBudget) {
  if (!fbar.equivariant())
    throw ConfigError("assemble_modified_network requires an equivariant target");
  ConstructionResult r;
  r.grid = grid;
  auto quantizer = build_quantizer(grid);
  auto mapper = build_contextual_mapper(grid);
  auto value = build_value_mapper(grid, fbar, mapper, budget);
  r.layer_counts = {quantizer.size(), mapper.layers.size(), value.size()};
  if (r.layer_counts.total() > budget) throw BudgetError("network exceeds sublayer budget");
  r.u = mapper.u;
  r.t_l = mapper.t_l;
  r.t_r = mapper.t_r;
  for (auto& l : quantizer) r.network.sublayers.emplace_back(std::move(l));
  for (auto& l : mapper.layers) r.network.sublayers.emplace_back(std::move(l));
  for (auto& l : value) r.network.sublayers.emplace_back(std::move(l));
  return r;
}

// ---------------------------------------------------------------------------
// Positional-encoding pipeline
// ---------------------------------------------------------------------------

inline Matrix<Rational> positional_encoding_matrix(const GridParams& grid) {
  Matrix<Rational> e(grid.d, grid.n);
  for (std::size_t i = 0; i < grid.d; ++i)
    for (std::size_t j = 0; j < grid.n; ++j) e(i, j) = Rational(static_cast<long>(j));
  return e;
}

// Quantized points of the shifted domain: column j ranges over
// [j-1 : delta : j - delta]^d.
inline std::vector<Matrix<Rational>> positional_grid_points(const GridParams& grid,
                                                            std::size_t budget = 2000000) {
  std::size_t cols = grid.num_columns();
  double size = std::pow(static_cast<double>(cols), static_cast<double>(grid.n));
  if (size > static_cast<double>(budget))
    throw BudgetError("positional grid enumeration exceeds budget");
  std::vector<Matrix<Rational>> out;
  gridenum::all_tuples(cols, grid.n, [&](const std::vector<std::size_t>& t) {
    Matrix<Rational> m = grid.matrix_from_column_indices(t);
    for (std::size_t j = 0; j < grid.n; ++j)
      for (std::size_t i = 0; i < grid.d; ++i) m(i, j) += Rational(static_cast<long>(j));
    out.push_back(m);
  });
  return out;
}

inline ConstructionResult build_positional_pipeline(const GridParams& grid,
                                                    const PiecewiseConstantFn& fbar,
                                                    std::size_t budget = kDefaultLayerBudget) {
  ConstructionResult r;
  r.grid = grid;
  r.positional = true;
  auto quantizer = build_positional_quantizer(grid);
  auto mapper = build_positional_contextual_mapper(grid);

  auto points = positional_grid_points(grid);
  Rational big_m = 0;
  Rational lo, hi;
  bool first = true;
  std::vector<build::ValueEntry> entries;
  for (const auto& l : points) {
    Matrix<Rational> z = contextual_apply(mapper, l);
    Matrix<Rational> a = fbar.value(l);
    for (std::size_t j = 0; j < grid.n; ++j) {
      Rational id = grid.column_id(z, j);
      if (first) {
        lo = hi = id;
        first = false;
      } else {
        lo = std::min(lo, id);
        hi = std::max(hi, id);
      }
      big_m = std::max(big_m, id);
      for (std::size_t i = 0; i < grid.d; ++i) big_m = std::max(big_m, z(i, j));
      entries.push_back({id, z.col(j), a.col(j)});
    }
    if (entries.size() > budget) throw BudgetError("value mapper exceeds sublayer budget");
  }
  mapper.t_l = lo;
  mapper.t_r = hi;
  auto value = build::value_stack(grid, lo, hi, big_m, std::move(entries), budget);

  r.layer_counts = {quantizer.size(), mapper.layers.size(), value.size()};
  if (r.layer_counts.total() > budget) throw BudgetError("network exceeds sublayer budget");
  r.u = mapper.u;
  r.t_l = lo;
  r.t_r = hi;
  r.network.positional_encoding = positional_encoding_matrix(grid);
  for (auto& l : quantizer) r.network.sublayers.emplace_back(std::move(l));
  for (auto& l : mapper.layers) r.network.sublayers.emplace_back(std::move(l));
  for (auto& l : value) r.network.sublayers.emplace_back(std::move(l));
  return r;
}

}  // namespace seq2seq
