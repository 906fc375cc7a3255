#include <gtest/gtest.h>

#include "seq2seq/construct.hpp"

using namespace seq2seq;

namespace {

Matrix<Rational> apply_ff_stack(const std::vector<ExactFF>& layers, Matrix<Rational> z) {
  for (const auto& l : layers) z = ff_forward(z, l);
  return z;
}

}  // namespace

TEST(GridParams, DerivedQuantities) {
  GridParams g(2, 1, 2);
  EXPECT_EQ(g.delta(), Rational(1, 2));
  EXPECT_EQ(g.sentinel(), Rational(-4));  // -delta^(-nd), nd = 2
  EXPECT_EQ(g.t_l(), Rational(8));
  EXPECT_EQ(g.t_r(), Rational(16));
  EXPECT_EQ(g.u(), std::vector<Rational>{Rational(1)});

  GridParams g2(2, 2, 2);
  EXPECT_EQ(g2.u(), (std::vector<Rational>{Rational(1), Rational(2)}));
  EXPECT_EQ(g2.num_columns(), 4u);
  EXPECT_LT(g2.t_l(), g2.t_r());

  EXPECT_THROW(GridParams(1, 1, 2), ConfigError);
  EXPECT_THROW(GridParams(2, 0, 2), ConfigError);
  EXPECT_THROW(GridParams(2, 1, 1), ConfigError);
}

TEST(GridParams, ColumnIdBijection) {
  GridParams g(3, 2, 2);
  for (std::size_t k = 0; k < g.num_columns(); ++k) {
    EXPECT_EQ(g.column_id(Matrix<Rational>::column(g.column_by_index(k)), 0),
              Rational(static_cast<long>(k), 3));
  }
}

TEST(Grid, OrbitRepresentativesCount) {
  // C(q^d, n) strictly-increasing index tuples
  EXPECT_EQ(orbit_representatives(GridParams(2, 1, 2)).size(), 1u);
  EXPECT_EQ(orbit_representatives(GridParams(3, 1, 3)).size(), 1u);
  EXPECT_EQ(orbit_representatives(GridParams(2, 2, 2)).size(), 6u);
  EXPECT_EQ(orbit_representatives(GridParams(4, 1, 2)).size(), 6u);
}

TEST(Grid, EnumerationSizesAndBudget) {
  GridParams g(2, 1, 2);
  EXPECT_EQ(enumerate_grid(g).size(), 4u);
  EXPECT_EQ(enumerate_extended_grid(g).size(), 9u);
  EXPECT_THROW(enumerate_grid(g, 3), BudgetError);
}

TEST(Quantizer, LayerCountAndMapping) {
  GridParams g(2, 1, 2);
  auto layers = build_quantizer(g);
  EXPECT_EQ(layers.size(), 3u);  // d/delta + d

  auto x = Matrix<Rational>::from_rows({{Rational(3, 10), Rational(7, 10)}});
  auto q = apply_ff_stack(layers, x);
  EXPECT_EQ(q, Matrix<Rational>::from_rows({{Rational(0), Rational(1, 2)}}));

  auto y = Matrix<Rational>::from_rows({{Rational(1), Rational(1, 5)}});
  auto qy = apply_ff_stack(layers, y);
  EXPECT_EQ(qy, Matrix<Rational>::from_rows({{Rational(-4), Rational(0)}}));
}

TEST(Quantizer, Idempotent) {
  GridParams g(3, 2, 2);
  auto layers = build_quantizer(g);
  Rng rng(5);
  for (int t = 0; t < 20; ++t) {
    Matrix<Rational> x(2, 2);
    for (std::size_t i = 0; i < 2; ++i)
      for (std::size_t j = 0; j < 2; ++j)
        x(i, j) = Rational(static_cast<long>(rng.below(41)), 20) - Rational(1, 2);
    auto once = apply_ff_stack(layers, x);
    EXPECT_EQ(apply_ff_stack(layers, once), once);
  }
}

TEST(SelectiveShift, HandExample) {
  GridParams g(2, 1, 2);
  auto z = Matrix<Rational>::from_rows({{Rational(0), Rational(1, 2)}});
  auto first = build_selective_shift_layer(g, Rational(-1, 4), Rational(1, 4), Rational(2));
  auto z1 = attn_forward(z, first);
  EXPECT_EQ(z1, Matrix<Rational>::from_rows({{Rational(1), Rational(1, 2)}}));
  auto second = build_selective_shift_layer(g, Rational(1, 4), Rational(3, 4), Rational(2));
  auto z2 = attn_forward(z1, second);
  EXPECT_EQ(z2, Matrix<Rational>::from_rows({{Rational(1), Rational(3, 2)}}));
  EXPECT_THROW(build_selective_shift_layer(g, Rational(1), Rational(0), Rational(2)),
               ConfigError);
}

TEST(SelectiveShift, UntouchedOutsideWindow) {
  GridParams g(2, 1, 2);
  auto layer = build_selective_shift_layer(g, Rational(5), Rational(6), Rational(2));
  auto z = Matrix<Rational>::from_rows({{Rational(0), Rational(1, 2)}});
  EXPECT_EQ(attn_forward(z, layer), z);
}

TEST(ContextualMapper, AnchorValues) {
  GridParams g(2, 1, 2);
  auto m = build_contextual_mapper(g);
  EXPECT_EQ(m.layers.size(), 3u);  // delta^(-d) + 1
  EXPECT_EQ(m.t_l, Rational(8));
  EXPECT_EQ(m.t_r, Rational(16));

  auto l = Matrix<Rational>::from_rows({{Rational(0), Rational(1, 2)}});
  // after the shift sweep, before the global layer: l~ = [1, 3/2]
  auto z = l;
  for (std::size_t k = 0; k + 1 < m.layers.size(); ++k) z = attn_forward(z, m.layers[k]);
  EXPECT_EQ(z, Matrix<Rational>::from_rows({{Rational(1), Rational(3, 2)}}));
  // global shift adds delta^(-3) * max = 8 * 3/2 = 12 to every entry
  auto q = contextual_apply(m, l);
  EXPECT_EQ(q, Matrix<Rational>::from_rows({{Rational(13), Rational(27, 2)}}));
}

TEST(ContextualMapper, DuplicateColumnsLandOutside) {
  GridParams g(2, 1, 2);
  auto m = build_contextual_mapper(g);
  auto l = Matrix<Rational>::from_rows({{Rational(1, 2), Rational(1, 2)}});
  auto q = contextual_apply(m, l);
  // no shift fires; global layer adds 8 * 1/2 = 4
  EXPECT_EQ(q, Matrix<Rational>::from_rows({{Rational(9, 2), Rational(9, 2)}}));
  EXPECT_TRUE(q(0, 0) < m.t_l);
}

TEST(ValueMapper, LayerCountAnchor) {
  GridParams g(2, 1, 2);
  auto mapper = build_contextual_mapper(g);
  auto fbar = make_random_equivariant_target(g, 1);
  auto layers = build_value_mapper(g, fbar, mapper);
  // 1 guard + d zeroing + n ids x 1 orbit representative
  EXPECT_EQ(layers.size(), 4u);
}

TEST(ValueMapper, BudgetEnforced) {
  GridParams g(2, 1, 2);
  auto fbar = make_random_equivariant_target(g, 1);
  EXPECT_THROW(assemble_modified_network(g, fbar, 5), BudgetError);
}

TEST(AssembledNetwork, MemorizesTargetExactly) {
  GridParams g(2, 1, 2);
  auto fbar = make_random_equivariant_target(g, 42);
  auto r = assemble_modified_network(g, fbar);
  EXPECT_EQ(r.layer_counts.quantizer, 3u);
  EXPECT_EQ(r.layer_counts.contextual, 3u);
  EXPECT_EQ(r.layer_counts.value, 4u);
  for (const auto& l : enumerate_grid(g)) {
    auto y = network_forward(g.cube_center(l), r.network);
    if (has_duplicate_columns(l))
      EXPECT_EQ(y, Matrix<Rational>::zero(1, 2));
    else
      EXPECT_EQ(y, fbar.value(l));
  }
}

TEST(AssembledNetwork, OutOfRangeInputsMapToZero) {
  GridParams g(2, 1, 2);
  auto fbar = make_random_equivariant_target(g, 42);
  auto r = assemble_modified_network(g, fbar);
  auto x = Matrix<Rational>::from_rows({{Rational(2), Rational(2)}});
  EXPECT_EQ(network_forward(x, r.network), Matrix<Rational>::zero(1, 2));
  auto y = Matrix<Rational>::from_rows({{Rational(-3), Rational(1, 4)}});
  EXPECT_EQ(network_forward(y, r.network), Matrix<Rational>::zero(1, 2));
}

TEST(AssembledNetwork, PermutationEquivariant) {
  GridParams g(2, 2, 2);
  auto fbar = make_random_equivariant_target(g, 3);
  auto r = assemble_modified_network(g, fbar);
  Rng rng(9);
  for (int t = 0; t < 5; ++t) {
    Matrix<Rational> x(2, 2);
    for (std::size_t i = 0; i < 2; ++i)
      for (std::size_t j = 0; j < 2; ++j)
        x(i, j) = Rational(static_cast<long>(rng.below(17)), 16);
    auto fx = network_forward(x, r.network);
    for (const auto& p : all_permutations(2))
      EXPECT_EQ(network_forward(x.permute_columns(p), r.network), fx.permute_columns(p));
  }
}

TEST(AssembledNetwork, RejectsNonEquivariantTarget) {
  GridParams g(2, 1, 2);
  auto fbar = make_random_target_on(positional_grid_points(g), g, 1);
  EXPECT_THROW(assemble_modified_network(g, fbar), ConfigError);
}

TEST(Positional, EncodingMatrix) {
  GridParams g(2, 1, 3);
  auto e = positional_encoding_matrix(g);
  EXPECT_EQ(e, Matrix<Rational>::from_rows({{Rational(0), Rational(1), Rational(2)}}));
}

TEST(Positional, LayerCountsAnchor) {
  GridParams g(2, 1, 2);
  auto fbar = make_random_target_on(positional_grid_points(g), g, 7);
  auto r = build_positional_pipeline(g, fbar);
  EXPECT_EQ(r.layer_counts.quantizer, 4u);   // dn/delta
  EXPECT_EQ(r.layer_counts.contextual, 5u);  // n(1/delta)^d + 1
  EXPECT_TRUE(r.positional);
  ASSERT_TRUE(r.network.positional_encoding.has_value());
}

TEST(Positional, MemorizesNonEquivariantTarget) {
  GridParams g(2, 1, 2);
  auto points = positional_grid_points(g);
  auto fbar = make_random_target_on(points, g, 7);
  // the random table must actually break equivariance somewhere
  bool asymmetric = false;
  for (const auto& l : points) {
    auto lp = l.permute_columns({1, 0});
    if (fbar.value(l).permute_columns({1, 0}) != fbar.value(lp)) asymmetric = true;
  }
  EXPECT_TRUE(asymmetric);

  auto r = build_positional_pipeline(g, fbar);
  for (const auto& l : points) {
    auto x = g.cube_center(l - *r.network.positional_encoding);
    EXPECT_EQ(network_forward(x, r.network), fbar.value(l));
  }
}

TEST(Target, PiecewiseConstantApproxAnchors) {
  GridParams g(2, 1, 2);
  auto f_id = make_identity_target(g);
  auto l = Matrix<Rational>::from_rows({{Rational(0), Rational(1, 2)}});
  EXPECT_EQ(f_id.value(l), Matrix<Rational>::from_rows({{Rational(1, 4), Rational(3, 4)}}));
  EXPECT_EQ(f_id.table_size(), 3u);  // 3 orbits of the 4 grid points

  auto f_zero = make_constant_target(g, Rational(0));
  EXPECT_EQ(f_zero.value(l), Matrix<Rational>::zero(1, 2));
}

TEST(Target, EquivariantLookupPermutes) {
  GridParams g(2, 1, 2);
  auto f = make_random_equivariant_target(g, 11);
  auto l = Matrix<Rational>::from_rows({{Rational(1, 2), Rational(0)}});
  auto sorted = Matrix<Rational>::from_rows({{Rational(0), Rational(1, 2)}});
  EXPECT_EQ(f.value(l), f.value(sorted).permute_columns({1, 0}));
}

TEST(Target, StabilizerConflictRejected) {
  GridParams g(2, 1, 2);
  PiecewiseConstantFn f(g, /*equivariant=*/true);
  auto dup = Matrix<Rational>::from_rows({{Rational(0), Rational(0)}});
  auto bad = Matrix<Rational>::from_rows({{Rational(1), Rational(0)}});
  EXPECT_THROW(f.set(dup, bad), ConfigError);
}

TEST(Target, EvaluateQuantizesAndZeroesOutside) {
  GridParams g(2, 1, 2);
  auto f = make_identity_target(g);
  auto x = Matrix<Rational>::from_rows({{Rational(3, 10), Rational(9, 10)}});
  auto l = Matrix<Rational>::from_rows({{Rational(0), Rational(1, 2)}});
  EXPECT_EQ(f.evaluate(x), f.value(l));
  auto outside = Matrix<Rational>::from_rows({{Rational(3, 2), Rational(1, 4)}});
  EXPECT_EQ(f.evaluate(outside), Matrix<Rational>::zero(1, 2));
}
