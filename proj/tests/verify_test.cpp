#include <gtest/gtest.h>

#include <algorithm>

#include "seq2seq/verify.hpp"

using namespace seq2seq;

TEST(Equivariance, IdentityNetworkPasses) {
  auto rep = check_equivariance<Rational>(
      [](const Matrix<Rational>& x) { return x; }, 1, 3, 5);
  EXPECT_TRUE(rep.pass);
  EXPECT_TRUE(rep.counterexample.empty());
}

TEST(Equivariance, ConstructedNetworkPasses) {
  GridParams g(2, 1, 2);
  auto fbar = make_random_equivariant_target(g, 5);
  auto r = assemble_modified_network(g, fbar);
  auto rep = check_equivariance<Rational>(
      [&](const Matrix<Rational>& x) { return network_forward(x, r.network); }, 1, 2, 20);
  EXPECT_TRUE(rep.pass);
}

TEST(Equivariance, FloatModeUsesTolerance) {
  GridParams g(2, 1, 2);
  auto fbar = make_random_equivariant_target(g, 5);
  auto r = assemble_modified_network(g, fbar);
  Network<double> fnet = network_cast<double>(r.network);
  auto rep = check_equivariance<double>(
      [&](const Matrix<double>& x) { return network_forward(x, fnet); }, 1, 2, 20);
  EXPECT_TRUE(rep.pass);
}

TEST(Equivariance, BProjViolationDetectedWithWitness) {
  Rng wrng(kDefaultSeed);
  BProjSublayer<double> layer;
  layer.w_o = FloatMatrix::identity(2);
  layer.w_p = FloatMatrix(3, 3);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) layer.w_p(i, j) = wrng.gaussian();
  auto rep = check_equivariance<double>(
      [&](const Matrix<double>& x) { return bproj_forward(x, layer); }, 2, 3, 20,
      kDefaultSeed, /*expect_violation=*/true);
  EXPECT_TRUE(rep.pass);
  EXPECT_FALSE(rep.counterexample.empty());  // stored witness

  // without expect_violation the same layer must fail and carry the witness
  auto plain = check_equivariance<double>(
      [&](const Matrix<double>& x) { return bproj_forward(x, layer); }, 2, 3, 20);
  EXPECT_FALSE(plain.pass);
  EXPECT_FALSE(plain.counterexample.empty());
}

TEST(Equivariance, SepConvViolationDetected) {
  Rng wrng(kDefaultSeed + 9);
  SepConvSublayer<double> layer;
  layer.w_o = FloatMatrix::identity(1);
  layer.w_c = FloatMatrix(1, 3);
  for (std::size_t t = 0; t < 3; ++t) layer.w_c(0, t) = wrng.gaussian();
  auto rep = check_equivariance<double>(
      [&](const Matrix<double>& x) { return sepconv_forward(x, layer); }, 1, 3, 20,
      kDefaultSeed, /*expect_violation=*/true);
  EXPECT_TRUE(rep.pass);
}

TEST(Contextual, ThreeAnchorConfigs) {
  for (const auto& [q, d, n] : std::vector<std::tuple<long, std::size_t, std::size_t>>{
           {2, 1, 2}, {3, 1, 3}, {2, 2, 2}}) {
    auto rep = check_contextual_properties(GridParams(q, d, n));
    EXPECT_TRUE(rep.pass) << rep.counterexample;
  }
}

TEST(Contextual, AnchorMetrics) {
  auto rep = check_contextual_properties(GridParams(2, 1, 2));
  EXPECT_TRUE(rep.pass);
  EXPECT_EQ(rep.metrics.at("grid_points"), 4.0);
  EXPECT_EQ(rep.metrics.at("distinct_column_points"), 2.0);
  EXPECT_EQ(rep.metrics.at("orbit_representatives"), 1.0);
  auto rep22 = check_contextual_properties(GridParams(2, 2, 2));
  EXPECT_EQ(rep22.metrics.at("grid_points"), 16.0);
  EXPECT_EQ(rep22.metrics.at("orbit_representatives"), 6.0);
}

TEST(EndToEnd, MismatchFractions) {
  {
    GridParams g(2, 1, 2);
    auto fbar = make_random_equivariant_target(g, 2);
    auto rep = check_end_to_end(assemble_modified_network(g, fbar), fbar);
    EXPECT_TRUE(rep.pass) << rep.counterexample;
    EXPECT_DOUBLE_EQ(rep.metrics.at("mismatch_fraction"), 0.5);
  }
  {
    GridParams g(4, 1, 2);
    auto fbar = make_random_equivariant_target(g, 2);
    auto rep = check_end_to_end(assemble_modified_network(g, fbar), fbar);
    EXPECT_TRUE(rep.pass) << rep.counterexample;
    EXPECT_DOUBLE_EQ(rep.metrics.at("mismatch_fraction"), 0.25);  // = delta
  }
}

TEST(EndToEnd, ZeroTargetMatchesEverywhere) {
  GridParams g(2, 1, 2);
  auto fbar = make_constant_target(g, Rational(0));
  auto r = assemble_modified_network(g, fbar);
  auto rep = check_end_to_end(r, fbar);
  EXPECT_TRUE(rep.pass);
  for (const auto& l : enumerate_grid(g))
    EXPECT_EQ(network_forward(g.cube_center(l), r.network), Matrix<Rational>::zero(1, 2));
}

TEST(EndToEnd, PositionalPipeline) {
  GridParams g(2, 1, 2);
  auto fbar = make_random_target_on(positional_grid_points(g), g, 7);
  auto rep = check_end_to_end(build_positional_pipeline(g, fbar), fbar);
  EXPECT_TRUE(rep.pass) << rep.counterexample;
  EXPECT_DOUBLE_EQ(rep.metrics.at("mismatch_fraction"), 0.0);
}

TEST(Dp, SelfDistanceIsZero) {
  GridParams g(2, 1, 2);
  auto fbar = make_random_equivariant_target(g, 3);
  MatrixFn f = [&](const Matrix<Rational>& x) { return fbar.evaluate(x); };
  auto est = estimate_dp(f, f, 2.0, g, kDefaultSeed, 100);
  EXPECT_DOUBLE_EQ(est.exact, 0.0);
  EXPECT_DOUBLE_EQ(est.monte_carlo, 0.0);
}

TEST(Dp, BoundAndMonteCarloAgreement) {
  GridParams g(2, 1, 2);
  auto fbar = make_random_equivariant_target(g, 1);
  auto r = assemble_modified_network(g, fbar);
  MatrixFn f = [&](const Matrix<Rational>& x) { return fbar.evaluate(x); };
  MatrixFn gb = [&](const Matrix<Rational>& x) { return network_forward(x, r.network); };
  for (double p : {1.0, 2.0}) {
    auto est = estimate_dp(f, gb, p, g, kDefaultSeed, 10000);
    // f and gbar differ only on duplicate-column cubes, where gbar = 0
    double b = 0;
    fbar.for_each_entry([&](const Matrix<Rational>&, const Matrix<Rational>& a) {
      b = std::max(b, entrywise_lp_norm(a, p));
    });
    double mismatch = 0.5;
    EXPECT_LE(est.exact, std::pow(std::pow(b, p) * mismatch, 1.0 / p) + 1e-12);
    // MC mean of p-th powers vs the exact cube integral, within 3 SE
    double exact_pp = std::pow(est.exact, p);
    double mc_pp = std::pow(est.monte_carlo, p);
    EXPECT_NEAR(mc_pp, exact_pp, 3.0 * est.mc_std_error + 1e-12);
  }
}

TEST(Dp, RejectsBadParameters) {
  GridParams g(2, 1, 2);
  MatrixFn id = [](const Matrix<Rational>& x) { return x; };
  EXPECT_THROW(estimate_dp(id, id, 0.5, g), ConfigError);
  EXPECT_THROW(estimate_dp(id, id, 1.0, g, 0, 0), ConfigError);
}

TEST(Dp, BothVanishOnOuterShell) {
  // sampled points in [-1, 2]^(d x n) outside [0, 1)^(d x n): fbar and gbar
  // both return 0, so the d_p integral reduces to the unit cube
  GridParams g(2, 1, 2);
  auto fbar = make_random_equivariant_target(g, 1);
  auto r = assemble_modified_network(g, fbar);
  Rng rng(kDefaultSeed);
  std::size_t outside = 0;
  while (outside < 200) {
    Matrix<Rational> x(1, 2);
    for (std::size_t j = 0; j < 2; ++j)
      x(0, j) = Rational(static_cast<long>(rng.below(301)), 100) - Rational(1);
    bool in_unit = true;
    for (std::size_t j = 0; j < 2; ++j) in_unit = in_unit && x(0, j) >= 0 && x(0, j) < 1;
    if (in_unit) continue;
    ++outside;
    EXPECT_EQ(fbar.evaluate(x), Matrix<Rational>::zero(1, 2));
    EXPECT_EQ(network_forward(x, r.network), Matrix<Rational>::zero(1, 2));
  }
}

TEST(ShiftOracle, ThreeAnchorConfigs) {
  for (const auto& [q, d, n] : std::vector<std::tuple<long, std::size_t, std::size_t>>{
           {2, 1, 2}, {3, 1, 3}, {2, 2, 2}}) {
    auto rep = check_shift_oracle(GridParams(q, d, n));
    EXPECT_TRUE(rep.pass) << rep.counterexample;
  }
}

TEST(ShiftOracle, SublemmaBoundsAnchor) {
  // (1, 3, 1/3): bounds [delta^(-1)(delta^(-1)-1), delta^(-2)(delta^(-1)-1)
  // - delta (delta^(-1)-1)^2] = [6, 50/3]; the single sorted triple
  // (0, 1/3, 2/3) reaches l~_3 = 44/3
  auto rep = check_shift_oracle(GridParams(3, 1, 3));
  EXPECT_TRUE(rep.pass);
  EXPECT_DOUBLE_EQ(rep.metrics.at("lower_bound"), 6.0);
  EXPECT_DOUBLE_EQ(rep.metrics.at("upper_bound"), 50.0 / 3.0);
  {
    auto m3 = build_contextual_mapper(GridParams(3, 1, 3));
    std::vector<Rational> ids{Rational(0), Rational(1, 3), Rational(2, 3)};
    for (const auto& w : m3.windows) {
      Rational mx = *std::max_element(ids.begin(), ids.end());
      Rational mn = *std::min_element(ids.begin(), ids.end());
      for (auto& v : ids)
        if (v > w.b_lo && v < w.b_hi) v += w.out_scale * (mx - mn);
    }
    EXPECT_EQ(*std::max_element(ids.begin(), ids.end()), Rational(44, 3));
  }
  // (1, 2, 1/2): single sorted pair (0, 1/2) reaches l~_2 = 3/2
  GridParams g(2, 1, 2);
  auto mapper = build_contextual_mapper(g);
  auto shifted = std::vector<Rational>{Rational(0), Rational(1, 2)};
  for (const auto& w : mapper.windows) {
    Rational mx = std::max(shifted[0], shifted[1]);
    Rational mn = std::min(shifted[0], shifted[1]);
    for (auto& v : shifted)
      if (v > w.b_lo && v < w.b_hi) v += w.out_scale * (mx - mn);
  }
  EXPECT_EQ(std::max(shifted[0], shifted[1]), Rational(3, 2));
}

TEST(Reports, FailureCarriesCounterexample) {
  // a deliberately broken "network": constant output is not equivariant
  auto rep = check_equivariance<Rational>(
      [](const Matrix<Rational>& x) {
        Matrix<Rational> y = Matrix<Rational>::zero(x.rows(), x.cols());
        y(0, 0) = x(0, 0);
        return y;
      },
      1, 2, 20);
  EXPECT_FALSE(rep.pass);
  EXPECT_FALSE(rep.counterexample.empty());
}

TEST(Reports, DeterministicGivenSeed) {
  GridParams g(2, 1, 2);
  auto a = check_contextual_properties(g, 123);
  auto b = check_contextual_properties(g, 123);
  EXPECT_EQ(a.pass, b.pass);
  EXPECT_EQ(a.scope, b.scope);
  EXPECT_EQ(a.metrics, b.metrics);
}
