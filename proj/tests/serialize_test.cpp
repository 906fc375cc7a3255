#include <gtest/gtest.h>

#include "seq2seq/serialize.hpp"

using namespace seq2seq;

TEST(MatrixJson, RoundTripExact) {
  auto m = ExactMatrix::from_rows({{Rational(1, 3), Rational(-2)},
                                   {Rational(0), Rational(7, 4)}});
  EXPECT_EQ(matrix_from_json(matrix_to_json(m)), m);
  EXPECT_THROW(matrix_from_json(Json::array()), ConfigError);
}

TEST(NetworkJson, RoundTripConstructed) {
  GridParams g(2, 1, 2);
  auto fbar = make_random_equivariant_target(g, 9);
  auto r = assemble_modified_network(g, fbar);
  auto doc = network_to_json(r.network);
  auto back = network_from_json(doc);
  ASSERT_EQ(back.sublayers.size(), r.network.sublayers.size());
  for (const auto& l : enumerate_grid(g)) {
    auto c = g.cube_center(l);
    EXPECT_EQ(network_forward(c, back), network_forward(c, r.network));
  }
  // byte-identical re-serialization
  EXPECT_EQ(network_to_json(back).dump(), doc.dump());
}

TEST(NetworkJson, RoundTripPositionalAndAnnealed) {
  GridParams g(2, 1, 2);
  auto fbar = make_random_target_on(positional_grid_points(g), g, 9);
  auto r = build_positional_pipeline(g, fbar);
  auto back = network_from_json(network_to_json(r.network));
  ASSERT_TRUE(back.positional_encoding.has_value());
  EXPECT_EQ(*back.positional_encoding, *r.network.positional_encoding);

  auto eq = make_random_equivariant_target(g, 9);
  auto modified = assemble_modified_network(g, eq);
  auto annealed = anneal_network(modified.network, ConversionParams{100.0, Rational(1, 100)});
  auto annealed_back = network_from_json(network_to_json(annealed));
  auto x = g.cube_center(enumerate_grid(g).front()).cast<double>();
  EXPECT_EQ(network_forward(x, network_cast<double>(annealed_back)),
            network_forward(x, network_cast<double>(annealed)));
}

TEST(NetworkJson, BProjAndSepConvKinds) {
  Network<Rational> net;
  net.sublayers.emplace_back(BProjSublayer<Rational>{ExactMatrix::identity(2),
                                                     ExactMatrix::identity(3)});
  net.sublayers.emplace_back(
      SepConvSublayer<Rational>{ExactMatrix::identity(2), ExactMatrix(2, 2, Rational(1, 2))});
  auto back = network_from_json(network_to_json(net));
  ASSERT_EQ(back.sublayers.size(), 2u);
  EXPECT_TRUE(std::holds_alternative<BProjSublayer<Rational>>(back.sublayers[0]));
  EXPECT_TRUE(std::holds_alternative<SepConvSublayer<Rational>>(back.sublayers[1]));
}

TEST(TargetJson, RoundTripEquivariant) {
  GridParams g(2, 1, 2);
  auto fbar = make_random_equivariant_target(g, 4);
  auto doc = target_to_json(fbar);
  EXPECT_EQ(doc["delta"], "1/2");
  EXPECT_EQ(doc["equivariant"], true);
  auto back = target_from_json(doc);
  EXPECT_EQ(back.table_size(), fbar.table_size());
  for (const auto& l : enumerate_grid(g)) EXPECT_EQ(back.value(l), fbar.value(l));
}

TEST(TargetJson, RoundTripPositional) {
  GridParams g(2, 1, 2);
  auto points = positional_grid_points(g);
  auto fbar = make_random_target_on(points, g, 4);
  auto back = target_from_json(target_to_json(fbar));
  for (const auto& l : points) EXPECT_EQ(back.value(l), fbar.value(l));
}

TEST(GridJson, Validation) {
  EXPECT_THROW(grid_from_json(Json{{"delta", "2/3"}, {"d", 1}, {"n", 2}}), ConfigError);
  EXPECT_THROW(grid_from_json(Json{{"delta", "1/1"}, {"d", 1}, {"n", 2}}), ConfigError);
  GridParams g = grid_from_json(Json{{"delta", "1/4"}, {"d", 2}, {"n", 3}});
  EXPECT_EQ(g.q, 4);
  EXPECT_EQ(g.d, 2u);
  EXPECT_EQ(g.n, 3u);
}

TEST(ReportJson, FieldsAndCsv) {
  VerificationReport rep;
  rep.property = "demo";
  rep.scope = "scope";
  rep.pass = false;
  rep.counterexample = "X=[1 2]";
  rep.metrics["m"] = 0.5;
  auto j = report_to_json(rep);
  EXPECT_EQ(j["property"], "demo");
  EXPECT_EQ(j["pass"], false);
  EXPECT_EQ(j["counterexample"], "X=[1 2]");

  VerificationReport ok;
  ok.property = "other";
  ok.scope = "s";
  ok.pass = true;
  auto csv = reports_to_csv({rep, ok});
  EXPECT_NE(csv.find("property,scope,pass,metric,value"), std::string::npos);
  EXPECT_NE(csv.find("demo,\"scope\",0,m,0.5"), std::string::npos);
  EXPECT_NE(csv.find("other,\"s\",1"), std::string::npos);
}

TEST(Files, WriteReadRoundTrip) {
  std::string path = ::testing::TempDir() + "seq2seq_serialize_test.json";
  Json doc{{"k", "v"}, {"n", 3}};
  write_text_file(path, doc.dump());
  EXPECT_EQ(read_json_file(path), doc);
  EXPECT_THROW(read_json_file(path + ".missing"), ConfigError);
}
