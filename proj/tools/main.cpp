#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "seq2seq/serialize.hpp"

namespace {

using namespace seq2seq;

constexpr int kExitOk = 0;
constexpr int kExitPropertyFailure = 1;
constexpr int kExitConfigError = 2;
constexpr int kExitBudgetExceeded = 3;

struct GridOptions {
  std::string delta = "1/2";
  std::size_t d = 1;
  std::size_t n = 2;

  GridParams parse() const {
    Rational r = parse_rational(delta);
    if (numerator(r) != 1 || denominator(r) < 2)
      throw ConfigError("--delta must be of the form 1/q with integer q >= 2");
    return GridParams(static_cast<long>(denominator(r)), d, n);
  }
};

void add_grid_options(CLI::App* cmd, GridOptions& g) {
  cmd->add_option("--delta", g.delta, "grid resolution as a fraction 1/q");
  cmd->add_option("--d", g.d, "token embedding dimension");
  cmd->add_option("--n", g.n, "sequence length");
}

PiecewiseConstantFn load_target(const std::string& spec, const GridParams& grid,
                                std::uint64_t seed, bool positional) {
  if (positional) {
    if (spec == "random")
      return make_random_target_on(positional_grid_points(grid), grid, seed);
    return target_from_json(read_json_file(spec));
  }
  if (spec == "random") return make_random_equivariant_target(grid, seed);
  if (spec == "constant") return make_constant_target(grid, Rational(1, 2));
  if (spec == "identity") return make_identity_target(grid);
  return target_from_json(read_json_file(spec));
}

Json layer_count_table(const ConstructionResult& r) {
  const GridParams& g = r.grid;
  double q = static_cast<double>(g.q);
  double dn = static_cast<double>(g.nd());
  double n_fact = 1;
  for (std::size_t k = 2; k <= g.n; ++k) n_fact *= static_cast<double>(k);
  Json j;
  j["quantizer"] = r.layer_counts.quantizer;
  j["contextual"] = r.layer_counts.contextual;
  j["value"] = r.layer_counts.value;
  j["total"] = r.layer_counts.total();
  if (r.positional) {
    j["quantizer_closed_form"] = g.d * g.n * static_cast<std::size_t>(g.q);
    j["contextual_closed_form"] = g.n * g.num_columns() + 1;
    j["value_bound"] = static_cast<double>(g.n) * std::pow(q, dn);
  } else {
    j["quantizer_closed_form"] = g.d * static_cast<std::size_t>(g.q) + g.d;
    j["contextual_closed_form"] = g.num_columns() + 1;
    j["value_bound"] = static_cast<double>(g.n) * std::pow(q, dn) / n_fact;
  }
  return j;
}

int cmd_construct(const GridOptions& gopt, const std::string& target, std::uint64_t seed,
                  bool positional, const std::string& out, std::size_t budget) {
  GridParams grid = gopt.parse();
  PiecewiseConstantFn fbar = load_target(target, grid, seed, positional);
  ConstructionResult r = positional ? build_positional_pipeline(grid, fbar, budget)
                                    : assemble_modified_network(grid, fbar, budget);
  Json doc;
  doc["grid"] = {{"delta", "1/" + std::to_string(grid.q)}, {"d", grid.d}, {"n", grid.n}};
  doc["positional"] = positional;
  doc["layer_counts"] = layer_count_table(r);
  doc["network"] = network_to_json(r.network);
  if (!out.empty()) write_text_file(out, doc.dump(2) + "\n");
  std::cout << doc["layer_counts"].dump(2) << "\n";
  return kExitOk;
}

int cmd_layer_count(const GridOptions& gopt, std::uint64_t seed, bool positional,
                    std::size_t budget) {
  GridParams grid = gopt.parse();
  PiecewiseConstantFn fbar = load_target("random", grid, seed, positional);
  ConstructionResult r = positional ? build_positional_pipeline(grid, fbar, budget)
                                    : assemble_modified_network(grid, fbar, budget);
  Json table = layer_count_table(r);
  std::cout << table.dump(2) << "\n";
  bool ok = table["quantizer"] == table["quantizer_closed_form"] &&
            table["contextual"] == table["contextual_closed_form"] &&
            static_cast<double>(r.layer_counts.value) <=
                (1.0 + static_cast<double>(grid.d) + 2.0 * table["value_bound"].get<double>());
  return ok ? kExitOk : kExitPropertyFailure;
}

int cmd_verify(const GridOptions& gopt, const std::string& suite, const std::string& target,
               std::uint64_t seed, const std::string& mode, const std::string& out,
               const std::string& csv, std::size_t budget) {
  GridParams grid = gopt.parse();
  std::vector<VerificationReport> reports;
  bool want = false;
  auto selected = [&](const std::string& s) { return suite == "all" || suite == s; };

  if (selected("contextual")) {
    want = true;
    reports.push_back(check_contextual_properties(grid, seed));
  }
  if (selected("shift")) {
    want = true;
    reports.push_back(check_shift_oracle(grid, seed));
  }
  if (selected("end-to-end") || selected("equivariance")) {
    PiecewiseConstantFn fbar = load_target(target, grid, seed, false);
    ConstructionResult r = assemble_modified_network(grid, fbar, budget);
    if (selected("end-to-end")) {
      want = true;
      reports.push_back(check_end_to_end(r, fbar));
    }
    if (selected("equivariance")) {
      want = true;
      if (mode == "float") {
        Network<double> fnet = network_cast<double>(r.network);
        reports.push_back(check_equivariance<double>(
            [&](const Matrix<double>& x) { return network_forward(x, fnet); }, grid.d, grid.n,
            20, seed));
      } else {
        reports.push_back(check_equivariance<Rational>(
            [&](const Matrix<Rational>& x) { return network_forward(x, r.network); }, grid.d,
            grid.n, 20, seed));
      }
    }
  }
  if (!want) throw ConfigError("unknown suite: " + suite);

  Json doc = reports_to_json(reports);
  if (!out.empty()) write_text_file(out, doc.dump(2) + "\n");
  if (!csv.empty()) write_text_file(csv, reports_to_csv(reports));
  bool all_pass = true;
  for (const auto& r : reports) {
    std::cout << (r.pass ? "PASS " : "FAIL ") << r.property << " (" << r.scope << ")\n";
    if (!r.pass) std::cout << "  counterexample: " << r.counterexample << "\n";
    all_pass = all_pass && r.pass;
  }
  return all_pass ? kExitOk : kExitPropertyFailure;
}

int cmd_convert(const GridOptions& gopt, const std::string& target, std::uint64_t seed,
                std::vector<double> lambdas, std::vector<std::string> epsilons,
                const std::string& out, std::size_t budget) {
  GridParams grid = gopt.parse();
  if (lambdas.empty() || epsilons.empty())
    throw ConfigError("convert: lambda and epsilon schedules must be non-empty");
  if (lambdas.size() != epsilons.size())
    throw ConfigError("convert: schedules must have equal length");
  PiecewiseConstantFn fbar = load_target(target, grid, seed, false);
  ConstructionResult r = assemble_modified_network(grid, fbar, budget);

  // fixed test set: cube centers (margin delta/2 from every cube boundary)
  std::vector<Matrix<Rational>> test_points;
  for (const auto& l : enumerate_grid(grid)) test_points.push_back(grid.cube_center(l));
  if (test_points.size() > 100) {
    Rng rng(seed);
    std::vector<Matrix<Rational>> sample;
    for (std::size_t t = 0; t < 100; ++t)
      sample.push_back(test_points[rng.below(test_points.size())]);
    test_points = std::move(sample);
  }
  std::vector<Matrix<double>> expected;
  for (const auto& x : test_points)
    expected.push_back(network_forward(x, r.network).cast<double>());

  Json table = Json::array();
  Network<Rational> annealed;
  for (std::size_t k = 0; k < lambdas.size(); ++k) {
    ConversionParams params{lambdas[k], parse_rational(epsilons[k])};
    annealed = anneal_network(r.network, params);
    Network<double> fnet = network_cast<double>(annealed);
    double sup = 0;
    for (std::size_t t = 0; t < test_points.size(); ++t) {
      Matrix<double> y = network_forward(test_points[t].cast<double>(), fnet);
      sup = std::max(sup, max_abs_diff(y, expected[t]));
    }
    table.push_back({{"lambda", lambdas[k]}, {"epsilon", epsilons[k]}, {"sup_error", sup}});
    std::printf("lambda=%-10g epsilon=%-8s sup_error=%.3e\n", lambdas[k],
                epsilons[k].c_str(), sup);
  }
  if (!out.empty()) {
    Json doc;
    doc["convergence"] = table;
    doc["network"] = network_to_json(annealed);
    write_text_file(out, doc.dump(2) + "\n");
  }
  return kExitOk;
}

int cmd_dp_report(const GridOptions& gopt, const std::string& target, std::uint64_t seed,
                  double p, std::size_t samples, const std::string& out, std::size_t budget) {
  GridParams grid = gopt.parse();
  PiecewiseConstantFn fbar = load_target(target, grid, seed, false);
  ConstructionResult r = assemble_modified_network(grid, fbar, budget);
  MatrixFn f = [&](const Matrix<Rational>& x) { return fbar.evaluate(x); };
  MatrixFn g = [&](const Matrix<Rational>& x) { return network_forward(x, r.network); };
  DpEstimate est = estimate_dp(f, g, p, grid, seed, samples);
  Json doc = dp_to_json(est, p);
  std::cout << doc.dump(2) << "\n";
  if (!out.empty()) write_text_file(out, doc.dump(2) + "\n");
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Constructive universal approximation of sequence-to-sequence functions "
               "with Transformer networks"};
  app.require_subcommand(1);

  GridOptions gopt;
  std::string target = "random";
  std::string config_path;
  std::uint64_t seed = kDefaultSeed;
  bool positional = false;
  std::string out, csv;
  std::string suite = "all";
  std::string mode = "exact";
  std::vector<double> lambdas = {10, 100, 1000, 10000};
  std::vector<std::string> epsilons = {"1/10", "1/100", "1/1000", "1/10000"};
  double p = 1.0;
  std::size_t samples = 10000;

  auto* construct = app.add_subcommand("construct", "build the exact modified network");
  add_grid_options(construct, gopt);
  construct->add_option("--target", target, "random | constant | identity | <file.json>");
  construct->add_option("--seed", seed, "seed for builtin random targets");
  construct->add_flag("--positional", positional, "use the positional-encoding pipeline");
  construct->add_option("--out", out, "output network JSON path");

  auto* verify = app.add_subcommand("verify", "run property suites");
  add_grid_options(verify, gopt);
  verify->add_option("--suite", suite, "contextual | shift | end-to-end | equivariance | all");
  verify->add_option("--target", target, "target for network-level suites");
  verify->add_option("--seed", seed, "suite seed");
  verify->add_option("--mode", mode, "exact | float (equivariance suite)");
  verify->add_option("--out", out, "report JSON path");
  verify->add_option("--csv", csv, "report CSV path");

  auto* convert = app.add_subcommand("convert", "anneal into a softmax/ReLU network");
  add_grid_options(convert, gopt);
  convert->add_option("--target", target, "target spec");
  convert->add_option("--seed", seed, "target seed");
  convert->add_option("--lambda", lambdas, "softmax temperature schedule");
  convert->add_option("--epsilon", epsilons, "ReLU band-width schedule (fractions)");
  convert->add_option("--out", out, "annealed network JSON path");

  auto* dp = app.add_subcommand("dp-report", "estimate d_p(fbar, gbar)");
  add_grid_options(dp, gopt);
  dp->add_option("--target", target, "target spec");
  dp->add_option("--seed", seed, "sampling seed");
  dp->add_option("--p", p, "norm exponent, p >= 1");
  dp->add_option("--samples", samples, "Monte Carlo sample count");
  dp->add_option("--out", out, "report JSON path");

  auto* lc = app.add_subcommand("layer-count", "compare layer counts with closed forms");
  add_grid_options(lc, gopt);
  lc->add_option("--seed", seed, "target seed");
  lc->add_flag("--positional", positional, "use the positional-encoding pipeline");

  for (CLI::App* sub : {construct, verify, convert, dp, lc})
    sub->add_option("--config", config_path, "JSON config file; command-line flags override it");

  // config file values act as defaults for any flag not given explicitly
  app.callback([&]() {
    if (config_path.empty()) return;
    Json cfg = read_json_file(config_path);
    auto maybe = [&](const char* key, auto& slot, CLI::Option* opt) {
      using Slot = std::decay_t<decltype(slot)>;
      if (cfg.contains(key) && opt->count() == 0) slot = cfg[key].get<Slot>();
    };
    CLI::App* sub = app.get_subcommands().front();
    auto opt_or_null = [&](const char* name) -> CLI::Option* {
      return sub->get_option_no_throw(name);
    };
    if (auto* o = opt_or_null("--delta")) maybe("delta", gopt.delta, o);
    if (auto* o = opt_or_null("--d")) maybe("d", gopt.d, o);
    if (auto* o = opt_or_null("--n")) maybe("n", gopt.n, o);
    if (auto* o = opt_or_null("--target")) maybe("target", target, o);
    if (auto* o = opt_or_null("--seed")) maybe("seed", seed, o);
    if (auto* o = opt_or_null("--suite")) maybe("suite", suite, o);
    if (auto* o = opt_or_null("--mode")) maybe("mode", mode, o);
    if (auto* o = opt_or_null("--lambda")) maybe("lambda", lambdas, o);
    if (auto* o = opt_or_null("--epsilon")) maybe("epsilon", epsilons, o);
    if (auto* o = opt_or_null("--p")) maybe("p", p, o);
    if (auto* o = opt_or_null("--samples")) maybe("samples", samples, o);
    if (auto* o = opt_or_null("--out")) maybe("out", out, o);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitConfigError;
  }

  std::size_t budget = layer_budget_from_env();
  try {
    if (construct->parsed())
      return cmd_construct(gopt, target, seed, positional, out, budget);
    if (verify->parsed())
      return cmd_verify(gopt, suite, target, seed, mode, out, csv, budget);
    if (convert->parsed())
      return cmd_convert(gopt, target, seed, lambdas, epsilons, out, budget);
    if (dp->parsed()) return cmd_dp_report(gopt, target, seed, p, samples, out, budget);
    if (lc->parsed()) return cmd_layer_count(gopt, seed, positional, budget);
  } catch (const BudgetError& e) {
    std::cerr << "budget exceeded: " << e.what() << "\n";
    return kExitBudgetExceeded;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfigError;
  }
  return kExitConfigError;
}
