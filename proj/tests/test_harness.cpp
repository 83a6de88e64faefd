#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "era/config.hpp"
#include "era/errors.hpp"
#include "era/sweep.hpp"

using namespace era;

namespace {

ExperimentConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

std::string to_csv(const std::vector<ResultRow>& rows) {
  std::ostringstream out;
  write_csv(out, rows);
  return out.str();
}

std::size_t count_of(const std::string& haystack, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = haystack.find(needle); pos != std::string::npos; pos = haystack.find(needle, pos + 1)) ++n;
  return n;
}

ExperimentConfig small_config() {
  return parse(
      "[grid]\nt_end = 1e-4\n"
      "[estimator]\nkind = gaussian\nmean = 0.5, -0.5\nstd = 0.8\n"
      "[perturbation]\namplitude = 0.2\nexponent = 2\n"
      "[solver]\nmethods = ddim, fixed_pc, era\nk_list = 3, 4\nlambda = 2\n"
      "[sweep]\nnfe_list = 5, 10, 20\nn_chains = 16\nseed = 7\nthreads = 3\n");
}

}  // namespace

TEST_CASE("config parsing") {
  SUBCASE("defaults") {
    const auto cfg = parse("");
    CHECK(cfg.lambda == 5.0);
    CHECK(cfg.scheme == GridScheme::uniform);
    CHECK(cfg.t_start == 1.0);
    CHECK(cfg.estimator.kind == EstimatorKind::mixture);
    CHECK(cfg.methods.size() == 2);
  }
  SUBCASE("cifar10 profile with an override") {
    const auto cfg = parse(
        "[schedule]\nkind = discrete_linear_beta\n"
        "[solver]\nprofile = cifar10\nlambda = 12\n");
    CHECK(cfg.lambda == 12.0);
    CHECK(cfg.scheme == GridScheme::log_snr);
    CHECK(cfg.t_end == 1e-3);
    CHECK(cfg.t_start == 1000.0);
  }
  SUBCASE("method list and ablations") {
    const auto cfg = parse("[solver]\nmethods = era, era_fixed, era_const\nconstant_exponents = 1, 2\n");
    REQUIRE(cfg.methods.size() == 4);
    CHECK(cfg.methods[1].label == "era_fixed");
    CHECK(cfg.methods[1].selection == Selection::fixed_last_k);
    CHECK(cfg.methods[2].label == "era_const=1");
    CHECK(cfg.methods[3].constant_exponent == 2.0);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS((void)parse("[solver]\nlamda = 3\n"), ConfigError);
    CHECK_THROWS_AS((void)parse("[solvers]\nlambda = 3\n"), ConfigError);
    CHECK_THROWS_AS((void)parse("[solver]\nlambda = abc\n"), ConfigError);
    CHECK_THROWS_AS((void)parse("[solver]\nlambda = -1\n"), ConfigError);
    CHECK_THROWS_AS((void)parse("[solver]\nmethods = rk45\n"), ConfigError);
    CHECK_THROWS_AS((void)parse("[solver]\nk = 2\n"), ConfigError);
    CHECK_THROWS_AS((void)parse("[grid]\nt_end = 0\n"), ConfigError);
    CHECK_THROWS_AS((void)parse("[sweep]\nnfe_list = \n"), ConfigError);
    CHECK_THROWS_AS((void)load_config("/nonexistent/config.ini"), ConfigError);
  }
}

TEST_CASE("csv emission") {
  const std::string header = std::string(kCsvHeader) + "\n";
  CHECK(to_csv({}) == header);

  const ResultRow row{"era", 4, 5.0, "uniform", 10, 3, "energy_distance", 0.1 + 0.2};
  const auto one = to_csv({row});
  CHECK(std::count(one.begin(), one.end(), '\n') == 2);

  std::vector<ResultRow> rows{row,
                              {"ddim", 1, 2.5, "log_snr", 20, 0, "remap@t=0.5", 1e-300},
                              {"era_const=2", 6, 15.0, "uniform", 0, 99, "convergence_order", -1.0 / 3}};
  std::istringstream in(to_csv(rows));
  CHECK(parse_csv(in) == rows);

  const auto dir = std::filesystem::temp_directory_path() / "era_csv_test";
  std::filesystem::create_directories(dir);
  emit_csv(rows, (dir / "rows.csv").string());
  std::ifstream file(dir / "rows.csv");
  CHECK(parse_csv(file) == rows);
  CHECK_THROWS((void)emit_csv(rows, "/nonexistent/dir/rows.csv"));
}

TEST_CASE("sweep of a single ddim step") {
  auto cfg = parse("[solver]\nmethods = ddim\n[sweep]\nnfe_list = 1\nn_chains = 8\n");
  const auto result = run_sweep(cfg);
  CHECK(result.skipped.empty());
  std::set<std::string> metrics;
  for (const auto& r : result.rows) {
    CHECK(r.method == "ddim");
    CHECK(r.k == 1);
    CHECK(r.nfe == 1);
    metrics.insert(r.metric);
  }
  CHECK(metrics == std::set<std::string>{"energy_distance", "remap_mean", "nfe_per_chain"});
  CHECK(result.rows.size() == 3);
}

TEST_CASE("sweep rows, skips and reproducibility") {
  const auto cfg = small_config();
  SweepOptions options;
  options.convergence_rows = true;
  const auto a = run_sweep(cfg, options);

  // fixed_pc needs 4 steps and era k=4 needs 4: nothing skipped at nfe 5.
  CHECK(a.skipped.empty());
  for (const auto& r : a.rows) {
    if (r.metric == "nfe_per_chain") CHECK(r.value == r.nfe);
    if (r.method == "era") CHECK((r.k == 3 || r.k == 4));
    if (r.method == "fixed_pc") CHECK(r.k == 4);
  }
  const auto conv = std::count_if(a.rows.begin(), a.rows.end(),
                                  [](const ResultRow& r) { return r.metric == "convergence_order"; });
  CHECK(conv == 4);

  // Different thread counts give byte-identical tables.
  auto serial = cfg;
  serial.threads = 1;
  CHECK(to_csv(run_sweep(serial, options).rows) == to_csv(a.rows));

  auto short_grid = cfg;
  short_grid.nfe_list = {3, 10};
  const auto b = run_sweep(short_grid);
  CHECK(b.skipped.size() == 2);  // fixed_pc and era k=4 at nfe 3
}

TEST_CASE("plots") {
  std::vector<ResultRow> rows;
  for (int nfe : {5, 10, 20}) {
    rows.push_back({"ddim", 1, 5, "uniform", nfe, 0, "energy_distance", 1.0 / nfe});
    rows.push_back({"era", 4, 5, "uniform", nfe, 0, "energy_distance", 0.1 / nfe});
    rows.push_back({"era", 4, 5, "uniform", nfe, 0, "remap_mean", 0.5});
  }
  const auto svg = render_plot(rows, "energy_distance");
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(count_of(svg, "<polyline") == 2);

  std::vector<ResultRow> single{{"era", 4, 5, "uniform", 10, 0, "energy_distance", 0.2}};
  const auto one = render_plot(single, "energy_distance");
  CHECK(count_of(one, "<polyline") == 1);
  CHECK(count_of(one, "<circle") >= 1);

  CHECK_THROWS_AS((void)render_plot(rows, "terminal_error"), ContractError);
}
