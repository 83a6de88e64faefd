// Command-line experiment runner for the era sampler family.
#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <set>

#include "era/config.hpp"
#include "era/errors.hpp"
#include "era/random.hpp"
#include "era/solver.hpp"
#include "era/sweep.hpp"

namespace fs = std::filesystem;

namespace {

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  bool plot = false;
};

era::ExperimentConfig load(const Options& opts) {
  era::ExperimentConfig config =
      opts.config_path.empty() ? era::ExperimentConfig{} : era::load_config(opts.config_path);
  if (opts.seed) config.seed = *opts.seed;
  if (opts.out_dir) config.out_dir = *opts.out_dir;
  config.validate();
  fs::create_directories(config.out_dir);
  return config;
}

void print_rows(const std::vector<era::ResultRow>& rows) {
  std::cout << std::left << std::setw(16) << "method" << std::setw(4) << "k" << std::setw(6)
            << "nfe" << std::setw(22) << "metric" << "value\n";
  for (const auto& r : rows) {
    std::cout << std::left << std::setw(16) << r.method << std::setw(4) << r.k << std::setw(6)
              << r.nfe << std::setw(22) << r.metric << r.value << '\n';
  }
}

void write_outputs(const era::ExperimentConfig& config, const Options& opts,
                   const era::SweepResult& result, const std::string& stem) {
  const auto csv = (fs::path(config.out_dir) / (stem + ".csv")).string();
  era::emit_csv(result.rows, csv);
  std::cout << "wrote " << csv << '\n';
  if (!opts.plot) return;
  std::set<std::string> metrics;
  for (const auto& r : result.rows) {
    if (r.nfe > 0 && r.metric != "nfe_per_chain" && r.metric.rfind("remap@", 0) != 0) {
      metrics.insert(r.metric);
    }
  }
  for (const auto& metric : metrics) {
    const auto svg = (fs::path(config.out_dir) / (stem + "_" + metric + ".svg")).string();
    era::emit_plot(result.rows, metric, svg);
    std::cout << "wrote " << svg << '\n';
  }
}

int cmd_sample(const Options& opts) {
  const auto config = load(opts);
  const auto& method = config.methods.front();
  auto solver = config.solver_config(method, config.k_list.front(), config.nfe_list.front());
  solver.record_trajectory = true;
  const auto estimator = config.make_estimator()->with_seed(config.seed);
  era::Rng rng(era::derive_seed(config.seed, 0x1));
  const auto result = era::sample(*estimator, solver, rng.normal_vector(estimator->dim()));

  const auto path = (fs::path(config.out_dir) / "trajectory.csv").string();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << std::setprecision(17) << "step,t";
  for (Eigen::Index d = 0; d < estimator->dim(); ++d) out << ",x" << d;
  out << ",rule,delta_eps_used,delta_eps_after,pc_gap,selected\n";
  const auto& traj = result.trajectory;
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    out << i << ',' << traj.times[i];
    for (Eigen::Index d = 0; d < traj.states[i].size(); ++d) out << ',' << traj.states[i][d];
    if (i == 0) {
      out << ",init,,,,\n";
      continue;
    }
    const auto& step = traj.steps[i - 1];
    static constexpr const char* kRules[] = {"ddim", "explicit_adams", "predictor_corrector", "era"};
    out << ',' << kRules[static_cast<int>(step.rule)] << ',' << step.delta_eps_used << ','
        << step.delta_eps_after << ',' << step.pc_gap << ',';
    for (std::size_t m = 0; m < step.selected.size(); ++m) out << (m ? ";" : "") << step.selected[m];
    out << '\n';
  }
  std::cout << method.label << " nfe=" << result.nfe << " final=(" << result.final.transpose()
            << ")\nwrote " << path << '\n';
  return 0;
}

int cmd_sweep(const Options& opts) {
  const auto config = load(opts);
  const auto result = era::run_sweep(config);
  print_rows(result.rows);
  write_outputs(config, opts, result, "results");
  return 0;
}

int cmd_ablate(const Options& opts) {
  auto config = load(opts);
  config.methods = era::parse_method_list("era, era_fixed", {});
  if (config.k_list.size() < 2) config.k_list = {3, 4, 5, 6};
  const auto result = era::run_sweep(config);
  print_rows(result.rows);
  write_outputs(config, opts, result, "ablation");
  return 0;
}

int cmd_robustness(const Options& opts) {
  const auto config = load(opts);
  era::SweepOptions sweep;
  sweep.per_probe_remap = true;
  const auto result = era::run_sweep(config, sweep);
  print_rows(result.rows);
  write_outputs(config, opts, result, "robustness");
  return 0;
}

int cmd_convergence(const Options& opts) {
  const auto config = load(opts);
  if (!config.reference_oracle()) {
    throw era::ConfigError("convergence needs estimator.kind = gaussian (exact flow reference)");
  }
  era::SweepOptions sweep;
  sweep.convergence_rows = true;
  const auto result = era::run_sweep(config, sweep);
  print_rows(result.rows);
  write_outputs(config, opts, result, "convergence");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Diffusion ODE sampler experiments (DDIM, Adams, predictor-corrector, ERA)"};
  app.require_subcommand(1);
  app.fallthrough();

  Options opts;
  app.add_option("--config", opts.config_path, "INI configuration file")->check(CLI::ExistingFile);
  app.add_option("--seed", opts.seed, "Base seed (overrides sweep.seed)");
  app.add_option("--out", opts.out_dir, "Output directory (overrides output.dir)");
  app.add_flag("--plot", opts.plot, "Also write SVG line plots");

  int (*handler)(const Options&) = nullptr;
  app.add_subcommand("sample", "Run one chain and dump its trajectory")
      ->callback([&] { handler = cmd_sample; });
  app.add_subcommand("sweep", "Run methods x NFE and write results.csv")
      ->callback([&] { handler = cmd_sweep; });
  app.add_subcommand("ablate-selection", "Error-robust vs fixed selection over k")
      ->callback([&] { handler = cmd_ablate; });
  app.add_subcommand("robustness", "Remap-error comparison per probe time")
      ->callback([&] { handler = cmd_robustness; });
  app.add_subcommand("convergence", "Empirical order against the exact Gaussian flow")
      ->callback([&] { handler = cmd_convergence; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    return handler(opts);
  } catch (const std::exception& e) {
    std::cerr << "era: error: " << e.what() << '\n';
    return 1;
  }
}
