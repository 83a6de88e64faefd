#include "era/sweep.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "era/errors.hpp"
#include "era/metrics.hpp"
#include "era/random.hpp"
#include "era/solver.hpp"

namespace era {

namespace {

constexpr std::uint64_t kInitTag = 0x1;
constexpr std::uint64_t kGroundTruthTag = 0x67;
constexpr std::uint64_t kRemapTag = 0x72;
constexpr std::uint64_t kSlicedTag = 0x5a;
constexpr int kSlicedProjections = 64;

// Runs fn(i) for i in [0, n) over `threads` workers; each index is written by
// exactly one worker, so results do not depend on scheduling.
template <class Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
  std::size_t workers = threads > 0 ? static_cast<std::size_t>(threads)
                                    : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, std::max<std::size_t>(1, n / 64));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += workers) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

int reported_k(const MethodSpec& method, int k) {
  switch (method.method) {
    case Method::ddim: return 1;
    case Method::explicit_adams:
    case Method::fixed_pc: return 4;
    case Method::era: return k;
  }
  return k;
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw std::runtime_error("number formatting failed");
  return std::string(buf, ptr);
}

}  // namespace

CellRun run_cell(const ExperimentConfig& config, const EstimatorPtr& estimator,
                 const MethodSpec& method, int k, int nfe) {
  const SolverConfig solver = config.solver_config(method, k, nfe);
  solver.validate();
  const auto n = static_cast<std::size_t>(config.n_chains);
  const auto dim = estimator->dim();

  CellRun run;
  run.initial.resize(n);
  run.finals.resize(n);
  std::vector<long> nfe_counts(n, 0);
  parallel_for(n, config.threads, [&](std::size_t c) {
    const std::uint64_t chain_seed = config.seed + c;
    Rng rng(derive_seed(chain_seed, kInitTag));
    run.initial[c] = rng.normal_vector(dim);
    const auto chain_estimator = estimator->with_seed(chain_seed);
    auto result = sample(*chain_estimator, solver, run.initial[c]);
    run.finals[c] = std::move(result.final);
    nfe_counts[c] = result.nfe;
  });
  for (long count : nfe_counts) run.nfe_total += count;
  return run;
}

SweepResult run_sweep(const ExperimentConfig& config, const SweepOptions& options) {
  return run_sweep(config, config.make_estimator(), options);
}

SweepResult run_sweep(const ExperimentConfig& config, const EstimatorPtr& estimator,
                      const SweepOptions& options) {
  config.validate();
  SweepResult out;

  const auto reference = config.reference_oracle();
  const GaussianMixtureLaw* law = estimator->data_law();
  StateBatch ground_truth;
  if (law) ground_truth = law->draw(static_cast<std::size_t>(config.n_chains),
                                    derive_seed(config.seed, kGroundTruthTag));
  const auto probes = default_probe_times(config.t_start, config.t_end, config.probe_count);
  const std::string scheme(to_string(config.scheme));

  for (const auto& method : config.methods) {
    const std::vector<int> ks =
        method.uses_k() ? config.k_list : std::vector<int>{config.k_list.front()};
    for (int k : ks) {
      std::vector<std::pair<int, double>> terminal;
      for (int nfe : config.nfe_list) {
        auto row = [&](std::string metric, double value) {
          out.rows.push_back({method.label, reported_k(method, k), config.lambda, scheme, nfe,
                              config.seed, std::move(metric), value});
        };
        CellRun run;
        try {
          run = run_cell(config, estimator, method, k, nfe);
        } catch (const ConfigError& e) {
          std::ostringstream reason;
          reason << method.label << " k=" << k << " nfe=" << nfe << ": " << e.what();
          out.skipped.push_back(reason.str());
          std::cerr << "skipped " << reason.str() << '\n';
          continue;
        }

        if (reference) {
          double total = 0.0;
          for (std::size_t c = 0; c < run.finals.size(); ++c) {
            const StateVector exact = reference->exact_flow(run.initial[c], config.t_start, config.t_end);
            total += terminal_error(run.finals[c], exact);
          }
          const double mean = total / static_cast<double>(run.finals.size());
          terminal.emplace_back(nfe, mean);
          row("terminal_error", mean);
        }
        if (!ground_truth.empty()) {
          row("energy_distance", energy_distance(run.finals, ground_truth));
          if (config.sliced_wasserstein) {
            row("sliced_wasserstein",
                sliced_wasserstein(run.finals, ground_truth, kSlicedProjections,
                                   derive_seed(config.seed, kSlicedTag)));
          }
        }
        const auto remap = remap_robustness(run.finals, *estimator, config.schedule, probes,
                                            derive_seed(config.seed, kRemapTag));
        double remap_total = 0.0;
        for (double v : remap) remap_total += v;
        row("remap_mean", remap_total / static_cast<double>(remap.size()));
        if (options.per_probe_remap) {
          for (std::size_t j = 0; j < probes.size(); ++j) {
            std::ostringstream name;
            name << "remap@t=" << format_double(probes[j]);
            row(name.str(), remap[j]);
          }
        }
        row("nfe_per_chain",
            static_cast<double>(run.nfe_total) / static_cast<double>(config.n_chains));
      }
      if (options.convergence_rows && terminal.size() >= 3) {
        bool positive = std::all_of(terminal.begin(), terminal.end(),
                                    [](const auto& p) { return p.second > 0.0; });
        if (positive) {
          out.rows.push_back({method.label, reported_k(method, k), config.lambda, scheme, 0,
                              config.seed, "convergence_order", convergence_order(terminal)});
        }
      }
    }
  }
  return out;
}

void write_csv(std::ostream& out, const std::vector<ResultRow>& rows) {
  out << kCsvHeader << '\n';
  for (const auto& r : rows) {
    out << r.method << ',' << r.k << ',' << format_double(r.lambda) << ',' << r.scheme << ','
        << r.nfe << ',' << r.seed << ',' << r.metric << ',' << format_double(r.value) << '\n';
  }
}

void emit_csv(const std::vector<ResultRow>& rows, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  write_csv(out, rows);
  out.flush();
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

std::vector<ResultRow> parse_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) {
    throw std::runtime_error("results CSV: missing or unexpected header");
  }
  std::vector<ResultRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) f.push_back(field);
    if (f.size() != 8) throw std::runtime_error("results CSV: expected 8 fields in '" + line + "'");
    auto number = [&](const std::string& s, auto& value) {
      const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
      if (ec != std::errc() || ptr != s.data() + s.size()) {
        throw std::runtime_error("results CSV: bad number '" + s + "'");
      }
    };
    ResultRow r;
    r.method = f[0];
    number(f[1], r.k);
    number(f[2], r.lambda);
    r.scheme = f[3];
    number(f[4], r.nfe);
    number(f[5], r.seed);
    r.metric = f[6];
    number(f[7], r.value);
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace era
