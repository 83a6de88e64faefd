#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "era/config.hpp"
#include "era/state.hpp"

namespace era {

/// One line of the results table.
struct ResultRow {
  std::string method;
  int k = 0;
  double lambda = 0.0;
  std::string scheme;
  int nfe = 0;
  std::uint64_t seed = 0;
  std::string metric;
  double value = 0.0;

  friend bool operator==(const ResultRow&, const ResultRow&) = default;
};

struct SweepOptions {
  /// Adds one remap row per probe time ("remap@t=<t>") next to remap_mean.
  bool per_probe_remap = false;
  /// Appends a convergence_order row per method/k (nfe column 0) when the
  /// terminal error is available and at least 3 NFE values ran.
  bool convergence_rows = false;
};

struct SweepResult {
  std::vector<ResultRow> rows;
  std::vector<std::string> skipped;  // reason per skipped (method, k, nfe)
};

/// Output of one (method, k, nfe) cell over all chains.
struct CellRun {
  StateBatch initial;
  StateBatch finals;
  long nfe_total = 0;
};

/// Samples n_chains chains for one cell. Chain c starts from N(0, I) drawn
/// with seed (seed + c) and sees the perturbation field of seed (seed + c),
/// identically for every method, so cells are paired by construction.
[[nodiscard]] CellRun run_cell(const ExperimentConfig& config, const EstimatorPtr& estimator,
                               const MethodSpec& method, int k, int nfe);

/// Runs every method x k x NFE cell in declared order and scores it with
/// terminal_error (Gaussian data only), energy_distance against ground-truth
/// draws, optionally sliced_wasserstein, and remap_mean. Cells the solver
/// rejects are skipped with a reason in `skipped` (also logged to stderr).
[[nodiscard]] SweepResult run_sweep(const ExperimentConfig& config, const SweepOptions& options = {});
[[nodiscard]] SweepResult run_sweep(const ExperimentConfig& config, const EstimatorPtr& estimator,
                                    const SweepOptions& options = {});

inline constexpr const char* kCsvHeader = "method,k,lambda,scheme,nfe,seed,metric,value";

/// Writes the header and one line per row. Numbers use the shortest
/// round-trip decimal form, independent of the locale.
void write_csv(std::ostream& out, const std::vector<ResultRow>& rows);
/// Throws std::runtime_error naming the path when it cannot be written.
void emit_csv(const std::vector<ResultRow>& rows, const std::string& path);
[[nodiscard]] std::vector<ResultRow> parse_csv(std::istream& in);

/// Standalone SVG line chart of `metric` against NFE (log x axis), one
/// polyline per method (per method and k when several k are present).
/// Throws ContractError when no row carries the metric.
[[nodiscard]] std::string render_plot(const std::vector<ResultRow>& rows, const std::string& metric);
void emit_plot(const std::vector<ResultRow>& rows, const std::string& metric, const std::string& path);

}  // namespace era
