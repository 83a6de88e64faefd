#pragma once

#include <optional>
#include <span>
#include <vector>

#include "era/state.hpp"

namespace era {

/// One observed estimator output and the time it was taken at.
struct BufferEntry {
  double t;
  StateVector eps;
};

/// Append-only history of (t_n, eps_theta(x_{t_n}, t_n)) in sampling order,
/// so times strictly decrease with the index.
class LagrangeBuffer {
 public:
  /// Throws PreconditionError if t does not precede the newest entry's time.
  void append(double t, StateVector eps);

  [[nodiscard]] std::size_t size() const noexcept { return entries_.size(); }
  [[nodiscard]] bool empty() const noexcept { return entries_.empty(); }
  [[nodiscard]] const BufferEntry& operator[](std::size_t n) const { return entries_[n]; }
  [[nodiscard]] const BufferEntry& newest() const { return entries_.back(); }
  /// Entry `back` positions before the newest (0 is the newest).
  [[nodiscard]] const BufferEntry& from_newest(std::size_t back) const;
  [[nodiscard]] std::span<const BufferEntry> entries() const noexcept { return entries_; }

 private:
  std::vector<BufferEntry> entries_;
};

/// Knobs of the error-robust selection: order k, scale lambda and the
/// running error measure delta_eps (which starts at lambda).
struct SelectionParams {
  int k = 4;
  double lambda = 5.0;
  double delta_eps = 5.0;
  /// Replaces delta_eps / lambda with a constant (the constant-scale ablation).
  std::optional<double> constant_exponent;
  /// Upper bound on the exponent; unset means unbounded.
  std::optional<double> max_exponent;

  [[nodiscard]] double exponent() const;
};

struct SelectedBases {
  std::vector<int> indices;  // strictly increasing, last == newest index
  std::vector<BufferEntry> entries;
};

/// ||observed - predicted||_2 over all entries.
[[nodiscard]] double error_measure(const StateVector& observed, const StateVector& predicted);

/// Uniform initial indices (i / k) m for m = 1..k. Requires i >= k - 1 >= 2.
[[nodiscard]] std::vector<double> init_indices(int i, int k);

/// Power-law index translation floor((tau_hat / i)^exponent * i). An exponent
/// above 1 pulls indices toward the start of the buffer; the last index
/// always stays at i. Monotone non-increasing in the exponent.
[[nodiscard]] std::vector<int> translate_indices(std::span<const double> tau_hat, int i,
                                                 double exponent);
[[nodiscard]] std::vector<int> translate_indices(std::span<const double> tau_hat, int i,
                                                 double delta_eps, double lambda);

/// Turns translated indices into k distinct nodes in [0, i] ending at i.
/// Each index is first capped at i - (k - 1 - m) so there is room for the
/// later ones, then bumped to at least one past its predecessor.
[[nodiscard]] std::vector<int> resolve_collisions(std::vector<int> indices, int i);

/// Error-robust choice of k interpolation nodes from the buffer.
/// Throws PreconditionError when the buffer holds fewer than k entries.
[[nodiscard]] SelectedBases select_bases(const LagrangeBuffer& buffer, const SelectionParams& params);

/// The newest k entries (the fixed strategy).
[[nodiscard]] SelectedBases select_last(const LagrangeBuffer& buffer, int k);

/// Lagrange basis values l_m(t_query) for the given nodes.
/// Throws DegenerateInterpolationError on repeated nodes.
[[nodiscard]] std::vector<double> lagrange_weights(std::span<const double> nodes, double t_query);

/// sum_m l_m(t_query) eps_m through the selected bases.
[[nodiscard]] StateVector interpolate(const SelectedBases& bases, double t_query);
[[nodiscard]] StateVector interpolate(std::span<const BufferEntry> bases, double t_query);

}  // namespace era
