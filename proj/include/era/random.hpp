#pragma once

#include <cstdint>
#include <random>

#include "era/state.hpp"

namespace era {

/// SplitMix64 finalizer; used to derive independent streams from (seed, tag).
[[nodiscard]] std::uint64_t mix64(std::uint64_t x) noexcept;
[[nodiscard]] std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) noexcept;

/// Seeded Gaussian source with platform-independent output.
///
/// std::normal_distribution is implementation-defined, so normals are drawn
/// with Box-Muller on top of the fully specified mt19937_64 engine.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(mix64(seed)) {}

  double uniform();  // in (0, 1)
  double normal();
  StateVector normal_vector(Eigen::Index dim);
  std::uint64_t next_u64() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace era
