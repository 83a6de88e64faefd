#pragma once

#include <Eigen/Core>
#include <vector>

namespace era {

/// A point x in R^d; the sample being transported by the sampler.
using StateVector = Eigen::VectorXd;

/// A batch of independent chains or samples, one vector per entry.
using StateBatch = std::vector<StateVector>;

}  // namespace era
