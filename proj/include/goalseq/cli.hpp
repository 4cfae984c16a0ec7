#pragma once

#include "goalseq/objectives.hpp"

#include <cstdint>
#include <ostream>

namespace goalseq {

/// Exit codes: 0 success, 1 validation or usage error, 2 runtime failure.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

struct TheoryReport {
  double max_identity_residual = 0.0;
  double max_grid_violation = 0.0;  // > 0 if some grid D beat D* on the inner objective
  int pairs = 0;
};

/// Identity and pointwise-optimality checks over `pairs_per_support` random
/// pairs at each support size in {2, 4, 8}, with a 999-point D grid.
TheoryReport verify_theory(std::uint64_t seed, int pairs_per_support = 100);

/// Random point of the simplex (flat Dirichlet); `zero_prob` zeroes entries at random.
Vector random_simplex(int size, Rng& rng, double zero_prob = 0.0);

}  // namespace goalseq
