#pragma once

#include "depmax/common.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace depmax::gradcheck {

struct BlockReport {
  std::string name;
  double max_rel_err = 0.0;
};

struct Report {
  std::vector<BlockReport> blocks;
  double max_rel_err = 0.0;
  bool pass(double tol = 1e-4) const { return max_rel_err <= tol; }
};

// Each check compares an analytic gradient against central finite
// differences; relative error is measured on entries with finite-difference
// magnitude above 1e-8.

/// Full-mode LSMI gradient on a random n x d batch pair, plus the
/// translation-invariance column-sum check (reported as its own block).
Report check_lsmi(int n = 16, int d = 3, std::uint64_t seed = 42);

/// Whole-network backward on the 2-8-(2,4) fixture, per parameter block.
Report check_net(std::uint64_t seed = 42);

/// Composite objective (CE + consistency + LSMI term) on a 4-sample
/// fixture, gradients w.r.t. every student parameter block.
Report check_total(std::uint64_t seed = 42);

}  // namespace depmax::gradcheck
