#pragma once

#include <cstdint>
#include <functional>
#include <vector>

namespace gibbslab {

// Exact solution of a balanced transportation problem. `plan` is row-major
// over the original index sets (zero-mass atoms keep zero rows/columns) and
// is filled only on request.
struct TransportSolution {
  double cost = 0.0;
  double dual_value = 0.0;
  double duality_gap = 0.0;  // |primal - dual| plus any residual dual slack
  std::int64_t pivots = 0;
  std::vector<double> plan;
};

using CostFn = std::function<double(std::size_t, std::size_t)>;

// Transportation simplex with northwest-corner start and most-negative
// entering rule (lexicographic tie-break, Bland fallback under prolonged
// degeneracy). Throws SolverFailure if the pivot budget is exhausted,
// ValidationError on negative masses or unbalanced totals.
TransportSolution solve_transport(const std::vector<double>& supply,
                                  const std::vector<double>& demand,
                                  const CostFn& cost, bool want_plan);

}  // namespace gibbslab
