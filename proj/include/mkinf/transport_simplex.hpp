#pragma once

#include <cstddef>
#include <vector>

namespace mkinf::detail {

struct TransportSolution {
  std::vector<double> flow;  // row-major, supply.size() x demand.size()
  double cost = 0.0;
  std::size_t pivots = 0;
};

/// Transportation simplex (MODI pricing, spanning-tree basis) for
///   min sum c_ij x_ij  s.t.  row sums = supply, column sums = demand.
/// Supplies and demands are nonnegative with equal totals up to rounding.
TransportSolution solve_transport(const std::vector<double>& supply,
                                  const std::vector<double>& demand,
                                  const std::vector<double>& cost);

}  // namespace mkinf::detail
