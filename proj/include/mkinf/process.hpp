#pragma once

#include <cstddef>
#include <vector>

#include "mkinf/barycenter.hpp"
#include "mkinf/measures.hpp"
#include "mkinf/ot_core.hpp"

namespace mkinf {

inline constexpr double kFidelityTolerance = 1e-6;

struct TimeMap {
  double t;
  TransportMap map;
};

/// A deterministic process over a discrete probability space: each base
/// atom x follows the path t_j -> time_maps[j](x).
struct ProcessRepresentation {
  DiscreteMeasure base;
  std::vector<TimeMap> time_maps;
  TimeGrid grid;
  /// Barycenter the process was built from; lower bounds are measured
  /// against it. Unchanged by re-rooting.
  DiscreteMeasure barycenter;
  /// Prescribed marginal at each node, when known.
  std::vector<DiscreteMeasure> marginals;
  /// False when any time map is a barycentric projection.
  bool monge_certified = true;

  std::size_t nodes() const { return time_maps.size(); }
  /// Law of X_{t_j}.
  DiscreteMeasure law(std::size_t j) const;
  void validate() const;
};

ProcessRepresentation build_process(const BarycenterResult& bary, const TimeGrid& grid,
                                    std::vector<DiscreteMeasure> marginals = {});
ProcessRepresentation build_process(const CurveBarycenter& curve_bary);

/// max_j W2(law(X_{t_j}), marginal_j); zero when no marginals are stored.
double marginal_fidelity(const ProcessRepresentation& proc);

/// max over base atoms of |sum_j w_j X_{t_j}(x) - x|.
double average_map_residual(const ProcessRepresentation& proc);

struct CostReport {
  double mk_cost;            // E sum_jk w_j w_k |X_j - X_k|^2
  double avg_potential;      // E |sum_j w_j X_j|^2
  double moment_term;        // sum_j w_j E|X_j|^2
  double lower_bound;        // sum_j w_j W2^2(law X_j, barycenter)
  double average_law_bound;  // sum_j w_j W2^2(law X_j, law of sum_j w_j X_j)
  bool monge_certified;
};

CostReport mk_cost(const ProcessRepresentation& proc);

/// Cost of the independent coupling of the node laws under the grid
/// quadrature.
double independent_mk_cost(const std::vector<DiscreteMeasure>& laws, const std::vector<double>& weights);

/// Rewrites the process over the law of X_{t_{node}}: F_t = X_t o X_{t_node}^{-1}.
ProcessRepresentation reroot(const ProcessRepresentation& proc, std::size_t node);

/// Index of the grid node closest to t.
std::size_t nearest_node(const ProcessRepresentation& proc, double t);

struct ContinuityGap {
  double t0;
  double t1;
  double gap;
};

std::vector<ContinuityGap> continuity_modulus(const ProcessRepresentation& proc);

/// Joint law of (base atom, X_{t_j}) as a coupling.
Coupling time_coupling(const ProcessRepresentation& proc, std::size_t node);

}  // namespace mkinf
