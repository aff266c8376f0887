#pragma once

#include <cstddef>
#include <optional>
#include <utility>
#include <variant>
#include <vector>

#include "mkinf/measures.hpp"
#include "mkinf/ot_core.hpp"

namespace mkinf {

/// Barycenter restricted to a fixed set of candidate support points; solved
/// as one exact LP over couplings sharing their first marginal.
struct FixedGrid {
  std::vector<Point> points;
};

/// Free-support fixed-point iteration x <- sum_i lambda_i T_i(x). Atoms are
/// split whenever an optimal plan splits them, so every T_i stays a map.
/// Without `init`, the iteration starts from the common quantile refinement
/// in 1D and from the marginal with the most atoms otherwise.
struct FreeSupport {
  std::optional<DiscreteMeasure> init;
};

using SupportMode = std::variant<FixedGrid, FreeSupport>;

struct BarycenterProblem {
  std::vector<DiscreteMeasure> marginals;
  std::vector<double> weights;
  SupportMode mode = FreeSupport{};

  void validate() const;
};

struct FreeSupportOptions {
  double tolerance = 1e-9;
  int max_iterations = 500;
};

struct BarycenterResult {
  DiscreteMeasure measure;
  double objective = 0.0;             // sum_i lambda_i W2^2(measure, marginal_i)
  std::vector<TransportMap> maps;     // measure -> each marginal
  std::vector<Coupling> plans;        // the couplings the maps came from
  double fixed_point_residual = 0.0;  // max_x |sum_i lambda_i T_i(x) - x|
  int iterations = 0;
};

BarycenterResult finite_barycenter(const BarycenterProblem& problem,
                                   const FreeSupportOptions& options = {});

/// All weighted averages sum_i lambda_i x_i over the product of marginal
/// supports. Some optimal barycenter of discrete marginals lives on this
/// set, so a FixedGrid over it yields the exact optimum.
std::vector<Point> weighted_average_grid(const std::vector<DiscreteMeasure>& marginals,
                                         const std::vector<double>& weights,
                                         std::size_t cap = 20000);

/// max over atoms x of |sum_i lambda_i maps_i(x) - x|.
double fixed_point_residual(const DiscreteMeasure& measure, const std::vector<TransportMap>& maps,
                            const std::vector<double>& weights);

// ---------------------------------------------------------------------------

enum class CurveSolver { free_support, exact_grid };

struct CurveBarycenterOptions {
  CurveSolver solver = CurveSolver::free_support;
  FreeSupportOptions free_support;
  std::optional<double> K;  // A_K threshold for prefer_ak sampling
};

struct ConvergenceRecord {
  int N;
  double objective;       // grid quadrature of the integrated W2^2
  double w2_step;         // W2 to the previous schedule entry (0 for the first)
  double fixed_point_residual;
};

/// Result at the last schedule entry. `result.maps` and `marginals` carry
/// one entry per grid node (repeated samples repeat their map).
struct CurveBarycenter {
  BarycenterResult result;
  TimeGrid grid;
  std::vector<DiscreteMeasure> marginals;
  std::vector<ConvergenceRecord> log;
};

CurveBarycenter curve_barycenter(const MeasureCurve& curve, const std::vector<int>& schedule,
                                 SamplingStrategy strategy,
                                 const CurveBarycenterOptions& options = {});

/// Consecutive W2 steps over the last `tail` log entries never grow by
/// more than `slack` (relative).
bool steps_nonincreasing(const std::vector<ConvergenceRecord>& log, std::size_t tail,
                         double slack = 0.1);

// ---------------------------------------------------------------------------
// Density bounds.

/// [sum_{i in B} lambda_i / ||g_i||^{1/n}]^{-n}; `linf_norms` lists
/// (index into weights, ||g_i||_inf) for the absolutely continuous terms.
double density_bound_finite(const std::vector<double>& weights,
                            const std::vector<std::pair<std::size_t, double>>& linf_norms,
                            std::size_t n);

/// K / m_K^n.
double density_bound_curve(double K, double m_K, std::size_t n);

struct DensityBoundReport {
  double bound;
  double histogram_max;
  double cell_size;
  bool satisfied;
};

inline constexpr double kDefaultDensitySlack = 0.15;

/// Bins the measure on the axis-aligned lattice of side `cell_size`
/// anchored at the origin and compares the largest mass / volume to the
/// bound, allowing relative `slack` for discretization.
DensityBoundReport check_density_bound(const DiscreteMeasure& measure, double bound,
                                       double cell_size, double slack = kDefaultDensitySlack);

}  // namespace mkinf
