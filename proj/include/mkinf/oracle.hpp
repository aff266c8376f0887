#pragma once

#include <cstddef>
#include <vector>

#include "mkinf/barycenter.hpp"
#include "mkinf/measures.hpp"
#include "mkinf/ot_core.hpp"

// Brute-force solvers for tiny instances. These share no code path with
// the transportation simplex behind w2(): the multi-marginal program goes
// through the dense LP, and coupling enumeration walks the vertices of the
// transportation polytope directly.

namespace mkinf::oracle {

inline constexpr std::size_t kMaxMarginals = 5;
inline constexpr std::size_t kMaxSupport = 6;
inline constexpr std::size_t kMaxProductSupport = 10000;
inline constexpr std::size_t kMaxEnumerationCells = 36;
inline constexpr double kCertifyTolerance = 1e-6;

struct MultiMarginalInstance {
  std::vector<DiscreteMeasure> marginals;
  std::vector<double> weights;

  /// Throws cap_exceeded outside the tractability caps.
  void validate() const;
};

enum class MultiMarginalCost {
  pairwise_sum,  // sum_i sum_j |x_i - x_j|^2, unweighted
  variance,      // sum_i lambda_i |x_i - xbar|^2, xbar = sum_j lambda_j x_j
};

/// Sparse plan over the product support: one entry per tuple with mass.
struct MultiMarginalPlan {
  std::vector<std::vector<std::size_t>> tuples;
  std::vector<double> mass;
};

struct MultiMarginalSolution {
  double value;
  MultiMarginalPlan plan;
};

MultiMarginalSolution solve_multimarginal(const MultiMarginalInstance& inst, MultiMarginalCost cost);

/// Law of xbar = sum_i lambda_i x_i under the plan.
DiscreteMeasure average_law(const MultiMarginalInstance& inst, const MultiMarginalPlan& plan);

/// Joint law of (xbar, x_i) under the plan, as a coupling of the average
/// law with marginal i.
Coupling induced_coupling(const MultiMarginalInstance& inst, const MultiMarginalPlan& plan,
                          std::size_t marginal);

struct Certification {
  bool certified;
  double oracle_value;
  double barycenter_objective;
  double value_gap;  // |oracle value - barycenter objective|
  double law_w2;     // W2(law of xbar, barycenter measure)
};

Certification certify(const MultiMarginalInstance& inst, const BarycenterResult& bary,
                      double tol = kCertifyTolerance);

bool certify_barycenter(const MultiMarginalInstance& inst, const BarycenterResult& bary,
                        double tol = kCertifyTolerance);

/// All vertices of the transportation polytope of (mu, nu), deduplicated.
std::vector<Coupling> enumerate_couplings(const DiscreteMeasure& mu, const DiscreteMeasure& nu);

}  // namespace mkinf::oracle
