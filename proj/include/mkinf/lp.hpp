#pragma once

#include <cstddef>
#include <vector>

// Dense two-phase primal simplex for small equality-form programs
//
//   minimize c^T x  subject to  A x = b,  x >= 0.
//
// Sized for the fixed-grid barycenter and multi-marginal programs, which
// have at most a few hundred rows. Dantzig pricing, falling back to Bland's
// rule after a run of degenerate pivots so the method cannot cycle.

namespace mkinf::lp {

struct Term {
  std::size_t var;
  double coef;
};

struct Constraint {
  std::vector<Term> terms;
  double rhs = 0.0;
};

struct Problem {
  std::size_t num_vars = 0;
  std::vector<double> cost;
  std::vector<Constraint> rows;
};

enum class Status { optimal, infeasible, unbounded, iteration_limit };

struct Options {
  double feasibility_tol = 1e-9;
  double optimality_tol = 1e-11;
  double pivot_tol = 1e-10;
  std::size_t max_pivots = 200000;
  int degenerate_run_before_bland = 50;
};

struct Solution {
  Status status = Status::infeasible;
  double objective = 0.0;
  std::vector<double> x;
  std::size_t pivots = 0;
};

Solution solve(const Problem& problem, const Options& options = {});

}  // namespace mkinf::lp
