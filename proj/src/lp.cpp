#include "mkinf/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mkinf::lp {
namespace {

constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

// Tableau over the structural columns only. Artificial variables are
// tracked through the basis (index >= num_vars) and dropped for good once
// they leave it, so they never need columns of their own.
class Tableau {
 public:
  Tableau(const Problem& p, const Options& opt)
      : opt_(opt), m_(p.rows.size()), n_(p.num_vars), width_(p.num_vars + 1) {
    t_.assign(m_ * width_, 0.0);
    basis_.resize(m_);
    for (std::size_t i = 0; i < m_; ++i) {
      const auto& row = p.rows[i];
      const double sign = row.rhs < 0.0 ? -1.0 : 1.0;
      for (const auto& term : row.terms) at(i, term.var) += sign * term.coef;
      rhs(i) = sign * row.rhs;
      basis_[i] = n_ + i;
    }
    reduced_.assign(n_, 0.0);
  }

  double& at(std::size_t i, std::size_t j) { return t_[i * width_ + j]; }
  double at(std::size_t i, std::size_t j) const { return t_[i * width_ + j]; }
  double& rhs(std::size_t i) { return t_[i * width_ + n_]; }
  double rhs(std::size_t i) const { return t_[i * width_ + n_]; }

  bool is_artificial(std::size_t var) const { return var >= n_; }

  void price_phase_one() {
    std::fill(reduced_.begin(), reduced_.end(), 0.0);
    for (std::size_t i = 0; i < m_; ++i) {
      if (!is_artificial(basis_[i])) continue;
      for (std::size_t j = 0; j < n_; ++j) reduced_[j] -= at(i, j);
    }
  }

  void price_phase_two(const std::vector<double>& cost) {
    reduced_ = cost;
    for (std::size_t i = 0; i < m_; ++i) {
      const std::size_t b = basis_[i];
      if (is_artificial(b) || cost[b] == 0.0) continue;
      for (std::size_t j = 0; j < n_; ++j) reduced_[j] -= cost[b] * at(i, j);
    }
  }

  double phase_one_infeasibility() const {
    double s = 0.0;
    for (std::size_t i = 0; i < m_; ++i)
      if (is_artificial(basis_[i])) s += std::max(0.0, rhs(i));
    return s;
  }

  void pivot(std::size_t r, std::size_t e) {
    const double p = at(r, e);
    double* prow = &t_[r * width_];
    for (std::size_t j = 0; j < width_; ++j) prow[j] /= p;
    prow[e] = 1.0;
    for (std::size_t i = 0; i < m_; ++i) {
      if (i == r) continue;
      double* row = &t_[i * width_];
      const double f = row[e];
      if (f == 0.0) continue;
      for (std::size_t j = 0; j < width_; ++j) row[j] -= f * prow[j];
      row[e] = 0.0;
      if (row[n_] < 0.0 && row[n_] > -opt_.feasibility_tol) row[n_] = 0.0;
    }
    const double f = reduced_[e];
    if (f != 0.0) {
      for (std::size_t j = 0; j < n_; ++j) reduced_[j] -= f * prow[j];
      reduced_[e] = 0.0;
    }
    basis_[r] = e;
    ++pivots_;
  }

  // Runs simplex iterations on the current reduced costs until optimal.
  Status iterate(double cost_scale) {
    const double tol = opt_.optimality_tol * cost_scale;
    int degenerate_run = 0;
    while (true) {
      if (pivots_ >= opt_.max_pivots) return Status::iteration_limit;
      const bool bland = degenerate_run >= opt_.degenerate_run_before_bland;

      std::size_t enter = kNone;
      double best = -tol;
      for (std::size_t j = 0; j < n_; ++j) {
        if (reduced_[j] < best) {
          enter = j;
          if (bland) break;
          best = reduced_[j];
        }
      }
      if (enter == kNone) return Status::optimal;

      std::size_t leave = kNone;
      double best_ratio = std::numeric_limits<double>::infinity();
      double best_pivot = 0.0;
      for (std::size_t i = 0; i < m_; ++i) {
        const double a = at(i, enter);
        if (a <= opt_.pivot_tol) continue;
        const double ratio = std::max(0.0, rhs(i)) / a;
        if (ratio < best_ratio - 1e-12) {
          best_ratio = ratio;
          leave = i;
          best_pivot = a;
        } else if (ratio <= best_ratio + 1e-12) {
          // Ties: Bland picks the smallest basic index, otherwise prefer
          // the larger pivot for stability. Artificials always leave first.
          const bool art_new = is_artificial(basis_[i]);
          const bool art_old = is_artificial(basis_[leave]);
          bool take;
          if (art_new != art_old) {
            take = art_new;
          } else if (bland) {
            take = basis_[i] < basis_[leave];
          } else {
            take = a > best_pivot;
          }
          if (take) {
            leave = i;
            best_pivot = a;
            best_ratio = std::min(best_ratio, ratio);
          }
        }
      }
      if (leave == kNone) return Status::unbounded;

      degenerate_run = best_ratio <= 1e-14 ? degenerate_run + 1 : 0;
      pivot(leave, enter);
    }
  }

  // After phase one: pivot remaining zero-level artificials out of the
  // basis. Rows where that is impossible are redundant and stay inert.
  void drive_out_artificials() {
    for (std::size_t i = 0; i < m_; ++i) {
      if (!is_artificial(basis_[i])) continue;
      std::size_t best = kNone;
      double best_abs = opt_.pivot_tol;
      for (std::size_t j = 0; j < n_; ++j) {
        const double a = std::abs(at(i, j));
        if (a > best_abs) {
          best_abs = a;
          best = j;
        }
      }
      if (best != kNone) {
        rhs(i) = 0.0;
        pivot(i, best);
      }
    }
  }

  std::vector<double> primal() const {
    std::vector<double> x(n_, 0.0);
    for (std::size_t i = 0; i < m_; ++i)
      if (!is_artificial(basis_[i])) x[basis_[i]] = std::max(0.0, rhs(i));
    return x;
  }

  std::size_t pivots() const { return pivots_; }

 private:
  Options opt_;
  std::size_t m_;
  std::size_t n_;
  std::size_t width_;
  std::vector<double> t_;
  std::vector<std::size_t> basis_;
  std::vector<double> reduced_;
  std::size_t pivots_ = 0;
};

}  // namespace

Solution solve(const Problem& problem, const Options& options) {
  Solution sol;
  if (problem.cost.size() != problem.num_vars) {
    sol.status = Status::infeasible;
    return sol;
  }
  Tableau tab(problem, options);

  double rhs_scale = 1.0;
  for (const auto& row : problem.rows) rhs_scale = std::max(rhs_scale, std::abs(row.rhs));

  tab.price_phase_one();
  Status st = tab.iterate(rhs_scale);
  if (st == Status::iteration_limit) {
    sol.status = st;
    sol.pivots = tab.pivots();
    return sol;
  }
  if (tab.phase_one_infeasibility() > options.feasibility_tol * rhs_scale) {
    sol.status = Status::infeasible;
    sol.pivots = tab.pivots();
    return sol;
  }
  tab.drive_out_artificials();

  double cost_scale = 1.0;
  for (double c : problem.cost) cost_scale = std::max(cost_scale, std::abs(c));
  tab.price_phase_two(problem.cost);
  st = tab.iterate(cost_scale);

  sol.status = st;
  sol.pivots = tab.pivots();
  sol.x = tab.primal();
  sol.objective = 0.0;
  for (std::size_t j = 0; j < problem.num_vars; ++j) sol.objective += problem.cost[j] * sol.x[j];
  return sol;
}

}  // namespace mkinf::lp
