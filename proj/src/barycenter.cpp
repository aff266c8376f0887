#include "mkinf/barycenter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <string>

#include "mkinf/errors.hpp"
#include "mkinf/lp.hpp"

namespace mkinf {

void BarycenterProblem::validate() const {
  if (marginals.empty()) throw Error(ErrorCode::invalid_argument, "barycenter of an empty marginal list");
  if (weights.size() != marginals.size())
    throw Error(ErrorCode::invalid_argument, "one weight per marginal required");
  double total = 0.0;
  for (double w : weights) {
    if (!(w > 0.0)) throw Error(ErrorCode::invalid_argument, "barycenter weights must be positive");
    total += w;
  }
  if (std::abs(total - 1.0) > kWeightTolerance)
    throw Error(ErrorCode::invalid_argument, "barycenter weights must sum to 1");
  const std::size_t n = marginals.front().dim();
  for (const auto& mu : marginals)
    if (mu.dim() != n) throw Error(ErrorCode::dimension_mismatch, "marginals must share a dimension");
  if (const auto* grid = std::get_if<FixedGrid>(&mode)) {
    if (grid->points.empty()) throw Error(ErrorCode::invalid_argument, "fixed grid is empty");
    for (const auto& p : grid->points)
      if (p.size() != n) throw Error(ErrorCode::dimension_mismatch, "grid point dimension");
  }
  if (const auto* fs = std::get_if<FreeSupport>(&mode); fs && fs->init && fs->init->dim() != n)
    throw Error(ErrorCode::dimension_mismatch, "initial support dimension");
}

double fixed_point_residual(const DiscreteMeasure& measure, const std::vector<TransportMap>& maps,
                            const std::vector<double>& weights) {
  double worst = 0.0;
  for (std::size_t k = 0; k < measure.size(); ++k) {
    Point avg(measure.dim(), 0.0);
    for (std::size_t i = 0; i < maps.size(); ++i)
      for (std::size_t d = 0; d < avg.size(); ++d) avg[d] += weights[i] * maps[i].image(k)[d];
    worst = std::max(worst, std::sqrt(squared_distance(avg, measure.point(k))));
  }
  return worst;
}

std::vector<Point> weighted_average_grid(const std::vector<DiscreteMeasure>& marginals,
                                         const std::vector<double>& weights, std::size_t cap) {
  std::size_t total = 1;
  for (const auto& mu : marginals) {
    total *= mu.size();
    if (total > cap) throw Error(ErrorCode::cap_exceeded, "weighted-average grid is too large");
  }
  const std::size_t n = marginals.front().dim();
  std::vector<Point> grid;
  grid.reserve(total);
  std::vector<std::size_t> idx(marginals.size(), 0);
  for (std::size_t c = 0; c < total; ++c) {
    Point p(n, 0.0);
    for (std::size_t i = 0; i < marginals.size(); ++i)
      for (std::size_t d = 0; d < n; ++d) p[d] += weights[i] * marginals[i].point(idx[i])[d];
    grid.push_back(std::move(p));
    for (std::size_t i = 0; i < marginals.size(); ++i) {
      if (++idx[i] < marginals[i].size()) break;
      idx[i] = 0;
    }
  }
  return DiscreteMeasure::uniform(std::move(grid)).merged().points();
}

namespace {

BarycenterResult finish_from_plans(DiscreteMeasure measure, std::vector<Coupling> plans,
                                   const std::vector<double>& weights, int iterations) {
  std::vector<TransportMap> maps;
  maps.reserve(plans.size());
  double objective = 0.0;
  for (std::size_t i = 0; i < plans.size(); ++i) {
    objective += weights[i] * plans[i].cost();
    maps.push_back(barycentric_projection(plans[i]));
  }
  const double residual = fixed_point_residual(measure, maps, weights);
  return BarycenterResult{std::move(measure), objective, std::move(maps), std::move(plans), residual,
                          iterations};
}

BarycenterResult solve_fixed_grid(const BarycenterProblem& problem, const FixedGrid& fixed) {
  const auto grid = DiscreteMeasure::uniform(fixed.points).merged().points();
  const std::size_t G = grid.size();
  const std::size_t m = problem.marginals.size();

  std::vector<std::size_t> offset(m);
  std::size_t vars = G;
  for (std::size_t i = 0; i < m; ++i) {
    offset[i] = vars;
    vars += G * problem.marginals[i].size();
  }

  lp::Problem p;
  p.num_vars = vars;
  p.cost.assign(vars, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    const auto& mu = problem.marginals[i];
    const std::size_t s = mu.size();
    for (std::size_t k = 0; k < G; ++k)
      for (std::size_t j = 0; j < s; ++j)
        p.cost[offset[i] + k * s + j] = problem.weights[i] * squared_distance(grid[k], mu.point(j));
    for (std::size_t k = 0; k < G; ++k) {
      lp::Constraint row;
      for (std::size_t j = 0; j < s; ++j) row.terms.push_back({offset[i] + k * s + j, 1.0});
      row.terms.push_back({k, -1.0});
      p.rows.push_back(std::move(row));
    }
    for (std::size_t j = 0; j < s; ++j) {
      lp::Constraint row;
      for (std::size_t k = 0; k < G; ++k) row.terms.push_back({offset[i] + k * s + j, 1.0});
      row.rhs = mu.weight(j);
      p.rows.push_back(std::move(row));
    }
  }
  lp::Constraint total;
  for (std::size_t k = 0; k < G; ++k) total.terms.push_back({k, 1.0});
  total.rhs = 1.0;
  p.rows.push_back(std::move(total));

  const auto sol = lp::solve(p);
  if (sol.status != lp::Status::optimal)
    throw Error(ErrorCode::solver_failure, "fixed-grid barycenter LP did not reach optimality");

  constexpr double kDropMass = 1e-14;
  std::vector<std::size_t> kept;
  for (std::size_t k = 0; k < G; ++k)
    if (sol.x[k] > kDropMass) kept.push_back(k);
  std::vector<Point> pts;
  std::vector<double> w;
  for (std::size_t k : kept) {
    pts.push_back(grid[k]);
    w.push_back(sol.x[k]);
  }
  DiscreteMeasure measure = DiscreteMeasure::normalized(std::move(pts), std::move(w));

  std::vector<Coupling> plans;
  for (std::size_t i = 0; i < m; ++i) {
    const auto& mu = problem.marginals[i];
    const std::size_t s = mu.size();
    std::vector<double> table(kept.size() * s);
    for (std::size_t r = 0; r < kept.size(); ++r)
      for (std::size_t j = 0; j < s; ++j) table[r * s + j] = sol.x[offset[i] + kept[r] * s + j];
    plans.emplace_back(measure, mu, std::move(table));
  }
  return finish_from_plans(std::move(measure), std::move(plans), problem.weights, 1);
}

DiscreteMeasure default_initialization(const BarycenterProblem& problem) {
  const auto& marginals = problem.marginals;
  if (marginals.front().dim() == 1) {
    std::vector<Point> pts;
    std::vector<double> w;
    for (const auto& piece : quantile_refinement(marginals)) {
      double x = 0.0;
      for (std::size_t i = 0; i < marginals.size(); ++i)
        x += problem.weights[i] * marginals[i].point(piece.atoms[i])[0];
      pts.push_back({x});
      w.push_back(piece.hi - piece.lo);
    }
    return DiscreteMeasure::normalized(std::move(pts), std::move(w));
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < marginals.size(); ++i)
    if (marginals[i].size() > marginals[best].size()) best = i;
  return marginals[best];
}

bool lex_less(const Point& a, const Point& b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

BarycenterResult solve_free_support(const BarycenterProblem& problem, const FreeSupport& mode,
                                    const FreeSupportOptions& options) {
  const auto& marginals = problem.marginals;
  const auto& lambda = problem.weights;
  const std::size_t m = marginals.size();
  const std::size_t n = marginals.front().dim();

  DiscreteMeasure current =
      (mode.init ? *mode.init : default_initialization(problem)).merged(kMergeTolerance, true);

  double movement = std::numeric_limits<double>::infinity();
  int iteration = 0;
  while (iteration < options.max_iterations) {
    ++iteration;
    std::vector<Coupling> plans;
    plans.reserve(m);
    for (const auto& mu : marginals) plans.push_back(w2(current, mu).plan);

    std::vector<Point> next_pts;
    std::vector<double> next_w;
    movement = 0.0;
    for (std::size_t k = 0; k < current.size(); ++k) {
      // Per marginal: targets of atom k in lexicographic order with their
      // cumulative share of the atom's mass.
      std::vector<std::vector<std::pair<std::size_t, double>>> rows(m);
      std::vector<double> cuts{0.0, 1.0};
      for (std::size_t i = 0; i < m; ++i) {
        const auto& plan = plans[i];
        // Dust below kPlanZero is ignored so round-off never splits an atom.
        std::vector<std::size_t> targets;
        std::size_t argmax = 0;
        double row_sum = 0.0;
        for (std::size_t j = 0; j < plan.cols(); ++j) {
          if (plan.mass(k, j) > plan.mass(k, argmax)) argmax = j;
          if (plan.mass(k, j) > kPlanZero) {
            targets.push_back(j);
            row_sum += plan.mass(k, j);
          }
        }
        if (targets.empty()) {
          targets.push_back(argmax);
          row_sum = 1.0;
        }
        std::sort(targets.begin(), targets.end(), [&](std::size_t a, std::size_t b) {
          return lex_less(marginals[i].point(a), marginals[i].point(b));
        });
        double cum = 0.0;
        for (std::size_t t = 0; t < targets.size(); ++t) {
          cum += plan.mass(k, targets[t]) / row_sum;
          const double level = t + 1 == targets.size() ? 1.0 : cum;
          rows[i].push_back({targets[t], level});
          if (t + 1 < targets.size()) cuts.push_back(level);
        }
      }
      std::sort(cuts.begin(), cuts.end());
      for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
        const double lo = cuts[c], hi = cuts[c + 1];
        if (hi - lo <= 1e-15) continue;
        const double mid = 0.5 * (lo + hi);
        Point x(n, 0.0);
        for (std::size_t i = 0; i < m; ++i) {
          std::size_t target = rows[i].back().first;
          for (const auto& [j, level] : rows[i])
            if (mid <= level) {
              target = j;
              break;
            }
          for (std::size_t d = 0; d < n; ++d) x[d] += lambda[i] * marginals[i].point(target)[d];
        }
        movement = std::max(movement, std::sqrt(squared_distance(x, current.point(k))));
        next_pts.push_back(std::move(x));
        next_w.push_back(current.weight(k) * (hi - lo));
      }
    }
    current = DiscreteMeasure::normalized(std::move(next_pts), std::move(next_w))
                  .merged(kMergeTolerance, true);
    if (movement < options.tolerance) break;
  }
  if (!(movement < options.tolerance))
    throw NonConvergence("free-support barycenter did not converge after " +
                             std::to_string(iteration) + " iterations",
                         movement, iteration);

  std::vector<Coupling> plans;
  plans.reserve(m);
  for (const auto& mu : marginals) plans.push_back(w2(current, mu).plan);
  return finish_from_plans(std::move(current), std::move(plans), lambda, iteration);
}

}  // namespace

BarycenterResult finite_barycenter(const BarycenterProblem& problem,
                                   const FreeSupportOptions& options) {
  problem.validate();
  if (const auto* grid = std::get_if<FixedGrid>(&problem.mode)) return solve_fixed_grid(problem, *grid);
  return solve_free_support(problem, std::get<FreeSupport>(problem.mode), options);
}

// ---------------------------------------------------------------------------

CurveBarycenter curve_barycenter(const MeasureCurve& curve, const std::vector<int>& schedule,
                                 SamplingStrategy strategy, const CurveBarycenterOptions& options) {
  if (schedule.empty()) throw Error(ErrorCode::invalid_argument, "schedule is empty");
  for (std::size_t k = 0; k < schedule.size(); ++k) {
    if (schedule[k] < 1) throw Error(ErrorCode::invalid_argument, "schedule entries must be >= 1");
    if (k > 0 && schedule[k] < schedule[k - 1])
      throw Error(ErrorCode::invalid_argument, "schedule must be nondecreasing");
  }

  std::vector<ConvergenceRecord> log;
  std::optional<CurveBarycenter> last;
  for (int N : schedule) {
    TimeGrid grid = sample_times(curve, N, strategy, options.K);

    // Nodes that snapped to the same sample share one marginal.
    std::vector<std::size_t> distinct;
    std::vector<std::size_t> slot(grid.size());
    BarycenterProblem problem;
    for (std::size_t j = 0; j < grid.size(); ++j) {
      const auto it = std::find(distinct.begin(), distinct.end(), grid.sample_index[j]);
      if (it == distinct.end()) {
        slot[j] = distinct.size();
        distinct.push_back(grid.sample_index[j]);
        problem.marginals.push_back(curve.sample(grid.sample_index[j]).measure);
        problem.weights.push_back(0.0);
      } else {
        slot[j] = static_cast<std::size_t>(it - distinct.begin());
      }
      problem.weights[slot[j]] += grid.weights[j];
    }
    const double total = std::accumulate(problem.weights.begin(), problem.weights.end(), 0.0);
    for (double& w : problem.weights) w /= total;

    if (options.solver == CurveSolver::exact_grid) {
      problem.mode = FixedGrid{weighted_average_grid(problem.marginals, problem.weights)};
    } else {
      problem.mode = FreeSupport{};
    }
    BarycenterResult solved = finite_barycenter(problem, options.free_support);

    std::vector<TransportMap> maps;
    std::vector<Coupling> plans;
    std::vector<DiscreteMeasure> marginals;
    for (std::size_t j = 0; j < grid.size(); ++j) {
      maps.push_back(solved.maps[slot[j]]);
      plans.push_back(solved.plans[slot[j]]);
      marginals.push_back(problem.marginals[slot[j]]);
    }
    const double step = last ? std::sqrt(w2(solved.measure, last->result.measure).cost) : 0.0;
    log.push_back({N, solved.objective, step, solved.fixed_point_residual});

    solved.maps = std::move(maps);
    solved.plans = std::move(plans);
    last.emplace(CurveBarycenter{std::move(solved), std::move(grid), std::move(marginals), {}});
  }
  last->log = std::move(log);
  return std::move(*last);
}

bool steps_nonincreasing(const std::vector<ConvergenceRecord>& log, std::size_t tail, double slack) {
  if (log.size() < 3) return true;
  const std::size_t first = std::max<std::size_t>(2, log.size() > tail ? log.size() - tail : 0);
  for (std::size_t k = first; k < log.size(); ++k)
    if (log[k].w2_step > (1.0 + slack) * log[k - 1].w2_step + 1e-12) return false;
  return true;
}

// ---------------------------------------------------------------------------

double density_bound_finite(const std::vector<double>& weights,
                            const std::vector<std::pair<std::size_t, double>>& linf_norms,
                            std::size_t n) {
  if (linf_norms.empty())
    throw Error(ErrorCode::invalid_argument, "density bound needs at least one bounded density");
  if (n == 0) throw Error(ErrorCode::invalid_argument, "dimension must be positive");
  const double inv_n = 1.0 / static_cast<double>(n);
  double s = 0.0;
  for (const auto& [index, norm] : linf_norms) {
    if (index >= weights.size()) throw Error(ErrorCode::invalid_argument, "density index out of range");
    if (!(norm > 0.0)) throw Error(ErrorCode::invalid_argument, "density norms must be positive");
    s += weights[index] / (n == 1 ? norm : std::pow(norm, inv_n));
  }
  return n == 1 ? 1.0 / s : std::pow(s, -static_cast<double>(n));
}

double density_bound_curve(double K, double m_K, std::size_t n) {
  if (!(K > 0.0)) throw Error(ErrorCode::invalid_argument, "K must be positive");
  if (!(m_K > 0.0 && m_K <= 1.0)) throw Error(ErrorCode::invalid_argument, "m_K must lie in (0, 1]");
  if (n == 0) throw Error(ErrorCode::invalid_argument, "dimension must be positive");
  return K / std::pow(m_K, static_cast<double>(n));
}

DensityBoundReport check_density_bound(const DiscreteMeasure& measure, double bound,
                                       double cell_size, double slack) {
  if (!(cell_size > 0.0)) throw Error(ErrorCode::invalid_argument, "cell size must be positive");
  std::map<std::vector<long long>, double> cells;
  for (std::size_t i = 0; i < measure.size(); ++i) {
    std::vector<long long> key;
    key.reserve(measure.dim());
    for (double v : measure.point(i)) key.push_back(static_cast<long long>(std::floor(v / cell_size)));
    cells[key] += measure.weight(i);
  }
  const double volume = std::pow(cell_size, static_cast<double>(measure.dim()));
  double peak = 0.0;
  for (const auto& [key, mass] : cells) peak = std::max(peak, mass / volume);
  return DensityBoundReport{bound, peak, cell_size, peak <= bound * (1.0 + slack)};
}

}  // namespace mkinf
