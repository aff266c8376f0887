#include "mkinf/oracle.hpp"

#include <algorithm>
#include <cstdint>
#include <cmath>
#include <limits>
#include <set>

#include "mkinf/errors.hpp"
#include "mkinf/lp.hpp"

namespace mkinf::oracle {

void MultiMarginalInstance::validate() const {
  if (marginals.empty()) throw Error(ErrorCode::invalid_argument, "instance has no marginals");
  if (marginals.size() > kMaxMarginals)
    throw Error(ErrorCode::cap_exceeded, "too many marginals for the oracle");
  if (weights.size() != marginals.size())
    throw Error(ErrorCode::invalid_argument, "one weight per marginal required");
  double total = 0.0;
  for (double w : weights) {
    if (!(w > 0.0)) throw Error(ErrorCode::invalid_argument, "weights must be positive");
    total += w;
  }
  if (std::abs(total - 1.0) > kWeightTolerance)
    throw Error(ErrorCode::invalid_argument, "weights must sum to 1");
  std::size_t product = 1;
  for (const auto& mu : marginals) {
    if (mu.dim() != marginals.front().dim())
      throw Error(ErrorCode::dimension_mismatch, "marginals must share a dimension");
    if (mu.size() > kMaxSupport) throw Error(ErrorCode::cap_exceeded, "marginal support too large");
    product *= mu.size();
  }
  if (product > kMaxProductSupport) throw Error(ErrorCode::cap_exceeded, "product support too large");
}

namespace {

Point tuple_average(const MultiMarginalInstance& inst, const std::vector<std::size_t>& tuple) {
  Point avg(inst.marginals.front().dim(), 0.0);
  for (std::size_t i = 0; i < tuple.size(); ++i)
    for (std::size_t d = 0; d < avg.size(); ++d)
      avg[d] += inst.weights[i] * inst.marginals[i].point(tuple[i])[d];
  return avg;
}

double tuple_cost(const MultiMarginalInstance& inst, const std::vector<std::size_t>& tuple,
                  MultiMarginalCost cost) {
  const std::size_t m = tuple.size();
  if (cost == MultiMarginalCost::pairwise_sum) {
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j)
        s += squared_distance(inst.marginals[i].point(tuple[i]), inst.marginals[j].point(tuple[j]));
    return s;
  }
  const Point avg = tuple_average(inst, tuple);
  double s = 0.0;
  for (std::size_t i = 0; i < m; ++i)
    s += inst.weights[i] * squared_distance(inst.marginals[i].point(tuple[i]), avg);
  return s;
}

std::size_t nearest_atom(const DiscreteMeasure& mu, const Point& x) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < mu.size(); ++k) {
    const double d = squared_distance(mu.point(k), x);
    if (d < best_d) {
      best_d = d;
      best = k;
    }
  }
  return best;
}

}  // namespace

MultiMarginalSolution solve_multimarginal(const MultiMarginalInstance& inst, MultiMarginalCost cost) {
  inst.validate();
  const std::size_t m = inst.marginals.size();

  std::vector<std::vector<std::size_t>> tuples;
  std::vector<std::size_t> idx(m, 0);
  while (true) {
    tuples.push_back(idx);
    std::size_t i = 0;
    for (; i < m; ++i) {
      if (++idx[i] < inst.marginals[i].size()) break;
      idx[i] = 0;
    }
    if (i == m) break;
  }

  lp::Problem p;
  p.num_vars = tuples.size();
  p.cost.reserve(tuples.size());
  for (const auto& t : tuples) p.cost.push_back(tuple_cost(inst, t, cost));
  std::vector<std::size_t> row_offset(m);
  for (std::size_t i = 0, r = 0; i < m; ++i) {
    row_offset[i] = r;
    for (std::size_t j = 0; j < inst.marginals[i].size(); ++j, ++r) {
      lp::Constraint row;
      row.rhs = inst.marginals[i].weight(j);
      p.rows.push_back(std::move(row));
    }
  }
  for (std::size_t v = 0; v < tuples.size(); ++v)
    for (std::size_t i = 0; i < m; ++i) p.rows[row_offset[i] + tuples[v][i]].terms.push_back({v, 1.0});

  const auto sol = lp::solve(p);
  if (sol.status != lp::Status::optimal)
    throw Error(ErrorCode::solver_failure, "multi-marginal LP did not reach optimality");

  MultiMarginalSolution out{0.0, {}};
  for (std::size_t v = 0; v < tuples.size(); ++v) {
    if (sol.x[v] <= 0.0) continue;
    out.value += p.cost[v] * sol.x[v];
    out.plan.tuples.push_back(tuples[v]);
    out.plan.mass.push_back(sol.x[v]);
  }
  return out;
}

DiscreteMeasure average_law(const MultiMarginalInstance& inst, const MultiMarginalPlan& plan) {
  std::vector<Point> pts;
  pts.reserve(plan.tuples.size());
  for (const auto& t : plan.tuples) pts.push_back(tuple_average(inst, t));
  return DiscreteMeasure::normalized(std::move(pts), plan.mass).merged();
}

Coupling induced_coupling(const MultiMarginalInstance& inst, const MultiMarginalPlan& plan,
                          std::size_t marginal) {
  const DiscreteMeasure avg = average_law(inst, plan);
  const auto& target = inst.marginals.at(marginal);
  std::vector<double> table(avg.size() * target.size(), 0.0);
  double total = 0.0;
  for (double w : plan.mass) total += w;
  for (std::size_t v = 0; v < plan.tuples.size(); ++v) {
    const std::size_t k = nearest_atom(avg, tuple_average(inst, plan.tuples[v]));
    table[k * target.size() + plan.tuples[v][marginal]] += plan.mass[v] / total;
  }
  return Coupling(avg, target, std::move(table));
}

Certification certify(const MultiMarginalInstance& inst, const BarycenterResult& bary, double tol) {
  if (bary.measure.dim() != inst.marginals.front().dim())
    throw Error(ErrorCode::dimension_mismatch, "barycenter and instance differ in dimension");
  const auto sol = solve_multimarginal(inst, MultiMarginalCost::variance);
  const DiscreteMeasure avg = average_law(inst, sol.plan);
  Certification c{};
  c.oracle_value = sol.value;
  c.barycenter_objective = bary.objective;
  c.value_gap = std::abs(sol.value - bary.objective);
  c.law_w2 = std::sqrt(w2(avg, bary.measure).cost);
  c.certified = c.value_gap <= tol && c.law_w2 <= tol;
  return c;
}

bool certify_barycenter(const MultiMarginalInstance& inst, const BarycenterResult& bary, double tol) {
  return certify(inst, bary, tol).certified;
}

// ---------------------------------------------------------------------------
// Vertex enumeration: breadth-first search over feasible spanning-tree bases,
// moving between them by simplex pivots with every admissible leaving cell.
// The basis graph of a polytope is connected, so all vertices are reached.
// A basis fits in a 64-bit mask because the cell count is capped at 36.

namespace {

constexpr double kFlowTolerance = 1e-13;
constexpr std::size_t kMaxBases = 2000000;

using Mask = std::uint64_t;

class BasisWalker {
 public:
  BasisWalker(std::vector<double> a, std::vector<double> b)
      : m_(a.size()), n_(b.size()), a_(std::move(a)), b_(std::move(b)) {}

  std::vector<std::vector<double>> run() {
    std::vector<std::vector<double>> vertices;
    std::set<std::vector<long long>> seen_vertices;
    std::set<Mask> seen{northwest()};
    std::vector<Mask> queue{*seen.begin()};
    for (std::size_t head = 0; head < queue.size(); ++head) {
      const Mask basis = queue[head];
      const auto flow = flows(basis);
      std::vector<long long> key;
      for (double v : flow) key.push_back(std::llround(v * 1e12));
      if (seen_vertices.insert(key).second) vertices.push_back(flow);

      for (std::size_t e = 0; e < m_ * n_; ++e) {
        if (basis >> e & 1) continue;
        const auto cycle = path(basis, e / n_, m_ + e % n_);
        double theta = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < cycle.size(); k += 2) theta = std::min(theta, flow[cycle[k]]);
        for (std::size_t k = 0; k < cycle.size(); k += 2) {
          if (flow[cycle[k]] > theta + kFlowTolerance) continue;
          const Mask next = (basis | Mask{1} << e) & ~(Mask{1} << cycle[k]);
          if (seen.insert(next).second) {
            if (seen.size() > kMaxBases) throw Error(ErrorCode::cap_exceeded, "too many bases to enumerate");
            queue.push_back(next);
          }
        }
      }
    }
    return vertices;
  }

 private:
  Mask northwest() const {
    Mask basis = 0;
    std::vector<double> a = a_, b = b_;
    std::size_t i = 0, j = 0;
    while (i < m_ && j < n_) {
      basis |= Mask{1} << (i * n_ + j);
      const double x = std::min(a[i], b[j]);
      a[i] -= x;
      b[j] -= x;
      if (i + 1 == m_) {
        ++j;
      } else if (j + 1 == n_ || a[i] <= b[j]) {
        ++i;
      } else {
        ++j;
      }
    }
    return basis;
  }

  // Unique flows on a spanning tree, by peeling leaves.
  std::vector<double> flows(Mask basis) const {
    std::vector<double> flow(m_ * n_, 0.0);
    std::vector<double> a = a_, b = b_;
    std::vector<int> degree(m_ + n_, 0);
    for (std::size_t e = 0; e < m_ * n_; ++e)
      if (basis >> e & 1) {
        ++degree[e / n_];
        ++degree[m_ + e % n_];
      }
    Mask left = basis;
    while (left) {
      bool peeled = false;
      for (std::size_t e = 0; e < m_ * n_ && !peeled; ++e) {
        if (!(left >> e & 1)) continue;
        const std::size_t i = e / n_, j = e % n_;
        if (degree[i] != 1 && degree[m_ + j] != 1) continue;
        const double x = degree[i] == 1 ? a[i] : b[j];
        flow[e] = std::max(0.0, x);
        a[i] -= x;
        b[j] -= x;
        --degree[i];
        --degree[m_ + j];
        left &= ~(Mask{1} << e);
        peeled = true;
      }
      if (!peeled) throw Error(ErrorCode::solver_failure, "basis is not a tree");
    }
    return flow;
  }

  // Cells on the tree path from node `from` to node `to`, in order. Rows are
  // nodes 0..m-1, columns m..m+n-1.
  std::vector<std::size_t> path(Mask basis, std::size_t from, std::size_t to) const {
    const std::size_t nodes = m_ + n_;
    std::vector<std::size_t> parent(nodes, nodes), via(nodes, 0);
    std::vector<std::size_t> stack{from};
    parent[from] = from;
    while (!stack.empty()) {
      const std::size_t u = stack.back();
      stack.pop_back();
      if (u == to) break;
      for (std::size_t v = 0; v < nodes; ++v) {
        if (parent[v] != nodes || (u < m_) == (v < m_)) continue;
        const std::size_t e = u < m_ ? u * n_ + (v - m_) : v * n_ + (u - m_);
        if (!(basis >> e & 1)) continue;
        parent[v] = u;
        via[v] = e;
        stack.push_back(v);
      }
    }
    std::vector<std::size_t> cells;
    for (std::size_t v = to; v != from; v = parent[v]) cells.push_back(via[v]);
    std::reverse(cells.begin(), cells.end());
    return cells;
  }

  std::size_t m_;
  std::size_t n_;
  std::vector<double> a_;
  std::vector<double> b_;
};

}  // namespace

std::vector<Coupling> enumerate_couplings(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  if (mu.dim() != nu.dim()) throw Error(ErrorCode::dimension_mismatch, "measures differ in dimension");
  if (mu.size() * nu.size() > kMaxEnumerationCells)
    throw Error(ErrorCode::cap_exceeded, "coupling enumeration is capped at 36 cells");
  BasisWalker walker(mu.weights(), nu.weights());
  std::vector<Coupling> out;
  for (auto& table : walker.run()) out.emplace_back(mu, nu, std::move(table));
  return out;
}

}  // namespace mkinf::oracle
