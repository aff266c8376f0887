#include "mkinf/transport_simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mkinf/errors.hpp"

namespace mkinf::detail {
namespace {

constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
constexpr int kDegenerateRunBeforeBland = 30;

}  // namespace

TransportSolution solve_transport(const std::vector<double>& supply,
                                  const std::vector<double>& demand,
                                  const std::vector<double>& cost) {
  const std::size_t m = supply.size();
  const std::size_t n = demand.size();
  if (m == 0 || n == 0 || cost.size() != m * n)
    throw Error(ErrorCode::invalid_argument, "transport problem has inconsistent sizes");

  TransportSolution sol;
  sol.flow.assign(m * n, 0.0);
  std::vector<char> basic(m * n, 0);
  std::vector<std::size_t> basis;
  basis.reserve(m + n - 1);

  // North-west corner start. Exactly m + n - 1 cells, forming a spanning
  // tree of the bipartite graph (degenerate cells carry zero flow).
  {
    std::vector<double> ra = supply, rb = demand;
    std::size_t i = 0, j = 0;
    while (true) {
      const double x = std::max(0.0, std::min(ra[i], rb[j]));
      const std::size_t cell = i * n + j;
      sol.flow[cell] = x;
      basic[cell] = 1;
      basis.push_back(cell);
      ra[i] -= x;
      rb[j] -= x;
      if (i == m - 1 && j == n - 1) break;
      if (i == m - 1) {
        ++j;
      } else if (j == n - 1) {
        ++i;
      } else if (ra[i] <= rb[j]) {
        ++i;
      } else {
        ++j;
      }
    }
  }

  double scale = 1.0;
  for (double c : cost) scale = std::max(scale, std::abs(c));
  const double tol = 1e-12 * scale;
  const std::size_t max_pivots = 50 * m * n + 1000;

  const std::size_t nodes = m + n;
  std::vector<std::vector<std::size_t>> adj(nodes);
  std::vector<double> u(m), v(n);
  std::vector<std::size_t> parent_edge(nodes);
  std::vector<char> seen(nodes);
  std::vector<std::size_t> queue;
  queue.reserve(nodes);

  auto bfs = [&](std::size_t root) {
    std::fill(seen.begin(), seen.end(), 0);
    std::fill(parent_edge.begin(), parent_edge.end(), kNone);
    queue.clear();
    queue.push_back(root);
    seen[root] = 1;
    for (std::size_t q = 0; q < queue.size(); ++q) {
      const std::size_t node = queue[q];
      for (std::size_t cell : adj[node]) {
        const std::size_t other = node < m ? m + cell % n : cell / n;
        if (seen[other]) continue;
        seen[other] = 1;
        parent_edge[other] = cell;
        queue.push_back(other);
      }
    }
  };

  int degenerate_run = 0;
  while (true) {
    for (auto& a : adj) a.clear();
    for (std::size_t cell : basis) {
      adj[cell / n].push_back(cell);
      adj[m + cell % n].push_back(cell);
    }

    // Potentials u_i + v_j = c_ij on the basis tree, rooted at row 0.
    bfs(0);
    u[0] = 0.0;
    for (std::size_t node : queue) {
      if (node == 0) continue;
      const std::size_t cell = parent_edge[node];
      const std::size_t i = cell / n, j = cell % n;
      if (node < m) {
        u[i] = cost[cell] - v[j];
      } else {
        v[j] = cost[cell] - u[i];
      }
    }
    if (queue.size() != nodes)
      throw Error(ErrorCode::solver_failure, "transport basis is not a spanning tree");

    const bool bland = degenerate_run >= kDegenerateRunBeforeBland;
    std::size_t enter = kNone;
    double best = -tol;
    for (std::size_t i = 0; i < m && !(bland && enter != kNone); ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const std::size_t cell = i * n + j;
        if (basic[cell]) continue;
        const double r = cost[cell] - u[i] - v[j];
        if (r < best) {
          enter = cell;
          if (bland) break;
          best = r;
        }
      }
    }
    if (enter == kNone) break;
    if (sol.pivots >= max_pivots)
      throw Error(ErrorCode::solver_failure, "transport simplex hit its pivot limit");

    // The entering cell closes a cycle with the tree path from its column
    // back to its row; signs alternate starting with '-' next to the column.
    const std::size_t ei = enter / n, ej = enter % n;
    bfs(ei);
    std::vector<std::size_t> path;
    for (std::size_t node = m + ej; node != ei;) {
      const std::size_t cell = parent_edge[node];
      path.push_back(cell);
      node = node < m ? m + cell % n : cell / n;
    }

    double theta = std::numeric_limits<double>::infinity();
    std::size_t leave_pos = kNone;
    for (std::size_t k = 0; k < path.size(); k += 2) {
      const double f = sol.flow[path[k]];
      const bool better = f < theta || (f == theta && bland && path[k] < path[leave_pos]);
      if (better) {
        theta = f;
        leave_pos = k;
      }
    }
    theta = std::max(0.0, theta);

    sol.flow[enter] += theta;
    for (std::size_t k = 0; k < path.size(); ++k) {
      if (k % 2 == 0) {
        sol.flow[path[k]] = std::max(0.0, sol.flow[path[k]] - theta);
      } else {
        sol.flow[path[k]] += theta;
      }
    }
    const std::size_t leave = path[leave_pos];
    sol.flow[leave] = 0.0;
    basic[leave] = 0;
    basic[enter] = 1;
    *std::find(basis.begin(), basis.end(), leave) = enter;

    degenerate_run = theta <= 1e-15 ? degenerate_run + 1 : 0;
    ++sol.pivots;
  }

  sol.cost = 0.0;
  for (std::size_t cell = 0; cell < m * n; ++cell) sol.cost += sol.flow[cell] * cost[cell];
  return sol;
}

}  // namespace mkinf::detail
