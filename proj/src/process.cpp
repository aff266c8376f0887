#include "mkinf/process.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "mkinf/errors.hpp"

namespace mkinf {

DiscreteMeasure ProcessRepresentation::law(std::size_t j) const {
  return DiscreteMeasure(time_maps.at(j).map.images(), base.weights()).merged();
}

void ProcessRepresentation::validate() const {
  if (time_maps.empty()) throw Error(ErrorCode::invalid_argument, "process has no time maps");
  if (grid.size() != time_maps.size())
    throw Error(ErrorCode::missing_map, "process needs one time map per grid node");
  grid.validate();
  for (const auto& tm : time_maps) {
    const auto& src = tm.map.source();
    if (src.size() != base.size())
      throw Error(ErrorCode::invalid_argument, "time map source differs from the base measure");
    for (std::size_t i = 0; i < base.size(); ++i)
      if (squared_distance(src.point(i), base.point(i)) > kSnapTolerance * kSnapTolerance)
        throw Error(ErrorCode::invalid_argument, "time map source differs from the base measure");
  }
  if (!marginals.empty() && marginals.size() != time_maps.size())
    throw Error(ErrorCode::invalid_argument, "one marginal per node required");
}

ProcessRepresentation build_process(const BarycenterResult& bary, const TimeGrid& grid,
                                    std::vector<DiscreteMeasure> marginals) {
  grid.validate();
  if (bary.maps.size() != grid.size())
    throw Error(ErrorCode::missing_map, "barycenter result does not provide a map for every node (" +
                                            std::to_string(bary.maps.size()) + " maps, " +
                                            std::to_string(grid.size()) + " nodes)");
  std::vector<TimeMap> time_maps;
  bool certified = true;
  for (std::size_t j = 0; j < grid.size(); ++j) {
    time_maps.push_back({grid.nodes[j], bary.maps[j]});
    certified = certified && bary.maps[j].kind() != MapKind::barycentric_projection;
  }
  ProcessRepresentation proc{bary.measure, std::move(time_maps), grid, bary.measure,
                             std::move(marginals), certified};
  proc.validate();
  return proc;
}

ProcessRepresentation build_process(const CurveBarycenter& curve_bary) {
  return build_process(curve_bary.result, curve_bary.grid, curve_bary.marginals);
}

double marginal_fidelity(const ProcessRepresentation& proc) {
  double worst = 0.0;
  for (std::size_t j = 0; j < proc.marginals.size(); ++j)
    worst = std::max(worst, std::sqrt(w2(proc.law(j), proc.marginals[j]).cost));
  return worst;
}

double average_map_residual(const ProcessRepresentation& proc) {
  const std::size_t n = proc.base.dim();
  double worst = 0.0;
  for (std::size_t i = 0; i < proc.base.size(); ++i) {
    Point avg(n, 0.0);
    for (std::size_t j = 0; j < proc.nodes(); ++j) {
      const auto& y = proc.time_maps[j].map.image(i);
      for (std::size_t d = 0; d < n; ++d) avg[d] += proc.grid.weights[j] * y[d];
    }
    worst = std::max(worst, std::sqrt(squared_distance(avg, proc.base.point(i))));
  }
  return worst;
}

CostReport mk_cost(const ProcessRepresentation& proc) {
  const std::size_t n = proc.base.dim();
  const std::size_t N = proc.nodes();
  const auto& w = proc.grid.weights;

  CostReport report{0.0, 0.0, 0.0, 0.0, 0.0, proc.monge_certified};
  std::vector<Point> averages;
  averages.reserve(proc.base.size());
  for (std::size_t i = 0; i < proc.base.size(); ++i) {
    const double p = proc.base.weight(i);
    Point avg(n, 0.0);
    double moment = 0.0;
    double pairs = 0.0;
    for (std::size_t j = 0; j < N; ++j) {
      const auto& xj = proc.time_maps[j].map.image(i);
      moment += w[j] * squared_norm(xj);
      for (std::size_t d = 0; d < n; ++d) avg[d] += w[j] * xj[d];
      for (std::size_t k = j + 1; k < N; ++k)
        pairs += 2.0 * w[j] * w[k] * squared_distance(xj, proc.time_maps[k].map.image(i));
    }
    report.moment_term += p * moment;
    report.avg_potential += p * squared_norm(avg);
    report.mk_cost += p * pairs;
    averages.push_back(std::move(avg));
  }

  const DiscreteMeasure average_law = DiscreteMeasure(std::move(averages), proc.base.weights()).merged();
  for (std::size_t j = 0; j < N; ++j) {
    const DiscreteMeasure law = proc.law(j);
    report.lower_bound += w[j] * w2(law, proc.barycenter).cost;
    report.average_law_bound += w[j] * w2(law, average_law).cost;
  }
  return report;
}

double independent_mk_cost(const std::vector<DiscreteMeasure>& laws, const std::vector<double>& weights) {
  if (laws.size() != weights.size())
    throw Error(ErrorCode::invalid_argument, "one weight per law required");
  std::vector<double> moments;
  std::vector<Point> means;
  for (const auto& mu : laws) {
    moments.push_back(second_moment(mu));
    means.push_back(mean(mu));
  }
  double total = 0.0;
  for (std::size_t j = 0; j < laws.size(); ++j)
    for (std::size_t k = 0; k < laws.size(); ++k) {
      if (j == k) continue;
      double dot = 0.0;
      for (std::size_t d = 0; d < means[j].size(); ++d) dot += means[j][d] * means[k][d];
      total += weights[j] * weights[k] * (moments[j] + moments[k] - 2.0 * dot);
    }
  return total;
}

ProcessRepresentation reroot(const ProcessRepresentation& proc, std::size_t node) {
  if (node >= proc.nodes()) throw Error(ErrorCode::invalid_argument, "reroot node out of range");
  const TransportMap inverse = invert_map(proc.time_maps[node].map);
  std::vector<TimeMap> time_maps;
  time_maps.reserve(proc.nodes());
  for (const auto& tm : proc.time_maps) time_maps.push_back({tm.t, compose(tm.map, inverse)});
  ProcessRepresentation out{inverse.source(), std::move(time_maps), proc.grid, proc.barycenter,
                            proc.marginals, proc.monge_certified};
  out.validate();
  return out;
}

std::size_t nearest_node(const ProcessRepresentation& proc, double t) {
  std::size_t best = 0;
  for (std::size_t j = 1; j < proc.nodes(); ++j)
    if (std::abs(proc.time_maps[j].t - t) < std::abs(proc.time_maps[best].t - t)) best = j;
  return best;
}

std::vector<ContinuityGap> continuity_modulus(const ProcessRepresentation& proc) {
  if (proc.nodes() < 2) throw Error(ErrorCode::invalid_argument, "continuity modulus needs two nodes");
  std::vector<ContinuityGap> gaps;
  for (std::size_t j = 0; j + 1 < proc.nodes(); ++j) {
    double gap = 0.0;
    for (std::size_t i = 0; i < proc.base.size(); ++i)
      gap = std::max(gap, std::sqrt(squared_distance(proc.time_maps[j].map.image(i),
                                                     proc.time_maps[j + 1].map.image(i))));
    gaps.push_back({proc.time_maps[j].t, proc.time_maps[j + 1].t, gap});
  }
  return gaps;
}

Coupling time_coupling(const ProcessRepresentation& proc, std::size_t node) {
  const DiscreteMeasure law = proc.law(node);
  const auto& map = proc.time_maps.at(node).map;
  std::vector<double> table(proc.base.size() * law.size(), 0.0);
  for (std::size_t i = 0; i < proc.base.size(); ++i) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < law.size(); ++k) {
      const double d = squared_distance(law.point(k), map.image(i));
      if (d < best_d) {
        best_d = d;
        best = k;
      }
    }
    table[i * law.size() + best] += proc.base.weight(i);
  }
  return Coupling(proc.base, law, std::move(table));
}

}  // namespace mkinf
