#include "mkinf/ot_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mkinf/errors.hpp"
#include "mkinf/transport_simplex.hpp"

namespace mkinf {

Coupling::Coupling(DiscreteMeasure source, DiscreteMeasure target, std::vector<double> table)
    : source_(std::move(source)), target_(std::move(target)), table_(std::move(table)) {
  if (table_.size() != source_.size() * target_.size())
    throw Error(ErrorCode::invalid_argument, "coupling table has the wrong shape");
  for (double v : table_)
    if (!(v >= 0.0) || !std::isfinite(v))
      throw Error(ErrorCode::invalid_argument, "coupling entries must be finite and nonnegative");
  if (marginal_error() > kMarginalTolerance)
    throw Error(ErrorCode::invalid_argument, "coupling marginals do not match its measures");
}

double Coupling::cost() const {
  double s = 0.0;
  for (std::size_t i = 0; i < rows(); ++i)
    for (std::size_t j = 0; j < cols(); ++j) {
      const double m = mass(i, j);
      if (m > 0.0) s += m * squared_distance(source_.point(i), target_.point(j));
    }
  return s;
}

double Coupling::marginal_error() const {
  double worst = 0.0;
  std::vector<double> col(cols(), 0.0);
  for (std::size_t i = 0; i < rows(); ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < cols(); ++j) {
      row += mass(i, j);
      col[j] += mass(i, j);
    }
    worst = std::max(worst, std::abs(row - source_.weight(i)));
  }
  for (std::size_t j = 0; j < cols(); ++j) worst = std::max(worst, std::abs(col[j] - target_.weight(j)));
  return worst;
}

std::size_t Coupling::support_size() const {
  return static_cast<std::size_t>(
      std::count_if(table_.begin(), table_.end(), [](double v) { return v > kPlanZero; }));
}

// ---------------------------------------------------------------------------

const char* map_kind_name(MapKind kind) {
  switch (kind) {
    case MapKind::exact_monge: return "exact_monge";
    case MapKind::barycentric_projection: return "barycentric_projection";
    case MapKind::monotone_1d: return "monotone_1d";
  }
  return "unknown";
}

TransportMap::TransportMap(DiscreteMeasure source, std::vector<Point> images, MapKind kind,
                           double push_error)
    : source_(std::move(source)), images_(std::move(images)), kind_(kind), push_error_(push_error) {
  if (images_.size() != source_.size())
    throw Error(ErrorCode::invalid_argument, "map needs one image per source atom");
  for (const auto& y : images_)
    if (y.size() != source_.dim())
      throw Error(ErrorCode::dimension_mismatch, "map images differ in dimension from source");
  if (kind_ == MapKind::monotone_1d) {
    if (source_.dim() != 1)
      throw Error(ErrorCode::dimension_mismatch, "monotone_1d maps live in dimension 1");
    std::vector<std::size_t> order(size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return source_.point(a)[0] < source_.point(b)[0];
    });
    for (std::size_t k = 1; k < order.size(); ++k)
      if (images_[order[k]][0] < images_[order[k - 1]][0] - 1e-12)
        throw Error(ErrorCode::invalid_argument, "monotone_1d map is not nondecreasing");
  }
}

TransportMap TransportMap::identity(const DiscreteMeasure& mu) {
  return TransportMap(mu, mu.points(), MapKind::exact_monge, 0.0);
}

const Point& TransportMap::operator()(const Point& x) const {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < size(); ++i) {
    const double d = squared_distance(source_.point(i), x);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  if (std::sqrt(best_d) > kSnapTolerance)
    throw Error(ErrorCode::unmatched_support, "point is not a source atom of the map");
  return images_[best];
}

DiscreteMeasure TransportMap::pushforward() const {
  return DiscreteMeasure(images_, source_.weights()).merged();
}

bool TransportMap::injective(double tol) const {
  const double tol2 = tol * tol;
  for (std::size_t a = 0; a < size(); ++a) {
    if (source_.weight(a) == 0.0) continue;
    for (std::size_t b = a + 1; b < size(); ++b) {
      if (source_.weight(b) == 0.0) continue;
      if (squared_distance(images_[a], images_[b]) <= tol2) return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------

W2Result w2(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  if (mu.dim() != nu.dim())
    throw Error(ErrorCode::dimension_mismatch, "w2 between measures of different dimension");

  const auto group_mu = mu.merge_groups();
  const auto group_nu = nu.merge_groups();

  // Compact indices of merge representatives.
  auto compact = [](const std::vector<std::size_t>& group, const DiscreteMeasure& m,
                    std::vector<std::size_t>& slot, std::vector<double>& mass,
                    std::vector<std::size_t>& rep) {
    slot.assign(group.size(), 0);
    for (std::size_t i = 0; i < group.size(); ++i) {
      if (group[i] == i) {
        slot[i] = rep.size();
        rep.push_back(i);
        mass.push_back(0.0);
      }
      slot[i] = slot[group[i]];
      mass[slot[i]] += m.weight(i);
    }
  };
  std::vector<std::size_t> slot_mu, slot_nu, rep_mu, rep_nu;
  std::vector<double> a, b;
  compact(group_mu, mu, slot_mu, a, rep_mu);
  compact(group_nu, nu, slot_nu, b, rep_nu);

  const std::size_t m = a.size(), n = b.size();
  std::vector<double> c(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j)
      c[i * n + j] = squared_distance(mu.point(rep_mu[i]), nu.point(rep_nu[j]));

  const auto sol = detail::solve_transport(a, b, c);

  std::vector<double> table(mu.size() * nu.size(), 0.0);
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const std::size_t gi = slot_mu[i];
    if (a[gi] <= 0.0) continue;
    const double fi = mu.weight(i) / a[gi];
    for (std::size_t j = 0; j < nu.size(); ++j) {
      const std::size_t gj = slot_nu[j];
      if (b[gj] <= 0.0) continue;
      table[i * nu.size() + j] = sol.flow[gi * n + gj] * fi * (nu.weight(j) / b[gj]);
    }
  }
  Coupling plan(mu, nu, std::move(table));
  const double cost = std::max(0.0, sol.cost);
  return W2Result{cost, std::move(plan)};
}

namespace {

void require_1d(const DiscreteMeasure& mu, const char* what) {
  if (mu.dim() != 1) throw Error(ErrorCode::dimension_mismatch, what);
}

double quantile_cost(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  double cost = 0.0;
  for (const auto& piece : quantile_refinement({mu, nu})) {
    const double d = mu.point(piece.atoms[0])[0] - nu.point(piece.atoms[1])[0];
    cost += (piece.hi - piece.lo) * d * d;
  }
  return cost;
}

}  // namespace

W2OneDimResult w2_1d(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  require_1d(mu, "w2_1d requires a 1D source");
  require_1d(nu, "w2_1d requires a 1D target");

  const auto group = mu.merge_groups();
  const DiscreteMeasure mu_m = mu.merged();
  const DiscreteMeasure nu_m = nu.merged();
  // merged() keeps representatives in first-occurrence order.
  std::vector<std::size_t> rep_slot(mu.size(), 0);
  for (std::size_t i = 0, k = 0; i < mu.size(); ++i)
    if (group[i] == i) rep_slot[i] = k++;

  const auto pieces = quantile_refinement({mu_m, nu_m});
  double cost = 0.0;
  std::vector<double> mass(mu_m.size(), 0.0), moment(mu_m.size(), 0.0);
  std::vector<std::size_t> targets(mu_m.size(), 0);
  std::vector<int> target_count(mu_m.size(), 0);
  for (const auto& piece : pieces) {
    const std::size_t s = piece.atoms[0];
    const double y = nu_m.point(piece.atoms[1])[0];
    const double d = mu_m.point(s)[0] - y;
    const double len = piece.hi - piece.lo;
    cost += len * d * d;
    mass[s] += len;
    moment[s] += len * y;
    if (target_count[s] == 0 || targets[s] != piece.atoms[1]) {
      ++target_count[s];
      targets[s] = piece.atoms[1];
    }
  }

  std::vector<Point> merged_images(mu_m.size());
  bool split = false;
  for (std::size_t s = 0; s < mu_m.size(); ++s) {
    if (target_count[s] == 1) {
      merged_images[s] = nu_m.point(targets[s]);
    } else if (mass[s] > 0.0) {
      merged_images[s] = {moment[s] / mass[s]};
      split = true;
    } else {
      // Null atom: send it to the quantile at its cumulative level.
      double level = 0.0;
      for (std::size_t r = 0; r < mu_m.size(); ++r)
        if (mu_m.point(r)[0] < mu_m.point(s)[0]) level += mu_m.weight(r);
      merged_images[s] = {quantile(nu_m, level)};
    }
  }

  std::vector<Point> images(mu.size());
  for (std::size_t i = 0; i < mu.size(); ++i) images[i] = merged_images[rep_slot[group[i]]];

  double push_error = 0.0;
  if (split) {
    const DiscreteMeasure pushed(images, mu.weights());
    push_error = std::sqrt(std::max(0.0, quantile_cost(pushed.merged(), nu_m)));
  }
  return W2OneDimResult{cost, TransportMap(mu, std::move(images), MapKind::monotone_1d, push_error)};
}

TransportMap barycentric_projection(const Coupling& plan) {
  const auto& src = plan.source();
  const auto& tgt = plan.target();
  std::vector<Point> images(plan.rows());
  bool exact = true;
  for (std::size_t i = 0; i < plan.rows(); ++i) {
    if (!(src.weight(i) > 0.0))
      throw Error(ErrorCode::invalid_argument, "barycentric projection of a zero-weight atom");
    std::size_t nonzero = 0, argmax = 0;
    double row = 0.0;
    for (std::size_t j = 0; j < plan.cols(); ++j) {
      const double v = plan.mass(i, j);
      row += v;
      if (v > kPlanZero) ++nonzero;
      if (v > plan.mass(i, argmax)) argmax = j;
    }
    if (nonzero <= 1) {
      images[i] = tgt.point(argmax);
      continue;
    }
    exact = false;
    Point y(tgt.dim(), 0.0);
    for (std::size_t j = 0; j < plan.cols(); ++j) {
      const double v = plan.mass(i, j);
      if (v <= 0.0) continue;
      for (std::size_t d = 0; d < y.size(); ++d) y[d] += v * tgt.point(j)[d];
    }
    for (double& v : y) v /= row;
    images[i] = std::move(y);
  }
  if (exact) return TransportMap(src, std::move(images), MapKind::exact_monge, 0.0);

  const DiscreteMeasure pushed(images, src.weights());
  const double err = std::sqrt(w2(pushed, tgt).cost);
  return TransportMap(src, std::move(images), MapKind::barycentric_projection, err);
}

TransportMap invert_map(const TransportMap& map) {
  if (map.kind() == MapKind::barycentric_projection)
    throw Error(ErrorCode::not_invertible,
                "barycentric projections do not transport the target exactly");
  if (!map.injective())
    throw Error(ErrorCode::not_invertible, "map merges source atoms; inverse undefined");
  DiscreteMeasure pushed(map.images(), map.source().weights());
  return TransportMap(std::move(pushed), map.source().points(), map.kind(), 0.0);
}

TransportMap compose(const TransportMap& outer, const TransportMap& inner) {
  if (outer.source().dim() != inner.images().front().size())
    throw Error(ErrorCode::dimension_mismatch, "composed maps differ in dimension");
  std::vector<Point> images;
  images.reserve(inner.size());
  for (const auto& y : inner.images()) images.push_back(outer(y));

  MapKind kind = MapKind::exact_monge;
  if (outer.kind() == MapKind::barycentric_projection ||
      inner.kind() == MapKind::barycentric_projection) {
    kind = MapKind::barycentric_projection;
  } else if (outer.kind() == MapKind::monotone_1d && inner.kind() == MapKind::monotone_1d) {
    kind = MapKind::monotone_1d;
  }
  return TransportMap(inner.source(), std::move(images), kind,
                      outer.push_error() + inner.push_error());
}

std::vector<double> adjacent_jumps(const MeasureCurve& curve) {
  std::vector<double> jumps;
  for (std::size_t i = 0; i + 1 < curve.size(); ++i)
    jumps.push_back(std::sqrt(w2(curve.sample(i).measure, curve.sample(i + 1).measure).cost));
  return jumps;
}

}  // namespace mkinf
