#include "mkinf/measures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "mkinf/errors.hpp"
#include "mkinf/lp.hpp"

namespace mkinf {

double squared_distance(const Point& a, const Point& b) {
  double s = 0.0;
  for (std::size_t d = 0; d < a.size(); ++d) {
    const double diff = a[d] - b[d];
    s += diff * diff;
  }
  return s;
}

double squared_norm(const Point& a) {
  double s = 0.0;
  for (double v : a) s += v * v;
  return s;
}

DiscreteMeasure::DiscreteMeasure(std::vector<Point> points, std::vector<double> weights)
    : points_(std::move(points)), weights_(std::move(weights)) {
  if (points_.empty()) throw Error(ErrorCode::invalid_measure, "measure has no atoms");
  if (points_.size() != weights_.size())
    throw Error(ErrorCode::invalid_measure, "points and weights differ in length");
  const std::size_t n = points_.front().size();
  if (n == 0) throw Error(ErrorCode::invalid_measure, "points must have dimension >= 1");
  double total = 0.0;
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (points_[i].size() != n)
      throw Error(ErrorCode::dimension_mismatch, "atoms of a measure must share a dimension");
    for (double v : points_[i])
      if (!std::isfinite(v)) throw Error(ErrorCode::invalid_measure, "non-finite coordinate");
    if (!(weights_[i] >= 0.0) || !std::isfinite(weights_[i]))
      throw Error(ErrorCode::invalid_measure, "weights must be finite and nonnegative");
    total += weights_[i];
  }
  if (std::abs(total - 1.0) > kWeightTolerance)
    throw Error(ErrorCode::invalid_measure,
                "weights sum to " + std::to_string(total) + ", expected 1");
}

DiscreteMeasure DiscreteMeasure::dirac(Point p) {
  return DiscreteMeasure({std::move(p)}, {1.0});
}

DiscreteMeasure DiscreteMeasure::uniform(std::vector<Point> points) {
  const std::size_t k = points.size();
  if (k == 0) throw Error(ErrorCode::invalid_measure, "measure has no atoms");
  return DiscreteMeasure(std::move(points), std::vector<double>(k, 1.0 / static_cast<double>(k)));
}

DiscreteMeasure DiscreteMeasure::normalized(std::vector<Point> points, std::vector<double> weights) {
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw Error(ErrorCode::invalid_measure, "weights must be nonnegative");
    total += w;
  }
  if (!(total > 0.0)) throw Error(ErrorCode::invalid_measure, "total mass must be positive");
  for (double& w : weights) w /= total;
  return DiscreteMeasure(std::move(points), std::move(weights));
}

std::vector<std::size_t> DiscreteMeasure::merge_groups(double tol) const {
  const double tol2 = tol * tol;
  std::vector<std::size_t> group(size());
  std::vector<std::size_t> reps;
  for (std::size_t i = 0; i < size(); ++i) {
    group[i] = i;
    for (std::size_t r : reps) {
      if (squared_distance(points_[i], points_[r]) <= tol2) {
        group[i] = r;
        break;
      }
    }
    if (group[i] == i) reps.push_back(i);
  }
  return group;
}

DiscreteMeasure DiscreteMeasure::merged(double tol, bool drop_null) const {
  const auto group = merge_groups(tol);
  std::vector<Point> pts;
  std::vector<double> w;
  std::vector<std::size_t> slot(size(), 0);
  for (std::size_t i = 0; i < size(); ++i) {
    if (group[i] == i) {
      slot[i] = pts.size();
      pts.push_back(points_[i]);
      w.push_back(0.0);
    }
    w[slot[group[i]]] += weights_[i];
  }
  if (drop_null) {
    std::vector<Point> kept_pts;
    std::vector<double> kept_w;
    for (std::size_t k = 0; k < pts.size(); ++k) {
      if (w[k] > 0.0) {
        kept_pts.push_back(std::move(pts[k]));
        kept_w.push_back(w[k]);
      }
    }
    return DiscreteMeasure(std::move(kept_pts), std::move(kept_w));
  }
  return DiscreteMeasure(std::move(pts), std::move(w));
}

double second_moment(const DiscreteMeasure& mu) {
  double s = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) s += mu.weight(i) * squared_norm(mu.point(i));
  return s;
}

Point mean(const DiscreteMeasure& mu) {
  Point m(mu.dim(), 0.0);
  for (std::size_t i = 0; i < mu.size(); ++i)
    for (std::size_t d = 0; d < m.size(); ++d) m[d] += mu.weight(i) * mu.point(i)[d];
  return m;
}

DiscreteMeasure mixture(const DiscreteMeasure& mu0, const DiscreteMeasure& mu1, double s) {
  if (mu0.dim() != mu1.dim())
    throw Error(ErrorCode::dimension_mismatch, "mixture of measures of different dimension");
  if (!(s >= 0.0 && s <= 1.0))
    throw Error(ErrorCode::invalid_argument, "mixture parameter must lie in [0, 1]");
  std::vector<Point> pts = mu0.points();
  pts.insert(pts.end(), mu1.points().begin(), mu1.points().end());
  std::vector<double> w;
  w.reserve(pts.size());
  for (double v : mu0.weights()) w.push_back((1.0 - s) * v);
  for (double v : mu1.weights()) w.push_back(s * v);
  return DiscreteMeasure::normalized(std::move(pts), std::move(w));
}

DiscreteMeasure translated(const DiscreteMeasure& mu, const Point& shift) {
  if (shift.size() != mu.dim())
    throw Error(ErrorCode::dimension_mismatch, "shift dimension differs from measure");
  std::vector<Point> pts = mu.points();
  for (auto& p : pts)
    for (std::size_t d = 0; d < p.size(); ++d) p[d] += shift[d];
  return DiscreteMeasure(std::move(pts), mu.weights());
}

// ---------------------------------------------------------------------------

namespace {

// Breakpoints closer than this are treated as one level.
constexpr double kLevelTolerance = 1e-14;

std::vector<std::size_t> sorted_order(const DiscreteMeasure& mu) {
  std::vector<std::size_t> order(mu.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return mu.point(a)[0] < mu.point(b)[0];
  });
  return order;
}

void require_1d(const DiscreteMeasure& mu) {
  if (mu.dim() != 1) throw Error(ErrorCode::dimension_mismatch, "operation requires dimension 1");
}

}  // namespace

std::vector<QuantilePiece> quantile_refinement(const std::vector<DiscreteMeasure>& measures) {
  if (measures.empty()) return {};
  const std::size_t m = measures.size();
  std::vector<std::vector<std::size_t>> orders;
  orders.reserve(m);
  for (const auto& mu : measures) {
    require_1d(mu);
    orders.push_back(sorted_order(mu));
  }
  // Cumulative levels per measure; cursor[k] is the current position in
  // orders[k], cum[k] the level at which that atom's mass ends.
  std::vector<std::size_t> cursor(m, 0);
  std::vector<double> cum(m);
  auto skip_null = [&](std::size_t k) {
    while (cursor[k] + 1 < orders[k].size() && measures[k].weight(orders[k][cursor[k]]) == 0.0)
      ++cursor[k];
  };
  for (std::size_t k = 0; k < m; ++k) {
    skip_null(k);
    cum[k] = measures[k].weight(orders[k][cursor[k]]);
  }

  std::vector<QuantilePiece> pieces;
  double level = 0.0;
  while (true) {
    double next = 1.0;
    bool all_last = true;
    for (std::size_t k = 0; k < m; ++k) {
      if (cursor[k] + 1 < orders[k].size()) {
        all_last = false;
        next = std::min(next, cum[k]);
      }
    }
    if (all_last) next = 1.0;
    if (next > level + kLevelTolerance) {
      QuantilePiece piece{level, next, {}};
      piece.atoms.reserve(m);
      for (std::size_t k = 0; k < m; ++k) piece.atoms.push_back(orders[k][cursor[k]]);
      pieces.push_back(std::move(piece));
      level = next;
    }
    if (all_last) break;
    // Advance every measure whose current atom is exhausted at this level.
    for (std::size_t k = 0; k < m; ++k) {
      if (cursor[k] + 1 < orders[k].size() && cum[k] <= next + kLevelTolerance) {
        ++cursor[k];
        cum[k] += measures[k].weight(orders[k][cursor[k]]);
        // Zero-weight atoms contribute no quantile interval.
        while (cursor[k] + 1 < orders[k].size() && measures[k].weight(orders[k][cursor[k]]) == 0.0) {
          ++cursor[k];
          cum[k] += measures[k].weight(orders[k][cursor[k]]);
        }
      }
    }
  }
  if (!pieces.empty()) pieces.back().hi = 1.0;
  return pieces;
}

double quantile(const DiscreteMeasure& mu, double q) {
  require_1d(mu);
  const auto order = sorted_order(mu);
  double cum = 0.0;
  for (std::size_t idx : order) {
    if (mu.weight(idx) == 0.0) continue;
    cum += mu.weight(idx);
    if (cum >= q) return mu.point(idx)[0];
  }
  for (auto it = order.rbegin(); it != order.rend(); ++it)
    if (mu.weight(*it) > 0.0) return mu.point(*it)[0];
  return mu.point(order.back())[0];
}

// ---------------------------------------------------------------------------

MeasureCurve::MeasureCurve(std::vector<CurveSample> samples, Interpolation interpolation)
    : samples_(std::move(samples)), interpolation_(interpolation) {
  if (samples_.empty()) throw Error(ErrorCode::invalid_argument, "curve has no samples");
  const std::size_t n = samples_.front().measure.dim();
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    const auto& s = samples_[i];
    if (!(s.t >= 0.0 && s.t <= 1.0))
      throw Error(ErrorCode::invalid_argument, "sample times must lie in [0, 1]");
    if (i > 0 && !(s.t > samples_[i - 1].t))
      throw Error(ErrorCode::invalid_argument, "sample times must be strictly increasing");
    if (s.measure.dim() != n)
      throw Error(ErrorCode::dimension_mismatch, "curve samples must share a dimension");
    if (s.flags && s.flags->linf && !(*s.flags->linf > 0.0))
      throw Error(ErrorCode::invalid_argument, "density bound must be positive");
  }
  if (interpolation_ == Interpolation::quantile && n != 1)
    throw Error(ErrorCode::invalid_argument, "quantile interpolation requires dimension 1");
}

std::size_t MeasureCurve::nearest_sample(double t) const {
  std::size_t best = 0;
  double best_d = std::abs(samples_[0].t - t);
  for (std::size_t i = 1; i < samples_.size(); ++i) {
    const double d = std::abs(samples_[i].t - t);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

DiscreteMeasure MeasureCurve::at(double t) const {
  if (interpolation_ == Interpolation::nearest || samples_.size() == 1)
    return samples_[nearest_sample(t)].measure;
  if (t <= samples_.front().t) return samples_.front().measure;
  if (t >= samples_.back().t) return samples_.back().measure;
  std::size_t hi = 1;
  while (samples_[hi].t < t) ++hi;
  const auto& a = samples_[hi - 1];
  const auto& b = samples_[hi];
  const double s = (t - a.t) / (b.t - a.t);
  const auto pieces = quantile_refinement({a.measure, b.measure});
  std::vector<Point> pts;
  std::vector<double> w;
  for (const auto& piece : pieces) {
    const double x0 = a.measure.point(piece.atoms[0])[0];
    const double x1 = b.measure.point(piece.atoms[1])[0];
    pts.push_back({(1.0 - s) * x0 + s * x1});
    w.push_back(piece.hi - piece.lo);
  }
  return DiscreteMeasure::normalized(std::move(pts), std::move(w)).merged();
}

bool MeasureCurve::in_ak(std::size_t i, double K) const {
  const auto& f = samples_[i].flags;
  return f && f->is_ac && f->linf && *f->linf <= K;
}

std::optional<double> MeasureCurve::max_finite_linf() const {
  std::optional<double> best;
  for (const auto& s : samples_) {
    if (s.flags && s.flags->is_ac && s.flags->linf && std::isfinite(*s.flags->linf))
      best = best ? std::max(*best, *s.flags->linf) : *s.flags->linf;
  }
  return best;
}

std::vector<Point> MeasureCurve::pooled_support() const {
  std::vector<Point> pts;
  for (const auto& s : samples_)
    for (std::size_t i = 0; i < s.measure.size(); ++i)
      if (s.measure.weight(i) > 0.0) pts.push_back(s.measure.point(i));
  return pts;
}

void TimeGrid::validate() const {
  if (nodes.empty()) throw Error(ErrorCode::invalid_argument, "time grid is empty");
  if (nodes.size() != weights.size())
    throw Error(ErrorCode::invalid_argument, "time grid nodes and weights differ in length");
  double total = 0.0;
  for (std::size_t j = 0; j < nodes.size(); ++j) {
    if (!(weights[j] >= 0.0)) throw Error(ErrorCode::invalid_argument, "negative quadrature weight");
    if (!(nodes[j] >= 0.0 && nodes[j] <= 1.0))
      throw Error(ErrorCode::invalid_argument, "grid node outside [0, 1]");
    if (j > 0 && nodes[j] < nodes[j - 1])
      throw Error(ErrorCode::invalid_argument, "grid nodes must be sorted");
    total += weights[j];
  }
  if (std::abs(total - 1.0) > kWeightTolerance)
    throw Error(ErrorCode::invalid_argument, "quadrature weights must sum to 1");
}

TimeGrid sample_times(const MeasureCurve& curve, int N, SamplingStrategy strategy,
                      std::optional<double> K) {
  if (N < 1) throw Error(ErrorCode::invalid_argument, "N must be at least 1");
  double bound = 0.0;
  if (strategy == SamplingStrategy::prefer_ak) {
    const auto linf = K ? K : curve.max_finite_linf();
    bool any = false;
    if (linf)
      for (std::size_t i = 0; i < curve.size(); ++i) any = any || curve.in_ak(i, *linf);
    if (!any)
      throw Error(ErrorCode::invalid_argument,
                  "prefer_ak sampling needs at least one sample with a finite density bound");
    bound = *linf;
  }

  TimeGrid grid;
  const double n = static_cast<double>(N);
  for (int i = 1; i <= N; ++i) {
    const double lo = static_cast<double>(i - 1) / n;
    const double hi = static_cast<double>(i) / n;
    std::size_t pick = curve.nearest_sample(hi);
    if (strategy == SamplingStrategy::prefer_ak && !curve.in_ak(pick, bound)) {
      // Closest A_K sample inside [lo, hi], if any.
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t s = 0; s < curve.size(); ++s) {
        const double t = curve.sample(s).t;
        if (t < lo || t > hi || !curve.in_ak(s, bound)) continue;
        const double d = std::abs(t - hi);
        if (d < best_d) {
          best_d = d;
          pick = s;
        }
      }
    }
    grid.nodes.push_back(curve.sample(pick).t);
    grid.weights.push_back(1.0 / n);
    grid.sample_index.push_back(pick);
  }
  // Snapping can reorder nodes only if samples are sparse; keep them sorted.
  std::vector<std::size_t> order(grid.nodes.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return grid.nodes[a] < grid.nodes[b]; });
  TimeGrid sorted;
  for (std::size_t j : order) {
    sorted.nodes.push_back(grid.nodes[j]);
    sorted.weights.push_back(grid.weights[j]);
    sorted.sample_index.push_back(grid.sample_index[j]);
  }
  return sorted;
}

// ---------------------------------------------------------------------------

bool in_convex_hull(const Point& x, const std::vector<Point>& generators, double tol) {
  if (generators.empty()) return false;
  const std::size_t n = x.size();
  for (const auto& g : generators)
    if (g.size() != n) throw Error(ErrorCode::dimension_mismatch, "hull generator dimension");

  if (n == 1) {
    double lo = generators.front()[0], hi = lo;
    for (const auto& g : generators) {
      lo = std::min(lo, g[0]);
      hi = std::max(hi, g[0]);
    }
    return x[0] >= lo - tol && x[0] <= hi + tol;
  }

  // Feasibility LP: x = sum lambda_k g_k + (s+ - s-), sum lambda = 1,
  // minimizing the L1 slack. x is inside iff the optimum is within tol.
  const std::size_t k = generators.size();
  lp::Problem p;
  p.num_vars = k + 2 * n;
  p.cost.assign(p.num_vars, 0.0);
  for (std::size_t d = 0; d < 2 * n; ++d) p.cost[k + d] = 1.0;
  for (std::size_t d = 0; d < n; ++d) {
    lp::Constraint row;
    for (std::size_t g = 0; g < k; ++g)
      if (generators[g][d] != 0.0) row.terms.push_back({g, generators[g][d]});
    row.terms.push_back({k + 2 * d, 1.0});
    row.terms.push_back({k + 2 * d + 1, -1.0});
    row.rhs = x[d];
    p.rows.push_back(std::move(row));
  }
  lp::Constraint sum;
  for (std::size_t g = 0; g < k; ++g) sum.terms.push_back({g, 1.0});
  sum.rhs = 1.0;
  p.rows.push_back(std::move(sum));

  const auto sol = lp::solve(p);
  if (sol.status != lp::Status::optimal)
    throw Error(ErrorCode::solver_failure, "convex hull membership LP failed");
  return sol.objective <= tol;
}

bool convex_hull_support_check(const DiscreteMeasure& mu, const std::vector<Point>& generators,
                               double tol) {
  if (!generators.empty() && generators.front().size() != mu.dim())
    throw Error(ErrorCode::dimension_mismatch, "measure and hull differ in dimension");
  const auto hull = DiscreteMeasure::uniform(generators).merged().points();
  for (std::size_t i = 0; i < mu.size(); ++i) {
    if (mu.weight(i) == 0.0) continue;
    if (!in_convex_hull(mu.point(i), hull, tol)) return false;
  }
  return true;
}

bool convex_hull_support_check(const DiscreteMeasure& mu, const MeasureCurve& curve, double tol) {
  if (mu.dim() != curve.dim())
    throw Error(ErrorCode::dimension_mismatch, "measure and curve differ in dimension");
  return convex_hull_support_check(mu, curve.pooled_support(), tol);
}

}  // namespace mkinf
