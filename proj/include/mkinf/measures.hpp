#pragma once

#include <cstddef>
#include <optional>
#include <vector>

namespace mkinf {

using Point = std::vector<double>;

inline constexpr double kWeightTolerance = 1e-12;
inline constexpr double kMergeTolerance = 1e-12;
inline constexpr double kHullTolerance = 1e-9;

double squared_distance(const Point& a, const Point& b);
double squared_norm(const Point& a);

/// Weighted point cloud in R^n. Weights are nonnegative and sum to one;
/// all points are finite and share a dimension. Immutable once built.
class DiscreteMeasure {
 public:
  DiscreteMeasure(std::vector<Point> points, std::vector<double> weights);

  static DiscreteMeasure dirac(Point p);
  static DiscreteMeasure uniform(std::vector<Point> points);
  /// Rescales `weights` to sum to one before validating.
  static DiscreteMeasure normalized(std::vector<Point> points, std::vector<double> weights);

  std::size_t size() const { return points_.size(); }
  std::size_t dim() const { return points_.front().size(); }
  const std::vector<Point>& points() const { return points_; }
  const std::vector<double>& weights() const { return weights_; }
  const Point& point(std::size_t i) const { return points_[i]; }
  double weight(std::size_t i) const { return weights_[i]; }

  /// Atoms closer than `tol` (Euclidean) are combined, weights added. The
  /// first atom of each group keeps its position. Zero-weight atoms are
  /// dropped when `drop_null` is set.
  DiscreteMeasure merged(double tol = kMergeTolerance, bool drop_null = false) const;

  /// For each atom, the index of the atom it was merged into by `merged(tol)`.
  std::vector<std::size_t> merge_groups(double tol = kMergeTolerance) const;

 private:
  std::vector<Point> points_;
  std::vector<double> weights_;
};

double second_moment(const DiscreteMeasure& mu);
Point mean(const DiscreteMeasure& mu);

/// s * mu1 + (1 - s) * mu0, supports concatenated.
DiscreteMeasure mixture(const DiscreteMeasure& mu0, const DiscreteMeasure& mu1, double s);
DiscreteMeasure translated(const DiscreteMeasure& mu, const Point& shift);

// ---------------------------------------------------------------------------
// One-dimensional quantile machinery.

/// A piece of the common refinement of several 1D quantile functions:
/// over quantile levels (lo, hi] every measure sits on a single atom.
struct QuantilePiece {
  double lo;
  double hi;
  std::vector<std::size_t> atoms;  // one atom index per measure
};

/// Common refinement of the left-continuous quantile functions of 1D
/// measures. Pieces of zero length are skipped.
std::vector<QuantilePiece> quantile_refinement(const std::vector<DiscreteMeasure>& measures);

/// Left-continuous quantile F^{-1}(q) = inf{x : F(x) >= q} of a 1D measure.
double quantile(const DiscreteMeasure& mu, double q);

// ---------------------------------------------------------------------------
// Curves.

enum class Interpolation { nearest, quantile };

struct DensityFlags {
  bool is_ac = false;
  std::optional<double> linf;  // L-infinity norm of the density, if known
};

struct CurveSample {
  double t;
  DiscreteMeasure measure;
  std::optional<DensityFlags> flags;
};

/// Finite sampling of a curve t -> mu_t on [0, 1] plus an evaluation rule.
class MeasureCurve {
 public:
  MeasureCurve(std::vector<CurveSample> samples, Interpolation interpolation);

  const std::vector<CurveSample>& samples() const { return samples_; }
  const CurveSample& sample(std::size_t i) const { return samples_[i]; }
  std::size_t size() const { return samples_.size(); }
  std::size_t dim() const { return samples_.front().measure.dim(); }
  Interpolation interpolation() const { return interpolation_; }

  /// Index of the sample time closest to t; ties go to the earlier sample.
  std::size_t nearest_sample(double t) const;

  /// mu_t under the curve's interpolation rule.
  DiscreteMeasure at(double t) const;

  /// Sample i is absolutely continuous with density bounded by K.
  bool in_ak(std::size_t i, double K) const;

  /// Largest finite L-infinity norm among absolutely continuous samples.
  std::optional<double> max_finite_linf() const;

  /// All sample atoms pooled together (the set whose hull must contain
  /// any barycenter).
  std::vector<Point> pooled_support() const;

 private:
  std::vector<CurveSample> samples_;
  Interpolation interpolation_;
};

/// Quadrature nodes on [0, 1]. `sample_index[j]` names the curve sample
/// used at node j.
struct TimeGrid {
  std::vector<double> nodes;
  std::vector<double> weights;
  std::vector<std::size_t> sample_index;

  std::size_t size() const { return nodes.size(); }
  void validate() const;
};

enum class SamplingStrategy { uniform, prefer_ak };

/// Partitions [0, 1] into N intervals [(i-1)/N, i/N]. Uniform sampling
/// uses the right endpoint snapped to the nearest curve sample;
/// prefer_ak picks an A_K sample inside the interval whenever one exists.
/// K defaults to the largest finite density bound on the curve.
TimeGrid sample_times(const MeasureCurve& curve, int N, SamplingStrategy strategy,
                      std::optional<double> K = std::nullopt);

bool in_convex_hull(const Point& x, const std::vector<Point>& generators,
                    double tol = kHullTolerance);

/// Every atom of mu lies in the convex hull of the pooled curve support.
bool convex_hull_support_check(const DiscreteMeasure& mu, const MeasureCurve& curve,
                               double tol = kHullTolerance);
bool convex_hull_support_check(const DiscreteMeasure& mu, const std::vector<Point>& generators,
                               double tol = kHullTolerance);

}  // namespace mkinf
