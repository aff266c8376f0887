#pragma once

#include <cstddef>
#include <vector>

#include "mkinf/measures.hpp"

namespace mkinf {

inline constexpr double kMarginalTolerance = 1e-9;
inline constexpr double kSnapTolerance = 1e-9;
/// Plan entries at or below this are treated as absent when deciding
/// whether a coupling is induced by a map.
inline constexpr double kPlanZero = 1e-12;

/// Joint probability table over source x target supports.
class Coupling {
 public:
  Coupling(DiscreteMeasure source, DiscreteMeasure target, std::vector<double> table);

  const DiscreteMeasure& source() const { return source_; }
  const DiscreteMeasure& target() const { return target_; }
  std::size_t rows() const { return source_.size(); }
  std::size_t cols() const { return target_.size(); }
  double mass(std::size_t i, std::size_t j) const { return table_[i * cols() + j]; }
  const std::vector<double>& table() const { return table_; }

  /// Sum of mass * squared distance.
  double cost() const;
  /// Largest deviation of row / column sums from the marginal weights.
  double marginal_error() const;
  /// Number of entries above kPlanZero.
  std::size_t support_size() const;

 private:
  DiscreteMeasure source_;
  DiscreteMeasure target_;
  std::vector<double> table_;
};

enum class MapKind { exact_monge, barycentric_projection, monotone_1d };

const char* map_kind_name(MapKind kind);

/// Per-atom image assignment; the discrete stand-in for a Brenier map.
/// `push_error` is the W2 distance between the pushed-forward source and
/// the intended target, recorded at construction (zero for exact maps).
class TransportMap {
 public:
  TransportMap(DiscreteMeasure source, std::vector<Point> images, MapKind kind,
               double push_error = 0.0);

  static TransportMap identity(const DiscreteMeasure& mu);

  const DiscreteMeasure& source() const { return source_; }
  const std::vector<Point>& images() const { return images_; }
  const Point& image(std::size_t i) const { return images_[i]; }
  MapKind kind() const { return kind_; }
  double push_error() const { return push_error_; }
  std::size_t size() const { return images_.size(); }

  /// Image of the source atom within kSnapTolerance of x.
  const Point& operator()(const Point& x) const;

  /// Law of the images under the source weights (coincident images merged).
  DiscreteMeasure pushforward() const;

  /// No two atoms with positive weight share an image.
  bool injective(double tol = kMergeTolerance) const;

 private:
  DiscreteMeasure source_;
  std::vector<Point> images_;
  MapKind kind_;
  double push_error_;
};

struct W2Result {
  double cost;
  Coupling plan;
};

/// Exact squared W2 distance and an optimal plan, by the transportation
/// simplex on the bipartite support graph. Coincident atoms are merged
/// before solving and the plan is split back proportionally.
W2Result w2(const DiscreteMeasure& mu, const DiscreteMeasure& nu);

struct W2OneDimResult {
  double cost;
  TransportMap map;
};

/// Closed-form 1D W2^2 through the monotone rearrangement on the common
/// refinement of quantile breakpoints.
W2OneDimResult w2_1d(const DiscreteMeasure& mu, const DiscreteMeasure& nu);

TransportMap barycentric_projection(const Coupling& plan);

/// Inverse of an injective map: from the pushed-forward measure back to
/// the source atoms.
TransportMap invert_map(const TransportMap& map);

/// outer o inner. Every image of `inner` must match a source atom of
/// `outer` within kSnapTolerance.
TransportMap compose(const TransportMap& outer, const TransportMap& inner);

/// W2 (not squared) between neighbouring curve samples; a continuity
/// diagnostic at the sampling resolution.
std::vector<double> adjacent_jumps(const MeasureCurve& curve);

}  // namespace mkinf
