#pragma once

// Generators and brute-force references shared by the test binaries. The
// references here deliberately avoid the library's own quantile and
// transport code.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "mkinf/measures.hpp"

namespace testing_support {

using mkinf::DiscreteMeasure;
using mkinf::Point;

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
  std::size_t index(std::size_t lo, std::size_t hi) {  // inclusive
    return std::uniform_int_distribution<std::size_t>(lo, hi)(engine_);
  }
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

inline DiscreteMeasure random_measure(Rng& rng, std::size_t size, std::size_t dim, double lo = -1.0,
                                      double hi = 1.0) {
  std::vector<Point> pts(size, Point(dim));
  std::vector<double> w(size);
  for (std::size_t i = 0; i < size; ++i) {
    for (auto& v : pts[i]) v = rng.uniform(lo, hi);
    w[i] = rng.uniform(0.05, 1.0);
  }
  return DiscreteMeasure::normalized(std::move(pts), std::move(w));
}

inline DiscreteMeasure random_uniform_measure(Rng& rng, std::size_t size, std::size_t dim) {
  std::vector<Point> pts(size, Point(dim));
  for (auto& p : pts)
    for (auto& v : p) v = rng.uniform(-1.0, 1.0);
  return DiscreteMeasure::uniform(std::move(pts));
}

inline std::vector<double> random_weights(Rng& rng, std::size_t m) {
  std::vector<double> w(m);
  double total = 0.0;
  for (auto& v : w) total += (v = rng.uniform(0.1, 1.0));
  for (auto& v : w) v /= total;
  return w;
}

// Left-continuous quantile by sorting and scanning.
inline double brute_quantile(const DiscreteMeasure& mu, double q) {
  std::vector<std::pair<double, double>> atoms;
  for (std::size_t i = 0; i < mu.size(); ++i) atoms.push_back({mu.point(i)[0], mu.weight(i)});
  std::sort(atoms.begin(), atoms.end());
  double cum = 0.0;
  for (const auto& [x, w] : atoms) {
    cum += w;
    if (cum >= q) return x;
  }
  return atoms.back().first;
}

struct QuantileAverage {
  DiscreteMeasure measure;
  double objective;  // sum_i lambda_i int |Q - Q_i|^2
};

// Barycenter of 1D measures as the weighted average of quantile functions,
// evaluated at the midpoint of every interval between cumulative levels.
inline QuantileAverage quantile_average(const std::vector<DiscreteMeasure>& marginals,
                                        const std::vector<double>& lambda) {
  std::vector<double> levels{0.0, 1.0};
  for (const auto& mu : marginals) {
    std::vector<std::pair<double, double>> atoms;
    for (std::size_t i = 0; i < mu.size(); ++i) atoms.push_back({mu.point(i)[0], mu.weight(i)});
    std::sort(atoms.begin(), atoms.end());
    double cum = 0.0;
    for (const auto& a : atoms) levels.push_back(cum += a.second);
  }
  std::sort(levels.begin(), levels.end());
  std::vector<Point> pts;
  std::vector<double> w;
  double objective = 0.0;
  for (std::size_t k = 0; k + 1 < levels.size(); ++k) {
    const double lo = levels[k], hi = std::min(1.0, levels[k + 1]);
    if (hi - lo <= 1e-13) continue;
    const double mid = 0.5 * (lo + hi);
    std::vector<double> q;
    double avg = 0.0;
    for (std::size_t i = 0; i < marginals.size(); ++i) {
      q.push_back(brute_quantile(marginals[i], mid));
      avg += lambda[i] * q.back();
    }
    for (std::size_t i = 0; i < marginals.size(); ++i) objective += (hi - lo) * lambda[i] * (avg - q[i]) * (avg - q[i]);
    pts.push_back({avg});
    w.push_back(hi - lo);
  }
  return {DiscreteMeasure::normalized(std::move(pts), std::move(w)), objective};
}

// 1D W2^2 by integrating squared quantile differences over all breakpoints.
inline double brute_w2_1d(const DiscreteMeasure& a, const DiscreteMeasure& b) {
  const auto qa = quantile_average({a, b}, {0.5, 0.5});
  // with lambda = 1/2 the objective is |Qa - Qb|^2 / 4
  return 4.0 * qa.objective;
}

inline std::vector<std::size_t> random_permutation(Rng& rng, std::size_t n) {
  std::vector<std::size_t> p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = i;
  std::shuffle(p.begin(), p.end(), rng.engine());
  return p;
}

}  // namespace testing_support
