#include <doctest.h>

#include <cmath>
#include <map>

#include "mkinf/errors.hpp"
#include "mkinf/oracle.hpp"
#include "mkinf/process.hpp"
#include "support.hpp"

using namespace mkinf;
using testing_support::Rng;

namespace {

MeasureCurve curve_from(const std::vector<double>& times, const std::vector<DiscreteMeasure>& ms) {
  std::vector<CurveSample> s;
  for (std::size_t k = 0; k < times.size(); ++k) s.push_back({times[k], ms[k], std::nullopt});
  return MeasureCurve(std::move(s), Interpolation::nearest);
}

MeasureCurve dirac_path(int samples, double (*c)(double)) {
  std::vector<double> times;
  std::vector<DiscreteMeasure> ms;
  for (int k = 0; k <= samples; ++k) {
    times.push_back(static_cast<double>(k) / samples);
    ms.push_back(DiscreteMeasure::dirac({c(times.back())}));
  }
  return curve_from(times, ms);
}

ProcessRepresentation solve_curve(const MeasureCurve& c, int N) {
  return build_process(curve_barycenter(c, {N}, SamplingStrategy::uniform));
}

// Curve of uniform measures with equal atom counts, so all optimal maps are
// permutations and every node map is invertible.
MeasureCurve random_uniform_curve(Rng& rng, std::size_t atoms, std::size_t dim, std::size_t samples) {
  std::vector<double> times;
  std::vector<DiscreteMeasure> ms;
  for (std::size_t k = 0; k < samples; ++k) {
    times.push_back(static_cast<double>(k + 1) / samples);
    ms.push_back(testing_support::random_uniform_measure(rng, atoms, dim));
  }
  return curve_from(times, ms);
}

std::map<std::pair<std::vector<long long>, std::vector<long long>>, double> keyed(const Coupling& c) {
  auto key = [](const Point& p) {
    std::vector<long long> k;
    for (double v : p) k.push_back(std::llround(v * 1e8));
    return k;
  };
  std::map<std::pair<std::vector<long long>, std::vector<long long>>, double> out;
  for (std::size_t i = 0; i < c.rows(); ++i)
    for (std::size_t j = 0; j < c.cols(); ++j)
      if (c.mass(i, j) > 0.0) out[{key(c.source().point(i)), key(c.target().point(j))}] += c.mass(i, j);
  return out;
}

double total_variation(const Coupling& a, const Coupling& b) {
  auto ka = keyed(a), kb = keyed(b);
  for (const auto& [k, v] : kb) ka[k] -= v;
  double tv = 0.0;
  for (const auto& [k, v] : ka) tv += std::abs(v);
  return 0.5 * tv;
}

}  // namespace

TEST_CASE("constant curve gives identity maps and zero cost") {
  const DiscreteMeasure mu({{0.0, 1.0}, {2.0, 0.0}, {1.0, 1.0}}, {0.2, 0.3, 0.5});
  const auto proc = solve_curve(curve_from({0.0, 0.5, 1.0}, {mu, mu, mu}), 4);
  for (const auto& tm : proc.time_maps)
    for (std::size_t i = 0; i < proc.base.size(); ++i) CHECK(tm.map.image(i) == proc.base.point(i));
  CHECK(mk_cost(proc).mk_cost == 0.0);
  CHECK(average_map_residual(proc) == 0.0);
  for (const auto& gap : continuity_modulus(proc)) CHECK(gap.gap == 0.0);
}

TEST_CASE("Dirac line: base at the grid mean, atom follows the curve") {
  const auto proc = solve_curve(dirac_path(16, [](double t) { return t; }), 8);
  REQUIRE(proc.base.size() == 1);
  CHECK(proc.base.point(0)[0] == doctest::Approx(0.5 + 1.0 / 16));
  for (const auto& tm : proc.time_maps) CHECK(tm.map.image(0)[0] == doctest::Approx(tm.t));
  for (const auto& gap : continuity_modulus(proc)) CHECK(gap.gap == doctest::Approx(1.0 / 8));
  CHECK_THROWS_AS(continuity_modulus(solve_curve(dirac_path(4, [](double t) { return t; }), 1)), Error);
}

TEST_CASE("Dirac line on the grid {0, 1} costs 1/2") {
  const auto a = DiscreteMeasure::dirac({0.0});
  const auto b = DiscreteMeasure::dirac({1.0});
  const auto bary = finite_barycenter(BarycenterProblem{{a, b}, {0.5, 0.5}});
  const TimeGrid grid{{0.0, 1.0}, {0.5, 0.5}, {0, 1}};
  const auto report = mk_cost(build_process(bary, grid, {a, b}));
  CHECK(report.mk_cost == doctest::Approx(0.5));
  CHECK(report.mk_cost == doctest::Approx(2 * report.moment_term - 2 * report.avg_potential));
}

TEST_CASE("Dirac curve t^2 with base at the exact integral shows only quadrature error") {
  const int N = 10;
  const auto base = DiscreteMeasure::dirac({1.0 / 3.0});
  TimeGrid grid;
  std::vector<TimeMap> maps;
  double quadrature = 0.0;
  for (int j = 1; j <= N; ++j) {
    const double t = static_cast<double>(j) / N;
    grid.nodes.push_back(t);
    grid.weights.push_back(1.0 / N);
    grid.sample_index.push_back(j - 1);
    maps.push_back({t, TransportMap(base, {{t * t}}, MapKind::exact_monge)});
    quadrature += t * t / N;
  }
  const ProcessRepresentation proc{base, maps, grid, base, {}, true};
  CHECK(average_map_residual(proc) == doctest::Approx(std::abs(quadrature - 1.0 / 3.0)).epsilon(1e-12));
}

TEST_CASE("1D two-sample curve uses the monotone maps from the quantile average") {
  Rng rng(51);
  for (int trial = 0; trial < 10; ++trial) {
    const auto mu0 = testing_support::random_measure(rng, rng.index(1, 5), 1);
    const auto mu1 = testing_support::random_measure(rng, rng.index(1, 5), 1);
    const auto proc = solve_curve(curve_from({0.5, 1.0}, {mu0, mu1}), 2);
    const auto oracle = testing_support::quantile_average({mu0, mu1}, {0.5, 0.5});
    CHECK(std::sqrt(w2(proc.base, oracle.measure).cost) <= 1e-6);
    for (std::size_t j = 0; j < 2; ++j) {
      const auto mono = w2_1d(proc.base, proc.marginals[j]).map;
      for (std::size_t i = 0; i < proc.base.size(); ++i)
        CHECK(proc.time_maps[j].map.image(i)[0] == doctest::Approx(mono.image(i)[0]).epsilon(1e-12));
    }
  }
}

TEST_CASE("cost identity, fidelity and bounds on random curves") {
  Rng rng(52);
  for (int trial = 0; trial < 15; ++trial) {
    const std::size_t n = rng.index(1, 2);
    std::vector<double> times;
    std::vector<DiscreteMeasure> ms;
    const std::size_t S = rng.index(2, 4);
    for (std::size_t k = 0; k < S; ++k) {
      times.push_back(static_cast<double>(k + 1) / S);
      ms.push_back(testing_support::random_measure(rng, rng.index(1, 4), n));
    }
    const auto proc = solve_curve(curve_from(times, ms), static_cast<int>(S));
    const auto r = mk_cost(proc);
    CHECK(std::abs(r.mk_cost - (2 * r.moment_term - 2 * r.avg_potential)) <= 1e-9);
    CHECK(marginal_fidelity(proc) <= kFidelityTolerance);
    if (proc.monge_certified) {
      CHECK(average_map_residual(proc) <= 1e-6);
      CHECK(std::abs(r.average_law_bound - r.lower_bound) <= 1e-9);
    }
    CHECK(r.mk_cost <= independent_mk_cost(proc.marginals, proc.grid.weights) + 1e-9);
  }
}

TEST_CASE("independent coupling is strictly worse on a non-degenerate instance") {
  const auto a = DiscreteMeasure({{0.0}, {1.0}}, {0.5, 0.5});
  const auto b = DiscreteMeasure({{2.0}, {5.0}}, {0.5, 0.5});
  const auto proc = solve_curve(curve_from({0.5, 1.0}, {a, b}), 2);
  CHECK(mk_cost(proc).mk_cost < independent_mk_cost({a, b}, {0.5, 0.5}) - 1e-3);
}

TEST_CASE("permutation couplings never beat the constructed process") {
  Rng rng(53);
  for (int trial = 0; trial < 5; ++trial) {
    // 1D with four nodes, or two nodes in the plane, where the free-support
    // solution is the global optimum
    const std::size_t atoms = rng.index(2, 5);
    const auto curve = trial % 2 == 0 ? random_uniform_curve(rng, atoms, 1, 4) : random_uniform_curve(rng, atoms, 2, 2);
    const auto proc = solve_curve(curve, static_cast<int>(curve.size()));
    const auto best = mk_cost(proc);
    REQUIRE(proc.monge_certified);
    for (int k = 0; k < 30; ++k) {
      // X_j(i) = atom perm_j(i) of marginal j, on a uniform base of `atoms` points
      std::vector<TimeMap> maps;
      const auto base = DiscreteMeasure::uniform(proc.marginals[0].points());
      for (std::size_t j = 0; j < proc.nodes(); ++j) {
        const auto perm = testing_support::random_permutation(rng, atoms);
        std::vector<Point> images;
        for (std::size_t i = 0; i < atoms; ++i) images.push_back(proc.marginals[j].point(perm[i]));
        maps.push_back({proc.time_maps[j].t, TransportMap(base, images, MapKind::exact_monge)});
      }
      const ProcessRepresentation alt{base, maps, proc.grid, proc.barycenter, proc.marginals, true};
      const auto r = mk_cost(alt);
      CHECK(r.mk_cost >= best.mk_cost - 1e-9);
      CHECK(r.average_law_bound >= best.lower_bound - 1e-9);
    }
  }
}

TEST_CASE("reroot: identity at t0, correct pushforwards, same cost") {
  Rng rng(54);
  for (int trial = 0; trial < 10; ++trial) {
    const auto curve = random_uniform_curve(rng, rng.index(2, 5), rng.index(1, 2), 4);
    const auto proc = solve_curve(curve, 4);
    for (std::size_t node = 0; node < proc.nodes(); ++node) {
      const auto rr = reroot(proc, node);
      for (std::size_t i = 0; i < rr.base.size(); ++i)
        CHECK(std::sqrt(squared_distance(rr.time_maps[node].map.image(i), rr.base.point(i))) <= 1e-9);
      CHECK(marginal_fidelity(rr) <= 1e-6);
      CHECK(std::abs(mk_cost(rr).mk_cost - mk_cost(proc).mk_cost) <= 1e-9);
    }
  }
}

TEST_CASE("reroot of a process already rooted at t0 is unchanged") {
  const DiscreteMeasure mu({{0.0}, {1.0}}, {0.5, 0.5});
  const auto proc = solve_curve(curve_from({0.5, 1.0}, {mu, mu}), 2);
  const auto rr = reroot(proc, 1);
  for (std::size_t j = 0; j < proc.nodes(); ++j)
    for (std::size_t i = 0; i < proc.base.size(); ++i)
      CHECK(rr.time_maps[j].map(proc.base.point(i)) == proc.time_maps[j].map.image(i));
}

TEST_CASE("reroot on a Dirac curve and on a non-invertible node") {
  const auto proc = solve_curve(dirac_path(8, [](double t) { return 2 * t; }), 4);
  const auto rr = reroot(proc, 1);
  CHECK(rr.base.point(0)[0] == doctest::Approx(1.0));
  for (const auto& tm : rr.time_maps) CHECK(tm.map.image(0)[0] == doctest::Approx(2 * tm.t));

  const auto spread = DiscreteMeasure({{0.0}, {1.0}}, {0.5, 0.5});
  const auto collapsed = solve_curve(curve_from({0.5, 1.0}, {spread, DiscreteMeasure::dirac({3.0})}), 2);
  try {
    reroot(collapsed, 1);
    FAIL("expected not_invertible");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::not_invertible);
  }
  CHECK_THROWS_AS(reroot(collapsed, 7), Error);
}

TEST_CASE("gaps shrink as the grid refines on a smooth translation") {
  std::vector<double> times;
  std::vector<DiscreteMeasure> ms;
  const DiscreteMeasure mu0({{0.0}, {0.3}, {1.0}}, {0.2, 0.5, 0.3});
  for (int k = 0; k <= 64; ++k) {
    times.push_back(k / 64.0);
    ms.push_back(translated(mu0, {std::sin(k / 64.0)}));
  }
  const auto c = curve_from(times, ms);
  auto worst = [](const ProcessRepresentation& p) {
    double g = 0.0;
    for (const auto& gap : continuity_modulus(p)) g = std::max(g, gap.gap);
    return g;
  };
  const double coarse = worst(solve_curve(c, 8));
  const double fine = worst(solve_curve(c, 16));
  CHECK(fine == doctest::Approx(coarse / 2).epsilon(0.1));
}

TEST_CASE("build_process needs a map per node") {
  const auto mu = DiscreteMeasure::dirac({0.0});
  const auto bary = finite_barycenter(BarycenterProblem{{mu}, {1.0}});
  const TimeGrid grid{{0.5, 1.0}, {0.5, 0.5}, {0, 1}};
  try {
    build_process(bary, grid);
    FAIL("expected missing_map");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::missing_map);
  }
}

TEST_CASE("oracle plans induce the constructed couplings") {
  Rng rng(55);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t m = rng.index(2, 3);
    oracle::MultiMarginalInstance inst;
    for (std::size_t i = 0; i < m; ++i) inst.marginals.push_back(testing_support::random_measure(rng, rng.index(1, 4), 1));
    inst.weights = testing_support::random_weights(rng, m);
    const auto bary = finite_barycenter(BarycenterProblem{inst.marginals, inst.weights});
    TimeGrid grid;
    for (std::size_t j = 0; j < m; ++j) {
      grid.nodes.push_back(static_cast<double>(j + 1) / m);
      grid.weights.push_back(inst.weights[j]);
      grid.sample_index.push_back(j);
    }
    const auto proc = build_process(bary, grid, inst.marginals);
    const auto sol = oracle::solve_multimarginal(inst, oracle::MultiMarginalCost::variance);
    for (std::size_t j = 0; j < m; ++j)
      CHECK(total_variation(oracle::induced_coupling(inst, sol.plan, j), time_coupling(proc, j)) <= 1e-6);
  }
}
