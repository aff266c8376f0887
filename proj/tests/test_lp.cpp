#include <doctest.h>

#include "mkinf/lp.hpp"
#include "mkinf/transport_simplex.hpp"
#include "support.hpp"

using namespace mkinf;

namespace {

lp::Problem dense(const std::vector<std::vector<double>>& A, const std::vector<double>& b,
                  const std::vector<double>& c) {
  lp::Problem p;
  p.num_vars = c.size();
  p.cost = c;
  for (std::size_t r = 0; r < A.size(); ++r) {
    lp::Constraint row;
    row.rhs = b[r];
    for (std::size_t v = 0; v < A[r].size(); ++v)
      if (A[r][v] != 0.0) row.terms.push_back({v, A[r][v]});
    p.rows.push_back(std::move(row));
  }
  return p;
}

}  // namespace

TEST_CASE("textbook program") {
  // max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18 -> (2, 6), value 36
  const auto p = dense({{1, 0, 1, 0, 0}, {0, 2, 0, 1, 0}, {3, 2, 0, 0, 1}}, {4, 12, 18}, {-3, -5, 0, 0, 0});
  const auto s = lp::solve(p);
  REQUIRE(s.status == lp::Status::optimal);
  CHECK(s.objective == doctest::Approx(-36.0).epsilon(1e-12));
  CHECK(s.x[0] == doctest::Approx(2.0));
  CHECK(s.x[1] == doctest::Approx(6.0));
}

TEST_CASE("Beale's cycling example terminates at the optimum") {
  const auto p = dense({{1, 0, 0, 0.25, -8, -1, 9}, {0, 1, 0, 0.5, -12, -0.5, 3}, {0, 0, 1, 0, 0, 1, 0}},
                       {0, 0, 1}, {0, 0, 0, -0.75, 20, -0.5, 6});
  const auto s = lp::solve(p);
  REQUIRE(s.status == lp::Status::optimal);
  CHECK(s.objective == doctest::Approx(-1.25).epsilon(1e-12));
}

TEST_CASE("infeasible, unbounded and redundant programs") {
  CHECK(lp::solve(dense({{1, 1}}, {-1}, {1, 1})).status == lp::Status::infeasible);
  CHECK(lp::solve(dense({{1, 0}, {1, 0}}, {1, 2}, {1, 1})).status == lp::Status::infeasible);
  CHECK(lp::solve(dense({{1, -1}}, {0}, {-1, 0})).status == lp::Status::unbounded);

  const auto s = lp::solve(dense({{1, 1}, {1, 1}, {2, 2}}, {1, 1, 2}, {1, 2}));
  REQUIRE(s.status == lp::Status::optimal);
  CHECK(s.objective == doctest::Approx(1.0));
}

TEST_CASE("dense LP and transportation simplex agree on random transport problems") {
  testing_support::Rng rng(21);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t m = rng.index(1, 6), n = rng.index(1, 7);
    const auto a = testing_support::random_weights(rng, m);
    const auto b = testing_support::random_weights(rng, n);
    std::vector<double> cost(m * n);
    for (auto& c : cost) c = rng.uniform(0.0, 4.0);

    lp::Problem p;
    p.num_vars = m * n;
    p.cost = cost;
    for (std::size_t i = 0; i < m; ++i) {
      lp::Constraint row;
      row.rhs = a[i];
      for (std::size_t j = 0; j < n; ++j) row.terms.push_back({i * n + j, 1.0});
      p.rows.push_back(row);
    }
    for (std::size_t j = 0; j < n; ++j) {
      lp::Constraint row;
      row.rhs = b[j];
      for (std::size_t i = 0; i < m; ++i) row.terms.push_back({i * n + j, 1.0});
      p.rows.push_back(row);
    }
    const auto dense_sol = lp::solve(p);
    REQUIRE(dense_sol.status == lp::Status::optimal);
    const auto ts = detail::solve_transport(a, b, cost);
    CHECK(std::abs(dense_sol.objective - ts.cost) <= 1e-9);

    for (std::size_t i = 0; i < m; ++i) {
      double row = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        CHECK(ts.flow[i * n + j] >= 0.0);
        row += ts.flow[i * n + j];
      }
      CHECK(std::abs(row - a[i]) <= 1e-12);
    }
  }
}

TEST_CASE("transportation simplex on degenerate supplies") {
  // equal uniform marginals: every vertex is a permutation and the NW start is degenerate
  const std::vector<double> u(4, 0.25);
  std::vector<double> cost(16);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) cost[i * 4 + j] = static_cast<double>((i + 3 * j) % 4);
  const auto ts = detail::solve_transport(u, u, cost);
  CHECK(ts.cost == doctest::Approx(0.0));
}
