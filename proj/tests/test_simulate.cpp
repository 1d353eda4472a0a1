#include <doctest.h>

#include "ibmot/errors.hpp"
#include "ibmot/objective.hpp"
#include "ibmot/simulate.hpp"
#include "support.hpp"

using namespace ibmot;
using testing::measure;

namespace {

const Coupling kTwo{(Eigen::MatrixXd(2, 2) << 0.375, 0.125, 0.125, 0.375).finished(),
                    (Eigen::VectorXd(2) << -1, 1).finished(), (Eigen::VectorXd(2) << -2, 2).finished()};

SimulationOptions options(std::int64_t n_paths, int n_steps, std::uint64_t seed) {
  SimulationOptions o;
  o.n_paths = n_paths;
  o.n_steps = n_steps;
  o.seed = seed;
  return o;
}

}  // namespace

TEST_CASE("bridge paths have the Brownian bridge law") {
  const auto rap = brownian_rap();
  const Eigen::VectorXd grid = uniform_grid(rap, 4);
  REQUIRE(grid.size() == 5);
  CHECK(grid(0) == 0.0);
  CHECK(grid(4) == 1.0);
  const int n = 40000;
  double s2 = 0, s13 = 0, mean = 0;
  for (int k = 0; k < n; ++k) {
    auto rng = path_rng(5, k);
    const Eigen::VectorXd b = sample_bridge_path(rap, grid, rng);
    CHECK(b(0) == 0.0);
    CHECK(b(4) == 0.0);
    mean += b(2);
    s2 += b(2) * b(2);
    s13 += b(1) * b(3);
  }
  mean /= n;
  s2 /= n;
  s13 /= n;
  // Var B(1/2) = 1/4, Cov(B(1/4), B(3/4)) = 1/16; SE of s2 is 0.25 sqrt(2/n).
  CHECK(std::abs(mean) <= 4 * 0.5 / std::sqrt(n));
  CHECK(std::abs(s2 - 0.25) <= 4 * 0.25 * std::sqrt(2.0 / n));
  CHECK(std::abs(s13 - 0.0625) <= 4 * 0.25 * std::sqrt(1.0 / n));

  Eigen::VectorXd bad = grid;
  std::swap(bad(1), bad(2));
  auto rng = path_rng(5, 0);
  CHECK_THROWS_AS(sample_bridge_path(rap, bad, rng), InvalidArgument);
  Eigen::VectorXd outside = grid;
  outside(4) = 1.5;
  CHECK_THROWS_AS(sample_bridge_path(rap, outside, rng), InvalidArgument);
}

TEST_CASE("identity coupling gives a constant mimicking process") {
  const auto rap = brownian_rap();
  const auto m = measure({-1, 0.5, 2}, {0.2, 0.3, 0.5});
  const Coupling c{m.weights().asDiagonal(), m.atoms(), m.atoms()};
  auto opt = options(500, 50, 3);
  opt.keep_paths = true;
  const auto res = simulate_fam(c, rap, opt);
  CHECK(res.k_estimate.value == 0.0);
  for (const auto& p : res.bundle.paths) {
    CHECK(p.x0 == p.x1);
    CHECK((p.M.array() - p.x1).abs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("Monte Carlo objective agrees with quadrature") {
  const auto rap = brownian_rap();
  const double k = k_objective(kTwo, rap, make_quadrature(rap));
  const auto res = simulate_fam(kTwo, rap, options(100'000, 200, 7));
  CHECK(std::abs(res.k_estimate.value - k) <= 3 * res.k_estimate.std_error + res.tail_bias_bound);
  CHECK(res.k_estimate.std_error > 0.0);
  CHECK(res.k_estimate.n_paths == 100'000);

  // Innovations: W(T1) is standard normal in law, and E[X1 W(T1)] = K.
  const double tol = 3.5;
  CHECK(std::abs(res.w_terminal_mean.value) <= tol * res.w_terminal_mean.std_error);
  CHECK(std::abs(res.w_terminal_var.value - 1.0) <= tol * res.w_terminal_var.std_error + 0.02);
  CHECK(std::abs(res.x1_w_terminal.value - k) <= tol * res.x1_w_terminal.std_error + 0.02);
}

TEST_CASE("mimicking process is a martingale that pins its endpoints") {
  const auto rap = brownian_rap();
  std::vector<double> pins;
  for (int steps : {50, 100, 200}) {
    auto opt = options(20'000, steps, 11);
    opt.keep_paths = true;
    const auto res = simulate_fam(kTwo, rap, opt);
    const auto rep = martingale_diagnostics(res.bundle);
    CHECK(rep.increments.size() >= 8);
    for (const auto& inc : rep.increments) CHECK(std::abs(inc.mean) <= 3.5 * inc.std_error + 1e-12);
    for (const auto& lvl : rep.level) CHECK(std::abs(lvl.value) <= 3.5 * lvl.std_error + 1e-12);
    CHECK(rep.initial_pin_error <= 1e-12);
    pins.push_back(rep.final_pin_error);
  }
  CHECK(pins[2] <= pins[0]);

  // Closely spaced target atoms keep X1 uncertain at T1 - d, so the pinning
  // error is visible and must shrink as the grid is refined.
  const auto mu = measure({-0.2, 0.2}), nu = measure({-0.5, -0.3, -0.1, 0.1, 0.3, 0.5});
  const Coupling close = project_to_martingale(independent_coupling(mu, nu).p, mu, nu);
  pins.clear();
  for (int steps : {50, 100, 200}) {
    auto opt = options(20'000, steps, 13);
    opt.keep_paths = true;
    pins.push_back(martingale_diagnostics(simulate_fam(close, rap, opt).bundle).final_pin_error);
  }
  CHECK(pins[0] > 0.0);
  CHECK(pins[1] < pins[0]);
  CHECK(pins[2] < pins[1]);
}

TEST_CASE("simulation is reproducible from its seed") {
  const auto rap = brownian_rap();
  auto opt = options(2000, 40, 21);
  opt.keep_paths = true;
  const auto a = simulate_fam(kTwo, rap, opt);
  const auto b = simulate_fam(kTwo, rap, opt);
  CHECK(a.k_estimate.value == b.k_estimate.value);
  CHECK(a.bundle.W == b.bundle.W);
  opt.seed = 22;
  CHECK(simulate_fam(kTwo, rap, opt).k_estimate.value != a.k_estimate.value);
}
