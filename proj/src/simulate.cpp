#include "ibmot/simulate.hpp"

#include <algorithm>
#include <cmath>

#include "ibmot/detail/posterior_kernel.hpp"
#include "ibmot/errors.hpp"

namespace ibmot {

namespace {

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Running mean and variance (Welford), for standard errors.
struct Accumulator {
  std::int64_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double v) {
    ++n;
    const double d = v - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (v - mean);
  }
  double variance() const { return n > 1 ? m2 / static_cast<double>(n - 1) : 0.0; }
  double std_error() const { return n > 0 ? std::sqrt(variance() / static_cast<double>(n)) : 0.0; }
};

void check_grid(const RapConfig& rap, const Eigen::VectorXd& grid) {
  if (grid.size() < 2) throw InvalidArgument("grid needs at least two points");
  for (Eigen::Index k = 1; k < grid.size(); ++k)
    if (!(grid(k) > grid(k - 1))) throw InvalidArgument("grid must be strictly increasing");
  if (grid(0) < rap.T0 || grid(grid.size() - 1) > rap.T1)
    throw InvalidArgument("grid must lie inside [T0, T1]");
}

}  // namespace

Eigen::VectorXd uniform_grid(const RapConfig& rap, int n_steps) {
  if (n_steps < 2) throw InvalidArgument("uniform_grid: need at least two steps");
  Eigen::VectorXd grid(n_steps + 1);
  const double d = (rap.T1 - rap.T0) / n_steps;
  for (int k = 0; k <= n_steps; ++k) grid(k) = rap.T0 + k * d;
  grid(n_steps) = rap.T1;
  return grid;
}

std::mt19937_64 path_rng(std::uint64_t seed, std::uint64_t path_id) {
  return std::mt19937_64(splitmix64(splitmix64(seed) ^ (path_id * 0xd1b54a32d192ed03ULL)));
}

Eigen::VectorXd sample_bridge_path(const RapConfig& rap, const Eigen::VectorXd& grid,
                                   std::mt19937_64& rng) {
  check_grid(rap, grid);
  std::normal_distribution<double> normal;
  Eigen::VectorXd a(grid.size());
  double s = rap.T0, prev = 0.0;
  for (Eigen::Index k = 0; k < grid.size(); ++k) {
    const double t = grid(k);
    if (t <= rap.T0 || t >= rap.T1) {
      a(k) = 0.0;
    } else {
      const double rem = rap.T1 - s;
      const double mean = prev * (rap.T1 - t) / rem;
      const double var = (t - s) * (rap.T1 - t) / rem;
      a(k) = mean + std::sqrt(var) * normal(rng);
    }
    s = t;
    prev = a(k);
  }
  return a;
}

SimPath simulate_path(const Coupling& c, const RapConfig& rap, const Eigen::VectorXd& grid,
                      std::mt19937_64& rng) {
  const Eigen::Index l = c.p.rows(), m = c.p.cols();
  std::uniform_real_distribution<double> uniform;
  const double total = c.p.sum();
  double target = uniform(rng) * total, cum = 0.0;
  SimPath path;
  path.row = l - 1;
  path.col = m - 1;
  bool found = false;
  for (Eigen::Index i = 0; i < l && !found; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      cum += c.p(i, j);
      if (target < cum && c.p(i, j) > 0.0) {
        path.row = i;
        path.col = j;
        found = true;
        break;
      }
    }
  }
  path.x0 = c.x(path.row);
  path.x1 = c.y(path.col);

  const Eigen::VectorXd noise = sample_bridge_path(rap, grid, rng);
  const Eigen::VectorXd log_p = c.p.row(path.row).transpose().array().log().matrix();
  Eigen::VectorXd scratch(m);
  const double row_mean = c.p.row(path.row).dot(c.y) / c.p.row(path.row).sum();

  path.I.resize(grid.size());
  path.M.resize(grid.size());
  for (Eigen::Index k = 0; k < grid.size(); ++k) {
    const double t = grid(k);
    const double g1 = rap.g1(t);
    path.I(k) = rap.g0(t) * path.x0 + g1 * path.x1 + noise(k);
    const double v = t <= rap.T0 || t >= rap.T1 ? 0.0 : rap.variance(t);
    if (t <= rap.T0) {
      path.M(k) = row_mean;
    } else if (!(v > 0.0)) {
      path.M(k) = path.x1;
    } else {
      const double r = g1 * path.x1 + noise(k);
      path.M(k) = detail::posterior_moments(log_p, c.y, r, g1, 0.5 / v, scratch).mean;
    }
  }
  return path;
}

Eigen::VectorXd innovations_path(const Eigen::VectorXd& grid, const SimPath& path,
                                 const RapConfig& rap) {
  check_grid(rap, grid);
  const Eigen::Index n = grid.size();
  if (path.I.size() != n || path.M.size() != n) throw InvalidArgument("innovations: path/grid mismatch");
  if (!rap.dg0) throw InvalidArgument("innovations: rap lacks dg0");
  if (n >= 3) {
    const double last_gap = rap.T1 - grid(n - 2);
    if (grid(n - 1) < rap.T1 || last_gap < 0.5 * (grid(n - 2) - grid(n - 3)))
      throw InvalidArgument("innovations: grid must end at T1 with a full last step");
  }

  const double h1_end = rap.h1(rap.T1), h2_end = rap.h2(rap.T1);
  Eigen::VectorXd w(n);
  w(0) = 0.0;
  for (Eigen::Index k = 0; k + 1 < n; ++k) {
    const double t = grid(k), dt = grid(k + 1) - t;
    const double h1 = rap.h1(t), h2 = rap.h2(t), dh1 = rap.dh1(t), dh2 = rap.dh2(t);
    const double wronskian = dh1 * h2 - h1 * dh2;
    const double den = h1_end * h2 - h1 * h2_end;
    const double z = path.I(k) - rap.g0(t) * path.x0;
    const double drift = ((dh1 * h2_end - h1_end * dh2) * z - wronskian * path.M(k)) / den -
                         path.x0 * rap.dg0(t);
    w(k + 1) = w(k) + (drift * dt + path.I(k + 1) - path.I(k)) / wronskian;
  }
  return w;
}

SimulationResult simulate_fam(const Coupling& c, const RapConfig& rap, const SimulationOptions& opt) {
  if (opt.n_paths < 2) throw InvalidArgument("simulate_fam: need at least two paths");
  if (c.p.minCoeff() < 0.0 || !(c.p.sum() > 0.0)) throw InvalidArgument("simulate_fam: invalid coupling");
  const Eigen::VectorXd grid = uniform_grid(rap, opt.n_steps);
  const Eigen::Index n = grid.size();

  // Trapezoid weights on [T0, T1 - d]; the last interval is left out.
  Eigen::VectorXd trap = Eigen::VectorXd::Zero(n);
  for (Eigen::Index k = 0; k + 2 < n; ++k) {
    const double h = grid(k + 1) - grid(k);
    trap(k) += 0.5 * h;
    trap(k + 1) += 0.5 * h;
  }
  Eigen::VectorXd wts(n);
  for (Eigen::Index k = 0; k + 1 < n; ++k) wts(k) = weight_fn(rap, grid(k));
  wts(n - 1) = 0.0;

  SimulationResult out;
  out.bundle.grid = grid;
  out.bundle.n_paths = opt.n_paths;
  out.bundle.seed = opt.seed;
  if (opt.keep_paths) {
    out.bundle.paths.reserve(static_cast<std::size_t>(opt.n_paths));
    if (opt.innovations) out.bundle.W.resize(opt.n_paths, n);
  }

  Accumulator k_acc, w_acc, w2_acc, xw_acc;
  for (std::int64_t id = 0; id < opt.n_paths; ++id) {
    std::mt19937_64 rng = path_rng(opt.seed, static_cast<std::uint64_t>(id));
    SimPath path = simulate_path(c, rap, grid, rng);
    double integral = 0.0;
    for (Eigen::Index k = 0; k + 1 < n; ++k) {
      const double e = path.x1 - path.M(k);
      integral += trap(k) * wts(k) * e * e;
    }
    k_acc.add(integral);
    if (opt.innovations) {
      const Eigen::VectorXd w = innovations_path(grid, path, rap);
      const double wt = w(n - 1);
      w_acc.add(wt);
      w2_acc.add(wt * wt);
      xw_acc.add(path.x1 * wt);
      if (opt.keep_paths) out.bundle.W.row(id) = w.transpose();
    }
    if (opt.keep_paths) out.bundle.paths.push_back(std::move(path));
  }

  auto estimate = [&](double value, double se) {
    return McEstimate{value, se, opt.n_paths, n};
  };
  out.k_estimate = estimate(k_acc.mean, k_acc.std_error());
  const double d = grid(n - 1) - grid(n - 2);
  // Cauchy-Schwarz on the omitted piece, with E int sigma^2 = E(X1 - X0)^2.
  double spread = 0.0;
  for (Eigen::Index i = 0; i < c.p.rows(); ++i)
    for (Eigen::Index j = 0; j < c.p.cols(); ++j)
      spread += c.p(i, j) * (c.y(j) - c.x(i)) * (c.y(j) - c.x(i));
  out.tail_bias_bound = std::sqrt(d * spread / c.p.sum());
  if (opt.innovations) {
    out.w_terminal_mean = estimate(w_acc.mean, w_acc.std_error());
    out.w_terminal_var = estimate(w2_acc.mean - w_acc.mean * w_acc.mean, w2_acc.std_error());
    out.x1_w_terminal = estimate(xw_acc.mean, xw_acc.std_error());
  }
  return out;
}

MartingaleReport martingale_diagnostics(const PathBundle& bundle) {
  if (bundle.paths.size() < 2) throw InvalidArgument("martingale_diagnostics: no kept paths");
  const Eigen::Index n = bundle.grid.size();
  const Eigen::Index last = n - 2;  // T1 - d
  MartingaleReport rep;

  std::vector<std::pair<Eigen::Index, Eigen::Index>> pairs;
  for (Eigen::Index s : {Eigen::Index{0}, last / 4, last / 2, (3 * last) / 4}) {
    pairs.emplace_back(s, std::min(last, s + 1));
    pairs.emplace_back(s, last);
  }
  for (const auto& [s, t] : pairs) {
    if (s >= t) continue;
    for (bool weighted : {false, true}) {
      Accumulator acc;
      for (const SimPath& p : bundle.paths) {
        const double inc = p.M(t) - p.M(s);
        acc.add(weighted ? inc * p.M(s) : inc);
      }
      IncrementStat st{s, t, weighted, acc.mean, acc.std_error()};
      const double z = st.std_error > 0.0 ? std::abs(st.mean) / st.std_error
                                          : (std::abs(st.mean) > 1e-14 ? INFINITY : 0.0);
      rep.max_z = std::max(rep.max_z, z);
      rep.increments.push_back(st);
    }
  }

  for (Eigen::Index k : {Eigen::Index{0}, last / 4, last / 2, (3 * last) / 4, last}) {
    Accumulator acc;
    for (const SimPath& p : bundle.paths) acc.add(p.M(k));
    rep.level.push_back({acc.mean, acc.std_error(), acc.n, n});
    rep.level_index.push_back(k);
  }

  double init = 0.0, fin = 0.0;
  for (const SimPath& p : bundle.paths) {
    init += std::abs(p.M(0) - p.x0);
    fin += std::abs(p.M(last) - p.x1);
  }
  rep.initial_pin_error = init / static_cast<double>(bundle.paths.size());
  rep.final_pin_error = fin / static_cast<double>(bundle.paths.size());
  return rep;
}

}  // namespace ibmot
