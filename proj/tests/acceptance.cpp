// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "ibmot/convexify.hpp"
#include "ibmot/coupling.hpp"
#include "ibmot/objective.hpp"
#include "ibmot/optimizer.hpp"
#include "ibmot/quadrature.hpp"
#include "ibmot/simulate.hpp"
#include "support.hpp"

using namespace ibmot;
using testing::measure;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Every coupling evaluated anywhere in the suite is also audited for the
// variance-form identity and the Cauchy-Schwarz bound.
struct Audit {
  int evaluated = 0;
  double worst_form_gap = 0.0;   // |K - variance form| / K
  double worst_bound_gap = -1e300;  // K - bound
  std::string worst_form_label, worst_bound_label;

  ObjectiveEvaluation evaluate(const Coupling& c, const RapConfig& rap, const QuadratureSpec& quad,
                               const std::string& label) {
    ObjectiveEvaluation ev = evaluate_objective(c, rap, quad);
    record(c, rap, ev, label);
    return ev;
  }

  void record(const Coupling& c, const RapConfig& rap, const ObjectiveEvaluation& ev,
              const std::string& label) {
    ++evaluated;
    if (ev.value > 0.0) {
      const double gap = std::abs(ev.value - ev.variance_form) / ev.value;
      if (gap > worst_form_gap) worst_form_gap = gap, worst_form_label = label;
    }
    const EmpiricalMeasure mu = make_measure(c.x, c.p.rowwise().sum().eval());
    const EmpiricalMeasure nu = make_measure(c.y, c.p.colwise().sum().transpose().eval());
    const double gap = ev.value - objective_upper_bound(rap, mu, nu);
    if (gap > worst_bound_gap) worst_bound_gap = gap, worst_bound_label = label;
  }
};

Audit audit;
int failures = 0;

void report(int n, bool pass, const std::string& what, const std::string& detail) {
  std::printf("%s criterion %d: %s | %s\n", pass ? "PASS" : "FAIL", n, what.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[2048];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

const Eigen::MatrixXd kForced = (Eigen::MatrixXd(2, 2) << 0.375, 0.125, 0.125, 0.375).finished();

// 1 -------------------------------------------------------------------------
void forced_coupling() {
  const auto rap = brownian_rap();
  const auto quad = make_quadrature(rap);
  const auto t0 = Clock::now();
  const auto res = solve(measure({-1, 1}), measure({-2, 2}), rap, quad, 1e-2);
  const double secs = seconds_since(t0);
  audit.evaluate(res.coupling_avg, rap, quad, "forced 2x2");
  const double err = (res.coupling_avg.p - kForced).norm();
  report(1, err <= 1e-8 && secs < 1.0, "forced coupling",
         fmt("frobenius error %.3e (tol 1e-8), %.3f s (limit 1 s)", err, secs));
}

// 2 -------------------------------------------------------------------------
// Probabilities of the quantile cells under X1 = X0 + Z, X0 ~ N(0,1),
// Z ~ N(0,1) independent: the Brownian coupling of N(0,1) and N(0,2).
Eigen::MatrixXd brownian_cells(int n) {
  auto edges = [n](double scale) {
    std::vector<double> e(n + 1);
    e[0] = -10 * scale;
    e[n] = 10 * scale;
    for (int k = 1; k < n; ++k) e[k] = scale * testing::normal_quantile(double(k) / n);
    return e;
  };
  const auto ex = edges(1.0), ey = edges(std::sqrt(2.0));
  Eigen::MatrixXd p(n, n);
  for (int i = 0; i < n; ++i) {
    const GaussRule g = gauss_legendre(64, ex[i], ex[i + 1]);
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (Eigen::Index k = 0; k < g.nodes.size(); ++k) {
        const double x = g.nodes(k);
        s += g.weights(k) * testing::normal_pdf(x) *
             (testing::normal_cdf(ey[j + 1] - x) - testing::normal_cdf(ey[j] - x));
      }
      p(i, j) = s;
    }
  }
  return p;
}

void brownian_reproduction() {
  const int n = 50;
  const auto t0 = Clock::now();
  std::vector<double> xs(n), ys(n);
  for (int k = 0; k < n; ++k) {
    xs[k] = testing::normal_quantile((k + 0.5) / n);
    ys[k] = std::sqrt(2.0) * xs[k];
  }
  const auto repaired = convexify_pair(measure(xs), measure(ys));
  const EmpiricalMeasure& mu = repaired.mu_tilde;
  const EmpiricalMeasure& nu = repaired.nu_tilde;
  const auto rap = brownian_rap();
  const auto quad = make_quadrature(rap);

  const Coupling gaussian = project_to_martingale(brownian_cells(n), mu, nu);
  const double k_gauss = audit.evaluate(gaussian, rap, quad, "gaussian 50x50").value;

  SolverOverrides ov;
  ov.max_theta_cap = 60;
  const auto res = solve(mu, nu, rap, quad, 0.02, ov);
  audit.evaluate(res.coupling_avg, rap, quad, "gaussian 50x50 solve");
  const double secs = seconds_since(t0);
  const bool near_one = std::abs(k_gauss - 1.0) <= 0.05;
  const bool solved = res.value >= k_gauss - 0.02;
  report(2, near_one && solved && secs < 600, "Brownian coupling reproduction",
         fmt("repair cost %.2e, K(gaussian) %.6f (|K-1| <= 0.05), solve %.6f (>= %.6f, theta %lld), %.1f s",
             repaired.cost, k_gauss, res.value, k_gauss - 0.02,
             static_cast<long long>(res.params_used.theta), secs));
}

// 3 -------------------------------------------------------------------------
void gradient_correctness() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(2024);
  const auto rap = brownian_rap();
  const auto quad = make_quadrature(rap);
  double worst = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    const auto inst = testing::random_instance(rng, 3, 4);
    const Coupling c{inst.p, inst.mu.atoms(), inst.nu.atoms()};
    const Eigen::MatrixXd g = audit.evaluate(c, rap, quad, "random 3x4").gradient;
    for (Eigen::Index k = 0; k < c.p.size(); ++k) {
      const double h = 1e-6;
      Coupling up = c, dn = c;
      up.p.data()[k] += h;
      dn.p.data()[k] -= h;
      const double fd = (k_objective(up, rap, quad) - k_objective(dn, rap, quad)) / (2 * h);
      worst = std::max(worst, std::abs(g.data()[k] - fd) / std::abs(fd));
    }
  }
  const double secs = seconds_since(t0);
  report(3, worst <= 1e-4 && secs < 120, "gradient vs central differences",
         fmt("worst relative error %.3e over 240 entries (tol 1e-4), %.1f s", worst, secs));
}

// 5 -------------------------------------------------------------------------
struct NamedCoupling {
  std::string name;
  Coupling c;
};

std::vector<NamedCoupling> mc_instances() {
  std::vector<NamedCoupling> out;
  out.push_back({"forced 2x2", {kForced, measure({-1, 1}).atoms(), measure({-2, 2}).atoms()}});
  const auto m1 = measure({0}), n1 = measure({-1, 1});
  out.push_back({"delta 1x2", project_to_martingale(independent_coupling(m1, n1).p, m1, n1)});
  const auto m2 = measure({-1, 1}), n2 = measure({-2, 0, 2});
  out.push_back({"2x3", project_to_martingale(independent_coupling(m2, n2).p, m2, n2)});
  std::mt19937_64 rng(55);
  for (int k = 0; k < 2; ++k) {
    const auto inst = testing::random_instance(rng, 3, 4);
    out.push_back({"random 3x4 #" + std::to_string(k + 1), {inst.p, inst.mu.atoms(), inst.nu.atoms()}});
  }
  return out;
}

void oracle_agreement() {
  const auto rap = brownian_rap();
  const auto quad = make_quadrature(rap);
  bool pass = true;
  std::string detail;
  int id = 0;
  for (const auto& [name, c] : mc_instances()) {
    const double k = audit.evaluate(c, rap, quad, name).value;
    SimulationOptions opt;
    opt.n_paths = 100'000;
    opt.n_steps = 200;
    opt.seed = 900 + id++;
    const auto sim = simulate_fam(c, rap, opt);
    const double zk = (sim.k_estimate.value - k) / sim.k_estimate.std_error;
    const double zv = (sim.w_terminal_var.value - (rap.T1 - rap.T0)) / sim.w_terminal_var.std_error;
    const double zx = (sim.x1_w_terminal.value - k) / sim.x1_w_terminal.std_error;
    pass &= std::abs(zk) <= 3 && std::abs(zv) <= 3 && std::abs(zx) <= 3;
    detail += fmt("%s: K %.5f mc %.5f (z %.2f), VarW z %.2f, E[X1 W] z %.2f; ", name.c_str(), k,
                  sim.k_estimate.value, zk, zv, zx);
  }
  // Refinement study for the left-point Euler innovations: the Var W(T1)
  // bias should shrink as the grid is refined (reported, not scored).
  detail += "Var W(T1) on forced 2x2 by steps:";
  for (int steps : {100, 200, 400, 800}) {
    SimulationOptions opt;
    opt.n_paths = 100'000;
    opt.n_steps = steps;
    opt.seed = 950;
    const auto sim = simulate_fam(mc_instances().front().c, rap, opt);
    detail += fmt(" %d: %.4f +- %.4f", steps, sim.w_terminal_var.value, sim.w_terminal_var.std_error);
  }
  report(5, pass, "quadrature vs Monte Carlo (1e5 paths, 200 steps)", detail);
}

// 6 -------------------------------------------------------------------------
// Maximum of K over {anchor + s1 d1 + s2 d2 >= 0} by grid search with zooming;
// K is concave on the polytope, so the zoom cannot get stuck at a local max.
double brute_force_max(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, const RapConfig& rap,
                       const QuadratureSpec& quad, double& resolution) {
  const auto basis = polytope_basis(mu, nu);
  const Eigen::Index dim = static_cast<Eigen::Index>(basis.directions.size());
  auto value = [&](const Eigen::VectorXd& s, double& out) {
    Eigen::MatrixXd p = basis.anchor.p;
    for (Eigen::Index k = 0; k < dim; ++k) p += s(k) * basis.directions[k];
    if (p.minCoeff() < 0.0) return false;
    out = audit.evaluate({p, mu.atoms(), nu.atoms()}, rap, quad, "brute force grid").value;
    return true;
  };
  Eigen::VectorXd center = Eigen::VectorXd::Zero(dim);
  double half = diameter_bound(mu, nu), best = -INFINITY;
  const int n = dim == 1 ? 200 : 40;
  while (true) {
    const double step = 2 * half / n;
    Eigen::VectorXd best_s = center;
    std::vector<int> idx(dim, 0);
    for (bool more = true; more;) {
      Eigen::VectorXd s(dim);
      for (Eigen::Index k = 0; k < dim; ++k) s(k) = center(k) - half + step * idx[k];
      double v;
      if (value(s, v) && v > best) best = v, best_s = s;
      more = false;
      for (Eigen::Index k = 0; k < dim && !more; ++k) {
        if (++idx[k] <= n) more = true;
        else idx[k] = 0;
      }
    }
    center = best_s;
    resolution = step;
    if (step < 1e-6) break;
    half = 4 * step;
  }
  return best;
}

void epsilon_audit() {
  const auto t0 = Clock::now();
  const auto rap = brownian_rap();
  const auto quad = make_quadrature(rap);
  const auto mu = measure({-1, 1}), nu = measure({-3, -1, 1, 3});
  const auto dim = polytope_basis(mu, nu).directions.size();
  double res = 0.0;
  const double best = brute_force_max(mu, nu, rap, quad, res);
  bool pass = true;
  std::string detail = fmt("polytope dimension %zu, brute-force max %.8f (grid %.1e); ", dim, best, res);
  for (double eps : {0.05, 0.01}) {
    const auto r = solve(mu, nu, rap, quad, eps);
    audit.evaluate(r.coupling_avg, rap, quad, "2x4 solve");
    const double gap = best - r.value;
    pass &= gap <= eps + 1e-4;
    detail += fmt("eps %.2f: value %.8f gap %.3e theta %lld%s; ", eps, r.value, gap,
                  static_cast<long long>(r.params_used.theta), r.warnings.empty() ? "" : " (capped)");
  }

  // Distinct random starts on a one-dimensional polytope reach the same coupling.
  // K is flat near its maximizer, so averages only certify eps-optimality; the
  // best iterate is the estimate of the maximizer that is compared.
  const auto mu1 = measure({-1, 1}), nu1 = measure({-2, 0, 2});
  const MartingaleProjector proj(mu1, nu1);
  const Coupling anchor = project_to_martingale(independent_coupling(mu1, nu1).p, mu1, nu1);
  std::vector<Eigen::MatrixXd> best_ends, avg_ends;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    SolverOverrides ov;
    ov.max_theta_cap = 60000;
    ov.start = random_feasible_coupling(proj, anchor, 0.15, seed).p;
    const auto r = solve(mu1, nu1, rap, quad, 0.2, ov, seed);
    audit.evaluate(r.coupling_avg, rap, quad, "2x3 solve");
    audit.evaluate(r.best_iterate, rap, quad, "2x3 solve");
    best_ends.push_back(r.best_iterate.p);
    avg_ends.push_back(r.coupling_avg.p);
  }
  const auto spread = [](const std::vector<Eigen::MatrixXd>& ends) {
    double out = 0.0;
    for (std::size_t a = 0; a < ends.size(); ++a)
      for (std::size_t b = a + 1; b < ends.size(); ++b) out = std::max(out, (ends[a] - ends[b]).norm());
    return out;
  };
  const double best_spread = spread(best_ends);
  pass &= best_spread <= 1e-3;
  detail += fmt("2x3 distinct starts best-iterate spread %.3e (tol 1e-3), average spread %.3e; %.1f s",
                best_spread, spread(avg_ends), seconds_since(t0));
  report(6, pass, "epsilon guarantee audit", detail);
}

// 8 -------------------------------------------------------------------------
// Cumulative quantile gap Q at the union of quantile breakpoints, computed
// from sorted atoms directly.

std::vector<std::pair<double, double>> quantile_gap_knots(const EmpiricalMeasure& mu,
                                                          const EmpiricalMeasure& nu) {
  auto breaks = [](const EmpiricalMeasure& m) {
    std::vector<double> b;
    double s = 0.0;
    for (Eigen::Index i = 0; i < m.size(); ++i) b.push_back(s += m.weights()(i));
    return b;
  };
  std::vector<double> ts = breaks(mu);
  for (double t : breaks(nu)) ts.push_back(t);
  ts.push_back(0.0);
  std::sort(ts.begin(), ts.end());
  ts.erase(std::unique(ts.begin(), ts.end(), [](double a, double b) { return std::abs(a - b) < 1e-15; }),
           ts.end());
  ts.back() = 1.0;
  auto q = [](const EmpiricalMeasure& m, double u) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < m.size(); ++i)
      if ((s += m.weights()(i)) >= u - 1e-15) return m.atoms()(i);
    return m.atoms()(m.size() - 1);
  };
  std::vector<std::pair<double, double>> out{{0.0, 0.0}};
  double acc = 0.0;
  for (std::size_t k = 1; k < ts.size(); ++k) {
    const double mid = 0.5 * (ts[k - 1] + ts[k]);
    acc += (q(mu, mid) - q(nu, mid)) * (ts[k] - ts[k - 1]);
    out.push_back({ts[k], acc});
  }
  return out;
}

// Integral of |f| for f the slope of the greatest convex minorant of Q:
// the minorant's values at Q's knots come from the chord formula, and its
// total variation is exact on those knots.
double envelope_variation(const std::vector<std::pair<double, double>>& q) {
  const std::size_t n = q.size();
  std::vector<double> env(n);
  for (std::size_t k = 0; k < n; ++k) {
    env[k] = q[k].second;
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = k + 1; j < n; ++j) {
        const double s = (q[k].first - q[i].first) / (q[j].first - q[i].first);
        env[k] = std::min(env[k], (1 - s) * q[i].second + s * q[j].second);
      }
  }
  double tv = 0.0;
  for (std::size_t k = 1; k < n; ++k) tv += std::abs(env[k] - env[k - 1]);
  return tv;
}

void convexify_correctness() {
  bool pass = true;
  std::string detail;
  std::mt19937_64 rng(8);
  int unchanged = 0;
  for (int rep = 0; rep < 50; ++rep) {
    const auto inst = testing::random_instance(rng, 1 + rep % 4, 2 + rep % 5);
    const auto r = convexify_pair(inst.mu, inst.nu);
    unchanged += r.cost == 0.0 && r.mu_tilde.atoms() == inst.mu.atoms() &&
                 r.mu_tilde.weights() == inst.mu.weights() && r.nu_tilde.atoms() == inst.nu.atoms() &&
                 r.nu_tilde.weights() == inst.nu.weights();
  }
  pass &= unchanged == 50;
  detail += fmt("ordered pairs unchanged %d/50; ", unchanged);

  const auto w = convexify_pair(measure({-1, 1}), measure({0}), 2, 2);
  const bool worked = std::abs(w.cost - 1) <= 1e-12 && w.mu_tilde.size() == 2 && w.nu_tilde.size() == 2 &&
                      std::abs(w.mu_tilde.atoms()(0) + 0.5) <= 1e-12 &&
                      std::abs(w.mu_tilde.atoms()(1) - 0.5) <= 1e-12 &&
                      (w.mu_tilde.atoms() - w.nu_tilde.atoms()).norm() <= 1e-12 &&
                      std::abs(w.mu_tilde.weights()(0) - 0.5) <= 1e-12 &&
                      std::abs(w.nu_tilde.weights()(0) - 0.5) <= 1e-12;
  pass &= worked;
  detail += fmt("worked example cost %.12f %s; ", w.cost, worked ? "ok" : "wrong");

  std::uniform_real_distribution<double> u(-1, 1), wt(0.1, 1);
  auto random_measure = [&](int n, double scale) {
    std::vector<double> a(n), ws(n);
    for (int k = 0; k < n; ++k) a[k] = scale * u(rng), ws[k] = wt(rng);
    return measure(a, ws);
  };
  int tried = 0, ordered = 0;
  double worst = 0.0;
  while (tried < 200) {
    const auto mu = random_measure(1 + tried % 6, 2.0);
    const auto nu = random_measure(1 + (tried / 6) % 5, 1.0 + tried % 3);
    if (convex_order_check(mu, nu).ordered) continue;
    const double alpha = tried % 2 ? 2.0 : 3.0, beta = alpha / (alpha - 1);
    const auto r = convexify_pair(mu, nu, alpha, beta);
    ++tried;
    ordered += convex_order_check(r.mu_tilde, r.nu_tilde).ordered;
    const double integral = envelope_variation(quantile_gap_knots(mu, nu));
    worst = std::max({worst, std::abs(alpha * w1_distance(mu, r.mu_tilde) - integral),
                      std::abs(beta * w1_distance(nu, r.nu_tilde) - integral),
                      std::abs(r.cost - integral)});
  }
  pass &= ordered == 200 && worst <= 1e-9;
  detail += fmt("random non-ordered pairs ordered after repair %d/200, worst cost identity error %.2e (tol 1e-9)",
                ordered, worst);
  report(8, pass, "convexify", detail);
}

// 9 -------------------------------------------------------------------------
void projection() {
  std::mt19937_64 rng(99);
  std::normal_distribution<double> n01;
  double worst_oracle = 0.0, worst_idem = 0.0, worst_expand = -1e300;
  for (int rep = 0; rep < 20; ++rep) {
    const auto inst = testing::random_instance(rng, 3, 4);
    const MartingaleProjector proj(inst.mu, inst.nu);
    Eigen::MatrixXd a = inst.p, b = inst.p;
    for (Eigen::Index k = 0; k < a.size(); ++k) a.data()[k] += 0.3 * n01(rng), b.data()[k] += 0.3 * n01(rng);
    const auto pa = proj.project(a), pb = proj.project(b);
    worst_oracle = std::max(worst_oracle, (pa.coupling.p - testing::qp_projection(a, inst.mu, inst.nu)).norm());
    if (!pa.converged) worst_oracle = INFINITY;
    worst_idem = std::max(worst_idem, (proj.project(pa.coupling.p).coupling.p - pa.coupling.p).norm());
    worst_expand = std::max(worst_expand, (pa.coupling.p - pb.coupling.p).norm() - (a - b).norm());
  }
  report(9, worst_oracle <= 1e-7 && worst_idem <= 1e-9 && worst_expand <= 1e-12, "projection",
         fmt("QP oracle distance %.2e (tol 1e-7), idempotence %.2e, max(|Pa-Pb| - |a-b|) %.2e on 20 random 3x4",
             worst_oracle, worst_idem, worst_expand));
}

// 10 ------------------------------------------------------------------------
void martingale_checks() {
  const auto rap = brownian_rap();
  const auto mu = measure({-1, 1}), nu = measure({-2, 0, 2});
  const Coupling c = project_to_martingale(independent_coupling(mu, nu).p, mu, nu);
  SimulationOptions opt;
  opt.n_paths = 100'000;
  opt.n_steps = 200;
  opt.seed = 77;
  opt.keep_paths = true;
  const auto diag = martingale_diagnostics(simulate_fam(c, rap, opt).bundle);

  const auto mu2 = measure({-0.2, 0.2}), nu2 = measure({-0.5, -0.3, -0.1, 0.1, 0.3, 0.5});
  const Coupling close = project_to_martingale(independent_coupling(mu2, nu2).p, mu2, nu2);
  std::vector<double> pins;
  for (int steps : {50, 100, 200}) {
    SimulationOptions o;
    o.n_paths = 20'000;
    o.n_steps = steps;
    o.seed = 78;
    o.keep_paths = true;
    pins.push_back(martingale_diagnostics(simulate_fam(close, rap, o).bundle).final_pin_error);
  }
  const bool decreasing = pins[0] > pins[1] && pins[1] > pins[2];
  report(10, diag.max_z <= 3 && decreasing, "martingale diagnostics",
         fmt("%zu increment statistics, max |mean|/SE %.2f (tol 3); pinning error on 50/100/200 steps %.4e %.4e %.4e",
             diag.increments.size(), diag.max_z, pins[0], pins[1], pins[2]));
}

}  // namespace

int main() {
  const auto t0 = Clock::now();
  forced_coupling();
  brownian_reproduction();
  gradient_correctness();
  oracle_agreement();
  epsilon_audit();
  convexify_correctness();
  projection();
  martingale_checks();
  report(4, audit.worst_form_gap <= 1e-8, "objective equals its variance form",
         fmt("worst relative gap %.2e (tol 1e-8) over %d evaluated couplings (at %s)", audit.worst_form_gap,
             audit.evaluated, audit.worst_form_label.c_str()));
  report(7, audit.worst_bound_gap <= 1e-6, "Cauchy-Schwarz upper bound",
         fmt("max K - bound %.3e (tol 1e-6) over %d evaluated couplings (at %s)", audit.worst_bound_gap,
             audit.evaluated, audit.worst_bound_label.c_str()));
  std::printf("%d criteria failed, %.1f s total\n", failures, seconds_since(t0));
  return failures;
}
