#include "ibmot/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>

#include <json.hpp>

#include "ibmot/convexify.hpp"
#include "ibmot/coupling.hpp"
#include "ibmot/coupling_io.hpp"
#include "ibmot/errors.hpp"
#include "ibmot/measures.hpp"
#include "ibmot/measures_io.hpp"
#include "ibmot/objective.hpp"
#include "ibmot/optimizer.hpp"
#include "ibmot/simulate.hpp"

namespace ibmot::cli {

using nlohmann::json;

namespace {

void require_file(const std::string& path, const char* what) {
  if (path.empty()) throw InvalidArgument(std::string("missing ") + what + " path");
  if (!std::filesystem::exists(path)) throw InvalidArgument(std::string(what) + " file not found: " + path);
}

void validate(const RunConfig& c) {
  if (!(c.t0 < c.t1)) throw InvalidArgument("need t0 < t1");
  if (!(c.epsilon > 0.0)) throw InvalidArgument("epsilon must be positive");
  if (c.n_noise < 1 || c.n_time < 2) throw InvalidArgument("quadrature sizes too small");
  if (c.discretize && *c.discretize < 1) throw InvalidArgument("--discretize must be positive");
}

EmpiricalMeasure load(const std::string& path, const RunConfig& c, const char* what) {
  require_file(path, what);
  EmpiricalMeasure m = load_measure(path);
  if (c.discretize && m.size() > *c.discretize) m = discretize(m, *c.discretize);
  return m;
}

EmpiricalMeasure row_marginal(const Coupling& c) {
  return make_measure(c.x, c.p.rowwise().sum().eval());
}

EmpiricalMeasure col_marginal(const Coupling& c) {
  return make_measure(c.y, c.p.colwise().sum().transpose().eval());
}

json residuals_json(const CouplingResiduals& r) {
  return {{"negativity", r.negativity},
          {"row_marginal", r.row_marginal},
          {"col_marginal", r.col_marginal},
          {"martingale", r.martingale}};
}

json order_json(const ConvexOrderReport& r) {
  return {{"ordered", r.ordered},
          {"mean_gap", r.mean_gap},
          {"min_Q", r.min_Q},
          {"argmin_Q", std::vector<double>(r.argmin_Q.begin(), r.argmin_Q.end())},
          {"Q_at_1", r.Q_at_1}};
}

json params_json(const SolverParams& p) {
  return {{"epsilon", p.epsilon},         {"grad_bound", p.grad_bound},
          {"delta", p.delta},             {"lambda", p.lambda},
          {"theta", p.theta},             {"theta_required", p.theta_required},
          {"max_theta_cap", p.max_theta_cap}, {"seed", p.seed},
          {"gradient_norm", p.norm == GradientNorm::kTangent ? "tangent" : "full"}};
}

// Shared front half of solve: load, optionally repair, check order.
struct Marginals {
  EmpiricalMeasure mu, nu;
  json repair = nullptr;
};

Marginals load_pair(const RunConfig& c) {
  Marginals m{load(c.mu_path, c, "mu"), load(c.nu_path, c, "nu")};
  const ConvexOrderReport order = convex_order_check(m.mu, m.nu);
  if (order.ordered) return m;
  if (!c.repair) throw Infeasible("marginals are not in convex order (repair disabled)");
  const ConvexifyResult r = convexify_pair(m.mu, m.nu, c.alpha, c.beta);
  m.repair = {{"cost", r.cost}, {"alpha", r.alpha}, {"beta", r.beta}};
  m.mu = r.mu_tilde;
  m.nu = r.nu_tilde;
  return m;
}

json cmd_check(const RunConfig& c) {
  const EmpiricalMeasure mu = load(c.mu_path, c, "mu");
  const EmpiricalMeasure nu = load(c.nu_path, c, "nu");
  json j = order_json(convex_order_check(mu, nu));
  j["w1"] = w1_distance(mu, nu);
  j["mu_size"] = mu.size();
  j["nu_size"] = nu.size();
  return j;
}

json cmd_convexify(const RunConfig& c) {
  const EmpiricalMeasure mu = load(c.mu_path, c, "mu");
  const EmpiricalMeasure nu = load(c.nu_path, c, "nu");
  const ConvexifyResult r = convexify_pair(mu, nu, c.alpha, c.beta);
  if (!c.out_mu_path.empty()) save_measure(c.out_mu_path, r.mu_tilde);
  if (!c.out_nu_path.empty()) save_measure(c.out_nu_path, r.nu_tilde);
  return {{"cost", r.cost},
          {"alpha", r.alpha},
          {"beta", r.beta},
          {"mu_tilde", measure_to_json(r.mu_tilde)},
          {"nu_tilde", measure_to_json(r.nu_tilde)},
          {"ordered_after", convex_order_check(r.mu_tilde, r.nu_tilde).ordered}};
}

json cmd_solve(const RunConfig& c) {
  const Marginals m = load_pair(c);
  const RapConfig rap = brownian_rap(c.t0, c.t1);
  const QuadratureSpec quad = make_quadrature(rap, c.n_noise, c.n_time);
  SolverOverrides ov;
  if (c.max_iters) ov.max_theta_cap = *c.max_iters;
  const SolveResult r = solve(m.mu, m.nu, rap, quad, c.epsilon, ov, c.seed);
  if (!c.out_path.empty()) save_coupling_csv(c.out_path, r.coupling_avg);

  json history = json::array();
  for (const IterationRecord& h : r.history)
    history.push_back({h.value, h.grad_norm, h.projection_residual});
  return {{"value", r.value},
          {"best_iterate_value", r.best_iterate_value},
          {"bound", objective_upper_bound(rap, m.mu, m.nu)},
          {"params", params_json(r.params_used)},
          {"residuals", residuals_json(validate_coupling(r.coupling_avg.p, m.mu, m.nu))},
          {"repair", m.repair},
          {"warnings", r.warnings},
          {"history_columns", {"value", "grad_norm", "projection_residual"}},
          {"history", history},
          {"coupling", coupling_to_json(r.coupling_avg)}};
}

// Coupling from --coupling, or the projected independent coupling of the
// marginals.
Coupling coupling_for(const RunConfig& c) {
  if (!c.coupling_path.empty()) {
    require_file(c.coupling_path, "coupling");
    return load_coupling_csv(c.coupling_path);
  }
  const Marginals m = load_pair(c);
  return project_to_martingale(independent_coupling(m.mu, m.nu).p, m.mu, m.nu);
}

json cmd_evaluate(const RunConfig& c) {
  const Coupling cp = coupling_for(c);
  const RapConfig rap = brownian_rap(c.t0, c.t1);
  const QuadratureSpec quad = make_quadrature(rap, c.n_noise, c.n_time);
  const ObjectiveEvaluation ev = evaluate_objective(cp, rap, quad);
  const EmpiricalMeasure mu = row_marginal(cp), nu = col_marginal(cp);
  json nodes = json::array();
  for (std::size_t k = 0; k < ev.slices.size(); ++k) {
    const TimeSlice& s = ev.slices[k];
    nodes.push_back({{"t", s.t},
                     {"quad_weight", quad.time.weights(static_cast<Eigen::Index>(k))},
                     {"w", s.weight},
                     {"squared_error", s.squared_error},
                     {"expected_variance", s.expected_variance}});
  }
  return {{"K_I", ev.value},
          {"variance_form", ev.variance_form},
          {"bound", objective_upper_bound(rap, mu, nu)},
          {"gradient_norm", ev.gradient.norm()},
          {"residuals", residuals_json(validate_coupling(cp.p, mu, nu))},
          {"n_noise", quad.n_noise},
          {"n_time", c.n_time},
          {"nodes", nodes}};
}

json estimate_json(const McEstimate& e) {
  return {{"value", e.value}, {"std_error", e.std_error}, {"n_paths", e.n_paths},
          {"grid_size", e.grid_size}};
}

json cmd_simulate(const RunConfig& c) {
  const Coupling cp = coupling_for(c);
  const RapConfig rap = brownian_rap(c.t0, c.t1);
  SimulationOptions opt;
  opt.n_paths = c.n_paths;
  opt.n_steps = c.grid;
  opt.seed = c.seed;
  opt.keep_paths = true;
  const SimulationResult r = simulate_fam(cp, rap, opt);
  const MartingaleReport diag = martingale_diagnostics(r.bundle);

  if (!c.out_path.empty()) {
    std::ofstream f(c.out_path);
    if (!f) throw InvalidArgument("cannot write " + c.out_path);
    f << std::setprecision(17) << "path_id,t,I,M,W\n";
    const Eigen::VectorXd& grid = r.bundle.grid;
    for (std::size_t id = 0; id < r.bundle.paths.size(); ++id) {
      const SimPath& p = r.bundle.paths[id];
      for (Eigen::Index k = 0; k < grid.size(); ++k)
        f << id << ',' << grid(k) << ',' << p.I(k) << ',' << p.M(k) << ','
          << r.bundle.W(static_cast<Eigen::Index>(id), k) << '\n';
    }
  }

  json inc = json::array();
  for (const IncrementStat& s : diag.increments)
    inc.push_back({{"s", r.bundle.grid(s.s)}, {"t", r.bundle.grid(s.t)},
                   {"h", s.weighted ? "id" : "1"}, {"mean", s.mean}, {"std_error", s.std_error}});
  json level = json::array();
  for (std::size_t k = 0; k < diag.level.size(); ++k)
    level.push_back({{"t", r.bundle.grid(diag.level_index[k])}, {"mean", diag.level[k].value},
                     {"std_error", diag.level[k].std_error}});
  return {{"K_I_mc", estimate_json(r.k_estimate)},
          {"tail_bias_bound", r.tail_bias_bound},
          {"W_T1_mean", estimate_json(r.w_terminal_mean)},
          {"W_T1_var", estimate_json(r.w_terminal_var)},
          {"X1_W_T1", estimate_json(r.x1_w_terminal)},
          {"martingale",
           {{"increments", inc},
            {"levels", level},
            {"max_z", diag.max_z},
            {"initial_pin_error", diag.initial_pin_error},
            {"final_pin_error", diag.final_pin_error}}},
          {"seed", c.seed}};
}

void emit(const json& report, const RunConfig& c, std::ostream& out) {
  if (c.report_path.empty()) {
    out << report.dump(2) << '\n';
    return;
  }
  std::ofstream f(c.report_path);
  if (!f) throw InvalidArgument("cannot write " + c.report_path);
  f << report.dump(2) << '\n';
}

int fail(std::ostream& err, int code, const char* kind, const std::string& msg) {
  json e = {{"version", kVersion}, {"error", {{"kind", kind}, {"message", msg}, {"exit_code", code}}}};
  err << e.dump() << '\n';
  return code;
}

}  // namespace

int run(const RunConfig& config, std::ostream& out, std::ostream& err) {
  try {
    validate(config);
    json body;
    if (config.command == "check") body = cmd_check(config);
    else if (config.command == "convexify") body = cmd_convexify(config);
    else if (config.command == "solve") body = cmd_solve(config);
    else if (config.command == "evaluate") body = cmd_evaluate(config);
    else if (config.command == "simulate") body = cmd_simulate(config);
    else throw InvalidArgument("unknown command: " + config.command);

    json report = {{"version", kVersion}, {"command", config.command}};
    report.update(body);
    emit(report, config, out);
    return kOk;
  } catch (const Infeasible& e) {
    return fail(err, kInfeasible, "infeasible", e.what());
  } catch (const NumericalError& e) {
    return fail(err, kNumerical, "numerical", e.what());
  } catch (const ParseError& e) {
    return fail(err, kInvalidInput, "parse", e.what());
  } catch (const nlohmann::json::exception& e) {
    return fail(err, kInvalidInput, "parse", e.what());
  } catch (const std::invalid_argument& e) {
    return fail(err, kInvalidInput, "invalid_input", e.what());
  } catch (const std::exception& e) {
    return fail(err, kFailure, "failure", e.what());
  }
}

}  // namespace ibmot::cli
