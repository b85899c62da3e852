// Command-line front end: validate, bracket, simulate, compare.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "staged_reduction/config.hpp"
#include "staged_reduction/disk.hpp"
#include "staged_reduction/integrator.hpp"
#include "staged_reduction/local_bundle.hpp"
#include "staged_reduction/reduced_dynamics.hpp"
#include "staged_reduction/stages.hpp"

using namespace sred;
using config::RunConfig;

namespace {

constexpr int kPass = 0;
constexpr int kDomainFailure = 1;
constexpr int kUsage = 2;

struct Options {
  std::string config_path;
  std::string scenario;
  std::optional<double> h, t_end;
  std::string out;
  bool oracle = false;
  std::vector<double> u, v;
};

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string fmt(const Vector& v) {
  std::string s = "[";
  for (Eigen::Index k = 0; k < v.size(); ++k) s += (k ? ", " : "") + fmt(v[k]);
  return s + "]";
}

RunConfig resolve(const Options& o) {
  RunConfig c;
  if (!o.config_path.empty()) {
    c = config::load_config(o.config_path);
    if (!o.scenario.empty() && o.scenario != c.scenario)
      throw ParseError("--scenario " + o.scenario + " conflicts with scenario '" + c.scenario + "' in " + o.config_path);
  } else {
    c = config::defaults_for(o.scenario.empty() ? "generic" : o.scenario);
  }
  if (o.h) c.h = *o.h;
  if (o.t_end) c.t_end = *o.t_end;
  if (!o.out.empty()) c.output = o.out;
  config::check_consistency(c);
  return c;
}

/// Output stream: the configured file or stdout.
struct Sink {
  std::unique_ptr<std::ofstream> file;
  std::ostream* os = &std::cout;

  explicit Sink(const std::string& path) {
    if (path.empty()) return;
    file = std::make_unique<std::ofstream>(path, std::ios::binary);
    if (!*file) throw ParseError("cannot open output file " + path);
    os = file.get();
  }
};

StagedStructure staged_from(const RunConfig& c) {
  const int n = c.algebra->dim();
  return StagedStructure(*c.algebra, StageChain(c.blocks), c.metric ? Metric(*c.metric) : Metric::identity(n));
}

LocalSystem local_system_for(const RunConfig& c) {
  if (c.scenario == "disk") return disk::build_disk_system(c.disk.params);
  return decoupled_test_system();
}

/// Max |bracket_by_stages - bracket| over all basis pairs.
double equivalence_sweep(const StagedStructure& st) {
  const auto& alg = st.algebra();
  double worst = 0.0;
  for (int i = 0; i < st.dim(); ++i)
    for (int j = 0; j < st.dim(); ++j) {
      const Vector a = alg.basis_vector(i), b = alg.basis_vector(j);
      worst = std::max(worst, (st.bracket_by_stages(a, b) - alg.bracket(a, b)).cwiseAbs().maxCoeff());
    }
  return worst;
}

int cmd_validate(const Options& o) {
  const RunConfig c = resolve(o);
  constexpr double tol = 1e-12;
  bool ok = true;
  if (c.scenario == "disk" || c.scenario == "decoupled-test") {
    const LocalSystem sys = local_system_for(c);
    const double sweep = equivalence_sweep(sys.staged);
    std::cout << "scenario=" << c.scenario << "\n";
    std::cout << "bracket_by_stages_residual=" << fmt(sweep) << "\n";
    ok = sweep <= tol;
  } else {
    const LieAlgebra& alg = *c.algebra;
    const auto ar = validate(alg, tol);
    std::cout << "antisymmetry_residual=" << fmt(ar.antisymmetry_residual) << "\n";
    std::cout << "jacobi_residual=" << fmt(ar.jacobi_residual) << "\n";
    ok = ar.passed;
    const auto cr = validate_chain(alg, StageChain(c.blocks), tol);
    std::cout << "ideal_residual=" << fmt(cr.ideal_residual) << "\n";
    if (!cr.passed) std::cerr << "error: blocks do not form a chain of ideals\n";
    ok = ok && cr.passed;
    if (ok) {
      const double sweep = equivalence_sweep(staged_from(c));
      std::cout << "bracket_by_stages_residual=" << fmt(sweep) << "\n";
      ok = sweep <= tol;
    }
  }
  std::cout << "status=" << (ok ? "pass" : "fail") << "\n";
  return ok ? kPass : kDomainFailure;
}

int cmd_bracket(const Options& o) {
  const RunConfig c = resolve(o);
  if (!c.algebra) throw ParseError("bracket needs an algebra (generic or rigid-body configuration)");
  const StagedStructure st = staged_from(c);
  const auto n = static_cast<size_t>(st.dim());
  if (o.u.size() != n || o.v.size() != n)
    throw ParseError("--u and --v need " + std::to_string(n) + " comma-separated entries");
  const Vector u = Eigen::Map<const Vector>(o.u.data(), st.dim());
  const Vector v = Eigen::Map<const Vector>(o.v.data(), st.dim());
  const Vector direct = st.algebra().bracket(u, v);
  const Vector staged = st.bracket_by_stages(u, v);
  const Vector parts = st.decompose(staged);
  std::cout << "bracket=" << fmt(direct) << "\n";
  std::cout << "bracket_by_stages=" << fmt(staged) << "\n";
  for (int i = 0; i < st.chain().num_blocks(); ++i)
    std::cout << "stage_component_" << i << "=" << fmt(Vector(st.block(parts, i))) << "\n";
  const double res = (direct - staged).cwiseAbs().maxCoeff();
  std::cout << "residual=" << fmt(res) << "\n";
  return res <= 1e-12 ? kPass : kDomainFailure;
}

int report_abort(const Trajectory& tr) {
  if (tr.ok()) return kPass;
  std::cerr << "error: integration stopped (" << to_string(tr.status) << "): " << tr.message << "\n";
  return kDomainFailure;
}

int simulate_ep(const RunConfig& c, std::ostream& os) {
  if (!c.initial) throw ParseError(c.source + ": initial: missing initial velocity");
  const StagedStructure st = staged_from(c);
  const int n = st.dim();
  const QuadraticLagrangian lag(c.mass ? *c.mass : Matrix(Matrix::Identity(n, n)));
  const auto& names = st.algebra().basis_names();
  config::CsvWriter csv(os);
  std::vector<std::string> head = {"t"};
  for (const auto& s : names) head.push_back("v_" + s);
  for (const auto& s : names) head.push_back("beta_" + s);
  head.push_back("energy");
  csv.header(head);
  std::optional<ConstraintSubspace> S;
  Vector y0 = *c.initial;
  if (c.constraint_basis) {
    S = ConstraintSubspace::from_basis(*c.constraint_basis);
    if (S->residual(y0) > 1e-10)
      throw ConstraintViolation("initial velocity is not in the constraint subspace (residual " +
                                fmt(S->residual(y0)) + ")");
    y0 = S->coordinates(y0);
  }
  const Trajectory tr =
      S ? integrate_rk4([&](double, const Vector& y) { return edp_rhs(st, lag, *S, y); }, y0, c.t_end, c.h)
        : integrate_rk4([&](double, const Vector& y) { return ep_rhs(st, lag, y); }, y0, c.t_end, c.h);
  for (size_t k = 0; k < tr.states.size(); ++k) {
    const Vector v = S ? Vector(S->basis() * tr.states[k]) : tr.states[k];
    std::vector<double> row = {tr.times[k]};
    for (Eigen::Index i = 0; i < n; ++i) row.push_back(v[i]);
    const Vector beta = st.staged_covector(lag.fiber_derivative(v));
    for (Eigen::Index i = 0; i < n; ++i) row.push_back(beta[i]);
    row.push_back(lag.value(v));
    csv.row(row);
  }
  return report_abort(tr);
}

int simulate_decoupled(const RunConfig& c, std::ostream& os) {
  const LocalSystem sys = decoupled_test_system();
  if (!c.initial || c.initial->size() != 7)
    throw ParseError(c.source + ": initial: decoupled-test needs 7 entries (x, xdot, xi)");
  config::CsvWriter csv(os);
  std::vector<std::string> head = {"t", "x_0", "x_1", "xdot_0", "xdot_1"};
  for (const auto& s : sys.staged.algebra().basis_names()) head.push_back("xi_" + s);
  head.push_back("energy");
  head.push_back("constraint_residual");
  csv.header(head);
  const Trajectory tr =
      integrate_rk4([&](double, const Vector& y) { return ldp_state_rhs(sys, y); }, *c.initial, c.t_end, c.h);
  for (size_t k = 0; k < tr.states.size(); ++k) {
    std::vector<double> row = {tr.times[k]};
    for (Eigen::Index i = 0; i < 7; ++i) row.push_back(tr.states[k][i]);
    row.push_back(local_energy(sys, tr.states[k]));
    row.push_back(0.0);
    csv.row(row);
  }
  return report_abort(tr);
}

Vector disk_initial(const RunConfig& c) {
  const auto& d = c.disk;
  return disk::make_reduced_state(d.params, d.theta, d.phi, d.thetadot, d.phidot, d.eta01);
}

Vector disk_full_initial(const RunConfig& c) {
  const auto& d = c.disk;
  return disk::make_full_state(d.params, d.theta, d.phi, 0.0, Eigen::Vector2d::Zero(), d.thetadot, d.phidot, d.eta01);
}

int simulate_disk(const RunConfig& c, bool oracle, std::ostream& os) {
  const auto& p = c.disk.params;
  p.validate();
  config::CsvWriter csv(os);
  if (!oracle) {
    csv.header({"t", "x_theta", "x_phi", "xdot_theta", "xdot_phi", "xi_psi", "xi_x1", "xi_x2", "energy",
                "constraint_residual"});
    const Trajectory tr = disk::simulate_explicit(p, disk_initial(c), c.t_end, c.h);
    for (size_t k = 0; k < tr.states.size(); ++k) {
      std::vector<double> row = {tr.times[k]};
      for (Eigen::Index i = 0; i < disk::kReducedSize; ++i) row.push_back(tr.states[k][i]);
      row.push_back(disk::disk_energy(p, tr.states[k]));
      row.push_back(disk::disk_constraint_residual(p, tr.states[k]));
      csv.row(row);
    }
    return report_abort(tr);
  }
  csv.header({"t", "q_theta", "q_phi", "q_psi", "q_x1", "q_x2", "qdot_theta", "qdot_phi", "qdot_psi", "qdot_x1",
              "qdot_x2", "lambda_0", "lambda_1", "energy", "constraint_residual"});
  const Trajectory tr = disk::simulate_oracle(p, disk_full_initial(c), c.t_end, c.h);
  for (size_t k = 0; k < tr.states.size(); ++k) {
    const Vector& y = tr.states[k];
    std::vector<double> row = {tr.times[k]};
    for (Eigen::Index i = 0; i < disk::kFullSize; ++i) row.push_back(y[i]);
    const Vector lambda = disk::disk_full_oracle_rhs(p, y).lambda;
    row.push_back(lambda[0]);
    row.push_back(lambda[1]);
    row.push_back(disk::full_energy(p, y));
    row.push_back(disk::full_constraint_residual(p, y));
    csv.row(row);
  }
  return report_abort(tr);
}

int cmd_simulate(const Options& o) {
  const RunConfig c = resolve(o);
  if (o.oracle && c.scenario != "disk") {
    std::cerr << "error: scenario '" << c.scenario << "' has no oracle\n";
    return kDomainFailure;
  }
  Sink sink(c.output);
  if (c.scenario == "disk") return simulate_disk(c, o.oracle, *sink.os);
  if (c.scenario == "decoupled-test") return simulate_decoupled(c, *sink.os);
  return simulate_ep(c, *sink.os);
}

int cmd_compare(const Options& o) {
  const RunConfig c = resolve(o);
  if (c.scenario != "disk") {
    std::cerr << "error: scenario '" << c.scenario << "' has no oracle to compare against\n";
    return kDomainFailure;
  }
  const double oracle_h = c.oracle_h.value_or(c.h);
  if (oracle_h != c.h) {
    std::cerr << "error: reduced step h=" << fmt(c.h) << " and oracle step " << fmt(oracle_h)
              << " differ; compare needs matched steps\n";
    return kUsage;
  }
  const auto& p = c.disk.params;
  p.validate();
  const Trajectory red = disk::simulate_explicit(p, disk_initial(c), c.t_end, c.h);
  const Trajectory full = disk::simulate_oracle(p, disk_full_initial(c), c.t_end, c.h);
  const size_t n = std::min(red.states.size(), full.states.size());
  const double e0 = disk::disk_energy(p, red.states.front());
  double dev = 0, cres = 0, edrift = 0;
  for (size_t k = 0; k < n; ++k) {
    dev = std::max(dev, (red.states[k] - disk::project_full(full.states[k])).cwiseAbs().maxCoeff());
    cres = std::max({cres, disk::disk_constraint_residual(p, red.states[k]),
                     disk::full_constraint_residual(p, full.states[k])});
    edrift = std::max({edrift, std::abs(disk::disk_energy(p, red.states[k]) - e0) / std::abs(e0),
                       std::abs(disk::full_energy(p, full.states[k]) - e0) / std::abs(e0)});
  }
  const bool completed = red.ok() && full.ok();
  const bool pass = completed && dev <= c.tol.max_dev && cres <= c.tol.constraint && edrift <= c.tol.energy;
  config::json report = {{"scenario", c.scenario},
                         {"h", c.h},
                         {"t_end", c.t_end},
                         {"samples", n},
                         {"reduced_status", to_string(red.status)},
                         {"oracle_status", to_string(full.status)},
                         {"max_dev", dev},
                         {"max_constraint_residual", cres},
                         {"max_energy_drift", edrift},
                         {"pass", pass}};
  Sink sink(c.output);
  *sink.os << report.dump(2) << "\n";
  if (!completed) {
    report_abort(red);
    report_abort(full);
  }
  return pass ? kPass : kDomainFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Staged Lie algebra reduction: brackets, reduced dynamics and the Euler disk"};
  app.require_subcommand(1);
  Options o;
  app.set_help_flag("--help", "print this help and exit");
  auto common = [&](CLI::App* sub) {
    sub->set_help_flag("--help", "print this help and exit");
    sub->add_option("--config", o.config_path, "JSON configuration file (comments allowed)")->check(CLI::ExistingFile);
    sub->add_option("--scenario", o.scenario, "generic, rigid-body, disk or decoupled-test");
    sub->add_option("--h", o.h, "integrator step (s)");
    sub->add_option("--t-end", o.t_end, "final time (s)");
    sub->add_option("--out", o.out, "output path (default stdout)");
  };
  auto* validate_cmd = app.add_subcommand("validate", "check algebra axioms, chain of ideals and staged bracket");
  common(validate_cmd);
  auto* bracket_cmd = app.add_subcommand("bracket", "compare [u, v] with the bracket assembled by stages");
  common(bracket_cmd);
  bracket_cmd->add_option("--u", o.u, "first vector, comma separated")->delimiter(',')->required();
  bracket_cmd->add_option("--v", o.v, "second vector, comma separated")->delimiter(',')->required();
  auto* simulate_cmd = app.add_subcommand("simulate", "integrate a scenario and write a CSV trajectory");
  common(simulate_cmd);
  simulate_cmd->add_flag("--oracle", o.oracle, "run the full-space multiplier oracle instead (disk only)");
  auto* compare_cmd = app.add_subcommand("compare", "run reduced and oracle paths and report deviations");
  common(compare_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*validate_cmd) return cmd_validate(o);
    if (*bracket_cmd) return cmd_bracket(o);
    if (*simulate_cmd) return cmd_simulate(o);
    if (*compare_cmd) return cmd_compare(o);
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDomainFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDomainFailure;
  }
  return kUsage;
}
