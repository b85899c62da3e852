// Acceptance run: one PASS/FAIL line per criterion.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "staged_reduction/algebras.hpp"
#include "staged_reduction/disk.hpp"
#include "staged_reduction/integrator.hpp"
#include "staged_reduction/local_bundle.hpp"
#include "staged_reduction/reduced_dynamics.hpp"
#include "staged_reduction/stages.hpp"
#include "test_support.hpp"

using namespace sred;
using sred::testing::random_spd;
using sred::testing::random_vector;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

double max_abs(const Vector& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct Case {
  LieAlgebra alg;
  std::vector<int> blocks;
};

/// Max |f(S, e_i, e_j)| over basis pairs for an identity and a random SPD metric.
double sweep(const Case& c, std::mt19937& rng, const std::function<Vector(const StagedStructure&, const Vector&, const Vector&)>& f) {
  const int n = c.alg.dim();
  double worst = 0.0;
  for (const Metric& m : {Metric::identity(n), Metric(random_spd(rng, n)), Metric(random_spd(rng, n))}) {
    const StagedStructure st(c.alg, StageChain(c.blocks), m);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) worst = std::max(worst, max_abs(f(st, c.alg.basis_vector(i), c.alg.basis_vector(j))));
  }
  return worst;
}

Outcome criterion1() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937 rng(101);
  const std::vector<Case> cases = {{algebras::heisenberg(), {1, 1, 1}},
                                   {algebras::heisenberg(), {1, 2}},
                                   {algebras::se2(), {1, 2}},
                                   {algebras::strictly_upper_triangular(4), {3, 2, 1}}};
  double worst = 0.0;
  for (const auto& c : cases)
    worst = std::max(worst, sweep(c, rng, [&](const StagedStructure& st, const Vector& a, const Vector& b) {
                       return Vector(st.bracket_by_stages(a, b) - st.algebra().bracket(a, b));
                     }));
  const double secs = seconds_since(t0);
  return {worst <= 1e-12 && secs < 1.0, "max residual " + num(worst) + ", " + num(secs) + " s"};
}

Outcome criterion2() {
  std::mt19937 rng(102);
  double two = 0.0, three = 0.0;
  for (const Case& c : {Case{algebras::heisenberg(), {1, 2}}, Case{algebras::se2(), {1, 2}},
                        Case{algebras::strictly_upper_triangular(4), {3, 3}}})
    two = std::max(two, sweep(c, rng, [](const StagedStructure& st, const Vector& a, const Vector& b) {
                     return Vector(expand_two_stage(st, a, b) - st.bracket_by_stages(a, b));
                   }));
  for (const Case& c : {Case{algebras::heisenberg(), {1, 1, 1}}, Case{algebras::strictly_upper_triangular(4), {3, 2, 1}}})
    three = std::max(three, sweep(c, rng, [](const StagedStructure& st, const Vector& a, const Vector& b) {
                       return Vector(expand_three_stage(st, a, b) - st.bracket_by_stages(a, b));
                     }));
  return {two <= 1e-12 && three <= 1e-12, "two-stage " + num(two) + ", three-stage " + num(three)};
}

Outcome criterion3() {
  const auto t0 = std::chrono::steady_clock::now();
  const StagedStructure st(algebras::so3(), StageChain({3}), Metric::identity(3));
  const auto lag = QuadraticLagrangian::diagonal(Vector(Eigen::Vector3d(1, 2, 3)));
  const auto tr = integrate_rk4([&](double, const Vector& v) { return ep_rhs(st, lag, v); },
                                Vector(Eigen::Vector3d(1.0, 0.1, 0.5)), 10.0, 1e-3);
  const double e0 = lag.value(tr.states.front()), m0 = lag.fiber_derivative(tr.states.front()).norm();
  double de = 0, dm = 0;
  for (const auto& v : tr.states) {
    de = std::max(de, std::abs(lag.value(v) - e0) / e0);
    dm = std::max(dm, std::abs(lag.fiber_derivative(v).norm() - m0) / m0);
  }
  double steady = 0;
  for (int k = 0; k < 3; ++k) steady = std::max(steady, max_abs(ep_rhs(st, lag, Vector(2.5 * Vector::Unit(3, k)))));
  const double secs = seconds_since(t0);
  return {tr.ok() && de <= 1e-8 && dm <= 1e-8 && steady <= 1e-12 && secs < 5.0,
          "energy drift " + num(de) + ", momentum drift " + num(dm) + ", steady |vdot| " + num(steady) + ", " +
              num(secs) + " s"};
}

Outcome criterion4() {
  std::mt19937 rng(104);
  const auto alg = algebras::direct_sum(algebras::so3(), algebras::abelian(2));
  const StagedStructure st(alg, StageChain({3, 2}), Metric::identity(5));
  Matrix mass = Matrix::Zero(5, 5);
  mass.topLeftCorner(3, 3) = Vector(Eigen::Vector3d(1, 2, 3)).asDiagonal();
  mass.bottomRightCorner(2, 2) = random_spd(rng, 2);
  const QuadraticLagrangian lag(mass);
  Vector v0(5);
  v0 << 1.0, 0.5, -0.7, 0.3, -1.2;
  const auto tr = integrate_rk4([&](double, const Vector& v) { return ep_rhs(st, lag, v); }, v0, 10.0, 1e-3);
  const Vector b0 = st.staged_covector(lag.fiber_derivative(v0)).tail(2);
  double worst = 0;
  for (const auto& v : tr.states) worst = std::max(worst, (st.staged_covector(lag.fiber_derivative(v)).tail(2) - b0).norm());
  return {tr.ok() && worst <= 1e-10, "abelian-stage momentum drift " + num(worst)};
}

Outcome criterion5() {
  std::mt19937 rng(105);
  const std::vector<Case> shipped = {{algebras::heisenberg(), {1, 1, 1}},
                                     {algebras::so3(), {3}},
                                     {algebras::se2(), {1, 2}},
                                     {algebras::strictly_upper_triangular(4), {3, 2, 1}},
                                     {algebras::abelian(3), {1, 2}}};
  double res = 0;
  for (const auto& c : shipped) {
    const int n = c.alg.dim();
    const StagedStructure st(c.alg, StageChain(c.blocks), Metric(random_spd(rng, n)));
    const QuadraticLagrangian lag(random_spd(rng, n));
    const auto full = ConstraintSubspace::full(n);
    for (int t = 0; t < 100; ++t) {
      const Vector v = random_vector(rng, n);
      res = std::max(res, max_abs(edp_residual(st, lag, v, ep_rhs(st, lag, v), full)));
    }
  }
  double drift = 0;
  for (const auto& c : {shipped[0], shipped[3]}) {
    const int n = c.alg.dim();
    const StagedStructure st(c.alg, StageChain(c.blocks), Metric(random_spd(rng, n)));
    const QuadraticLagrangian lag(random_spd(rng, n));
    Matrix basis(n, 2);
    basis.col(0) = random_vector(rng, n);
    basis.col(1) = random_vector(rng, n);
    const auto S = ConstraintSubspace::from_basis(basis);
    const auto tr = integrate_rk4([&](double, const Vector& y) { return edp_rhs(st, lag, S, y); },
                                  Vector(Eigen::Vector2d(0.6, -0.4)), 10.0, 1e-3);
    if (!tr.ok()) return {false, "constrained flow aborted: " + tr.message};
    const double e0 = lag.value(basis * tr.states.front());
    for (const auto& y : tr.states) drift = std::max(drift, std::abs(lag.value(basis * y) - e0) / e0);
  }
  return {res <= 1e-12 && drift <= 1e-8, "max EdP residual " + num(res) + ", constrained energy drift " + num(drift)};
}

Outcome criterion6() {
  double forms = 0, curv = 0;
  std::mt19937 rng(106);
  std::uniform_real_distribution<double> u(-2, 2);
  for (double e : {0.0, 0.1}) {
    disk::DiskParams p;
    p.e = e;
    const auto sys = disk::build_disk_system(p);
    for (int t = 0; t < 100; ++t) {
      Vector k1(1), k2(1), eta(3), x(2), a(2), b(2);
      k1 << u(rng);
      k2 << u(rng);
      eta << 0.0, u(rng), u(rng);
      x << 0.1 + 1.3 * std::abs(u(rng)) / 2, u(rng);
      a << u(rng), u(rng);
      b << u(rng), u(rng);
      forms = std::max({forms, max_abs(sys.staged.a_form(1, k1, k2)), max_abs(sys.staged.b_form(1, k1, eta))});
      curv = std::max(curv, max_abs(curvature_local(sys.staged.algebra(), sys.connection, x, a, b)));
    }
  }
  return {forms <= 1e-14 && curv <= 1e-12, "max |a|,|b| " + num(forms) + ", max curvature " + num(curv)};
}

Outcome criterion7() {
  std::mt19937 rng(107);
  std::uniform_real_distribution<double> th(0.05, M_PI / 2 - 0.05), ang(-M_PI, M_PI), rate(-2, 2);
  double two = 0, one = 0;
  for (double e : {0.0, 0.1}) {
    disk::DiskParams p;
    p.e = e;
    const auto staged = disk::build_disk_system(p);
    const auto single = disk::build_disk_system(p, true);
    for (int t = 0; t < 100; ++t) {
      const Vector y = disk::make_reduced_state(p, th(rng), ang(rng), rate(rng), rate(rng), rate(rng));
      const Vector d = disk::disk_rhs_explicit(p, y);
      const Vector explicit_acc = (Vector(3) << d[disk::kThetaDot], d[disk::kPhiDot], d[disk::kEta0]).finished();
      const Vector g = disk::to_generic_state(y);
      two = std::max(two, max_abs(ldp_state_rhs(staged, g).tail(3) - explicit_acc));
      one = std::max(one, max_abs(ldp_state_rhs(single, g).tail(3) - explicit_acc));
    }
  }
  return {two <= 1e-9 && one <= 1e-9, "explicit vs two-stage " + num(two) + ", vs one-stage " + num(one)};
}

Outcome criterion8() {
  const auto t0 = std::chrono::steady_clock::now();
  std::string detail;
  bool pass = true;
  for (double e : {0.0, 0.1}) {
    disk::DiskParams p;
    p.e = e;
    const Vector y0 = disk::make_reduced_state(p, 1.2, 0.0, 0.0, 0.5, 3.0);
    const Vector f0 = disk::make_full_state(p, 1.2, 0.0, 0.0, Eigen::Vector2d::Zero(), 0.0, 0.5, 3.0);
    const auto red = disk::simulate_explicit(p, y0, 1.0, 1e-4);
    const auto full = disk::simulate_oracle(p, f0, 1.0, 1e-4);
    if (!red.ok() || !full.ok() || red.states.size() != full.states.size()) {
      pass = false;
      detail += "e=" + num(e) + " aborted; ";
      continue;
    }
    const double e0 = disk::disk_energy(p, y0);
    double dev = 0, cres = 0, drift = 0;
    for (size_t k = 0; k < red.states.size(); ++k) {
      dev = std::max(dev, max_abs(red.states[k] - disk::project_full(full.states[k])));
      cres = std::max({cres, disk::disk_constraint_residual(p, red.states[k]),
                       disk::full_constraint_residual(p, full.states[k])});
      drift = std::max({drift, std::abs(disk::disk_energy(p, red.states[k]) - e0) / e0,
                        std::abs(disk::full_energy(p, full.states[k]) - e0) / e0});
    }
    pass = pass && dev <= 1e-6 && cres <= 1e-8 && drift <= 1e-6;
    detail += "e=" + num(e) + ": dev " + num(dev) + ", constraint " + num(cres) + ", energy " + num(drift) + "; ";
  }
  const double secs = seconds_since(t0);
  return {pass && secs < 30.0, detail + num(secs) + " s"};
}

Outcome criterion9() {
  std::mt19937 rng(109);
  const StagedStructure st(algebras::heisenberg(), StageChain({1, 1, 1}), Metric(random_spd(rng, 3)));
  const QuadraticLagrangian lag(random_spd(rng, 3));
  const double T = 1.0;
  const Vector w0 = Vector(Eigen::Vector3d(0.7, -0.4, 0.5));
  const Vector v0 = Vector(Eigen::Vector3d(1.0, -0.5, 0.8));
  // Trapezoid first variation of the action along the discrete EP trajectory, omega = t(T - t) w0.
  auto variation = [&](double h) {
    const auto tr = integrate_rk4([&](double, const Vector& v) { return ep_rhs(st, lag, v); }, v0, T, h);
    std::vector<double> f;
    for (size_t k = 0; k < tr.times.size(); ++k) {
      const double t = tr.times[k];
      const Vector& v = tr.states[k];
      f.push_back(lag.fiber_derivative(v).dot(allowed_variation(st, v, Vector(t * (T - t) * w0), Vector((T - 2 * t) * w0))));
    }
    double s = 0;
    for (size_t k = 0; k + 1 < f.size(); ++k) s += 0.5 * h * (f[k] + f[k + 1]);
    return s;
  };
  const double a = variation(0.04), b = variation(0.02);
  const double ratio = a / b;
  return {ratio >= 3 && ratio <= 5, "variations " + num(a) + ", " + num(b) + ", ratio " + num(ratio)};
}

Outcome criterion10() {
  const StagedStructure st(algebras::so3(), StageChain({3}), Metric::identity(3));
  const auto lag = QuadraticLagrangian::diagonal(Vector(Eigen::Vector3d(1, 2, 3)));
  const Vector v0 = Vector(Eigen::Vector3d(1.0, 0.1, 0.5));
  const double e0 = lag.value(v0);
  auto drift = [&](double h) {
    const auto tr = integrate_rk4([&](double, const Vector& v) { return ep_rhs(st, lag, v); }, v0, 10.0, h);
    return std::abs(lag.value(tr.states.back()) - e0);
  };
  const double a = drift(0.02), b = drift(0.01);
  const double ratio = a / b;
  return {ratio >= 12 && ratio <= 20, "energy drift " + num(a) + " -> " + num(b) + ", ratio " + num(ratio)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"bracket-by-stages equivalence", criterion1},
      {"printed two- and three-stage expansions", criterion2},
      {"Euler-Poincare rigid body", criterion3},
      {"constants of motion on a direct product", criterion4},
      {"EdP consistency and constrained energy", criterion5},
      {"disk staged forms and curvature vanish", criterion6},
      {"disk explicit vs staged and one-stage equations", criterion7},
      {"disk reduced vs full-space oracle", criterion8},
      {"variational consistency O(h^2)", criterion9},
      {"RK4 order via energy drift", criterion10},
  };
  int failed = 0;
  for (size_t k = 0; k < criteria.size(); ++k) {
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s criterion %zu: %s (%s)\n", o.pass ? "PASS" : "FAIL", k + 1, criteria[k].first.c_str(),
                o.detail.c_str());
    failed += o.pass ? 0 : 1;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
