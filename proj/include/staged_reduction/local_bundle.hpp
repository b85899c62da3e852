#pragma once

#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "lie_algebra.hpp"
#include "stages.hpp"

namespace sred {

/// Base relative step of the central differences; STAGED_REDUCTION_FD_STEP overrides it.
inline double fd_base_step() {
  if (const char* env = std::getenv("STAGED_REDUCTION_FD_STEP")) {
    char* end = nullptr;
    const double h = std::strtod(env, &end);
    if (end != env && *end == '\0' && std::isfinite(h) && h > 0.0) return h;
    throw ParseError(std::string("STAGED_REDUCTION_FD_STEP is not a positive number: '") + env + "'");
  }
  return 1e-6;
}

/// Central-difference partials of a matrix-valued map, one matrix per coordinate.
template <class F>
std::vector<Matrix> fd_partials(F&& f, const Vector& x) {
  const double base = fd_base_step();
  std::vector<Matrix> out;
  out.reserve(static_cast<size_t>(x.size()));
  for (int k = 0; k < x.size(); ++k) {
    const double h = base * std::max(1.0, std::abs(x[k]));
    Vector xp = x, xm = x;
    xp[k] += h;
    xm[k] -= h;
    Matrix d = (Matrix(f(xp)) - Matrix(f(xm))) / (2.0 * h);
    if (!d.allFinite()) throw NumericError("non-finite finite-difference probe in coordinate " + std::to_string(k));
    out.push_back(std::move(d));
  }
  return out;
}

/// x -> A(x), the alg_dim x shape_dim matrix of xdot -> A(x) xdot.
struct ConnectionField {
  int shape_dim = 0;
  int alg_dim = 0;
  std::function<Matrix(const Vector&)> matrix;
  /// Optional: dA/dx_k for k = 0..shape_dim-1.
  std::function<std::vector<Matrix>(const Vector&)> jacobian;

  static ConnectionField zero(int shape_dim, int alg_dim) {
    ConnectionField c;
    c.shape_dim = shape_dim;
    c.alg_dim = alg_dim;
    c.matrix = [=](const Vector&) { return Matrix(Matrix::Zero(alg_dim, shape_dim)); };
    c.jacobian = [=](const Vector&) { return std::vector<Matrix>(static_cast<size_t>(shape_dim), Matrix::Zero(alg_dim, shape_dim)); };
    return c;
  }

  Vector eval(const Vector& x, const Vector& xdot) const {
    if (x.size() != shape_dim || xdot.size() != shape_dim) throw StructuralError("connection: wrong shape vector length");
    return matrix(x) * xdot;
  }

  std::vector<Matrix> partials(const Vector& x) const {
    if (jacobian) return jacobian(x);
    return fd_partials(matrix, x);
  }
};

/// l(x, xdot, xi) = 1/2 z^T K(x) z - V(x), z = (xdot, xi).
struct ReducedLagrangianLocal {
  int shape_dim = 0;
  int alg_dim = 0;
  std::function<Matrix(const Vector&)> K;
  std::function<double(const Vector&)> V;
  /// Optional analytic dK/dx_k.
  std::function<std::vector<Matrix>(const Vector&)> dK;
  /// Optional analytic gradient of V.
  std::function<Vector(const Vector&)> dV;

  double value(const Vector& x, const Vector& xdot, const Vector& xi) const {
    Vector z(shape_dim + alg_dim);
    z << xdot, xi;
    return 0.5 * z.dot(K(x) * z) - V(x);
  }

  double energy(const Vector& x, const Vector& xdot, const Vector& xi) const {
    Vector z(shape_dim + alg_dim);
    z << xdot, xi;
    return 0.5 * z.dot(K(x) * z) + V(x);
  }

  std::vector<Matrix> K_partials(const Vector& x) const { return dK ? dK(x) : fd_partials(K, x); }

  Vector V_gradient(const Vector& x) const {
    if (dV) return dV(x);
    const auto parts = fd_partials([this](const Vector& y) { return Matrix::Constant(1, 1, V(y)); }, x);
    Vector g(x.size());
    for (int k = 0; k < x.size(); ++k) g[k] = parts[static_cast<size_t>(k)](0, 0);
    return g;
  }
};

/// x -> basis of S(x), alg_dim x s.
struct ConstraintField {
  int rank = 0;
  std::function<Matrix(const Vector&)> basis;
  /// Optional directional derivative (x, xdot) -> D_xdot S(x).
  std::function<Matrix(const Vector&, const Vector&)> directional;

  Matrix derivative(const Vector& x, const Vector& xdot) const {
    if (directional) return directional(x, xdot);
    const auto parts = fd_partials(basis, x);
    Matrix d = Matrix::Zero(parts.empty() ? 0 : parts[0].rows(), parts.empty() ? 0 : parts[0].cols());
    for (size_t k = 0; k < parts.size(); ++k) d += xdot[static_cast<Eigen::Index>(k)] * parts[k];
    return d;
  }
};

/// Trivial bundle Q = X x G with its staged algebra, connection and reduced Lagrangian.
struct LocalSystem {
  StagedStructure staged;
  ConnectionField connection;
  ReducedLagrangianLocal lagrangian;
  std::optional<ConstraintField> constraint;

  int shape_dim() const { return connection.shape_dim; }
  int alg_dim() const { return staged.dim(); }
  int fiber_dim() const { return constraint ? constraint->rank : alg_dim(); }

  void check() const {
    if (connection.alg_dim != staged.dim() || lagrangian.alg_dim != staged.dim())
      throw StructuralError("local system: algebra dimensions disagree");
    if (lagrangian.shape_dim != connection.shape_dim) throw StructuralError("local system: shape dimensions disagree");
  }
};

/// B~(x)(xdot, dx) = D_xdot[A(.)dx] - D_dx[A(.)xdot] - [A xdot, A dx].
inline Vector curvature_local(const LieAlgebra& alg, const ConnectionField& conn, const Vector& x, const Vector& xdot,
                              const Vector& dx) {
  if (xdot.size() != conn.shape_dim || dx.size() != conn.shape_dim) throw StructuralError("curvature: wrong shape vector length");
  const auto dA = conn.partials(x);
  Vector out = Vector::Zero(conn.alg_dim);
  for (int k = 0; k < conn.shape_dim; ++k)
    out += xdot[k] * (dA[static_cast<size_t>(k)] * dx) - dx[k] * (dA[static_cast<size_t>(k)] * xdot);
  const Matrix A = conn.matrix(x);
  return out - alg.bracket(A * xdot, A * dx);
}

/// D xi / Dt = xi_dot - [A(x) xdot, xi].
inline Vector covariant_derivative_adjoint(const LieAlgebra& alg, const ConnectionField& conn, const Vector& x,
                                           const Vector& xdot, const Vector& xi, const Vector& xidot) {
  return xidot - alg.bracket(conn.eval(x, xdot), xi);
}

/// D alpha / Dt = alpha_dot + ad*_{A(x) xdot} alpha.
inline Vector covariant_derivative_coadjoint(const LieAlgebra& alg, const ConnectionField& conn, const Vector& x,
                                             const Vector& xdot, const Vector& alpha, const Vector& alphadot) {
  return alphadot + alg.ad_star(conn.eval(x, xdot), alpha);
}

struct LpResidual {
  Vector vertical;
  Vector horizontal;
};

namespace detail {

/// Everything at (x, xdot) that does not depend on the fiber velocity or the accelerations.
struct LocalPoint {
  Vector x, xdot;
  Matrix K;
  Matrix DK;  // sum_k xdot_k dK/dx_k
  std::vector<Matrix> dK;
  Vector dV;
  Matrix A;
  std::vector<Matrix> dA;
  Vector Axdot;
};

inline LocalPoint make_point(const LocalSystem& sys, const Vector& x, const Vector& xdot) {
  sys.check();
  const int m = sys.shape_dim();
  if (x.size() != m || xdot.size() != m) throw StructuralError("local state: wrong shape vector length");
  LocalPoint p;
  p.x = x;
  p.xdot = xdot;
  p.K = sys.lagrangian.K(x);
  p.dK = sys.lagrangian.K_partials(x);
  p.DK = Matrix::Zero(p.K.rows(), p.K.cols());
  for (int k = 0; k < m; ++k) p.DK += xdot[k] * p.dK[static_cast<size_t>(k)];
  p.dV = sys.lagrangian.V_gradient(x);
  p.A = sys.connection.matrix(x);
  p.dA = sys.connection.partials(x);
  p.Axdot = p.A * xdot;
  if (!p.K.allFinite() || !p.DK.allFinite() || !p.dV.allFinite() || !p.A.allFinite())
    throw NumericError("non-finite Lagrangian or connection data at the current state");
  return p;
}

inline Vector curvature_at(const LieAlgebra& alg, const LocalPoint& p, const Vector& dx) {
  Vector out = Vector::Zero(p.A.rows());
  for (int k = 0; k < p.xdot.size(); ++k)
    out += p.xdot[k] * (p.dA[static_cast<size_t>(k)] * dx) - dx[k] * (p.dA[static_cast<size_t>(k)] * p.xdot);
  return out - alg.bracket(p.Axdot, p.A * dx);
}

inline LpResidual residual_at(const LocalSystem& sys, const LocalPoint& p, const Vector& xi, const Vector& xddot,
                              const Vector& xidot, const Matrix& tests) {
  const int m = sys.shape_dim(), a = sys.alg_dim();
  const auto& st = sys.staged;
  Vector z(m + a), zdot(m + a);
  z << p.xdot, xi;
  zdot << xddot, xidot;
  const Vector mom = p.K * z;
  const Vector mom_dot = p.DK * z + p.K * zdot;
  const Vector mu = mom.tail(a);
  LpResidual r;
  r.vertical.resize(tests.cols());
  const Vector rel = xi - p.Axdot;
  for (int k = 0; k < tests.cols(); ++k) {
    const Vector nu = tests.col(k);
    r.vertical[k] = mom_dot.tail(a).dot(nu) - mu.dot(st.bracket_by_stages(rel, nu));
  }
  r.horizontal.resize(m);
  for (int k = 0; k < m; ++k) {
    const Vector dx = Vector::Unit(m, k);
    const double dldx = 0.5 * z.dot(p.dK[static_cast<size_t>(k)] * z) - p.dV[k];
    const Vector coupling = curvature_at(st.algebra(), p, dx) - st.bracket_by_stages(p.A * dx, xi);
    r.horizontal[k] = dldx - mom_dot[k] - mu.dot(coupling);
  }
  return r;
}

}  // namespace detail

/**
 * Residuals of the local Lagrange-Poincare equations by stages.
 *   vertical_k   = <d/dt dl/dxi, nu_k> - <dl/dxi, [xi - A xdot, nu_k]>
 *   horizontal_k = dl/dx_k - d/dt dl/dxdot_k - <dl/dxi, B~(xdot, e_k) - [A e_k, xi]>
 * Brackets are assembled by stages. `tests` holds the nu_k as columns; an
 * empty matrix means the whole algebra.
 */
inline LpResidual lp_residual(const LocalSystem& sys, const Vector& x, const Vector& xdot, const Vector& xi,
                              const Vector& xddot, const Vector& xidot, const Matrix& tests = Matrix()) {
  const auto p = detail::make_point(sys, x, xdot);
  if (xi.size() != sys.alg_dim() || xidot.size() != sys.alg_dim() || xddot.size() != sys.shape_dim())
    throw StructuralError("lp_residual: wrong vector length");
  const Matrix nu = tests.size() ? tests : Matrix(Matrix::Identity(sys.alg_dim(), sys.alg_dim()));
  return detail::residual_at(sys, p, xi, xddot, xidot, nu);
}

/// Fiber velocity xi = S(x) c (or c itself without a constraint).
inline Vector fiber_velocity(const LocalSystem& sys, const Vector& x, const Vector& c) {
  if (c.size() != sys.fiber_dim()) throw StructuralError("fiber coordinates have wrong length");
  return sys.constraint ? Vector(sys.constraint->basis(x) * c) : c;
}

/**
 * Local Lagrange-d'Alembert-Poincare equations by stages, solved for
 * (xddot, cdot) with xi = S(x) c and xi_dot = S(x) cdot + (D_xdot S)(x) c.
 * The residual is affine in the accelerations; its offset and columns are
 * found by probing at zero and unit accelerations.
 */
inline Vector ldp_rhs(const LocalSystem& sys, const Vector& x, const Vector& xdot, const Vector& c) {
  const auto p = detail::make_point(sys, x, xdot);
  const int m = sys.shape_dim(), a = sys.alg_dim(), s = sys.fiber_dim();
  if (c.size() != s) throw StructuralError("ldp_rhs: fiber coordinates have wrong length");
  Matrix S = Matrix::Identity(a, a);
  Vector xidot0 = Vector::Zero(a);
  if (sys.constraint) {
    S = sys.constraint->basis(x);
    if (S.rows() != a || S.cols() != s) throw StructuralError("constraint field returned a basis of the wrong shape");
    xidot0 = sys.constraint->derivative(x, xdot) * c;
  }
  const Vector xi = S * c;
  auto probe = [&](const Vector& acc) {
    const auto r = detail::residual_at(sys, p, xi, acc.head(m), Vector(S * acc.tail(s) + xidot0), S);
    Vector out(s + m);
    out << r.vertical, r.horizontal;
    return out;
  };
  const int n = m + s;
  const Vector r0 = probe(Vector::Zero(n));
  Matrix J(n, n);
  for (int k = 0; k < n; ++k) J.col(k) = probe(Vector::Unit(n, k)) - r0;
  Eigen::JacobiSVD<Matrix> svd(J);
  const auto& sv = svd.singularValues();
  const double cond = sv(n - 1) > 0.0 ? sv(0) / sv(n - 1) : std::numeric_limits<double>::infinity();
  if (!(cond < 1e12))
    throw NumericError("singular effective mass in ldp_rhs (condition estimate " + std::to_string(cond) + ")");
  return J.colPivHouseholderQr().solve(-r0);
}

/// Integration state y = (x, xdot, c); returns y' = (xdot, xddot, cdot).
inline Vector ldp_state_rhs(const LocalSystem& sys, const Vector& y) {
  const int m = sys.shape_dim(), s = sys.fiber_dim();
  if (y.size() != 2 * m + s) throw StructuralError("local state has wrong length");
  const Vector acc = ldp_rhs(sys, y.head(m), y.segment(m, m), y.tail(s));
  Vector out(y.size());
  out << y.segment(m, m), acc;
  return out;
}

inline double local_energy(const LocalSystem& sys, const Vector& y) {
  const int m = sys.shape_dim(), s = sys.fiber_dim();
  const Vector x = y.head(m);
  return sys.lagrangian.energy(x, y.segment(m, m), fiber_velocity(sys, x, y.tail(s)));
}

/**
 * Built-in decoupled system: shape R^2 with constant kinetic matrix, A = 0,
 * V = 0, fiber se(2) with blocks [1, 2]. Vertical equations are
 * Euler-Poincare on se(2) and the shape moves freely.
 */
inline LocalSystem decoupled_test_system() {
  LieAlgebra alg = LieAlgebra::from_brackets({"J", "P1", "P2"}, {{0, 1, 2, 1.0}, {0, 2, 1, -1.0}});
  Matrix K = Matrix::Zero(5, 5);
  K(0, 0) = 1.0;
  K(1, 1) = 2.0;
  K.bottomRightCorner(3, 3) << 2.0, 0.3, 0.0, 0.3, 1.0, 0.1, 0.0, 0.1, 1.5;
  LocalSystem sys{StagedStructure(std::move(alg), StageChain({1, 2}), Metric::identity(3)), ConnectionField::zero(2, 3),
                  ReducedLagrangianLocal{}, std::nullopt};
  sys.lagrangian.shape_dim = 2;
  sys.lagrangian.alg_dim = 3;
  sys.lagrangian.K = [K](const Vector&) { return K; };
  sys.lagrangian.V = [](const Vector&) { return 0.0; };
  sys.lagrangian.dK = [](const Vector&) { return std::vector<Matrix>(2, Matrix::Zero(5, 5)); };
  sys.lagrangian.dV = [](const Vector&) { return Vector(Vector::Zero(2)); };
  return sys;
}

}  // namespace sred
