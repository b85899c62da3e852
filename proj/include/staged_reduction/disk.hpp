#pragma once

#include <Eigen/LU>

#include <cmath>
#include <string>
#include <vector>

#include "errors.hpp"
#include "integrator.hpp"
#include "lie_algebra.hpp"
#include "local_bundle.hpp"
#include "stages.hpp"

namespace sred::disk {

/// Euler's disk: mass M, radius r, thickness ratio e, moments I1 (diameter) and I3 (axis), gravity g.
struct DiskParams {
  double M = 1.0;
  double r = 1.0;
  double e = 0.0;
  double I1 = 0.25;
  double I3 = 0.5;
  double g = 9.8;

  void validate() const {
    if (!(M > 0 && r > 0 && g > 0 && I1 > 0 && I3 > 0 && e >= 0))
      throw StructuralError("disk parameters need M, r, g, I1, I3 > 0 and e >= 0");
  }
};

constexpr double kThetaMin = 1e-3;

/// Reduced state layout: theta, phi, thetadot, phidot, eta01, eta12_1, eta12_2.
enum ReducedIndex { kTheta = 0, kPhi, kThetaDot, kPhiDot, kEta0, kEta1, kEta2, kReducedSize };

/// Full state layout: theta, phi, psi, x1, x2 and their rates.
constexpr int kFullSize = 10;

inline Eigen::Vector2d u_of(double phi) { return {-std::cos(phi), -std::sin(phi)}; }
/// du/dphi.
inline Eigen::Vector2d du_of(double phi) { return {std::sin(phi), -std::cos(phi)}; }

/// The reduced Lagrangian, term by term.
inline double disk_lagrangian(const DiskParams& p, double th, double ph, double thd, double phd, double eta0,
                              const Eigen::Vector2d& eta12) {
  const double M = p.M, r = p.r, e = p.e, s = std::sin(th), c = std::cos(th), sp = std::sin(ph), cp = std::cos(ph);
  const double n1 = eta12[0], n2 = eta12[1];
  return -M * p.g * r * s + 0.5 * (p.I1 + 0.25 * M * r * r * e * e) * (thd * thd + phd * phd * s * s) +
         0.5 * M * eta12.squaredNorm() + 0.5 * M * r * r * thd * thd + 0.5 * M * r * r * phd * phd * c * c +
         M * r * n1 * (thd * s * sp - phd * c * cp) - M * r * n2 * (thd * cp * s + phd * c * sp) +
         0.5 * p.I3 * (phd * c + eta0) * (phd * c + eta0) +
         0.5 * M * r * e * (n1 * (phd * cp * s + thd * sp * c) + n2 * (phd * sp * s - thd * c * cp) - r * c * s * phd * phd) -
         0.5 * M * p.g * r * e * c;
}

inline double disk_potential(const DiskParams& p, double th) {
  return p.M * p.g * p.r * std::sin(th) + 0.5 * p.M * p.g * p.r * p.e * std::cos(th);
}

/// Kinetic matrix of z = (thetadot, phidot, eta01, eta12_1, eta12_2).
inline Matrix disk_K(const DiskParams& p, double th, double ph) {
  const double M = p.M, r = p.r, e = p.e, s = std::sin(th), c = std::cos(th), sp = std::sin(ph), cp = std::cos(ph);
  const double I1e = p.I1 + 0.25 * M * r * r * e * e;
  Matrix K = Matrix::Zero(5, 5);
  K(0, 0) = I1e + M * r * r;
  K(1, 1) = I1e * s * s + (M * r * r + p.I3) * c * c - M * r * r * e * c * s;
  K(1, 2) = p.I3 * c;
  K(2, 2) = p.I3;
  K(3, 3) = K(4, 4) = M;
  K(0, 3) = M * r * s * sp + 0.5 * M * r * e * c * sp;
  K(1, 3) = -M * r * c * cp + 0.5 * M * r * e * s * cp;
  K(0, 4) = -M * r * s * cp - 0.5 * M * r * e * c * cp;
  K(1, 4) = -M * r * c * sp + 0.5 * M * r * e * s * sp;
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < i; ++j) K(i, j) = K(j, i);
  return K;
}

/// dK/dtheta and dK/dphi.
inline std::vector<Matrix> disk_dK(const DiskParams& p, double th, double ph) {
  const double M = p.M, r = p.r, e = p.e, s = std::sin(th), c = std::cos(th), sp = std::sin(ph), cp = std::cos(ph);
  const double I1e = p.I1 + 0.25 * M * r * r * e * e;
  Matrix dth = Matrix::Zero(5, 5), dph = Matrix::Zero(5, 5);
  dth(1, 1) = 2.0 * I1e * s * c - 2.0 * (M * r * r + p.I3) * c * s - M * r * r * e * (c * c - s * s);
  dth(1, 2) = -p.I3 * s;
  dth(0, 3) = M * r * c * sp - 0.5 * M * r * e * s * sp;
  dth(1, 3) = M * r * s * cp + 0.5 * M * r * e * c * cp;
  dth(0, 4) = -M * r * c * cp + 0.5 * M * r * e * s * cp;
  dth(1, 4) = M * r * s * sp + 0.5 * M * r * e * c * sp;
  dph(0, 3) = M * r * s * cp + 0.5 * M * r * e * c * cp;
  dph(1, 3) = M * r * c * sp - 0.5 * M * r * e * s * sp;
  dph(0, 4) = M * r * s * sp + 0.5 * M * r * e * c * sp;
  dph(1, 4) = -M * r * c * cp + 0.5 * M * r * e * s * cp;
  for (Matrix* m : {&dth, &dph})
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < i; ++j) (*m)(i, j) = (*m)(j, i);
  return {dth, dph};
}

/// Constraint column (1, r u(phi)).
inline Vector disk_constraint_column(const DiskParams& p, double ph) {
  Vector s(3);
  s << 1.0, -p.r * std::cos(ph), -p.r * std::sin(ph);
  return s;
}

inline std::string chart_check(double theta) {
  if (!(theta > kThetaMin && theta < M_PI / 2 - kThetaMin))
    return "theta=" + std::to_string(theta) + " left the chart (" + std::to_string(kThetaMin) + ", pi/2 - " +
           std::to_string(kThetaMin) + ")";
  return {};
}

/**
 * Staged structure, connection, Lagrangian and constraint of the disk:
 * g = R^3 abelian with blocks [1, 2] (S^1 then R^2), identity metric,
 * A = 0 on shape directions, S(x) spanned by (1, r u(phi)).
 * A single-block chain gives the one-stage reduction of the same system.
 */
inline LocalSystem build_disk_system(const DiskParams& p, bool single_stage = false) {
  p.validate();
  LieAlgebra alg = LieAlgebra::from_brackets({"psi", "x1", "x2"}, {});
  StageChain chain = single_stage ? StageChain({3}) : StageChain({1, 2});
  LocalSystem sys{StagedStructure(std::move(alg), std::move(chain), Metric::identity(3)), ConnectionField::zero(2, 3),
                  ReducedLagrangianLocal{}, std::nullopt};
  sys.lagrangian.shape_dim = 2;
  sys.lagrangian.alg_dim = 3;
  sys.lagrangian.K = [p](const Vector& x) { return disk_K(p, x[0], x[1]); };
  sys.lagrangian.dK = [p](const Vector& x) { return disk_dK(p, x[0], x[1]); };
  sys.lagrangian.V = [p](const Vector& x) { return disk_potential(p, x[0]); };
  sys.lagrangian.dV = [p](const Vector& x) {
    Vector g(2);
    g << p.M * p.g * p.r * std::cos(x[0]) - 0.5 * p.M * p.g * p.r * p.e * std::sin(x[0]), 0.0;
    return g;
  };
  ConstraintField cf;
  cf.rank = 1;
  cf.basis = [p](const Vector& x) { return Matrix(disk_constraint_column(p, x[1])); };
  cf.directional = [p](const Vector& x, const Vector& xdot) {
    Matrix d(3, 1);
    d << 0.0, p.r * std::sin(x[1]) * xdot[1], -p.r * std::cos(x[1]) * xdot[1];
    return d;
  };
  sys.constraint = std::move(cf);
  return sys;
}

/**
 * The explicit displayed equations, solved for (thetaddot, phiddot, eta01dot);
 * eta12dot follows from differentiating eta12 = eta01 r u(phi).
 */
inline Vector disk_rhs_explicit(const DiskParams& p, const Vector& y) {
  if (y.size() != kReducedSize) throw StructuralError("disk state must have 7 entries");
  const double M = p.M, r = p.r, e = p.e, I1 = p.I1, I3 = p.I3, g = p.g;
  const double th = y[kTheta], ph = y[kPhi], thd = y[kThetaDot], phd = y[kPhiDot], eta0 = y[kEta0];
  const double s = std::sin(th), c = std::cos(th), sp = std::sin(ph), cp = std::cos(ph);
  const Eigen::Vector2d u = u_of(ph);

  // eta12dot as an affine function of eta01dot
  auto eta12dot = [&](double eta0d) -> Eigen::Vector2d { return eta0d * r * u + eta0 * r * phd * du_of(ph); };

  auto equations = [&](double thdd, double phdd, double eta0d) {
    const Eigen::Vector2d n = eta12dot(eta0d);
    const double n1 = n[0], n2 = n[1];
    Eigen::Vector3d F;
    F[0] = I3 * (eta0d + phdd * c - thd * phd * s) + M * r * n.dot(u) + M * r * r * (phdd * c - 2 * thd * phd * s) -
           0.5 * M * e * r * r * (phdd * s + 2 * thd * phd * c);
    F[1] = 2 * (M * r * r + I3 - I1) * thd * phd * s * c - (I1 * s * s + (I3 + M * r * r) * c * c) * phdd +
           M * r * c * (n1 * cp + n2 * sp) + I3 * (thd * eta0 * s - eta0d * c) -
           0.5 * M * r * e *
               (0.5 * r * e * (2 * thd * phd * s * c + phdd * s * s) + s * (n1 * cp + n2 * sp) +
                2 * r * thd * phd * (s * s - c * c) - 2 * r * phdd * s * c);
    F[2] = (I1 - I3 - M * r * r) * phd * phd * s * c - I3 * eta0 * phd * s - (I1 + M * r * r) * thdd +
           M * r * s * (n2 * cp - n1 * sp) - M * g * r * c +
           0.5 * M * r * e *
               (0.5 * r * e * phd * phd * s * c + r * phd * phd * (s * s - c * c) + c * (n2 * cp - n1 * sp) + g * s -
                0.5 * r * e * thdd);
    return F;
  };

  const Eigen::Vector3d F0 = equations(0, 0, 0);
  Eigen::Matrix3d A;
  A.col(0) = equations(1, 0, 0) - F0;
  A.col(1) = equations(0, 1, 0) - F0;
  A.col(2) = equations(0, 0, 1) - F0;
  Eigen::FullPivLU<Eigen::Matrix3d> lu(A);
  if (!lu.isInvertible() || std::abs(A.determinant()) < 1e-14)
    throw NumericError("singular explicit disk system at theta=" + std::to_string(th));
  const Eigen::Vector3d acc = lu.solve(-F0);
  const Eigen::Vector2d n = eta12dot(acc[2]);
  Vector out(kReducedSize);
  out << thd, phd, acc[0], acc[1], acc[2], n[0], n[1];
  return out;
}

/// ||eta12 - eta01 r u(phi)||.
inline double disk_constraint_residual(const DiskParams& p, const Vector& y) {
  const Eigen::Vector2d eta12(y[kEta1], y[kEta2]);
  return (eta12 - y[kEta0] * p.r * u_of(y[kPhi])).norm();
}

/// 1/2 z^T K z + V with z = (thetadot, phidot, eta01, eta12).
inline double disk_energy(const DiskParams& p, const Vector& y) {
  Vector z(5);
  z << y[kThetaDot], y[kPhiDot], y[kEta0], y[kEta1], y[kEta2];
  return 0.5 * z.dot(disk_K(p, y[kTheta], y[kPhi]) * z) + disk_potential(p, y[kTheta]);
}

/// Reduced state satisfying the constraint.
inline Vector make_reduced_state(const DiskParams& p, double th, double ph, double thd, double phd, double eta0) {
  Vector y(kReducedSize);
  const Eigen::Vector2d n = eta0 * p.r * u_of(ph);
  y << th, ph, thd, phd, eta0, n[0], n[1];
  return y;
}

/// Generic staged path: state (theta, phi, thetadot, phidot, eta01) through ldp_rhs.
inline Vector to_generic_state(const Vector& y) {
  Vector g(5);
  g << y[kTheta], y[kPhi], y[kThetaDot], y[kPhiDot], y[kEta0];
  return g;
}

inline Vector from_generic_state(const DiskParams& p, const Vector& g) {
  return make_reduced_state(p, g[0], g[1], g[2], g[3], g[4]);
}

struct FullDerivative {
  Vector ydot;   // d/dt of (q, qdot)
  Vector lambda; // multipliers of the two rolling constraints
};

/**
 * Full-space Lagrange-d'Alembert oracle on q = (theta, phi, psi, x1, x2) with
 * L(q, qdot) = l(theta, phi, thetadot, phidot, psidot, xdot) and constraint
 * xdot - psidot r u(phi) = 0. Solves
 *   [ K  -C^T ] [qddot ]   [ dL/dq - (D_qdot K) qdot ]
 *   [ C   0   ] [lambda] = [ -Cdot qdot              ].
 */
inline FullDerivative disk_full_oracle_rhs(const DiskParams& p, const Vector& y) {
  if (y.size() != kFullSize) throw StructuralError("full disk state must have 10 entries");
  const double th = y[0], ph = y[1];
  const Vector qd = y.tail(5);
  const Matrix K = disk_K(p, th, ph);
  const auto dK = disk_dK(p, th, ph);
  Vector f = Vector::Zero(5);
  f[0] = 0.5 * qd.dot(dK[0] * qd) - (p.M * p.g * p.r * std::cos(th) - 0.5 * p.M * p.g * p.r * p.e * std::sin(th));
  f[1] = 0.5 * qd.dot(dK[1] * qd);
  f -= (qd[0] * dK[0] + qd[1] * dK[1]) * qd;
  Matrix C = Matrix::Zero(2, 5);
  C.col(2) = -p.r * u_of(ph);
  C.block(0, 3, 2, 2).setIdentity();
  const Eigen::Vector2d cdot_qdot = -p.r * qd[1] * qd[2] * du_of(ph);
  Matrix sys = Matrix::Zero(7, 7);
  sys.topLeftCorner(5, 5) = K;
  sys.topRightCorner(5, 2) = -C.transpose();
  sys.bottomLeftCorner(2, 5) = C;
  Vector rhs(7);
  rhs << f, -cdot_qdot;
  Eigen::FullPivLU<Matrix> lu(sys);
  if (!lu.isInvertible()) throw NumericError("singular full-space disk system at theta=" + std::to_string(th));
  const Vector sol = lu.solve(rhs);
  FullDerivative out;
  out.ydot.resize(kFullSize);
  out.ydot << qd, sol.head(5);
  out.lambda = sol.tail(2);
  return out;
}

inline Vector make_full_state(const DiskParams& p, double th, double ph, double psi, const Eigen::Vector2d& x,
                              double thd, double phd, double psid) {
  Vector y(kFullSize);
  const Eigen::Vector2d xd = psid * p.r * u_of(ph);
  y << th, ph, psi, x[0], x[1], thd, phd, psid, xd[0], xd[1];
  return y;
}

/// (theta, phi, thetadot, phidot, psidot, xdot) of a full state, in reduced layout.
inline Vector project_full(const Vector& y) {
  Vector r(kReducedSize);
  r << y[0], y[1], y[5], y[6], y[7], y[8], y[9];
  return r;
}

inline double full_constraint_residual(const DiskParams& p, const Vector& y) {
  return disk_constraint_residual(p, project_full(y));
}

inline double full_energy(const DiskParams& p, const Vector& y) { return disk_energy(p, project_full(y)); }

/// Trajectory of the explicit reduced equations, aborting at the chart boundary.
inline Trajectory simulate_explicit(const DiskParams& p, const Vector& y0, double t_end, double h) {
  return integrate_rk4([&](double, const Vector& y) { return disk_rhs_explicit(p, y); }, y0, t_end, h,
                       [](const Vector& y) { return chart_check(y[kTheta]); });
}

inline Trajectory simulate_oracle(const DiskParams& p, const Vector& y0, double t_end, double h) {
  return integrate_rk4([&](double, const Vector& y) { return disk_full_oracle_rhs(p, y).ydot; }, y0, t_end, h,
                       [](const Vector& y) { return chart_check(y[0]); });
}

/// Generic staged path on (theta, phi, thetadot, phidot, eta01).
inline Trajectory simulate_generic(const LocalSystem& sys, const Vector& g0, double t_end, double h) {
  return integrate_rk4([&](double, const Vector& y) { return ldp_state_rhs(sys, y); }, g0, t_end, h,
                       [](const Vector& y) { return chart_check(y[0]); });
}

}  // namespace sred::disk
