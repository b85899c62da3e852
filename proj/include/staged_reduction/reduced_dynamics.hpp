#pragma once

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "lie_algebra.hpp"
#include "stages.hpp"

namespace sred {

/// l(v) = 1/2 v^T M v on g.
class QuadraticLagrangian {
 public:
  QuadraticLagrangian() = default;
  explicit QuadraticLagrangian(Matrix mass) : mass_(std::move(mass)) {
    if (mass_.rows() != mass_.cols() || mass_.rows() == 0) throw StructuralError("mass matrix must be square");
    const double asym = (mass_ - mass_.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-14 * std::max(1.0, mass_.cwiseAbs().maxCoeff()))
      throw StructuralError("mass matrix is not symmetric");
    llt_.compute(mass_);
    if (llt_.info() != Eigen::Success) throw NumericError("mass matrix is not positive definite");
  }

  static QuadraticLagrangian identity(int n) { return QuadraticLagrangian(Matrix::Identity(n, n)); }
  static QuadraticLagrangian diagonal(const Vector& d) { return QuadraticLagrangian(d.asDiagonal().toDenseMatrix()); }

  const Matrix& mass() const { return mass_; }
  int dim() const { return static_cast<int>(mass_.rows()); }

  double value(const Vector& v) const {
    check(v);
    return 0.5 * v.dot(mass_ * v);
  }

  /// beta = dl/dv = M v.
  Vector fiber_derivative(const Vector& v) const {
    check(v);
    return mass_ * v;
  }

  Vector velocity(const Vector& beta) const {
    check(beta);
    return llt_.solve(beta);
  }

 private:
  void check(const Vector& v) const {
    if (v.size() != dim())
      throw StructuralError("vector of length " + std::to_string(v.size()) + " for Lagrangian of dimension " +
                            std::to_string(dim()));
  }

  Matrix mass_;
  Eigen::LLT<Matrix> llt_;
};

/**
 * Linear subspace S of g with a graph representation: coordinates with
 * indices in `independent` (the epsilons) are free, the others are a
 * linear function phi of them.
 */
class ConstraintSubspace {
 public:
  ConstraintSubspace() = default;

  /// Independent set chosen by full-pivoted elimination (largest pivot, lowest index on ties).
  static ConstraintSubspace from_basis(Matrix basis) {
    check_rank(basis);
    ConstraintSubspace out;
    out.dim_ = static_cast<int>(basis.rows());
    out.basis_ = std::move(basis);
    out.independent_ = pick_independent(out.basis_);
    out.build_graph_from_basis();
    return out;
  }

  /// phi is (dim - s) x s; its rows follow the dependent indices in increasing order.
  static ConstraintSubspace from_graph(int dim, std::vector<int> independent, Matrix phi) {
    ConstraintSubspace out;
    out.set_graph(dim, std::move(independent), std::move(phi));
    out.basis_ = out.graph_basis_;
    return out;
  }

  /// Both representations given; they must describe the same subspace.
  static ConstraintSubspace from_basis_and_graph(Matrix basis, std::vector<int> independent, Matrix phi,
                                                 double tol = 1e-12) {
    check_rank(basis);
    ConstraintSubspace out;
    out.set_graph(static_cast<int>(basis.rows()), std::move(independent), std::move(phi));
    out.basis_ = std::move(basis);
    if (out.basis_.cols() != out.graph_basis_.cols())
      throw StructuralError("constraint basis and graph have different dimensions");
    const double res = std::max(projection_residual(out.basis_, out.graph_basis_),
                                projection_residual(out.graph_basis_, out.basis_));
    if (res > tol)
      throw StructuralError("constraint graph does not span the basis subspace (residual " + std::to_string(res) + ")");
    return out;
  }

  /// Whole algebra.
  static ConstraintSubspace full(int dim) { return from_basis(Matrix::Identity(dim, dim)); }

  /// Particular case S = (+) S_(i,i+1): one basis per staged block, placed through the staged identification.
  static ConstraintSubspace from_blocks(const StagedStructure& st, const std::vector<Matrix>& block_bases) {
    if (static_cast<int>(block_bases.size()) != st.chain().num_blocks())
      throw StructuralError("constraint needs one basis per chain block");
    int s = 0;
    for (size_t i = 0; i < block_bases.size(); ++i) {
      if (block_bases[i].rows() != st.chain().size(static_cast<int>(i)))
        throw StructuralError("constraint block " + std::to_string(i) + " has wrong row count");
      s += static_cast<int>(block_bases[i].cols());
    }
    Matrix b(st.dim(), s);
    int col = 0;
    for (size_t i = 0; i < block_bases.size(); ++i)
      for (int c = 0; c < block_bases[i].cols(); ++c)
        b.col(col++) = st.lifted_block(static_cast<int>(i), block_bases[i].col(c));
    auto out = from_basis(std::move(b));
    out.block_bases_ = block_bases;
    return out;
  }

  int dim() const { return dim_; }
  int rank() const { return static_cast<int>(basis_.cols()); }
  const Matrix& basis() const { return basis_; }
  /// Columns are the epsilon-unit substitutions: e_{A_r} + phi(e_r).
  const Matrix& graph_basis() const { return graph_basis_; }
  const std::vector<int>& independent() const { return independent_; }
  std::vector<int> dependent() const {
    std::vector<int> dep;
    for (int k = 0; k < dim(); ++k)
      if (std::find(independent_.begin(), independent_.end(), k) == independent_.end()) dep.push_back(k);
    return dep;
  }
  const Matrix& phi() const { return phi_; }
  /// Per-block bases when built with from_blocks, empty otherwise.
  const std::vector<Matrix>& block_bases() const { return block_bases_; }

  /// Distance of v from S (max-norm of the orthogonal residual).
  double residual(const Vector& v) const {
    if (v.size() != dim()) throw StructuralError("constraint residual: wrong vector length");
    const Vector c = basis_.colPivHouseholderQr().solve(v);
    return (basis_ * c - v).cwiseAbs().maxCoeff();
  }

  /// Coordinates of v in `basis()` (least squares).
  Vector coordinates(const Vector& v) const { return basis_.colPivHouseholderQr().solve(v); }

  static double projection_residual(const Matrix& a, const Matrix& b) {
    const Matrix coeffs = b.colPivHouseholderQr().solve(a);
    return (b * coeffs - a).cwiseAbs().maxCoeff();
  }

 private:
  static void check_rank(const Matrix& basis) {
    if (basis.cols() == 0 || basis.rows() < basis.cols())
      throw StructuralError("constraint basis must be dim x s with 1 <= s <= dim");
    Eigen::ColPivHouseholderQR<Matrix> qr(basis);
    qr.setThreshold(1e-12);
    if (qr.rank() != basis.cols()) throw StructuralError("constraint basis does not have full column rank");
  }

  static std::vector<int> pick_independent(const Matrix& basis) {
    Matrix m = basis.transpose();
    const int s = static_cast<int>(m.rows()), n = static_cast<int>(m.cols());
    std::vector<bool> row_used(static_cast<size_t>(s), false), col_used(static_cast<size_t>(n), false);
    std::vector<int> picked;
    for (int step = 0; step < s; ++step) {
      int br = -1, bc = -1;
      double best = -1.0;
      for (int c = 0; c < n; ++c) {
        if (col_used[static_cast<size_t>(c)]) continue;
        for (int r = 0; r < s; ++r) {
          if (row_used[static_cast<size_t>(r)]) continue;
          if (std::abs(m(r, c)) > best) {
            best = std::abs(m(r, c));
            br = r;
            bc = c;
          }
        }
      }
      row_used[static_cast<size_t>(br)] = true;
      col_used[static_cast<size_t>(bc)] = true;
      picked.push_back(bc);
      for (int r = 0; r < s; ++r)
        if (!row_used[static_cast<size_t>(r)]) m.row(r) -= (m(r, bc) / m(br, bc)) * m.row(br);
    }
    std::sort(picked.begin(), picked.end());
    return picked;
  }

  void build_graph_from_basis() {
    const int s = rank();
    Matrix ba(s, s);
    for (int r = 0; r < s; ++r) ba.row(r) = basis_.row(independent_[static_cast<size_t>(r)]);
    graph_basis_ = basis_ * ba.partialPivLu().solve(Matrix::Identity(s, s));
    const auto dep = dependent();
    phi_.resize(static_cast<Eigen::Index>(dep.size()), s);
    for (size_t r = 0; r < dep.size(); ++r) phi_.row(static_cast<Eigen::Index>(r)) = graph_basis_.row(dep[r]);
    for (int r = 0; r < s; ++r) {
      graph_basis_.row(independent_[static_cast<size_t>(r)]).setZero();
      graph_basis_(independent_[static_cast<size_t>(r)], r) = 1.0;
    }
  }

  void set_graph(int dim, std::vector<int> independent, Matrix phi) {
    std::sort(independent.begin(), independent.end());
    const int s = static_cast<int>(independent.size());
    if (s == 0 || s > dim) throw StructuralError("constraint graph needs 1..dim independent indices");
    if (std::adjacent_find(independent.begin(), independent.end()) != independent.end() || independent.front() < 0 ||
        independent.back() >= dim)
      throw StructuralError("constraint graph independent indices must be distinct and in range");
    if (phi.rows() != dim - s || phi.cols() != s)
      throw StructuralError("constraint graph phi must be (dim - s) x s");
    dim_ = dim;
    independent_ = std::move(independent);
    phi_ = std::move(phi);
    graph_basis_ = Matrix::Zero(dim, s);
    for (int r = 0; r < s; ++r) graph_basis_(independent_[static_cast<size_t>(r)], r) = 1.0;
    const auto dep = dependent();
    for (size_t r = 0; r < dep.size(); ++r) graph_basis_.row(dep[r]) = phi_.row(static_cast<Eigen::Index>(r));
  }

  int dim_ = 0;
  Matrix basis_;
  Matrix graph_basis_;
  std::vector<int> independent_;
  Matrix phi_;
  std::vector<Matrix> block_bases_;
};

inline void check_dims(const StagedStructure& st, const QuadraticLagrangian& lag) {
  if (lag.dim() != st.dim()) throw StructuralError("Lagrangian dimension does not match algebra");
}

/// delta v = omega_dot + [v, omega], bracket assembled by stages.
inline Vector allowed_variation(const StagedStructure& st, const Vector& v, const Vector& omega,
                                const Vector& omega_dot) {
  if (omega_dot.size() != st.dim()) throw StructuralError("allowed_variation: wrong omega_dot length");
  return omega_dot + st.bracket_by_stages(v, omega);
}

namespace detail {

/// Staged coordinates of [v, xi] for xi carried by staged block i only (value nu).
/// Terms follow the staged bracket with every etab^(j), j != i, set to zero.
inline Vector bracket_with_block(const StagedStructure& st, const Vector& eta, int i, const Vector& nu) {
  Vector out = Vector::Zero(st.dim());
  out.segment(st.chain().offset(i), st.chain().size(i)) = st.quotient_bracket(i, st.block(eta, i), nu);
  const Vector lifted = st.lifted_block(i, nu);
  for (int j = 0; j < i; ++j) out += st.decompose(st.b_form(j + 1, st.block(eta, j), lifted));
  if (i < st.stages()) {
    const Vector corr = -st.a_form(i + 1, st.block(eta, i), nu) - st.b_form(i + 1, nu, st.tail_after(eta, i));
    out += st.decompose(corr);
  }
  return out;
}

}  // namespace detail

/**
 * Euler-Poincare equations by stages, block by block: for a test vector
 * nu in staged block i,
 *   beta_dot_i(nu) = <beta_i, [eta_i, nu] + sum_{j<i} b^(i)_j(eta_j, nu)>
 *     + sum_{m>i} <beta_m, -a^(m)_i(eta_i, nu) + sum_{j<i} b^(m)_j(eta_j, nu)
 *                           - b^(m)_i(nu, sum_{l>i} eta_l)>.
 * Returns v_dot = M^{-1} beta_dot.
 */
inline Vector ep_rhs(const StagedStructure& st, const QuadraticLagrangian& lag, const Vector& v) {
  check_dims(st, lag);
  const Vector eta = st.decompose(v);
  const Vector beta_staged = st.staged_covector(lag.fiber_derivative(v));
  Vector bdot(st.dim());
  for (int i = 0; i < st.chain().num_blocks(); ++i) {
    const int d = st.chain().size(i), o = st.chain().offset(i);
    for (int p = 0; p < d; ++p)
      bdot[o + p] = beta_staged.dot(detail::bracket_with_block(st, eta, i, Vector::Unit(d, p)));
  }
  return lag.velocity(st.raw_covector(bdot));
}

/// beta_dot(xi) = <beta, [v, xi]> with the bracket assembled by stages.
inline Vector ep_rhs_pairing(const StagedStructure& st, const QuadraticLagrangian& lag, const Vector& v) {
  check_dims(st, lag);
  const Vector beta = lag.fiber_derivative(v);
  Vector bdot(st.dim());
  for (int k = 0; k < st.dim(); ++k) bdot[k] = beta.dot(st.bracket_by_stages(v, st.algebra().basis_vector(k)));
  return lag.velocity(bdot);
}

/**
 * Literal block equations
 *   beta_dot_i|n_i = ad*_{eta_i} beta_i|n_i + beta_i(sum_{j<i} b^(i)_j(eta_j, .))|n_i,
 * which keep only the block-i part of each bracket. Agrees with ep_rhs
 * only when the cross-stage terms vanish.
 */
inline Vector ep_rhs_printed(const StagedStructure& st, const QuadraticLagrangian& lag, const Vector& v) {
  check_dims(st, lag);
  const Vector eta = st.decompose(v);
  const Vector beta_staged = st.staged_covector(lag.fiber_derivative(v));
  Vector bdot(st.dim());
  for (int i = 0; i < st.chain().num_blocks(); ++i) {
    const int d = st.chain().size(i), o = st.chain().offset(i);
    const Vector bi = st.block(beta_staged, i);
    for (int p = 0; p < d; ++p) {
      const Vector nu = Vector::Unit(d, p);
      Vector term = st.quotient_bracket(i, st.block(eta, i), nu);
      for (int j = 0; j < i; ++j)
        term += st.block(st.decompose(st.b_form(j + 1, st.block(eta, j), st.lifted_block(i, nu))), i);
      bdot[o + p] = bi.dot(term);
    }
  }
  return lag.velocity(st.raw_covector(bdot));
}

/// residual_k = <M v_dot, s_k> - <M v, [v, s_k]> over the columns s_k of the constraint basis.
inline Vector edp_residual(const StagedStructure& st, const QuadraticLagrangian& lag, const Vector& v,
                           const Vector& v_dot, const ConstraintSubspace& s, double tol = 1e-8) {
  check_dims(st, lag);
  if (s.dim() != st.dim()) throw StructuralError("constraint dimension does not match algebra");
  const double off = s.residual(v);
  if (off > tol) throw ConstraintViolation("velocity leaves the constraint subspace (residual " + std::to_string(off) + ")");
  const Vector mvdot = lag.fiber_derivative(v_dot), beta = lag.fiber_derivative(v);
  Vector r(s.rank());
  for (int k = 0; k < s.rank(); ++k) {
    const Vector sk = s.basis().col(k);
    r[k] = mvdot.dot(sk) - beta.dot(st.bracket_by_stages(v, sk));
  }
  return r;
}

/// c_dot for v = basis * c: (B^T M B) c_dot = [<M v, [v, s_k]>]_k.
inline Vector edp_rhs(const StagedStructure& st, const QuadraticLagrangian& lag, const ConstraintSubspace& s,
                      const Vector& c) {
  check_dims(st, lag);
  if (c.size() != s.rank()) throw StructuralError("edp_rhs: coordinate vector has wrong length");
  const Matrix& b = s.basis();
  const Vector v = b * c;
  const Vector beta = lag.fiber_derivative(v);
  Vector rhs(s.rank());
  for (int k = 0; k < s.rank(); ++k) rhs[k] = beta.dot(st.bracket_by_stages(v, b.col(k)));
  const Matrix reduced = b.transpose() * lag.mass() * b;
  Eigen::LLT<Matrix> llt(reduced);
  if (llt.info() != Eigen::Success) throw NumericError("reduced constraint mass matrix is not positive definite");
  return llt.solve(rhs);
}

}  // namespace sred
