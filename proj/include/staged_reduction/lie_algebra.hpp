#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"

namespace sred {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// One nonzero structure constant: [e_i, e_j] contains coeff * e_k.
struct BracketTerm {
  int i = 0;
  int j = 0;
  int k = 0;
  double coeff = 0.0;
};

/**
 * Finite-dimensional real Lie algebra given by structure constants
 * c[i][j][k], meaning [e_i, e_j] = sum_k c[i][j][k] e_k.
 *
 * The tensor is stored densely. Algebra elements are coordinate vectors
 * in the basis e_0..e_{dim-1}; covectors are coordinate vectors in the
 * dual basis, so the pairing is the plain dot product.
 *
 * Construction from a dense tensor performs no axiom checks (see
 * validate()); construction from bracket terms enforces antisymmetry by
 * filling c[j][i][k] = -c[i][j][k].
 */
class LieAlgebra {
 public:
  LieAlgebra() = default;

  /// `c` is indexed as c[(i * dim + j) * dim + k].
  LieAlgebra(std::vector<std::string> basis_names, std::vector<double> c)
      : names_(std::move(basis_names)), c_(std::move(c)) {
    const auto n = names_.size();
    if (n == 0) throw StructuralError("Lie algebra must have positive dimension");
    if (c_.size() != n * n * n)
      throw StructuralError("structure tensor has " + std::to_string(c_.size()) +
                            " entries, expected dim^3 = " + std::to_string(n * n * n));
    build_ad_cache();
  }

  /// Builds from upper-triangular bracket terms (i < j required).
  static LieAlgebra from_brackets(std::vector<std::string> basis_names,
                                  const std::vector<BracketTerm>& terms) {
    const int n = static_cast<int>(basis_names.size());
    std::vector<double> c(static_cast<size_t>(n) * n * n, 0.0);
    for (const auto& t : terms) {
      if (t.i < 0 || t.j < 0 || t.k < 0 || t.i >= n || t.j >= n || t.k >= n)
        throw StructuralError("bracket term index out of range");
      if (t.i >= t.j) throw StructuralError("bracket terms require i < j");
      c[(static_cast<size_t>(t.i) * n + t.j) * n + t.k] += t.coeff;
      c[(static_cast<size_t>(t.j) * n + t.i) * n + t.k] -= t.coeff;
    }
    return LieAlgebra(std::move(basis_names), std::move(c));
  }

  int dim() const { return static_cast<int>(names_.size()); }
  const std::vector<std::string>& basis_names() const { return names_; }

  double c(int i, int j, int k) const {
    const auto n = static_cast<size_t>(dim());
    return c_[(static_cast<size_t>(i) * n + j) * n + k];
  }

  Vector basis_vector(int i) const { return Vector::Unit(dim(), i); }

  /// Matrix of w -> [e_i, w].
  const Matrix& ad_basis(int i) const { return ad_basis_[static_cast<size_t>(i)]; }

  /// Matrix of w -> [u, w].
  Matrix ad(const Vector& u) const {
    check(u, "ad");
    Matrix m = Matrix::Zero(dim(), dim());
    for (int i = 0; i < dim(); ++i)
      if (u[i] != 0.0) m += u[i] * ad_basis_[static_cast<size_t>(i)];
    return m;
  }

  Vector bracket(const Vector& u, const Vector& v) const {
    check(u, "bracket");
    check(v, "bracket");
    Vector out = Vector::Zero(dim());
    for (int i = 0; i < dim(); ++i)
      if (u[i] != 0.0) out.noalias() += u[i] * (ad_basis_[static_cast<size_t>(i)] * v);
    return out;
  }

  /// ad*_v mu, defined by <ad*_v mu, w> = <mu, [v, w]>.
  Vector ad_star(const Vector& v, const Vector& mu) const {
    check(v, "ad_star");
    check(mu, "ad_star");
    return ad(v).transpose() * mu;
  }

 private:
  void check(const Vector& x, const char* op) const {
    if (x.size() != dim())
      throw StructuralError(std::string(op) + ": vector of length " + std::to_string(x.size()) +
                            " for algebra of dimension " + std::to_string(dim()));
  }

  void build_ad_cache() {
    const int n = dim();
    ad_basis_.assign(static_cast<size_t>(n), Matrix::Zero(n, n));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) ad_basis_[static_cast<size_t>(i)](k, j) = c(i, j, k);
  }

  std::vector<std::string> names_;
  std::vector<double> c_;
  std::vector<Matrix> ad_basis_;
};

struct AlgebraReport {
  double antisymmetry_residual = 0.0;
  double jacobi_residual = 0.0;
  bool passed = false;
};

/// Checks antisymmetry and the Jacobi identity on all basis triples.
inline AlgebraReport validate(const LieAlgebra& alg, double tol = 1e-12) {
  const int n = alg.dim();
  AlgebraReport r;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        r.antisymmetry_residual =
            std::max(r.antisymmetry_residual, std::abs(alg.c(i, j, k) + alg.c(j, i, k)));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        const Vector ei = alg.basis_vector(i), ej = alg.basis_vector(j), ek = alg.basis_vector(k);
        const Vector s = alg.bracket(ei, alg.bracket(ej, ek)) + alg.bracket(ej, alg.bracket(ek, ei)) +
                         alg.bracket(ek, alg.bracket(ei, ej));
        r.jacobi_residual = std::max(r.jacobi_residual, s.cwiseAbs().maxCoeff());
      }
  r.passed = r.antisymmetry_residual <= tol && r.jacobi_residual <= tol;
  return r;
}

}  // namespace sred
