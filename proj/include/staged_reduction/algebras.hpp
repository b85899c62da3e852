#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "lie_algebra.hpp"

// Small catalogue of algebras used by the CLI scenarios and the tests.
namespace sred::algebras {

/// Heisenberg algebra h3, basis X, Y, Z with [X, Y] = Z.
inline LieAlgebra heisenberg() { return LieAlgebra::from_brackets({"X", "Y", "Z"}, {{0, 1, 2, 1.0}}); }

/// so(3) with c[i][j][k] = epsilon_ijk.
inline LieAlgebra so3() {
  return LieAlgebra::from_brackets({"e1", "e2", "e3"},
                                   {{0, 1, 2, 1.0}, {1, 2, 0, 1.0}, {0, 2, 1, -1.0}});
}

/// se(2), basis J, P1, P2 with [J, P1] = P2, [J, P2] = -P1.
inline LieAlgebra se2() {
  return LieAlgebra::from_brackets({"J", "P1", "P2"}, {{0, 1, 2, 1.0}, {0, 2, 1, -1.0}});
}

inline LieAlgebra abelian(int n) {
  std::vector<std::string> names;
  for (int i = 0; i < n; ++i) names.push_back("a" + std::to_string(i));
  return LieAlgebra::from_brackets(std::move(names), {});
}

/**
 * Strictly upper-triangular n x n matrices. Basis E_ij (i < j, 1-based
 * names) ordered by superdiagonal: E12, E23, ..., then E13, E24, ...,
 * ending with E1n. With this ordering the lower central series is the
 * block chain [n-1, n-2, ..., 1].
 */
inline LieAlgebra strictly_upper_triangular(int n) {
  std::vector<std::pair<int, int>> elems;
  for (int d = 1; d < n; ++d)
    for (int i = 0; i + d < n; ++i) elems.emplace_back(i, i + d);
  std::map<std::pair<int, int>, int> index;
  std::vector<std::string> names;
  for (size_t a = 0; a < elems.size(); ++a) {
    index[elems[a]] = static_cast<int>(a);
    names.push_back("E" + std::to_string(elems[a].first + 1) + std::to_string(elems[a].second + 1));
  }
  // [E_ij, E_kl] = delta_jk E_il - delta_li E_kj
  std::vector<BracketTerm> terms;
  for (size_t a = 0; a < elems.size(); ++a)
    for (size_t b = a + 1; b < elems.size(); ++b) {
      const auto [i, j] = elems[a];
      const auto [k, l] = elems[b];
      if (j == k) terms.push_back({static_cast<int>(a), static_cast<int>(b), index.at({i, l}), 1.0});
      if (l == i) terms.push_back({static_cast<int>(a), static_cast<int>(b), index.at({k, j}), -1.0});
    }
  return LieAlgebra::from_brackets(std::move(names), terms);
}

/// Direct sum a (+) b; basis of a first.
inline LieAlgebra direct_sum(const LieAlgebra& a, const LieAlgebra& b) {
  const int na = a.dim(), nb = b.dim(), n = na + nb;
  std::vector<std::string> names = a.basis_names();
  names.insert(names.end(), b.basis_names().begin(), b.basis_names().end());
  std::vector<double> c(static_cast<size_t>(n) * n * n, 0.0);
  auto at = [n](int i, int j, int k) { return (static_cast<size_t>(i) * n + j) * n + k; };
  for (int i = 0; i < na; ++i)
    for (int j = 0; j < na; ++j)
      for (int k = 0; k < na; ++k) c[at(i, j, k)] = a.c(i, j, k);
  for (int i = 0; i < nb; ++i)
    for (int j = 0; j < nb; ++j)
      for (int k = 0; k < nb; ++k) c[at(na + i, na + j, na + k)] = b.c(i, j, k);
  return LieAlgebra(std::move(names), std::move(c));
}

}  // namespace sred::algebras
