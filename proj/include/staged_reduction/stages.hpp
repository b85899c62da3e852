#pragma once

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "lie_algebra.hpp"

namespace sred {

/**
 * Layout of a chain of nested ideals g = n_0 > n_1 > ... > n_n > {0}.
 *
 * Block i holds consecutive basis indices and carries the quotient
 * n_i / n_{i+1}; n_j is the span of blocks j..n.
 */
class StageChain {
 public:
  StageChain() = default;
  explicit StageChain(std::vector<int> blocks) : blocks_(std::move(blocks)) {
    if (blocks_.empty()) throw StructuralError("stage chain needs at least one block");
    offsets_.reserve(blocks_.size() + 1);
    int o = 0;
    for (int d : blocks_) {
      if (d <= 0) throw StructuralError("stage chain blocks must be nonempty");
      offsets_.push_back(o);
      o += d;
    }
    offsets_.push_back(o);
  }

  /// Single block: no reduction stages.
  static StageChain trivial(int dim) { return StageChain({dim}); }

  int num_blocks() const { return static_cast<int>(blocks_.size()); }
  /// Number of proper ideals in the chain (n).
  int stages() const { return num_blocks() - 1; }
  int size(int i) const { return blocks_[static_cast<size_t>(i)]; }
  int offset(int i) const { return offsets_[static_cast<size_t>(i)]; }
  int dim() const { return offsets_.back(); }
  const std::vector<int>& blocks() const { return blocks_; }

  /// Block index holding basis index k.
  int block_of(int k) const {
    const auto it = std::upper_bound(offsets_.begin(), offsets_.end(), k);
    return static_cast<int>(it - offsets_.begin()) - 1;
  }

 private:
  std::vector<int> blocks_;
  std::vector<int> offsets_;
};

/// Symmetric positive definite inner product on g.
class Metric {
 public:
  Metric() = default;
  explicit Metric(Matrix gram) : gram_(std::move(gram)) {
    if (gram_.rows() != gram_.cols() || gram_.rows() == 0)
      throw StructuralError("metric Gram matrix must be square and nonempty");
    const double asym = (gram_ - gram_.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-14 * std::max(1.0, gram_.cwiseAbs().maxCoeff()))
      throw StructuralError("metric Gram matrix is not symmetric (residual " + std::to_string(asym) + ")");
    if (Eigen::LLT<Matrix>(gram_).info() != Eigen::Success)
      throw NumericError("metric Gram matrix is not positive definite");
  }

  static Metric identity(int n) { return Metric(Matrix::Identity(n, n)); }

  const Matrix& gram() const { return gram_; }
  int dim() const { return static_cast<int>(gram_.rows()); }

 private:
  Matrix gram_;
};

struct ChainReport {
  double ideal_residual = 0.0;
  bool passed = false;
};

/// Checks [n_{j-1}, n_j] is contained in n_j for every stage j.
inline ChainReport validate_chain(const LieAlgebra& alg, const StageChain& chain, double tol = 1e-12) {
  if (chain.dim() != alg.dim())
    throw StructuralError("chain blocks sum to " + std::to_string(chain.dim()) + " but algebra has dimension " +
                          std::to_string(alg.dim()));
  ChainReport r;
  for (int j = 1; j <= chain.stages(); ++j) {
    const int lo = chain.offset(j);
    for (int a = chain.offset(j - 1); a < alg.dim(); ++a)
      for (int b = lo; b < alg.dim(); ++b)
        for (int k = 0; k < lo; ++k) r.ideal_residual = std::max(r.ideal_residual, std::abs(alg.c(a, b, k)));
  }
  r.passed = r.ideal_residual <= tol;
  return r;
}

/**
 * Algebra, chain and metric together with the per-stage horizontal lifts
 * and the bilinear forms b_(N_{j-1},N_j) and a_(N_{j-1},N_j).
 *
 * Stage j (1 <= j <= n) is the bundle N_{j-1} -> N_{j-1}/N_j. Its
 * horizontal lift sends a block-(j-1) vector kappa to the unique
 * w in n_{j-1} with w - iota(kappa) in n_j and w orthogonal to n_j.
 *
 * Staged coordinates: every u in g is written uniquely as
 *   u = sum_{i<n} lift_{i+1}(eta^(i)) + iota(eta^(n)),
 * so eta^(i) is the class of the n_i-remainder in n_i / n_{i+1}. With a
 * block-orthogonal metric these coincide with the raw coordinate blocks.
 * The staged bracket formula holds in these coordinates for every SPD
 * metric.
 */
class StagedStructure {
 public:
  StagedStructure(LieAlgebra alg, StageChain chain, Metric metric, double tol = 1e-12)
      : alg_(std::move(alg)), chain_(std::move(chain)), metric_(std::move(metric)) {
    const int n = alg_.dim();
    if (chain_.dim() != n)
      throw StructuralError("chain blocks sum to " + std::to_string(chain_.dim()) + ", algebra dimension is " +
                            std::to_string(n));
    if (metric_.dim() != n) throw StructuralError("metric dimension does not match algebra");
    const auto report = validate_chain(alg_, chain_, tol);
    if (!report.passed)
      throw StructuralError("blocks do not form a chain of ideals (residual " + std::to_string(report.ideal_residual) +
                            ")");
    build_lifts();
    build_forms(tol);
  }

  const LieAlgebra& algebra() const { return alg_; }
  const StageChain& chain() const { return chain_; }
  const Metric& metric() const { return metric_; }
  int dim() const { return alg_.dim(); }
  int stages() const { return chain_.stages(); }

  /// Raw coordinates of block i.
  Vector block(const Vector& x, int i) const { return x.segment(chain_.offset(i), chain_.size(i)); }

  /// Coordinate embedding of a block-i vector into g.
  Vector embed(int i, const Vector& values) const {
    check_block(i, values, "embed");
    Vector out = Vector::Zero(dim());
    out.segment(chain_.offset(i), chain_.size(i)) = values;
    return out;
  }

  /// dim x d_{j-1} matrix of the stage-j horizontal lift.
  const Matrix& lift_matrix(int j) const {
    check_stage(j);
    return lifts_[static_cast<size_t>(j - 1)];
  }

  Vector horizontal_lift(int j, const Vector& kappa) const {
    check_stage(j);
    check_block(j - 1, kappa, "horizontal_lift");
    return lifts_[static_cast<size_t>(j - 1)] * kappa;
  }

  /// A_{N_j}(e)(v) for v in n_{j-1}: the n_j component along the horizontal complement.
  Vector connection_project(int j, const Vector& v) const {
    check_stage(j);
    check_full(v, "connection_project");
    const int lo = chain_.offset(j - 1);
    if (lo > 0 && v.head(lo).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + v.cwiseAbs().maxCoeff()))
      throw StructuralError("connection_project: vector is not in n_{j-1}");
    Vector out = v - horizontal_lift(j, block(v, j - 1));
    if (lo > 0) out.head(lo).setZero();
    out.segment(lo, chain_.size(j - 1)).setZero();
    return out;
  }

  /// b_(N_{j-1},N_j)(kappa, eta) = [kappa^hor, eta], eta in n_j.
  Vector b_form(int j, const Vector& kappa, const Vector& eta) const {
    check_stage(j);
    check_block(j - 1, kappa, "b_form");
    check_full(eta, "b_form");
    const int lo = chain_.offset(j);
    const auto& slabs = b_[static_cast<size_t>(j - 1)];
    const Vector tail = eta.tail(dim() - lo);
    Vector out = Vector::Zero(dim());
    for (int p = 0; p < kappa.size(); ++p)
      if (kappa[p] != 0.0) out.noalias() += kappa[p] * (slabs[static_cast<size_t>(p)] * tail);
    return out;
  }

  /// a_(N_{j-1},N_j)(kappa, kappa_bar) = -A_{N_j}([kappa^hor, kappa_bar^hor]).
  Vector a_form(int j, const Vector& kappa, const Vector& kappa_bar) const {
    check_stage(j);
    check_block(j - 1, kappa, "a_form");
    check_block(j - 1, kappa_bar, "a_form");
    const auto& slabs = a_[static_cast<size_t>(j - 1)];
    Vector out = Vector::Zero(dim());
    for (int p = 0; p < kappa.size(); ++p)
      if (kappa[p] != 0.0) out.noalias() += kappa[p] * (slabs[static_cast<size_t>(p)] * kappa_bar);
    return out;
  }

  /// Per-stage tensors: slab p is the dim x dim(n_j) matrix of eta -> b_j(e_p, eta).
  const std::vector<Matrix>& b_tensor(int j) const {
    check_stage(j);
    return b_[static_cast<size_t>(j - 1)];
  }
  /// Slab p is the dim x d_{j-1} matrix of kappa_bar -> a_j(e_p, kappa_bar).
  const std::vector<Matrix>& a_tensor(int j) const {
    check_stage(j);
    return a_[static_cast<size_t>(j - 1)];
  }

  /// Staged coordinates of u.
  Vector decompose(const Vector& u) const {
    check_full(u, "decompose");
    return compose_.triangularView<Eigen::UnitLower>().solve(u);
  }

  Vector compose(const Vector& eta) const {
    check_full(eta, "compose");
    return compose_ * eta;
  }

  /// Unit lower-triangular matrix mapping staged coordinates to raw ones.
  const Matrix& compose_matrix() const { return compose_; }

  /// The element of g carried by staged block k alone.
  Vector lifted_block(int k, const Vector& eta_k) const {
    check_block(k, eta_k, "lifted_block");
    if (k == stages()) return embed(k, eta_k);
    return lifts_[static_cast<size_t>(k)] * eta_k;
  }

  /// sum_{k>j} of the staged blocks of eta, as an element of n_{j+1}.
  Vector tail_after(const Vector& eta, int j) const {
    Vector t = eta;
    t.head(chain_.offset(j + 1)).setZero();
    return compose(t);
  }

  /// Staged components of a covector: beta_(i,i+1) = beta restricted to the lifted block i.
  Vector staged_covector(const Vector& beta) const {
    check_full(beta, "staged_covector");
    return compose_.transpose() * beta;
  }

  Vector raw_covector(const Vector& beta_staged) const {
    check_full(beta_staged, "raw_covector");
    return compose_.transpose().triangularView<Eigen::UnitUpper>().solve(beta_staged);
  }

  /// Bracket of n_i / n_{i+1}: block-i part of [iota(k1), iota(k2)].
  Vector quotient_bracket(int i, const Vector& k1, const Vector& k2) const {
    return block(alg_.bracket(embed(i, k1), embed(i, k2)), i);
  }

  /**
   * Lie bracket assembled stage by stage:
   *   out^(i) = [eta^(i), etab^(i)]
   *     + sum_{j<i} ( -a^(i)_j(eta^(j), etab^(j))
   *                   + b^(i)_j(eta^(j), sum_{k>j} etab^(k))
   *                   - b^(i)_j(etab^(j), sum_{l>j} eta^(l)) ).
   * The sum over i > j is taken at once by decomposing the n_{j+1}-valued
   * correction of stage j+1.
   */
  Vector bracket_by_stages(const Vector& u, const Vector& v) const {
    const Vector eta = decompose(u);
    const Vector etab = decompose(v);
    Vector out = Vector::Zero(dim());
    for (int i = 0; i < chain_.num_blocks(); ++i)
      out.segment(chain_.offset(i), chain_.size(i)) = quotient_bracket(i, block(eta, i), block(etab, i));
    for (int j = 0; j < stages(); ++j) {
      const Vector kj = block(eta, j), kbj = block(etab, j);
      const Vector corr =
          -a_form(j + 1, kj, kbj) + b_form(j + 1, kj, tail_after(etab, j)) - b_form(j + 1, kbj, tail_after(eta, j));
      out += decompose(corr);
    }
    return compose(out);
  }

 private:
  void check_stage(int j) const {
    if (j < 1 || j > stages())
      throw StructuralError("stage index " + std::to_string(j) + " outside 1.." + std::to_string(stages()));
  }
  void check_block(int i, const Vector& x, const char* op) const {
    if (x.size() != chain_.size(i))
      throw StructuralError(std::string(op) + ": block " + std::to_string(i) + " vector has length " +
                            std::to_string(x.size()) + ", expected " + std::to_string(chain_.size(i)));
  }
  void check_full(const Vector& x, const char* op) const {
    if (x.size() != dim())
      throw StructuralError(std::string(op) + ": vector of length " + std::to_string(x.size()) +
                            ", expected " + std::to_string(dim()));
  }

  void build_lifts() {
    const int n = dim();
    const Matrix& g = metric_.gram();
    compose_ = Matrix::Identity(n, n);
    lifts_.clear();
    for (int j = 1; j <= stages(); ++j) {
      const int o = chain_.offset(j - 1), d = chain_.size(j - 1), lo = chain_.offset(j), m = n - lo;
      // w = iota(kappa) + tail, <w, e_q> = 0 for q in n_j  =>  G_tt tail = -G_tk kappa
      Eigen::LLT<Matrix> llt(g.block(lo, lo, m, m));
      if (llt.info() != Eigen::Success) throw NumericError("singular n_j Gram block at stage " + std::to_string(j));
      Matrix lift = Matrix::Zero(n, d);
      lift.block(o, 0, d, d).setIdentity();
      lift.block(lo, 0, m, d) = -llt.solve(g.block(lo, o, m, d));
      compose_.block(0, o, n, d) = lift;
      lifts_.push_back(std::move(lift));
    }
  }

  void build_forms(double tol) {
    const int n = dim();
    b_.clear();
    a_.clear();
    for (int j = 1; j <= stages(); ++j) {
      const int d = chain_.size(j - 1), lo = chain_.offset(j), m = n - lo;
      const Matrix& lift = lifts_[static_cast<size_t>(j - 1)];
      std::vector<Matrix> bj, aj;
      for (int p = 0; p < d; ++p) {
        const Vector hp = lift.col(p);
        Matrix bs(n, m);
        for (int q = 0; q < m; ++q) bs.col(q) = alg_.bracket(hp, alg_.basis_vector(lo + q));
        check_in_ideal(bs, lo, tol, "b", j);
        Matrix as(n, d);
        for (int r = 0; r < d; ++r) {
          const Vector br = alg_.bracket(hp, lift.col(r));
          // -A_{N_j}(w) = -(w - lift(block_{j-1} w)) restricted to n_j
          Vector proj = br - lift * block(br, j - 1);
          check_in_ideal(proj, lo, tol, "a", j);
          proj.head(lo).setZero();
          as.col(r) = -proj;
        }
        bj.push_back(std::move(bs));
        aj.push_back(std::move(as));
      }
      for (int p = 0; p < d; ++p)
        for (int r = 0; r < d; ++r) {
          const double asym = (aj[static_cast<size_t>(p)].col(r) + aj[static_cast<size_t>(r)].col(p)).cwiseAbs().maxCoeff();
          if (asym > tol * (1.0 + aj[static_cast<size_t>(p)].cwiseAbs().maxCoeff()))
            throw InvariantViolation("a form of stage " + std::to_string(j) + " is not antisymmetric");
        }
      b_.push_back(std::move(bj));
      a_.push_back(std::move(aj));
    }
  }

  static void check_in_ideal(const Matrix& values, int lo, double tol, const char* form, int j) {
    if (lo == 0) return;
    const double escape = values.topRows(lo).cwiseAbs().maxCoeff();
    if (escape > tol * (1.0 + values.cwiseAbs().maxCoeff()))
      throw InvariantViolation(std::string(form) + " form of stage " + std::to_string(j) +
                               " escapes n_j (residual " + std::to_string(escape) +
                               "); the chain is not a chain of ideals");
  }

  LieAlgebra alg_;
  StageChain chain_;
  Metric metric_;
  std::vector<Matrix> lifts_;
  Matrix compose_;
  std::vector<std::vector<Matrix>> b_;
  std::vector<std::vector<Matrix>> a_;
};

namespace detail {

/// Staged block i of a stage-s b value, with the second argument given as staged block k.
inline Vector b_component(const StagedStructure& S, int s, int i, const Vector& kappa, int k, const Vector& eta_k) {
  return S.block(S.decompose(S.b_form(s, kappa, S.lifted_block(k, eta_k))), i);
}

inline Vector a_component(const StagedStructure& S, int s, int i, const Vector& kappa, const Vector& kappa_bar) {
  return S.block(S.decompose(S.a_form(s, kappa, kappa_bar)), i);
}

inline void require_blocks(const StagedStructure& S, int count, const char* op) {
  if (S.chain().num_blocks() != count)
    throw StructuralError(std::string(op) + " needs a chain with exactly " + std::to_string(count) + " blocks");
}

}  // namespace detail

/// Two blocks: [k+e, kb+eb] = [k,kb] (+) ( b(k,eb) - b(kb,e) - a(k,kb) + [e,eb] ).
inline Vector expand_two_stage(const StagedStructure& S, const Vector& u, const Vector& v) {
  detail::require_blocks(S, 2, "expand_two_stage");
  const Vector e = S.decompose(u), eb = S.decompose(v);
  const Vector k = S.block(e, 0), kb = S.block(eb, 0);
  const Vector eta = S.embed(1, S.block(e, 1)), etab = S.embed(1, S.block(eb, 1));
  Vector out(S.dim());
  out.head(S.chain().size(0)) = S.quotient_bracket(0, k, kb);
  const Vector tail = S.b_form(1, k, etab) - S.b_form(1, kb, eta) - S.a_form(1, k, kb) + S.algebra().bracket(eta, etab);
  out.tail(S.chain().size(1)) = S.block(tail, 1);
  return S.compose(out);
}

/// Three blocks, term by term as printed for n = 2.
inline Vector expand_three_stage(const StagedStructure& S, const Vector& u, const Vector& v) {
  using detail::a_component;
  using detail::b_component;
  detail::require_blocks(S, 3, "expand_three_stage");
  const Vector e = S.decompose(u), eb = S.decompose(v);
  const Vector e0 = S.block(e, 0), e1 = S.block(e, 1), e2 = S.block(e, 2);
  const Vector f0 = S.block(eb, 0), f1 = S.block(eb, 1), f2 = S.block(eb, 2);

  const Vector out0 = S.quotient_bracket(0, e0, f0);
  const Vector out1 = S.quotient_bracket(1, e1, f1) + b_component(S, 1, 1, e0, 1, f1) + b_component(S, 1, 1, e0, 2, f2) -
                      b_component(S, 1, 1, f0, 1, e1) - b_component(S, 1, 1, f0, 2, e2) - a_component(S, 1, 1, e0, f0);
  const Vector out2 = S.quotient_bracket(2, e2, f2) + b_component(S, 1, 2, e0, 1, f1) + b_component(S, 1, 2, e0, 2, f2) -
                      b_component(S, 1, 2, f0, 1, e1) - b_component(S, 1, 2, f0, 2, e2) - a_component(S, 1, 2, e0, f0) +
                      b_component(S, 2, 2, e1, 2, f2) - b_component(S, 2, 2, f1, 2, e2) - a_component(S, 2, 2, e1, f1);
  Vector out(S.dim());
  out << out0, out1, out2;
  return S.compose(out);
}

/// Four blocks, term by term as printed for n = 3 (with the second arguments of the
/// -b(etab^(0,1), .) terms in block (1,2) read as eta).
inline Vector expand_four_stage(const StagedStructure& S, const Vector& u, const Vector& v) {
  using detail::a_component;
  using detail::b_component;
  detail::require_blocks(S, 4, "expand_four_stage");
  const Vector e = S.decompose(u), eb = S.decompose(v);
  const Vector e0 = S.block(e, 0), e1 = S.block(e, 1), e2 = S.block(e, 2), e3 = S.block(e, 3);
  const Vector f0 = S.block(eb, 0), f1 = S.block(eb, 1), f2 = S.block(eb, 2), f3 = S.block(eb, 3);

  const Vector out0 = S.quotient_bracket(0, e0, f0);
  const Vector out1 = S.quotient_bracket(1, e1, f1) + b_component(S, 1, 1, e0, 1, f1) + b_component(S, 1, 1, e0, 2, f2) +
                      b_component(S, 1, 1, e0, 3, f3) - b_component(S, 1, 1, f0, 1, e1) -
                      b_component(S, 1, 1, f0, 2, e2) - b_component(S, 1, 1, f0, 3, e3) - a_component(S, 1, 1, e0, f0);
  const Vector out2 = b_component(S, 1, 2, e0, 1, f1) + b_component(S, 1, 2, e0, 2, f2) + b_component(S, 1, 2, e0, 3, f3) -
                      b_component(S, 1, 2, f0, 1, e1) - b_component(S, 1, 2, f0, 2, e2) -
                      b_component(S, 1, 2, f0, 3, e3) - a_component(S, 1, 2, e0, f0) + S.quotient_bracket(2, e2, f2) +
                      b_component(S, 2, 2, e1, 2, f2) + b_component(S, 2, 2, e1, 3, f3) -
                      b_component(S, 2, 2, f1, 2, e2) - b_component(S, 2, 2, f1, 3, e3) - a_component(S, 2, 2, e1, f1);
  const Vector out3 = S.quotient_bracket(3, e3, f3) + b_component(S, 1, 3, e0, 1, f1) + b_component(S, 1, 3, e0, 2, f2) +
                      b_component(S, 1, 3, e0, 3, f3) - b_component(S, 1, 3, f0, 1, e1) -
                      b_component(S, 1, 3, f0, 2, e2) - b_component(S, 1, 3, f0, 3, e3) - a_component(S, 1, 3, e0, f0) +
                      b_component(S, 2, 3, e1, 2, f2) + b_component(S, 2, 3, e1, 3, f3) -
                      b_component(S, 2, 3, f1, 2, e2) - b_component(S, 2, 3, f1, 3, e3) - a_component(S, 2, 3, e1, f1) +
                      b_component(S, 3, 3, e2, 3, f3) - b_component(S, 3, 3, f2, 3, e3) - a_component(S, 3, 3, e2, f2);
  Vector out(S.dim());
  out << out0, out1, out2, out3;
  return S.compose(out);
}

}  // namespace sred
