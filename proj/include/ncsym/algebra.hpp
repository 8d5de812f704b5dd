#ifndef NCSYM_ALGEBRA_HPP
#define NCSYM_ALGEBRA_HPP

#include "ncsym/core.hpp"

#include <unsupported/Eigen/KroneckerProduct>

#include <algorithm>
#include <bit>
#include <memory>
#include <numeric>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace ncsym {

enum class AlgebraKind { Matrix, GradedMatrix, Grassmann, Tensor, Custom };

class Algebra;
using AlgebraPtr = std::shared_ptr<const Algebra>;

struct KindTag {
  AlgebraKind kind = AlgebraKind::Custom;
  int n = 0;  // matrix size or number of Grassmann generators
  int p = 0;  // even block size for graded matrices
  int q = 0;  // odd block size for graded matrices
  AlgebraPtr left, right;  // tensor factors
};

inline std::string kind_name(AlgebraKind k)
{
  switch (k) {
    case AlgebraKind::Matrix: return "matrix";
    case AlgebraKind::GradedMatrix: return "gradedMatrix";
    case AlgebraKind::Grassmann: return "grassmann";
    case AlgebraKind::Tensor: return "tensor";
    case AlgebraKind::Custom: return "custom";
  }
  return "custom";
}

/// Residuals of the defining identities of a finite-dimensional *-superalgebra.
struct AlgebraCheck {
  double associativity = 0.0;
  double unit = 0.0;
  double parity = 0.0;
  double involution_antihom = 0.0;  // (AB)* = eta B* A*
  double involution_square = 0.0;   // (A*)* = A
  double involution_unit = 0.0;     // I* = I
  double max() const
  {
    return std::max({associativity, unit, parity, involution_antihom, involution_square,
                     involution_unit});
  }
};

/// Finite-dimensional associative unital *-superalgebra given by structure constants.
///
/// The product is stored as left-multiplication matrices: left_mult(i)(k, j) = c[i][j][k],
/// i.e. e_i e_j = sum_k c[i][j][k] e_k. The involution is antilinear, A* = J conj(a).
class Algebra {
public:
  struct Data {
    std::string id;
    std::vector<std::string> labels;
    std::vector<Parity> parity;
    std::vector<Mat> left_mult;
    Vec unit;
    Mat involution;
    KindTag kind;
    std::vector<Mat> realization;  // optional: matrix image of each basis element
  };

  /// Builds and validates; throws VerificationError if any defining identity fails at tol.
  /// A negative tol skips validation for data that is valid by construction.
  static AlgebraPtr create(Data d, double tol = 1e-12)
  {
    auto a = std::shared_ptr<Algebra>(new Algebra(std::move(d)));
    if (tol < 0) return a;
    const auto chk = a->check();
    if (chk.max() > tol) {
      std::ostringstream os;
      os << "algebra '" << a->d_.id << "' fails validation: assoc=" << chk.associativity
         << " unit=" << chk.unit << " parity=" << chk.parity
         << " inv=" << chk.involution_antihom << "/" << chk.involution_square << "/"
         << chk.involution_unit;
      throw VerificationError(os.str());
    }
    return a;
  }

  int dim() const { return static_cast<int>(d_.left_mult.size()); }
  const std::string& id() const { return d_.id; }
  const std::vector<std::string>& labels() const { return d_.labels; }
  Parity parity(int i) const { return d_.parity[i]; }
  const std::vector<Parity>& parities() const { return d_.parity; }
  const KindTag& kind() const { return d_.kind; }
  const Vec& unit() const { return d_.unit; }
  const Mat& involution_matrix() const { return d_.involution; }
  const Mat& left_mult(int i) const { return d_.left_mult[i]; }
  cplx structure(int i, int j, int k) const { return d_.left_mult[i](k, j); }
  bool has_realization() const { return !d_.realization.empty(); }
  const std::vector<Mat>& realization() const { return d_.realization; }
  const Data& data() const { return d_; }

  bool is_graded() const
  {
    return std::any_of(d_.parity.begin(), d_.parity.end(),
                       [](Parity p) { return p == Parity::Odd; });
  }

  Vec basis(int i) const
  {
    Vec v = Vec::Zero(dim());
    v(i) = 1.0;
    return v;
  }

  Vec zero() const { return Vec::Zero(dim()); }

  /// Left multiplication operator mu(a): b -> ab.
  Mat left_mult(const Vec& a) const
  {
    Mat m = Mat::Zero(dim(), dim());
    for (int i = 0; i < dim(); ++i)
      if (a(i) != cplx{}) m += a(i) * d_.left_mult[i];
    return m;
  }

  /// Right multiplication operator: a -> ab.
  Mat right_mult(const Vec& b) const
  {
    Mat m(dim(), dim());
    for (int i = 0; i < dim(); ++i) m.col(i) = d_.left_mult[i] * b;
    return m;
  }

  Vec product(const Vec& a, const Vec& b) const
  {
    Vec r = Vec::Zero(dim());
    for (int i = 0; i < dim(); ++i)
      if (a(i) != cplx{}) r.noalias() += a(i) * (d_.left_mult[i] * b);
    return r;
  }

  Vec star(const Vec& a) const { return d_.involution * a.conjugate(); }

  Vec even_part(const Vec& a) const
  {
    Vec r = a;
    for (int i = 0; i < dim(); ++i)
      if (d_.parity[i] == Parity::Odd) r(i) = 0.0;
    return r;
  }

  Vec odd_part(const Vec& a) const { return a - even_part(a); }

  /// Parity when the support is homogeneous (zero counts as even).
  std::optional<Parity> parity_of(const Vec& a, double tol = 1e-14) const
  {
    bool ev = false, od = false;
    for (int i = 0; i < dim(); ++i) {
      if (std::abs(a(i)) <= tol) continue;
      (d_.parity[i] == Parity::Even ? ev : od) = true;
    }
    if (ev && od) return std::nullopt;
    return od ? Parity::Odd : Parity::Even;
  }

  /// Supercommutator on coefficient vectors; inhomogeneous inputs are split into parts.
  Vec supercommutator(const Vec& a, const Vec& b) const
  {
    return product(a, b) - product(b, a) + 2.0 * product(odd_part(b), odd_part(a));
  }

  AlgebraCheck check() const
  {
    AlgebraCheck c;
    const int n = dim();
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        Mat lij = left_mult(d_.left_mult[i].col(j));
        c.associativity = std::max(c.associativity, max_abs(Mat(lij - d_.left_mult[i] * d_.left_mult[j])));
      }
    const Mat lu = left_mult(d_.unit);
    const Mat ru = right_mult(d_.unit);
    c.unit = std::max(max_abs(Mat(lu - Mat::Identity(n, n))), max_abs(Mat(ru - Mat::Identity(n, n))));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
          if (d_.parity[k] != d_.parity[i] + d_.parity[j])
            c.parity = std::max(c.parity, std::abs(structure(i, j, k)));
    for (int i = 0; i < n; ++i) {
      const Vec ei = basis(i);
      const Vec si = star(ei);
      c.involution_square = std::max(c.involution_square, max_abs(Vec(star(si) - ei)));
      if (parity_of(si) != d_.parity[i]) c.involution_square = std::max(c.involution_square, 1.0);
      for (int j = 0; j < n; ++j) {
        const Vec lhs = star(product(ei, basis(j)));
        const Vec rhs = koszul(d_.parity[i], d_.parity[j]) * product(star(basis(j)), si);
        c.involution_antihom = std::max(c.involution_antihom, max_abs(Vec(lhs - rhs)));
      }
    }
    c.involution_unit = max_abs(Vec(star(d_.unit) - d_.unit));
    return c;
  }

  /// Matrix image of a coefficient vector (requires a realization).
  Mat to_matrix(const Vec& a) const
  {
    if (!has_realization()) throw std::invalid_argument("algebra '" + id() + "' has no matrix realization");
    Mat m = Mat::Zero(d_.realization[0].rows(), d_.realization[0].cols());
    for (int i = 0; i < dim(); ++i)
      if (a(i) != cplx{}) m += a(i) * d_.realization[i];
    return m;
  }

  /// Coefficients of a matrix in the span of the realization; throws if outside it.
  Vec from_matrix(const Mat& m, double tol = 1e-9) const
  {
    if (!has_realization()) throw std::invalid_argument("algebra '" + id() + "' has no matrix realization");
    const Mat& basis_stack = realization_stack();
    Vec c = realization_solver().solve(vectorize(m));
    if (max_abs(Vec(basis_stack * c - vectorize(m))) > tol * std::max(1.0, max_abs(m)))
      throw std::invalid_argument("matrix is not in the span of the algebra realization");
    return c;
  }

private:
  explicit Algebra(Data d) : d_(std::move(d))
  {
    if (!d_.realization.empty()) {
      stack_ = Mat(d_.realization[0].size(), dim());
      for (int i = 0; i < dim(); ++i) stack_.col(i) = vectorize(d_.realization[i]);
      solver_ = Eigen::CompleteOrthogonalDecomposition<Mat>(stack_);
    }
  }
  const Mat& realization_stack() const { return stack_; }
  const Eigen::CompleteOrthogonalDecomposition<Mat>& realization_solver() const { return solver_; }

  Data d_;
  Mat stack_;
  Eigen::CompleteOrthogonalDecomposition<Mat> solver_;
};

/// An element of an algebra: coefficient vector over its basis.
struct Element {
  AlgebraPtr alg;
  Vec coeffs;

  Element() = default;
  Element(AlgebraPtr a, Vec c) : alg(std::move(a)), coeffs(std::move(c))
  {
    if (coeffs.size() != alg->dim()) throw std::invalid_argument("coefficient length does not match algebra dimension");
  }

  std::optional<Parity> parity() const { return alg->parity_of(coeffs); }
  bool is_homogeneous() const { return parity().has_value(); }
  Element even_part() const { return {alg, alg->even_part(coeffs)}; }
  Element odd_part() const { return {alg, alg->odd_part(coeffs)}; }
  double norm() const { return max_abs(coeffs); }
};

inline void require_same(const Element& a, const Element& b)
{
  if (a.alg != b.alg && a.alg->id() != b.alg->id())
    throw AlgebraMismatch("elements belong to different algebras: '" + a.alg->id() + "' vs '" + b.alg->id() + "'");
}

inline Element operator+(const Element& a, const Element& b)
{
  require_same(a, b);
  return {a.alg, a.coeffs + b.coeffs};
}
inline Element operator-(const Element& a, const Element& b)
{
  require_same(a, b);
  return {a.alg, a.coeffs - b.coeffs};
}
inline Element operator-(const Element& a) { return {a.alg, -a.coeffs}; }
inline Element operator*(cplx s, const Element& a) { return {a.alg, s * a.coeffs}; }
inline Element operator*(const Element& a, cplx s) { return {a.alg, s * a.coeffs}; }

inline Element basis_element(const AlgebraPtr& alg, int i) { return {alg, alg->basis(i)}; }
inline Element unit_element(const AlgebraPtr& alg) { return {alg, alg->unit()}; }
inline Element zero_element(const AlgebraPtr& alg) { return {alg, alg->zero()}; }

inline Element mul(const Element& a, const Element& b)
{
  require_same(a, b);
  return {a.alg, a.alg->product(a.coeffs, b.coeffs)};
}
inline Element operator*(const Element& a, const Element& b) { return mul(a, b); }

inline Element supercommutator(const Element& a, const Element& b)
{
  require_same(a, b);
  return {a.alg, a.alg->supercommutator(a.coeffs, b.coeffs)};
}

inline Element involution(const Element& a) { return {a.alg, a.alg->star(a.coeffs)}; }

inline Element from_matrix(const AlgebraPtr& alg, const Mat& m) { return {alg, alg->from_matrix(m)}; }
inline Mat to_matrix(const Element& a) { return a.alg->to_matrix(a.coeffs); }

// ---------------------------------------------------------------------------------------
// Builders

namespace detail {

inline Mat matrix_unit(int n, int a, int b)
{
  Mat m = Mat::Zero(n, n);
  m(a, b) = 1.0;
  return m;
}

inline Mat super_adjoint(const Mat& m, bool odd) { return odd ? Mat(I_unit * m.adjoint()) : Mat(m.adjoint()); }

}  // namespace detail

/// Builds an algebra from a multiplicatively closed, linearly independent set of matrices.
/// The involution is the conjugate transpose on even elements and i times the conjugate
/// transpose on odd ones; the latter is what the Koszul rule (AB)* = eta B*A* requires.
inline AlgebraPtr algebra_from_matrices(std::string id, std::vector<Mat> basis, std::vector<Parity> parity,
                                        std::vector<std::string> labels = {}, KindTag kind = {})
{
  const int n = static_cast<int>(basis.size());
  if (n == 0) throw std::invalid_argument("empty basis");
  if (static_cast<int>(parity.size()) != n) throw std::invalid_argument("parity length mismatch");
  Mat stack(basis[0].size(), n);
  for (int i = 0; i < n; ++i) stack.col(i) = vectorize(basis[i]);
  if (numerical_rank(stack, 1e-12) != n) throw std::invalid_argument("basis matrices are linearly dependent");
  Eigen::CompleteOrthogonalDecomposition<Mat> cod(stack);
  auto expand = [&](const Mat& m) {
    Vec c = cod.solve(vectorize(m));
    if (max_abs(Vec(stack * c - vectorize(m))) > 1e-10 * std::max(1.0, max_abs(m)))
      throw std::invalid_argument("matrix set is not closed under the required operation");
    for (int k = 0; k < c.size(); ++k)
      if (std::abs(c(k)) < 1e-14) c(k) = 0.0;
    return c;
  };
  Algebra::Data d;
  d.id = std::move(id);
  d.parity = std::move(parity);
  d.left_mult.assign(n, Mat::Zero(n, n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) d.left_mult[i].col(j) = expand(basis[i] * basis[j]);
  const Eigen::Index sz = basis[0].rows();
  d.unit = expand(Mat::Identity(sz, sz));
  d.involution = Mat::Zero(n, n);
  for (int i = 0; i < n; ++i)
    d.involution.col(i) = expand(detail::super_adjoint(basis[i], d.parity[i] == Parity::Odd));
  if (labels.empty())
    for (int i = 0; i < n; ++i) labels.push_back("e" + std::to_string(i));
  d.labels = std::move(labels);
  d.kind = std::move(kind);
  d.realization = std::move(basis);
  return Algebra::create(std::move(d));
}

/// M_n(C) on the matrix-unit basis E_ab (index a*n+b). With a grading (p,q), diagonal
/// blocks are even and off-diagonal blocks odd.
inline AlgebraPtr build_matrix_algebra(int n, std::optional<std::pair<int, int>> grading = std::nullopt)
{
  if (n < 1) throw std::invalid_argument("matrix algebra size must be >= 1");
  int p = n;
  if (grading) {
    if (grading->first < 0 || grading->second < 0 || grading->first + grading->second != n)
      throw std::invalid_argument("grading (p,q) must satisfy p,q >= 0 and p+q = n");
    p = grading->first;
  }
  std::vector<Mat> basis;
  std::vector<Parity> par;
  std::vector<std::string> labels;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      basis.push_back(detail::matrix_unit(n, a, b));
      par.push_back(((a < p) != (b < p)) ? Parity::Odd : Parity::Even);
      labels.push_back("E" + std::to_string(a + 1) + std::to_string(b + 1));
    }
  KindTag kind;
  std::string id;
  if (grading) {
    kind.kind = AlgebraKind::GradedMatrix;
    kind.p = grading->first;
    kind.q = grading->second;
    kind.n = n;
    id = "M" + std::to_string(grading->first) + "|" + std::to_string(grading->second);
  } else {
    kind.kind = AlgebraKind::Matrix;
    kind.n = n;
    id = "M" + std::to_string(n);
  }
  return algebra_from_matrices(id, std::move(basis), std::move(par), std::move(labels), kind);
}

/// Direct sum of full matrix blocks acting block-diagonally on C^{sum sizes}.
inline AlgebraPtr build_block_algebra(const std::vector<int>& sizes)
{
  if (sizes.empty()) throw std::invalid_argument("block algebra needs at least one block");
  const int total = std::accumulate(sizes.begin(), sizes.end(), 0);
  std::vector<Mat> basis;
  std::vector<std::string> labels;
  std::string id = "M";
  int off = 0;
  for (std::size_t blk = 0; blk < sizes.size(); ++blk) {
    const int s = sizes[blk];
    if (s < 1) throw std::invalid_argument("block sizes must be >= 1");
    id += (blk ? "+" : "") + std::to_string(s);
    for (int a = 0; a < s; ++a)
      for (int b = 0; b < s; ++b) {
        basis.push_back(detail::matrix_unit(total, off + a, off + b));
        labels.push_back("B" + std::to_string(blk + 1) + "_" + std::to_string(a + 1) + std::to_string(b + 1));
      }
    off += s;
  }
  std::vector<Parity> par(basis.size(), Parity::Even);
  return algebra_from_matrices(id, std::move(basis), std::move(par), std::move(labels));
}

/// Commutative algebra C^n of functions on n points (diagonal matrices).
inline AlgebraPtr build_function_algebra(int n)
{
  if (n < 1) throw std::invalid_argument("function algebra size must be >= 1");
  std::vector<Mat> basis;
  std::vector<std::string> labels;
  for (int a = 0; a < n; ++a) {
    basis.push_back(detail::matrix_unit(n, a, a));
    labels.push_back("chi" + std::to_string(a + 1));
  }
  std::vector<Parity> par(n, Parity::Even);
  return algebra_from_matrices("C^" + std::to_string(n), std::move(basis), std::move(par), std::move(labels));
}

namespace grassmann {

/// Sign of theta_S * theta_T for ascending monomials S, T (bit-sets); zero if they overlap.
inline int monomial_sign(std::uint32_t s, std::uint32_t t)
{
  if (s & t) return 0;
  int swaps = 0;
  for (std::uint32_t rest = t; rest; rest &= rest - 1) {
    const int bit = std::countr_zero(rest);
    swaps += std::popcount(s >> (bit + 1));  // generators in s with larger index
  }
  return (swaps & 1) ? -1 : 1;
}

inline std::string monomial_label(std::uint32_t s)
{
  if (s == 0) return "1";
  std::string out;
  for (int a = 0; s >> a; ++a)
    if ((s >> a) & 1u) out += "t" + std::to_string(a + 1);
  return out;
}

}  // namespace grassmann

/// Grassmann algebra G_n: basis indexed by bit-sets (bit a-1 for generator theta^a).
inline AlgebraPtr build_grassmann_algebra(int n)
{
  if (n < 1 || n > 16) throw std::invalid_argument("Grassmann generator count must be in [1,16]");
  const int dim = 1 << n;
  Algebra::Data d;
  d.id = "G" + std::to_string(n);
  d.left_mult.assign(dim, Mat::Zero(dim, dim));
  for (std::uint32_t s = 0; s < static_cast<std::uint32_t>(dim); ++s) {
    d.labels.push_back(grassmann::monomial_label(s));
    d.parity.push_back(parity_of(std::popcount(s)));
    for (std::uint32_t t = 0; t < static_cast<std::uint32_t>(dim); ++t) {
      const int sg = grassmann::monomial_sign(s, t);
      if (sg) d.left_mult[s](s | t, t) = sg;
    }
  }
  d.unit = Vec::Zero(dim);
  d.unit(0) = 1.0;
  // theta* = theta extended with the Koszul rule reduces to conjugating coefficients.
  d.involution = Mat::Identity(dim, dim);
  d.kind.kind = AlgebraKind::Grassmann;
  d.kind.n = n;
  return Algebra::create(std::move(d));
}

/// Skew tensor product: (a x b)(c x d) = eta_{bc} (ac) x (bd). Basis index i*dim(R)+j.
inline AlgebraPtr tensor_algebra(const AlgebraPtr& left, const AlgebraPtr& right)
{
  const int nl = left->dim(), nr = right->dim(), n = nl * nr;
  Algebra::Data d;
  d.id = "(" + left->id() + ")x(" + right->id() + ")";
  d.left_mult.assign(n, Mat::Zero(n, n));
  for (int a = 0; a < nl; ++a)
    for (int b = 0; b < nr; ++b) {
      const int i = a * nr + b;
      d.labels.push_back(left->labels()[a] + "x" + right->labels()[b]);
      d.parity.push_back(left->parity(a) + right->parity(b));
      for (int c = 0; c < nl; ++c)
        for (int dd = 0; dd < nr; ++dd) {
          const int j = c * nr + dd;
          const double sg = koszul(right->parity(b), left->parity(c));
          const Vec& ac = left->left_mult(a).col(c);
          const Vec& bd = right->left_mult(b).col(dd);
          for (int k = 0; k < nl; ++k) {
            if (ac(k) == cplx{}) continue;
            for (int l = 0; l < nr; ++l)
              if (bd(l) != cplx{}) d.left_mult[i](k * nr + l, j) += sg * ac(k) * bd(l);
          }
        }
    }
  d.unit = Vec::Zero(n);
  for (int k = 0; k < nl; ++k)
    for (int l = 0; l < nr; ++l) d.unit(k * nr + l) = left->unit()(k) * right->unit()(l);
  d.involution = Mat::Zero(n, n);
  for (int a = 0; a < nl; ++a)
    for (int b = 0; b < nr; ++b) {
      const Vec sa = left->star(left->basis(a));
      const Vec sb = right->star(right->basis(b));
      for (int k = 0; k < nl; ++k)
        for (int l = 0; l < nr; ++l) d.involution(k * nr + l, a * nr + b) = sa(k) * sb(l);
    }
  d.kind.kind = AlgebraKind::Tensor;
  d.kind.left = left;
  d.kind.right = right;
  // The Kronecker product is a faithful realization when the left factor is purely even.
  if (left->has_realization() && right->has_realization() && !left->is_graded()) {
    for (int a = 0; a < nl; ++a)
      for (int b = 0; b < nr; ++b)
        d.realization.push_back(Eigen::kroneckerProduct(left->realization()[a], right->realization()[b]).eval());
  }
  // Validated factors give a valid product; the O(n^5) recheck only runs on small products.
  return Algebra::create(std::move(d), n <= 64 ? 1e-12 : -1.0);
}

/// Embeds x in the left (a x I) or right (I x b) copy inside a tensor algebra.
inline Element tensor(const Element& a, const Element& b, const AlgebraPtr& product)
{
  const int nl = a.alg->dim(), nr = b.alg->dim();
  if (product->dim() != nl * nr) throw AlgebraMismatch("tensor target has the wrong dimension");
  Vec v(nl * nr);
  for (int k = 0; k < nl; ++k)
    for (int l = 0; l < nr; ++l) v(k * nr + l) = a.coeffs(k) * b.coeffs(l);
  return {product, v};
}

// ---------------------------------------------------------------------------------------
// Center and sectors

struct GradedCenter {
  std::vector<Element> even;  // basis of Z_0
  std::vector<Element> odd;   // basis of Z_1
  int dim() const { return static_cast<int>(even.size() + odd.size()); }
};

/// Basis of {K : [K, e_i] = 0 for all i}, split by parity.
inline GradedCenter graded_center(const AlgebraPtr& alg, double rel_tol = 1e-10)
{
  const int n = alg->dim();
  GradedCenter z;
  for (Parity want : {Parity::Even, Parity::Odd}) {
    std::vector<int> cols;
    for (int i = 0; i < n; ++i)
      if (alg->parity(i) == want) cols.push_back(i);
    if (cols.empty()) continue;
    Mat sys = Mat::Zero(static_cast<Eigen::Index>(n) * n, static_cast<Eigen::Index>(cols.size()));
    for (std::size_t c = 0; c < cols.size(); ++c) {
      const Vec k = alg->basis(cols[c]);
      for (int i = 0; i < n; ++i)
        sys.block(static_cast<Eigen::Index>(i) * n, c, n, 1) = alg->supercommutator(k, alg->basis(i));
    }
    const Mat ns = null_space(sys, rel_tol);
    for (Eigen::Index c = 0; c < ns.cols(); ++c) {
      Vec v = Vec::Zero(n);
      for (std::size_t r = 0; r < cols.size(); ++r) v(cols[r]) = ns(r, c);
      // Normalise phase so the largest coefficient is real positive.
      Eigen::Index idx;
      v.cwiseAbs().maxCoeff(&idx);
      v *= std::conj(v(idx)) / std::abs(v(idx));
      (want == Parity::Even ? z.even : z.odd).push_back({alg, v});
    }
  }
  return z;
}

struct Sector {
  int dim = 0;
  Mat projection;               // central projection in the defining matrix space
  std::vector<double> labels;   // eigenvalue of the labelling element (if given)
};

/// Joint eigenspaces of the even center acting on the defining matrix space.
inline std::vector<Sector> coherent_sectors(const AlgebraPtr& alg, const std::optional<Element>& label_element = std::nullopt,
                                            double tol = 1e-9)
{
  if (!alg->has_realization()) throw std::invalid_argument("coherent_sectors needs a matrix realization");
  const auto z = graded_center(alg);
  std::vector<Mat> herm;
  for (const auto& k : z.even) {
    const Mat m = alg->to_matrix(k.coeffs);
    const Mat h1 = 0.5 * (m + m.adjoint());
    const Mat h2 = Mat(-0.5 * I_unit * (m - m.adjoint()));
    if (max_abs(h1) > tol) herm.push_back(h1);
    if (max_abs(h2) > tol) herm.push_back(h2);
  }
  const Eigen::Index sz = alg->realization()[0].rows();
  Mat combo = Mat::Zero(sz, sz);
  for (std::size_t k = 0; k < herm.size(); ++k) combo += std::sqrt(2.0 + static_cast<double>(k)) * herm[k];
  Eigen::SelfAdjointEigenSolver<Mat> es(combo);
  const RVec ev = es.eigenvalues();
  const Mat& V = es.eigenvectors();
  std::vector<Sector> out;
  Eigen::Index start = 0;
  while (start < ev.size()) {
    Eigen::Index end = start + 1;
    while (end < ev.size() && std::abs(ev(end) - ev(start)) <= 1e-7 * std::max(1.0, std::abs(ev(start)))) ++end;
    const Mat block = V.middleCols(start, end - start);
    Sector s;
    s.dim = static_cast<int>(end - start);
    s.projection = block * block.adjoint();
    for (const auto& h : herm) {
      const Mat hp = h * block;
      const Mat lam = block.adjoint() * hp;
      if (max_abs(Mat(hp - block * lam)) > 1e-7 || max_abs(Mat(lam - lam(0, 0) * Mat::Identity(lam.rows(), lam.cols()))) > 1e-7)
        throw InternalInconsistency("central elements are not jointly diagonal on a sector");
    }
    if (label_element) {
      const Mat lm = alg->to_matrix(label_element->coeffs);
      s.labels.push_back(std::real((block.adjoint() * lm * block)(0, 0)));
    }
    out.push_back(std::move(s));
    start = end;
  }
  return out;
}

}  // namespace ncsym

#endif  // NCSYM_ALGEBRA_HPP
