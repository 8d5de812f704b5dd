#ifndef NCSYM_COUPLING_HPP
#define NCSYM_COUPLING_HPP

#include "ncsym/superclassical.hpp"

#include <string>

namespace ncsym {

/// A superalgebra with a Poisson bracket given by its Hamiltonian operators:
/// ham[i].col(j) = {e_i, e_j}.
struct PoissonFactor {
  AlgebraPtr alg;
  std::vector<Mat> ham;
  std::string label;
  bool generalized = false;  // algebra has outer superderivations
  std::optional<SymplecticStructure> structure;

  Mat hamiltonian(const Vec& a) const
  {
    Mat m = Mat::Zero(alg->dim(), alg->dim());
    for (int i = 0; i < alg->dim(); ++i)
      if (a(i) != cplx{}) m += a(i) * ham[static_cast<std::size_t>(i)];
    return m;
  }
  Vec bracket(const Vec& a, const Vec& b) const { return hamiltonian(a) * b; }
};

inline PoissonFactor factor_from_structure(const SymplecticStructure& ss, std::string label = {})
{
  PoissonFactor f;
  f.alg = ss.algebra();
  f.label = label.empty() ? ss.algebra()->id() + ":" + form_kind_name(ss.kind()) : std::move(label);
  for (int i = 0; i < f.alg->dim(); ++i) f.ham.push_back(ss.hamiltonian_derivation(basis_element(f.alg, i)).op);
  f.generalized = !check_special(f.alg).special;
  f.structure = ss;
  return f;
}

inline PoissonFactor factor_from_operators(const AlgebraPtr& alg, std::vector<Mat> ham, std::string label, bool generalized = false)
{
  if (static_cast<int>(ham.size()) != alg->dim()) throw std::invalid_argument("need one Hamiltonian operator per basis element");
  return PoissonFactor{alg, std::move(ham), std::move(label), generalized, std::nullopt};
}

/// G_n with the constant odd super Poisson bracket of pb.
inline PoissonFactor grassmann_factor(const SuperPBMatrix& pb)
{
  const auto alg = build_grassmann_algebra(pb.odd_vars());
  return factor_from_operators(alg, grassmann_poisson_operators(pb), alg->id() + ":superPB", true);
}

// ---------------------------------------------------------------------------------------
// lambda-universality

enum class Verdict { ExistsCommutative, ExistsQuantum, NoneExistsMixed, MismatchedParameters, NoneExistsNonQuantum };

inline std::string verdict_name(Verdict v)
{
  switch (v) {
    case Verdict::ExistsCommutative: return "ExistsCommutative";
    case Verdict::ExistsQuantum: return "ExistsQuantum";
    case Verdict::NoneExistsMixed: return "NoneExistsMixed";
    case Verdict::MismatchedParameters: return "MismatchedParameters";
    case Verdict::NoneExistsNonQuantum: return "NoneExistsNonQuantum";
  }
  return "NoneExistsNonQuantum";
}

struct PairResidual {
  int i = 0, j = 0;
  double residual = 0.0;  // |lambda {e_i,e_j} + [e_i,e_j]|
};

struct FactorFit {
  std::string label;
  bool supercommutative = false;
  double commutator_norm = 0.0;  // max |[e_i, e_j]|
  double bracket_norm = 0.0;     // max |{e_i, e_j}|
  std::optional<cplx> lambda;    // least-squares solution of lambda {A,C} = -[A,C]
  double residual = 0.0;
  bool generalized = false;
  std::vector<PairResidual> table;
};

/// Fits lambda over all basis pairs; supercommutativity decided at 1e-12.
inline FactorFit fit_lambda(const PoissonFactor& f)
{
  const auto& alg = *f.alg;
  const int n = alg.dim();
  FactorFit fit;
  fit.label = f.label;
  fit.generalized = f.generalized;
  std::vector<Vec> b, c;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      b.push_back(f.ham[static_cast<std::size_t>(i)].col(j));
      c.push_back(alg.supercommutator(alg.basis(i), alg.basis(j)));
      fit.commutator_norm = std::max(fit.commutator_norm, max_abs(c.back()));
      fit.bracket_norm = std::max(fit.bracket_norm, max_abs(b.back()));
    }
  fit.supercommutative = fit.commutator_norm <= 1e-12;
  cplx bb = 0.0, bc = 0.0;
  for (std::size_t k = 0; k < b.size(); ++k) {
    bb += b[k].squaredNorm();
    bc += b[k].dot(c[k]);
  }
  if (std::abs(bb) > 0.0) fit.lambda = -bc / bb;
  const cplx lam = fit.lambda.value_or(0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const auto k = static_cast<std::size_t>(i * n + j);
      const double r = max_abs(Vec(lam * b[k] + c[k]));
      fit.table.push_back({i, j, r});
      fit.residual = std::max(fit.residual, r);
    }
  return fit;
}

class ProductStructure;

struct CompatibilityReport {
  Verdict verdict = Verdict::NoneExistsNonQuantum;
  cplx lambda = 0.0;  // meaningful for the Exists verdicts
  std::optional<cplx> lambda_left, lambda_right;
  FactorFit left, right;
  bool generalized = false;  // a factor has outer superderivations
  std::string detail;
  std::shared_ptr<const ProductStructure> product;
  std::optional<Cochain> omega;  // w1 x I + I x w2 on the product family

  bool exists() const { return verdict == Verdict::ExistsCommutative || verdict == Verdict::ExistsQuantum; }
};

/// Product bracket on the skew tensor product, in the symmetrized form
/// {A x B, C x D} = eta_BC [ {A,C} x (BD + eta_BD DB)/2 + (AC + eta_AC CA)/2 x {B,D} ].
class ProductStructure {
public:
  ProductStructure(PoissonFactor f1, PoissonFactor f2, cplx lambda)
      : f1_(std::move(f1)), f2_(std::move(f2)), lambda_(lambda), alg_(tensor_algebra(f1_.alg, f2_.alg))
  {
  }

  const AlgebraPtr& algebra() const { return alg_; }
  const PoissonFactor& left() const { return f1_; }
  const PoissonFactor& right() const { return f2_; }
  cplx lambda() const { return lambda_; }

  Mat hamiltonian(const Vec& x) const
  {
    const int n1 = f1_.alg->dim(), n2 = f2_.alg->dim(), n = n1 * n2;
    Mat m = Mat::Zero(n, n);
    for (int a = 0; a < n1; ++a)
      for (int b = 0; b < n2; ++b) {
        const cplx xk = x(a * n2 + b);
        if (xk == cplx{}) continue;
        for (int c = 0; c < n1; ++c)
          for (int d = 0; d < n2; ++d) m.col(c * n2 + d) += xk * monomial_bracket(a, b, c, d);
      }
    return m;
  }

  Element poisson(const Element& x, const Element& y) const
  {
    if (x.alg != alg_ || y.alg != alg_) throw AlgebraMismatch("elements do not live on the product algebra");
    return {alg_, hamiltonian(x.coeffs) * y.coeffs};
  }

  /// Y_{A x B} = Y_A x mu(B) + mu(A) x Y_B + lambda Y_A x Y_B for homogeneous A, B, as
  /// an operator on the product (signs from moving B past C).
  Mat hamiltonian_from_factors(const Vec& a, const Vec& b, cplx lambda) const
  {
    const auto& A1 = *f1_.alg;
    const auto& A2 = *f2_.alg;
    const auto pb = A2.parity_of(b);
    if (!A1.parity_of(a) || !pb) throw std::invalid_argument("factor elements must be homogeneous");
    const int n1 = A1.dim(), n2 = A2.dim(), n = n1 * n2;
    const Mat ya = f1_.hamiltonian(a), yb = f2_.hamiltonian(b);
    const Mat la = A1.left_mult(a), lb = A2.left_mult(b);
    Mat out = Mat::Zero(n, n);
    for (int c = 0; c < n1; ++c)
      for (int d = 0; d < n2; ++d) {
        const double s = koszul(*pb, A1.parity(c));
        const Vec yc = ya.col(c), ac = la.col(c), bd = lb.col(d), ybd = yb.col(d);
        out.col(c * n2 + d) = s * (kron_vec(yc, bd) + kron_vec(ac, ybd) + lambda * kron_vec(yc, ybd));
      }
    return out;
  }

  /// Same bracket in the unsymmetrized lambda form, for homogeneous factor monomials.
  Vec bracket_lambda_form(int a, int b, int c, int d) const
  {
    const auto& A1 = *f1_.alg;
    const auto& A2 = *f2_.alg;
    const double s = koszul(A2.parity(b), A1.parity(c));
    const Vec ac = f1_.ham[static_cast<std::size_t>(a)].col(c), bd = f2_.ham[static_cast<std::size_t>(b)].col(d);
    return s * (kron_vec(ac, A2.product(A2.basis(b), A2.basis(d))) + kron_vec(A1.product(A1.basis(a), A1.basis(c)), bd) + lambda_ * kron_vec(ac, bd));
  }

  static Vec kron_vec(const Vec& u, const Vec& v)
  {
    Vec r(u.size() * v.size());
    for (Eigen::Index i = 0; i < u.size(); ++i) r.segment(i * v.size(), v.size()) = u(i) * v;
    return r;
  }

private:
  Vec monomial_bracket(int a, int b, int c, int d) const
  {
    const auto& A1 = *f1_.alg;
    const auto& A2 = *f2_.alg;
    const Parity pa = A1.parity(a), pb = A2.parity(b), pc = A1.parity(c), pd = A2.parity(d);
    const Vec ea = A1.basis(a), ec = A1.basis(c), eb = A2.basis(b), ed = A2.basis(d);
    const Vec ac = f1_.ham[static_cast<std::size_t>(a)].col(c), bd = f2_.ham[static_cast<std::size_t>(b)].col(d);
    const Vec sym2 = 0.5 * (A2.product(eb, ed) + koszul(pb, pd) * A2.product(ed, eb));
    const Vec sym1 = 0.5 * (A1.product(ea, ec) + koszul(pa, pc) * A1.product(ec, ea));
    return koszul(pb, pc) * (kron_vec(ac, sym2) + kron_vec(sym1, bd));
  }

  PoissonFactor f1_, f2_;
  cplx lambda_;
  AlgebraPtr alg_;
};

namespace detail {

/// {X x id} u {id x Y} on the skew tensor product; (id x Y)(a x b) = eta_{Y a} a x Y(b).
inline FamilyPtr product_family(const AlgebraPtr& t, const FamilyPtr& f1, const FamilyPtr& f2)
{
  const auto& A1 = *f1->algebra();
  const int n1 = A1.dim(), n2 = f2->algebra()->dim();
  std::vector<Derivation> cands;
  for (int i = 0; i < f1->size(); ++i) cands.push_back({t, Mat(Eigen::kroneckerProduct((*f1)[i].op, Mat::Identity(n2, n2))), f1->parity(i)});
  for (int k = 0; k < f2->size(); ++k) {
    Mat sgn = Mat::Zero(n1, n1);
    for (int a = 0; a < n1; ++a) sgn(a, a) = koszul(f2->parity(k), A1.parity(a));
    cands.push_back({t, Mat(Eigen::kroneckerProduct(sgn, (*f2)[k].op)), f2->parity(k)});
  }
  auto fam = DerivationFamily::from_derivations(t, cands);
  if (fam->size() != f1->size() + f2->size()) throw InternalInconsistency("product derivation family lost members");
  return fam;
}

inline Cochain product_form(const AlgebraPtr& t, const SymplecticStructure& s1, const SymplecticStructure& s2, FamilyPtr& fam)
{
  fam = product_family(t, s1.family(), s2.family());
  const int m1 = s1.family()->size();
  const auto a1 = s1.algebra(), a2 = s2.algebra();
  return Cochain::from_function(fam, 2, Parity::Even, [&](const std::vector<int>& tp) -> Vec {
    const bool l0 = tp[0] < m1, l1 = tp[1] < m1;
    if (l0 && l1) return ProductStructure::kron_vec(s1.form().at(std::vector<int>{tp[0], tp[1]}), a2->unit());
    if (!l0 && !l1) return ProductStructure::kron_vec(a1->unit(), s2.form().at(std::vector<int>{tp[0] - m1, tp[1] - m1}));
    return Vec::Zero(t->dim());
  });
}

}  // namespace detail

/// Decision procedure for a natural symplectic structure on the tensor product.
inline CompatibilityReport product_symplectic(const PoissonFactor& f1, const PoissonFactor& f2, double tol = 1e-9)
{
  CompatibilityReport r;
  r.left = fit_lambda(f1);
  r.right = fit_lambda(f2);
  r.lambda_left = r.left.lambda;
  r.lambda_right = r.right.lambda;
  r.generalized = f1.generalized || f2.generalized;
  const bool c1 = r.left.supercommutative, c2 = r.right.supercommutative;
  if (c1 && c2) {
    r.verdict = Verdict::ExistsCommutative;
    r.lambda = 0.0;
    r.detail = "both factors supercommutative; lambda = 0";
  } else if (c1 != c2) {
    r.verdict = Verdict::NoneExistsMixed;
    r.detail = "one factor is supercommutative and the other is not";
    return r;
  } else {
    const bool q1 = r.left.lambda && r.left.residual <= tol, q2 = r.right.lambda && r.right.residual <= tol;
    if (!q1 || !q2) {
      r.verdict = Verdict::NoneExistsNonQuantum;
      r.detail = std::string(q1 ? "right" : "left") + " factor bracket is not a multiple of the supercommutator";
      return r;
    }
    const cplx l1 = *r.left.lambda, l2 = *r.right.lambda;
    if (std::abs(l1 - l2) > tol * std::max({1.0, std::abs(l1), std::abs(l2)})) {
      r.verdict = Verdict::MismatchedParameters;
      r.detail = "factor quantum parameters differ";
      return r;
    }
    r.verdict = Verdict::ExistsQuantum;
    r.lambda = 0.5 * (l1 + l2);
    r.detail = r.generalized ? "quantum on both factors; generalized structure (outer superderivations present)"
                             : "quantum on both factors with a common parameter";
  }
  r.product = std::make_shared<const ProductStructure>(f1, f2, r.lambda);
  if (f1.structure && f2.structure) {
    FamilyPtr fam;
    r.omega = detail::product_form(r.product->algebra(), *f1.structure, *f2.structure, fam);
  }
  return r;
}

inline CompatibilityReport product_symplectic(const SymplecticStructure& s1, const SymplecticStructure& s2, double tol = 1e-9)
{
  return product_symplectic(factor_from_structure(s1), factor_from_structure(s2), tol);
}

inline Element product_poisson(const CompatibilityReport& r, const Element& x, const Element& y)
{
  if (!r.exists() || !r.product) throw std::logic_error("product bracket requested for verdict " + verdict_name(r.verdict));
  return r.product->poisson(x, y);
}

// ---------------------------------------------------------------------------------------
// Coupled dynamics

/// H = H1 x I + I x H2 + sum F_i x G_i with evolution generated by the product bracket.
/// Quantum products with a Kronecker realization evolve by U = exp(-i H t / hbar).
class CoupledSystem {
public:
  CoupledSystem(const CompatibilityReport& r, const Element& h1, const Element& h2, const std::vector<std::pair<Element, Element>>& hint = {})
  {
    if (!r.exists() || !r.product) throw std::logic_error("coupled system needs an existing product structure, got " + verdict_name(r.verdict));
    prod_ = r.product;
    const auto& t = prod_->algebra();
    const auto& l = prod_->left().alg;
    const auto& rt = prod_->right().alg;
    if (h1.alg != l || h2.alg != rt) throw AlgebraMismatch("factor Hamiltonians do not match the factor algebras");
    Element h = tensor(h1, unit_element(rt), t) + tensor(unit_element(l), h2, t);
    for (const auto& [f, g] : hint) {
      if (f.alg != l || g.alg != rt) throw AlgebraMismatch("interaction term does not match the factor algebras");
      h = h + tensor(f, g, t);
    }
    h_ = h;
    if (r.verdict == Verdict::ExistsQuantum && t->has_realization() && std::abs(r.lambda.real()) <= 1e-12 && r.lambda.imag() > 0.0) {
      hbar_ = r.lambda.imag();
      hmat_ = to_matrix(h_);
    }
  }

  const Element& hamiltonian() const { return h_; }
  const AlgebraPtr& algebra() const { return prod_->algebra(); }
  /// Y_H = {H, .} under the product bracket.
  Mat generator() const { return prod_->hamiltonian(h_.coeffs); }
  bool unitary() const { return hbar_.has_value(); }
  std::optional<double> hbar() const { return hbar_; }

  /// |{H, e_k} - (i/hbar)[H, e_k]| over basis elements, on the unitary path.
  std::optional<double> consistency() const
  {
    if (!hbar_) return std::nullopt;
    const auto& t = algebra();
    const Mat y = generator();
    double worst = 0.0;
    for (int k = 0; k < t->dim(); ++k) {
      const Mat ek = to_matrix(basis_element(t, k));
      const Mat c = cplx(0.0, 1.0 / *hbar_) * (*hmat_ * ek - ek * *hmat_);
      worst = std::max(worst, max_abs(Vec(y.col(k) - t->from_matrix(c))));
    }
    return worst;
  }

  Element evolve(const Element& a, double t) const
  {
    if (a.alg != algebra()) throw AlgebraMismatch("observable does not live on the product algebra");
    if (hbar_) {
      const Mat u = propagator(t);
      return from_matrix(a.alg, Mat(u.adjoint() * to_matrix(a) * u));
    }
    return {a.alg, Mat(t * generator()).exp() * a.coeffs};
  }

  State evolve(const State& phi, double t) const
  {
    if (phi.algebra() != algebra()) throw AlgebraMismatch("state does not live on the product algebra");
    if (hbar_ && phi.density()) {
      const Mat u = propagator(t);
      return make_state(algebra(), DensityMatrix{Mat(u * *phi.density() * u.adjoint())}, 1e-9);
    }
    return detail::restate(phi, Vec(Mat(t * generator()).exp().transpose() * phi.functional()), 1e-9);
  }

private:
  Mat propagator(double t) const
  {
    const Eigen::SelfAdjointEigenSolver<Mat> es(Mat(0.5 * (*hmat_ + hmat_->adjoint())));
    Vec ph(es.eigenvalues().size());
    for (Eigen::Index k = 0; k < ph.size(); ++k) ph(k) = std::exp(cplx(0.0, -t * es.eigenvalues()(k) / *hbar_));
    return es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint();
  }

  std::shared_ptr<const ProductStructure> prod_;
  Element h_;
  std::optional<double> hbar_;
  std::optional<Mat> hmat_;
};

inline Element coupled_evolution(const CoupledSystem& sys, const Element& a, double t) { return sys.evolve(a, t); }
inline State coupled_evolution(const CoupledSystem& sys, const State& phi, double t) { return sys.evolve(phi, t); }

}  // namespace ncsym

#endif  // NCSYM_COUPLING_HPP
