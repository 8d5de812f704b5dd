#ifndef NCSYM_SYMPLECTIC_HPP
#define NCSYM_SYMPLECTIC_HPP

#include "ncsym/calculus.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <optional>
#include <string>

namespace ncsym {

enum class FormKind { Canonical, Quantum, Custom };

inline std::string form_kind_name(FormKind k)
{
  switch (k) {
    case FormKind::Canonical: return "canonical";
    case FormKind::Quantum: return "quantum";
    case FormKind::Custom: return "custom";
  }
  return "custom";
}

/// Dimensions of the even and odd superderivation spaces, from the null space of the
/// Leibniz system restricted to parity-preserving (resp. reversing) operators.
inline std::pair<int, int> superderivation_dimensions(const AlgebraPtr& alg)
{
  const int n = alg->dim();
  std::pair<int, int> out{0, 0};
  for (Parity p : {Parity::Even, Parity::Odd}) {
    // Unknown entries op(r, c) allowed when parity(r) = parity(c) + p.
    std::vector<std::pair<int, int>> slots;
    for (int c = 0; c < n; ++c)
      for (int r = 0; r < n; ++r)
        if (alg->parity(r) == alg->parity(c) + p) slots.emplace_back(r, c);
    if (slots.empty()) continue;
    // Row block (i, j): X(e_i e_j) - X(e_i) e_j - eta e_i X(e_j) = 0, linear in op.
    Mat sys = Mat::Zero(static_cast<Eigen::Index>(n) * n * n, static_cast<Eigen::Index>(slots.size()));
    for (std::size_t s = 0; s < slots.size(); ++s) {
      Mat op = Mat::Zero(n, n);
      op(slots[s].first, slots[s].second) = 1.0;
      for (int i = 0; i < n; ++i) {
        const Mat& li = alg->left_mult(i);
        const Mat blk = op * li - koszul(p, alg->parity(i)) * (li * op) - alg->left_mult(Vec(op.col(i)));
        sys.block(static_cast<Eigen::Index>(i) * n * n, s, static_cast<Eigen::Index>(n) * n, 1) = vectorize(blk);
      }
    }
    Eigen::BDCSVD<Mat> svd(sys.adjoint() * sys);
    const auto& sv = svd.singularValues();
    int rank = 0;
    for (Eigen::Index k = 0; k < sv.size(); ++k)
      if (sv(k) > 1e-12 * std::max(1.0, sv(0))) ++rank;
    const int nul = static_cast<int>(slots.size()) - rank;
    (p == Parity::Even ? out.first : out.second) = nul;
  }
  return out;
}

struct SpecialCheck {
  bool special = false;
  int derivation_dim = 0;
  int inner_dim = 0;
  int center_dim = 0;
  std::string reason;
};

/// Special: noncommutative, trivial graded center, every superderivation inner.
inline SpecialCheck check_special(const AlgebraPtr& alg)
{
  SpecialCheck c;
  const auto z = graded_center(alg);
  c.center_dim = z.dim();
  const auto [de, dodd] = superderivation_dimensions(alg);
  c.derivation_dim = de + dodd;
  c.inner_dim = alg->dim() - c.center_dim;
  if (c.inner_dim == 0) c.reason = "supercommutative algebra";
  else if (c.center_dim != 1) c.reason = "graded center is not C.I";
  else if (c.derivation_dim != c.inner_dim) c.reason = "algebra has outer superderivations";
  c.special = c.reason.empty();
  return c;
}

/// Symplectic structure: an even closed 2-form on a derivation family together with the
/// cached pairing that solves i_Y w = -dA.
class SymplecticStructure {
public:
  static SymplecticStructure custom(const Cochain& omega, FormKind kind = FormKind::Custom, double hbar = 0.0)
  {
    if (omega.degree() != 2) throw std::invalid_argument("symplectic form must be a 2-cochain");
    if (omega.parity() != Parity::Even) throw std::invalid_argument("symplectic form must be even");
    if (omega.skew_residual() > 1e-10) throw VerificationError("symplectic form is not graded skew-symmetric");
    const double closed = exterior_derivative(omega).max_abs();
    if (closed > 1e-10) throw VerificationError("symplectic form is not closed (|dw| = " + std::to_string(closed) + ")");
    SymplecticStructure s;
    s.omega_ = omega;
    s.kind_ = kind;
    s.hbar_ = hbar;
    s.closed_residual_ = closed;
    s.build_pairing();
    return s;
  }

  const Cochain& form() const { return omega_; }
  const FamilyPtr& family() const { return omega_.family(); }
  const AlgebraPtr& algebra() const { return omega_.algebra(); }
  FormKind kind() const { return kind_; }
  double hbar() const { return hbar_; }
  double closed_residual() const { return closed_residual_; }
  bool nondegenerate() const { return rank_ == family()->size(); }
  int pairing_rank() const { return rank_; }

  /// |w* - w|; the quantum form is real, the canonical form imaginary.
  double reality_residual() const { return distance(involution(omega_), omega_); }
  double imaginary_residual() const { return distance(involution(omega_), -1.0 * omega_); }

  /// Coefficients over the family of the unique Y with i_Y w = -dA.
  Vec hamiltonian_coefficients(const Element& a, double tol = 1e-9) const
  {
    if (a.alg != algebra()) throw AlgebraMismatch("element does not belong to the symplectic algebra");
    if (!nondegenerate()) throw NondegeneracyError("symplectic pairing is degenerate (rank " + std::to_string(rank_) + " of " + std::to_string(family()->size()) + ")");
    const Vec rhs = rhs_for(a);
    const Vec y = solver_.solve(rhs);
    const double res = max_abs(Vec(pairing_ * y - rhs));
    if (res > tol * std::max(1.0, max_abs(rhs)))
      throw InternalInconsistency("i_Y w = -dA has no solution on the family (residual " + std::to_string(res) + ")");
    return y;
  }

  Derivation hamiltonian_derivation(const Element& a) const
  {
    Derivation y = family()->combine(hamiltonian_coefficients(a));
    if (const auto p = a.parity()) y.parity = *p;
    return y;
  }

  /// {A,B} = Y_A(B).
  Element poisson(const Element& a, const Element& b) const
  {
    if (b.alg != algebra()) throw AlgebraMismatch("element does not belong to the symplectic algebra");
    return hamiltonian_derivation(a)(b);
  }

private:
  void build_pairing()
  {
    const int m = family()->size(), n = algebra()->dim();
    pairing_ = Mat::Zero(static_cast<Eigen::Index>(m) * n, m);
    for (int j = 0; j < m; ++j)
      for (int k = 0; k < m; ++k) pairing_.block(static_cast<Eigen::Index>(j) * n, k, n, 1) = omega_.at(std::vector<int>{k, j});
    solver_ = Eigen::CompleteOrthogonalDecomposition<Mat>(pairing_);
    rank_ = static_cast<int>(numerical_rank(pairing_, 1e-10));
    if (max_abs(pairing_) <= 1e-14) rank_ = 0;
  }

  /// Stacked values -(dA)(X_j) = -eta_{X_j A} X_j(A) with inhomogeneous A split by parity.
  Vec rhs_for(const Element& a) const
  {
    const auto& fam = *family();
    const int n = algebra()->dim();
    Vec rhs(static_cast<Eigen::Index>(fam.size()) * n);
    const Vec a0 = algebra()->even_part(a.coeffs), a1 = algebra()->odd_part(a.coeffs);
    for (int j = 0; j < fam.size(); ++j)
      rhs.segment(static_cast<Eigen::Index>(j) * n, n) = -(fam[j].op * (a0 + koszul(fam.parity(j), Parity::Odd) * a1));
    return rhs;
  }

  Cochain omega_;
  FormKind kind_ = FormKind::Custom;
  double hbar_ = 0.0;
  double closed_residual_ = 0.0;
  Mat pairing_;
  Eigen::CompleteOrthogonalDecomposition<Mat> solver_;
  int rank_ = 0;
};

/// w_c(D_A, D_B) = [A,B] on the inner-derivation family of a special algebra.
inline SymplecticStructure canonical_form(const AlgebraPtr& alg, const std::optional<std::vector<Element>>& generators = std::nullopt)
{
  const auto sc = check_special(alg);
  if (!sc.special) throw std::invalid_argument("canonical form needs a special algebra: " + sc.reason);
  const FamilyPtr fam = generators ? DerivationFamily::inner(alg, *generators) : DerivationFamily::inner(alg);
  if (fam->size() != sc.inner_dim) throw std::invalid_argument("generators do not span the inner derivations");
  const Cochain w = Cochain::from_function(fam, 2, Parity::Even, [&](const std::vector<int>& t) {
    return supercommutator(fam->generator(t[0]), fam->generator(t[1])).coeffs;
  });
  return SymplecticStructure::custom(w, FormKind::Canonical);
}

/// w_Q = -i hbar w_c.
inline SymplecticStructure quantum_form(const AlgebraPtr& alg, double hbar, const std::optional<std::vector<Element>>& generators = std::nullopt)
{
  if (!(hbar > 0.0)) throw std::invalid_argument("hbar must be positive");
  const auto wc = canonical_form(alg, generators);
  return SymplecticStructure::custom(cplx(0.0, -hbar) * wc.form(), FormKind::Quantum, hbar);
}

/// Zero-form structure on the inner family; always degenerate (used for error paths).
inline SymplecticStructure zero_form_structure(const AlgebraPtr& alg)
{
  return SymplecticStructure::custom(Cochain(DerivationFamily::inner(alg), 2, Parity::Even));
}

/// (Phi_eps^* w - w)/eps + L_Y w for Phi_eps = exp(eps Y); vanishes to first order in eps.
inline Cochain pullback_defect(const Derivation& y, const Cochain& w, double eps)
{
  const auto phi = Isomorphism::create(w.algebra(), w.algebra(), Mat(eps * y.op).exp());
  Cochain out = pullback(phi, w) - w;
  out *= 1.0 / eps;
  return out + lie_derivative(y, w);
}

// ---------------------------------------------------------------------------------------
// Hamiltonian dynamics

enum class EvolutionMethod { ClosedForm, Rk4 };

class HamiltonianSystem {
public:
  HamiltonianSystem(SymplecticStructure ss, Element h) : ss_(std::move(ss)), h_(std::move(h))
  {
    if (h_.alg != ss_.algebra()) throw AlgebraMismatch("Hamiltonian does not belong to the symplectic algebra");
    if (max_abs(ss_.algebra()->odd_part(h_.coeffs)) > 1e-12) throw std::invalid_argument("Hamiltonian must be even");
    if (max_abs(Vec(ss_.algebra()->star(h_.coeffs) - h_.coeffs)) > 1e-10) throw std::invalid_argument("Hamiltonian must be self-adjoint");
    yh_ = ss_.hamiltonian_derivation(h_).op;
  }

  const SymplecticStructure& structure() const { return ss_; }
  const Element& hamiltonian() const { return h_; }
  const AlgebraPtr& algebra() const { return ss_.algebra(); }
  /// Y_H as an operator on coefficient vectors: dA/dt = Y_H A.
  const Mat& generator() const { return yh_; }

  /// Lowest eigenvalue in the matrix realization, when one exists.
  std::optional<double> spectrum_min() const
  {
    if (!algebra()->has_realization()) return std::nullopt;
    const Mat hm = algebra()->to_matrix(h_.coeffs);
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (hm + hm.adjoint()));
    return es.eigenvalues()(0);
  }

  /// exp(t Y_H) on coefficient vectors.
  Mat flow(double t) const { return Mat(t * yh_).exp(); }

private:
  SymplecticStructure ss_;
  Element h_;
  Mat yh_;
};

/// Classical RK4 for dv/dt = M v.
inline Vec rk4_linear(const Mat& m, Vec v, double t, double step)
{
  if (!(step > 0.0)) throw std::invalid_argument("rk4 step must be positive");
  if (t == 0.0) return v;
  const int steps = std::max(1, static_cast<int>(std::ceil(std::abs(t) / step - 1e-9)));
  const double h = t / steps;
  for (int k = 0; k < steps; ++k) {
    const Vec k1 = m * v;
    const Vec k2 = m * (v + 0.5 * h * k1);
    const Vec k3 = m * (v + 0.5 * h * k2);
    const Vec k4 = m * (v + h * k3);
    v += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return v;
}

/// A(t) solving dA/dt = {H, A}. rk4 defaults to step t/1e4.
inline Element evolve_heisenberg(const HamiltonianSystem& hs, const Element& a, double t,
                                 EvolutionMethod method = EvolutionMethod::ClosedForm, std::optional<double> step = std::nullopt)
{
  if (a.alg != hs.algebra()) throw AlgebraMismatch("observable does not belong to the system algebra");
  if (method == EvolutionMethod::ClosedForm) {
    if (hs.structure().kind() == FormKind::Custom)
      throw std::invalid_argument("closed-form evolution needs a canonical or quantum structure; use rk4");
    return {a.alg, hs.flow(t) * a.coeffs};
  }
  const double h = step.value_or(std::abs(t) / 1e4);
  if (t != 0.0 && !(h > 0.0)) throw std::invalid_argument("rk4 step must be positive");
  return {a.alg, rk4_linear(hs.generator(), a.coeffs, t, t == 0.0 ? 1.0 : h)};
}

}  // namespace ncsym

#endif  // NCSYM_SYMPLECTIC_HPP
