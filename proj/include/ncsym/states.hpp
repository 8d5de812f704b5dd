#ifndef NCSYM_STATES_HPP
#define NCSYM_STATES_HPP

#include "ncsym/random.hpp"
#include "ncsym/symplectic.hpp"

#include <cstdio>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <variant>

namespace ncsym {

// ---------------------------------------------------------------------------------------
// Berezin integral on G_n

inline bool is_grassmann(const AlgebraPtr& alg) { return alg->kind().kind == AlgebraKind::Grassmann; }

/// Integral with d theta^1 innermost: int theta^n ... theta^1 = 1, so the ascending top
/// monomial theta^1 ... theta^n integrates to (-1)^{n(n-1)/2}.
inline cplx berezin_integral(const AlgebraPtr& alg, const Vec& f)
{
  if (!is_grassmann(alg)) throw std::invalid_argument("Berezin integral needs a Grassmann algebra");
  const int n = alg->kind().n;
  const double sign = ((n * (n - 1) / 2) & 1) ? -1.0 : 1.0;
  return sign * f(alg->dim() - 1);
}

// ---------------------------------------------------------------------------------------
// States

enum class StateKind { Density, Functional, Berezin, Classical };

inline std::string state_kind_name(StateKind k)
{
  switch (k) {
    case StateKind::Density: return "densityMatrix";
    case StateKind::Functional: return "functional";
    case StateKind::Berezin: return "berezinDensity";
    case StateKind::Classical: return "classicalDensity";
  }
  return "functional";
}

struct DensityMatrix {
  Mat rho;
};
struct Functional {
  Vec values;  // phi(e_i)
};
struct BerezinDensity {
  Vec rho;  // Grassmann coefficients
};
struct ClassicalDensity {
  RVec weights;  // phi(e_i) for orthogonal idempotents e_i
};
using Realization = std::variant<DensityMatrix, Functional, BerezinDensity, ClassicalDensity>;

/// Positive normalized functional. Every realization is reduced to the values phi(e_i),
/// so phi(A) = sum_i a_i phi(e_i) regardless of kind.
class State {
public:
  const AlgebraPtr& algebra() const { return alg_; }
  StateKind kind() const { return kind_; }
  const Vec& functional() const { return w_; }
  const std::optional<Mat>& density() const { return rho_; }
  const std::optional<Vec>& berezin() const { return berezin_; }
  const std::optional<RVec>& weights() const { return weights_; }
  std::optional<bool> pure() const { return pure_; }

  cplx expectation(const Vec& a) const { return w_.transpose() * a; }
  cplx expectation(const Element& a) const
  {
    if (a.alg != alg_ && a.alg->id() != alg_->id()) throw AlgebraMismatch("observable and state live on different algebras");
    return expectation(a.coeffs);
  }

private:
  friend State make_state(const AlgebraPtr&, const Realization&, double);
  AlgebraPtr alg_;
  StateKind kind_ = StateKind::Functional;
  Vec w_;
  std::optional<Mat> rho_;
  std::optional<Vec> berezin_;
  std::optional<RVec> weights_;
  std::optional<bool> pure_;
};

inline cplx expectation(const State& phi, const Element& a) { return phi.expectation(a); }

namespace detail {

/// Basis indices on which positivity is tested: everything for supercommutative
/// algebras, even elements for other graded ones (odd A*A is anti-self-adjoint there).
inline std::vector<int> positivity_indices(const AlgebraPtr& alg)
{
  std::vector<int> idx;
  for (int i = 0; i < alg->dim(); ++i)
    if (is_grassmann(alg) || !alg->is_graded() || alg->parity(i) == Parity::Even) idx.push_back(i);
  return idx;
}

/// G_ij = phi(e_i* e_j) on the positivity indices.
inline Mat gram(const AlgebraPtr& alg, const Vec& w, const std::vector<int>& idx)
{
  const int k = static_cast<int>(idx.size());
  Mat g(k, k);
  for (int a = 0; a < k; ++a) {
    const Vec sa = alg->star(alg->basis(idx[a]));
    for (int b = 0; b < k; ++b) g(a, b) = (w.transpose() * alg->product(sa, alg->basis(idx[b])))(0);
  }
  return g;
}

inline Vec lift(const AlgebraPtr& alg, const std::vector<int>& idx, const Vec& v)
{
  Vec out = Vec::Zero(alg->dim());
  for (std::size_t a = 0; a < idx.size(); ++a) out(idx[a]) = v(static_cast<Eigen::Index>(a));
  return out;
}

/// Throws InvalidState with a witness A when phi(A*A) is not a nonnegative real.
inline void check_positive(const AlgebraPtr& alg, const Vec& w, double tol)
{
  const auto idx = positivity_indices(alg);
  const Mat g = gram(alg, w, idx);
  const Mat herm = 0.5 * (g + g.adjoint());
  const Mat anti = (g - g.adjoint()) / (2.0 * I_unit);
  Eigen::SelfAdjointEigenSolver<Mat> ea(anti);
  const auto& av = ea.eigenvalues();
  const Eigen::Index top = std::abs(av(0)) > std::abs(av(av.size() - 1)) ? 0 : av.size() - 1;
  if (std::abs(av(top)) > tol)
    throw InvalidState("phi(A*A) is not real for the witness A", lift(alg, idx, ea.eigenvectors().col(top)));
  Eigen::SelfAdjointEigenSolver<Mat> eh(herm);
  if (eh.eigenvalues()(0) < -tol)
    throw InvalidState("phi(A*A) < 0 for the witness A (value " + std::to_string(eh.eigenvalues()(0)) + ")",
                       lift(alg, idx, eh.eigenvectors().col(0)));
}

/// P_ij = <e_i, e_j> for the pairing that turns a density into a functional.
inline Mat trace_pairing(const AlgebraPtr& alg)
{
  const int n = alg->dim();
  Mat p(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) p(i, j) = (alg->realization()[i] * alg->realization()[j]).trace();
  return p;
}

inline Mat berezin_pairing(const AlgebraPtr& alg)
{
  const int n = alg->dim();
  Mat p(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) p(i, j) = berezin_integral(alg, alg->product(alg->basis(i), alg->basis(j)));
  return p;
}

/// Realization matrices are in the algebra; the trace pairing is nondegenerate on
/// semisimple realizations, which is what lets a functional be turned back into rho.
inline Mat density_from_functional(const AlgebraPtr& alg, const Vec& w)
{
  const Mat p = trace_pairing(alg);
  const Eigen::CompleteOrthogonalDecomposition<Mat> cod(p);
  const Vec r = cod.solve(w);
  if (max_abs(Vec(p * r - w)) > 1e-9 * std::max(1.0, max_abs(w)))
    throw std::invalid_argument("functional has no density representative in this realization");
  return alg->to_matrix(r);
}

}  // namespace detail

/// Validated state. Positivity is decided exactly on the Gram form phi(e_i* e_j).
inline State make_state(const AlgebraPtr& alg, const Realization& real, double tol = 1e-10)
{
  State s;
  s.alg_ = alg;
  const int n = alg->dim();
  if (const auto* d = std::get_if<DensityMatrix>(&real)) {
    if (!alg->has_realization()) throw std::invalid_argument("density realization needs a matrix algebra");
    const Mat& rho = d->rho;
    const Mat& e0 = alg->realization()[0];
    if (rho.rows() != e0.rows() || rho.cols() != e0.cols()) throw AlgebraMismatch("density matrix has the wrong size");
    if (max_abs(Mat(rho - rho.adjoint())) > tol) throw InvalidState("density matrix is not Hermitian");
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (rho + rho.adjoint()));
    if (es.eigenvalues()(0) < -tol)
      throw InvalidState("density matrix has a negative eigenvalue " + std::to_string(es.eigenvalues()(0)), Vec(es.eigenvectors().col(0)));
    s.kind_ = StateKind::Density;
    s.w_.resize(n);
    for (int i = 0; i < n; ++i) s.w_(i) = (rho * alg->realization()[i]).trace();
    s.rho_ = rho;
    const double lmax = es.eigenvalues().maxCoeff();
    int rank = 0;
    for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k)
      if (es.eigenvalues()(k) > 1e-10 * std::max(lmax, 1e-300)) ++rank;
    s.pure_ = rank == 1;
  } else if (const auto* f = std::get_if<Functional>(&real)) {
    if (f->values.size() != n) throw AlgebraMismatch("functional has the wrong length");
    s.kind_ = StateKind::Functional;
    s.w_ = f->values;
    // Forced to vanish on odd basis elements.
    for (int i = 0; i < n; ++i)
      if (alg->parity(i) == Parity::Odd) s.w_(i) = 0.0;
    if (alg->has_realization()) {
      try {
        const Mat rho = detail::density_from_functional(alg, s.w_);
        s.rho_ = rho;
        Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (rho + rho.adjoint()));
        const double lmax = es.eigenvalues().maxCoeff();
        int rank = 0;
        for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k)
          if (es.eigenvalues()(k) > 1e-10 * std::max(lmax, 1e-300)) ++rank;
        s.pure_ = rank == 1;
      } catch (const std::invalid_argument&) {
      }
    }
  } else if (const auto* b = std::get_if<BerezinDensity>(&real)) {
    if (!is_grassmann(alg)) throw std::invalid_argument("Berezin density needs a Grassmann algebra");
    if (b->rho.size() != n) throw AlgebraMismatch("Berezin density has the wrong length");
    // Real expectations need rho of the same parity as the generator count.
    const Parity want = parity_of(alg->kind().n);
    const auto p = alg->parity_of(b->rho);
    if (!p || *p != want) throw InvalidState("Berezin density must be homogeneous with the parity of n");
    s.kind_ = StateKind::Berezin;
    s.w_.resize(n);
    for (int i = 0; i < n; ++i) s.w_(i) = berezin_integral(alg, alg->product(alg->basis(i), b->rho));
    s.berezin_ = b->rho;
  } else {
    const auto& c = std::get<ClassicalDensity>(real);
    if (c.weights.size() != n) throw AlgebraMismatch("classical weights have the wrong length");
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const Vec expect = i == j ? alg->basis(i) : alg->zero();
        if (max_abs(Vec(alg->product(alg->basis(i), alg->basis(j)) - expect)) > 1e-12)
          throw std::invalid_argument("classical density needs a basis of orthogonal idempotents");
      }
    for (int i = 0; i < n; ++i)
      if (c.weights(i) < -tol) throw InvalidState("negative classical weight", Vec(alg->basis(i)));
    s.kind_ = StateKind::Classical;
    s.w_ = c.weights.cast<cplx>();
    s.weights_ = c.weights;
    s.pure_ = (c.weights.array() > tol).count() == 1;
  }
  const cplx norm = s.expectation(alg->unit());
  if (std::abs(norm - 1.0) > 1e-12 && std::abs(norm - 1.0) > tol)
    throw InvalidState("state is not normalized (phi(I) = " + std::to_string(norm.real()) + ")", Vec(alg->unit()));
  for (int i = 0; i < n; ++i)
    if (alg->parity(i) == Parity::Odd && std::abs(s.w_(i)) > tol)
      throw InvalidState("state does not vanish on an odd element", Vec(alg->basis(i)));
  // A positive semidefinite rho already gives phi(A*A) = tr(A rho A*) >= 0.
  if (s.kind_ != StateKind::Density) detail::check_positive(alg, s.w_, tol);
  return s;
}

/// Convex combination sum p_j phi_j, realized as a functional.
inline State mixture(const std::vector<State>& states, const std::vector<double>& p)
{
  if (states.empty() || states.size() != p.size()) throw std::invalid_argument("mixture needs matching states and weights");
  Vec w = Vec::Zero(states[0].algebra()->dim());
  for (std::size_t k = 0; k < states.size(); ++k) {
    if (states[k].algebra() != states[0].algebra()) throw AlgebraMismatch("mixture of states on different algebras");
    w += p[k] * states[k].functional();
  }
  if (states[0].density()) {
    Mat rho = Mat::Zero(states[0].density()->rows(), states[0].density()->cols());
    for (std::size_t k = 0; k < states.size(); ++k) rho += p[k] * (states[k].density() ? *states[k].density() : detail::density_from_functional(states[0].algebra(), states[k].functional()));
    return make_state(states[0].algebra(), DensityMatrix{rho});
  }
  return make_state(states[0].algebra(), Functional{w});
}

/// Vector state |psi><psi| / <psi|psi>.
inline State pure_state(const AlgebraPtr& alg, const Vec& psi)
{
  const Vec u = psi / psi.norm();
  return make_state(alg, DensityMatrix{u * u.adjoint()});
}

/// rho = I/N in the matrix realization.
inline State tracial_state(const AlgebraPtr& alg)
{
  const auto sz = alg->realization().at(0).rows();
  return make_state(alg, DensityMatrix{Mat::Identity(sz, sz) / static_cast<double>(sz)});
}

namespace detail {

/// Re-expresses a functional in the realization kind of the original state.
inline State restate(const State& like, const Vec& w, double tol)
{
  const auto& alg = like.algebra();
  switch (like.kind()) {
    case StateKind::Density: return make_state(alg, DensityMatrix{density_from_functional(alg, w)}, tol);
    case StateKind::Berezin: {
      const Mat p = berezin_pairing(alg);
      return make_state(alg, BerezinDensity{Vec(p.fullPivLu().solve(w))}, tol);
    }
    case StateKind::Classical: {
      RVec r = w.real();
      return make_state(alg, ClassicalDensity{r}, tol);
    }
    case StateKind::Functional: break;
  }
  return make_state(alg, Functional{w}, tol);
}

}  // namespace detail

/// Transpose action <Phi~(phi), A> = <phi, Phi(A)>.
inline State transform_state(const Isomorphism& phi_map, const State& phi)
{
  if (phi_map.source() != phi.algebra() || phi_map.target() != phi.algebra())
    throw AlgebraMismatch("state transform needs an automorphism of the state's algebra");
  return detail::restate(phi, Vec(phi_map.matrix().transpose() * phi.functional()), 1e-10);
}

/// First-order transform (delta phi)(A) = eps phi({G, A}). Positivity holds to O(eps^2).
inline State transform_state(const SymplecticStructure& ss, const Element& g, double eps, const State& phi)
{
  if (g.alg != phi.algebra()) throw AlgebraMismatch("generator and state live on different algebras");
  const Mat y = ss.hamiltonian_derivation(g).op;
  const Vec w = phi.functional() + eps * (y.transpose() * phi.functional());
  return detail::restate(phi, w, std::max(1e-10, 10.0 * eps * eps * std::max(1.0, max_abs(y))));
}

/// w_12 = Tr(rho_1 rho_2).
inline double transition_probability(const State& a, const State& b)
{
  if (!a.density() || !b.density()) throw std::invalid_argument("transition probability needs density-matrix states");
  if (a.density()->rows() != b.density()->rows()) throw AlgebraMismatch("density matrices of different size");
  return (*a.density() * *b.density()).trace().real();
}

/// phi(t) with <phi(t), A> = <phi, A(t)>. Quantum structures with a matrix realization
/// use the von Neumann propagator; everything else uses the transposed Heisenberg flow.
inline State evolve_liouville(const HamiltonianSystem& hs, const State& phi, double t)
{
  if (phi.algebra() != hs.algebra()) throw AlgebraMismatch("state does not belong to the system algebra");
  const auto& ss = hs.structure();
  if (ss.kind() == FormKind::Quantum && phi.density()) {
    const Mat hm = hs.algebra()->to_matrix(hs.hamiltonian().coeffs);
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (hm + hm.adjoint()));
    const Vec phase = (es.eigenvalues().cast<cplx>() * cplx(0.0, -t / ss.hbar())).array().exp();
    const Mat u = es.eigenvectors() * phase.asDiagonal() * es.eigenvectors().adjoint();
    const Mat rho = u * *phi.density() * u.adjoint();
    if (phi.kind() == StateKind::Density) return make_state(phi.algebra(), DensityMatrix{rho});
    Vec w(phi.algebra()->dim());
    for (int i = 0; i < phi.algebra()->dim(); ++i) w(i) = (rho * phi.algebra()->realization()[i]).trace();
    return make_state(phi.algebra(), Functional{w});
  }
  return detail::restate(phi, Vec(hs.flow(t).transpose() * phi.functional()), 1e-9);
}

// ---------------------------------------------------------------------------------------
// Positive observable-valued measures

class PObVM {
public:
  /// Singleton effects nu({w}); they must be positive and sum to I.
  static PObVM create(const AlgebraPtr& alg, std::vector<std::string> outcomes, std::vector<Element> effects, double tol = 1e-10)
  {
    if (outcomes.size() != effects.size() || outcomes.empty()) throw std::invalid_argument("PObVM needs one effect per outcome");
    if (!alg->has_realization()) throw std::invalid_argument("PObVM positivity is checked in a matrix realization");
    PObVM m;
    m.alg_ = alg;
    Vec total = alg->zero();
    for (std::size_t k = 0; k < outcomes.size(); ++k) {
      if (effects[k].alg != alg) throw AlgebraMismatch("effect does not belong to the algebra");
      if (!m.index_.emplace(outcomes[k], static_cast<int>(k)).second) throw std::invalid_argument("duplicate outcome label " + outcomes[k]);
      const Mat e = alg->to_matrix(effects[k].coeffs);
      if (max_abs(Mat(e - e.adjoint())) > tol) throw InvalidState("effect for '" + outcomes[k] + "' is not Hermitian");
      Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (e + e.adjoint()));
      if (es.eigenvalues()(0) < -tol) throw InvalidState("effect for '" + outcomes[k] + "' is not positive", Vec(es.eigenvectors().col(0)));
      total += effects[k].coeffs;
    }
    if (max_abs(Vec(total - alg->unit())) > tol) throw InvalidState("effects do not sum to the unit");
    m.outcomes_ = std::move(outcomes);
    m.effects_ = std::move(effects);
    return m;
  }

  /// Projective measurement in the eigenbasis of a Hermitian matrix observable.
  static PObVM spectral(const AlgebraPtr& alg, const Element& a, double tol = 1e-9)
  {
    const Mat am = alg->to_matrix(a.coeffs);
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (am + am.adjoint()));
    std::vector<std::string> labels;
    std::vector<Element> effects;
    const auto& ev = es.eigenvalues();
    Eigen::Index start = 0;
    while (start < ev.size()) {
      Eigen::Index end = start + 1;
      while (end < ev.size() && ev(end) - ev(start) <= tol) ++end;
      const Mat v = es.eigenvectors().middleCols(start, end - start);
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.6g", ev(start));
      labels.emplace_back(buf);
      effects.push_back(from_matrix(alg, v * v.adjoint()));
      start = end;
    }
    return create(alg, std::move(labels), std::move(effects));
  }

  const AlgebraPtr& algebra() const { return alg_; }
  const std::vector<std::string>& outcomes() const { return outcomes_; }

  /// nu(E) as the sum of singleton effects; nu(empty) = 0.
  Element effect(const std::set<std::string>& event) const
  {
    Element e = zero_element(alg_);
    for (const auto& lab : event) {
      const auto it = index_.find(lab);
      if (it == index_.end()) throw std::out_of_range("unknown outcome label '" + lab + "'");
      e = e + effects_[static_cast<std::size_t>(it->second)];
    }
    return e;
  }

  std::set<std::string> omega() const { return {outcomes_.begin(), outcomes_.end()}; }

private:
  AlgebraPtr alg_;
  std::vector<std::string> outcomes_;
  std::vector<Element> effects_;
  std::map<std::string, int> index_;
};

/// p_phi(E) = phi(nu(E)).
inline double pobvm_probability(const PObVM& m, const std::set<std::string>& event, const State& phi)
{
  if (phi.algebra() != m.algebra()) throw AlgebraMismatch("state and PObVM live on different algebras");
  return phi.expectation(m.effect(event)).real();
}

// ---------------------------------------------------------------------------------------
// Compatible completeness

enum class CcMode { ConstructiveRandomized, Exhaustive };

struct CcVerdict {
  bool holds = false;
  CcMode mode = CcMode::Exhaustive;
  /// Clause that failed: 1 = states separate observables, 2 = observables separate states.
  int failed_clause = 0;
  std::optional<std::pair<Element, Element>> observable_witness;
  std::optional<std::pair<int, int>> state_witness;  // indices into the explicit state list
  double min_margin = 0.0;  // smallest separating gap found
  int pairs_checked = 0;
  std::string detail;
};

/// Full families on M_n: clause (i) by polarization states, which recover every matrix
/// entry of A - B; clause (ii) by the Hermitian matrix-unit observables, which recover rho.
/// Random pairs confirm both constructions.
inline CcVerdict cc_check_full(const AlgebraPtr& alg, Rng& rng, int samples = 100, double tol = 1e-9)
{
  if (alg->kind().kind != AlgebraKind::Matrix) throw std::invalid_argument("full CC check is implemented for matrix algebras");
  const int n = alg->kind().n;
  CcVerdict v;
  v.mode = CcMode::ConstructiveRandomized;
  v.min_margin = std::numeric_limits<double>::infinity();

  std::vector<Vec> probes;
  for (int a = 0; a < n; ++a) {
    probes.push_back(Vec::Unit(n, a));
    for (int b = a + 1; b < n; ++b) {
      probes.push_back((Vec::Unit(n, a) + Vec::Unit(n, b)) / std::sqrt(2.0));
      probes.push_back((Vec::Unit(n, a) + I_unit * Vec::Unit(n, b)) / std::sqrt(2.0));
    }
  }
  std::vector<Mat> observables;
  for (int a = 0; a < n; ++a)
    for (int b = a; b < n; ++b) {
      if (a == b) {
        observables.push_back(detail::matrix_unit(n, a, a));
      } else {
        observables.push_back(detail::matrix_unit(n, a, b) + detail::matrix_unit(n, b, a));
        observables.push_back(I_unit * (detail::matrix_unit(n, b, a) - detail::matrix_unit(n, a, b)));
      }
    }

  for (int k = 0; k < samples; ++k) {
    const Mat a = rng.hermitian(n), b = rng.hermitian(n);
    double gap = 0.0;
    for (const auto& psi : probes) gap = std::max(gap, std::abs((psi.adjoint() * (a - b) * psi)(0)));
    v.min_margin = std::min(v.min_margin, gap);
    ++v.pairs_checked;
    if (gap <= tol) {
      v.failed_clause = 1;
      v.observable_witness = std::pair{from_matrix(alg, a), from_matrix(alg, b)};
      v.detail = "polarization states failed to separate a random observable pair";
      return v;
    }
  }
  for (int k = 0; k < samples; ++k) {
    const Vec p1 = rng.cvec(n).normalized(), p2 = rng.cvec(n).normalized();
    const Mat r1 = p1 * p1.adjoint(), r2 = p2 * p2.adjoint();
    double gap = 0.0;
    for (const auto& o : observables) gap = std::max(gap, std::abs((o * (r1 - r2)).trace()));
    v.min_margin = std::min(v.min_margin, gap);
    ++v.pairs_checked;
    if (gap <= tol) {
      v.failed_clause = 2;
      v.detail = "matrix-unit observables failed to separate a random pure-state pair";
      return v;
    }
  }
  v.holds = true;
  v.detail = "polarization states separate observables; Hermitian matrix units separate pure states";
  return v;
}

/// Exhaustive check over explicit finite families.
inline CcVerdict cc_check_explicit(const std::vector<Element>& observables, const std::vector<State>& states, double tol = 1e-9)
{
  CcVerdict v;
  v.mode = CcMode::Exhaustive;
  v.min_margin = std::numeric_limits<double>::infinity();
  const auto differ = [&](const Vec& x, const Vec& y) { return max_abs(Vec(x - y)) > tol; };
  for (std::size_t i = 0; i < observables.size(); ++i)
    for (std::size_t j = i + 1; j < observables.size(); ++j) {
      if (!differ(observables[i].coeffs, observables[j].coeffs)) continue;
      ++v.pairs_checked;
      double gap = 0.0;
      for (const auto& s : states) gap = std::max(gap, std::abs(s.expectation(observables[i]) - s.expectation(observables[j])));
      v.min_margin = std::min(v.min_margin, gap);
      if (gap <= tol) {
        v.failed_clause = 1;
        v.observable_witness = std::pair{observables[i], observables[j]};
        v.detail = "no state in the family separates the witness observables";
        return v;
      }
    }
  for (std::size_t i = 0; i < states.size(); ++i)
    for (std::size_t j = i + 1; j < states.size(); ++j) {
      if (!differ(states[i].functional(), states[j].functional())) continue;
      ++v.pairs_checked;
      double gap = 0.0;
      for (const auto& o : observables) gap = std::max(gap, std::abs(states[i].expectation(o) - states[j].expectation(o)));
      v.min_margin = std::min(v.min_margin, gap);
      if (gap <= tol) {
        v.failed_clause = 2;
        v.state_witness = std::pair{static_cast<int>(i), static_cast<int>(j)};
        v.detail = "no observable in the family separates the witness states";
        return v;
      }
    }
  v.holds = true;
  v.detail = "every distinct pair is separated";
  return v;
}

// ---------------------------------------------------------------------------------------
// GNS construction

struct GnsResult {
  int dim = 0;
  std::vector<Mat> operators;  // pi(e_i)
  Vec chi;                     // class of I
  bool irreducible = false;
  int commutant_dim = 0;
  int null_ideal_dim = 0;
  double homomorphism_residual = 0.0;  // max |pi(e_i e_j) - pi(e_i) pi(e_j)|
  double involution_residual = 0.0;    // max |pi(e_i*) - pi(e_i)^dagger|

  Mat represent(const Vec& a) const
  {
    Mat m = Mat::Zero(dim, dim);
    for (std::size_t i = 0; i < operators.size(); ++i) m += a(static_cast<Eigen::Index>(i)) * operators[i];
    return m;
  }
  /// <chi, pi(A) chi>.
  cplx vector_state(const Vec& a) const { return chi.dot(represent(a) * chi); }
};

/// Dimension of {T : [pi(e_i), T] = 0 for all i}.
inline int commutant_dimension(const std::vector<Mat>& ops, double rel_tol = 1e-10)
{
  if (ops.empty()) return 0;
  const Eigen::Index r = ops[0].rows();
  if (r == 0) return 0;
  const Mat id = Mat::Identity(r, r);
  Mat sys(static_cast<Eigen::Index>(ops.size()) * r * r, r * r);
  // vec(P T - T P) = (I x P - P^T x I) vec(T) in column-major order.
  for (std::size_t i = 0; i < ops.size(); ++i)
    sys.middleRows(static_cast<Eigen::Index>(i) * r * r, r * r) =
        Eigen::kroneckerProduct(id, ops[i]).eval() - Eigen::kroneckerProduct(ops[i].transpose(), id).eval();
  return static_cast<int>(null_space(sys, rel_tol).cols());
}

inline GnsResult gns(const AlgebraPtr& alg, const State& phi, double rel_tol = 1e-10)
{
  if (phi.algebra() != alg) throw AlgebraMismatch("state does not belong to the algebra");
  const int n = alg->dim();
  Mat g(n, n);
  for (int i = 0; i < n; ++i) {
    const Vec si = alg->star(alg->basis(i));
    for (int j = 0; j < n; ++j) g(i, j) = phi.expectation(alg->product(si, alg->basis(j)));
  }
  if (max_abs(Mat(g - g.adjoint())) > 1e-9 * std::max(1.0, max_abs(g))) throw InvalidState("GNS Gram matrix is not Hermitian");
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (g + g.adjoint()));
  const RVec& lam = es.eigenvalues();
  const double lmax = lam.maxCoeff();
  if (lam(0) < -1e-9 * std::max(1.0, lmax)) throw InvalidState("GNS Gram matrix is not positive", Vec(es.eigenvectors().col(0)));

  std::vector<Eigen::Index> keep;
  for (Eigen::Index k = 0; k < lam.size(); ++k)
    if (lam(k) > rel_tol * lmax) keep.push_back(k);
  const auto r = static_cast<Eigen::Index>(keep.size());
  Mat vr(n, r);
  RVec sq(r);
  for (Eigen::Index k = 0; k < r; ++k) {
    vr.col(k) = es.eigenvectors().col(keep[static_cast<std::size_t>(k)]);
    sq(k) = std::sqrt(lam(keep[static_cast<std::size_t>(k)]));
  }
  // q(b) = Lambda^{1/2} V_r^dagger b is an isometry of the quotient onto C^r.
  const Mat q = sq.cast<cplx>().asDiagonal() * vr.adjoint();
  const Mat lift = vr * sq.cwiseInverse().cast<cplx>().asDiagonal();

  GnsResult res;
  res.dim = static_cast<int>(r);
  res.null_ideal_dim = n - res.dim;
  res.chi = q * alg->unit();
  for (int i = 0; i < n; ++i) res.operators.push_back(q * alg->left_mult(i) * lift);
  for (int i = 0; i < n; ++i) {
    res.involution_residual = std::max(res.involution_residual, max_abs(Mat(res.represent(alg->star(alg->basis(i))) - res.operators[i].adjoint())));
    for (int j = 0; j < n; ++j)
      res.homomorphism_residual = std::max(
          res.homomorphism_residual, max_abs(Mat(res.represent(alg->product(alg->basis(i), alg->basis(j))) - res.operators[i] * res.operators[j])));
  }
  res.commutant_dim = commutant_dimension(res.operators);
  res.irreducible = res.commutant_dim == 1;
  return res;
}

/// Block-diagonal direct sum of representations on the same algebra.
inline std::vector<Mat> direct_sum(const std::vector<GnsResult>& parts)
{
  if (parts.empty()) return {};
  int total = 0;
  for (const auto& p : parts) total += p.dim;
  std::vector<Mat> out(parts[0].operators.size(), Mat::Zero(total, total));
  int off = 0;
  for (const auto& p : parts) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i].block(off, off, p.dim, p.dim) = p.operators[i];
    off += p.dim;
  }
  return out;
}

}  // namespace ncsym

#endif  // NCSYM_STATES_HPP
