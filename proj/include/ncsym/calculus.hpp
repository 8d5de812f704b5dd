#ifndef NCSYM_CALCULUS_HPP
#define NCSYM_CALCULUS_HPP

#include "ncsym/algebra.hpp"
#include "ncsym/random.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <memory>
#include <numeric>
#include <vector>

namespace ncsym {

// ---------------------------------------------------------------------------------------
// Derivations

struct Derivation {
  AlgebraPtr alg;
  Mat op;
  Parity parity = Parity::Even;

  Vec operator()(const Vec& a) const { return op * a; }
  Element operator()(const Element& a) const { return {alg, op * a.coeffs}; }
};

inline Derivation operator+(const Derivation& x, const Derivation& y) { return {x.alg, x.op + y.op, x.parity}; }
inline Derivation operator-(const Derivation& x, const Derivation& y) { return {x.alg, x.op - y.op, x.parity}; }
inline Derivation operator*(cplx s, const Derivation& x) { return {x.alg, s * x.op, x.parity}; }

/// Supercommutator [X,Y] = XY - eta_{XY} YX.
inline Derivation bracket(const Derivation& x, const Derivation& y)
{
  return {x.alg, x.op * y.op - koszul(x.parity, y.parity) * (y.op * x.op), x.parity + y.parity};
}

/// Max over basis A of |X mu(A) - eta_{XA} mu(A) X - mu(X(A))|.
inline double leibniz_residual(const AlgebraPtr& alg, const Mat& op, Parity parity)
{
  if (op.rows() != alg->dim() || op.cols() != alg->dim()) throw AlgebraMismatch("operator dimension does not match algebra");
  double r = 0.0;
  for (int i = 0; i < alg->dim(); ++i) {
    const Mat& la = alg->left_mult(i);
    const Mat lhs = op * la - koszul(parity, alg->parity(i)) * (la * op);
    r = std::max(r, max_abs(Mat(lhs - alg->left_mult(Vec(op.col(i))))));
  }
  return r;
}

struct LeibnizCheck {
  bool ok = false;
  double residual = 0.0;
};

inline LeibnizCheck check_superderivation(const AlgebraPtr& alg, const Mat& op, Parity parity, double tol = 1e-10)
{
  const double r = leibniz_residual(alg, op, parity);
  return {r <= tol, r};
}

/// D_A : B -> [A,B].
inline Derivation inner_derivation(const Element& a)
{
  const auto p = a.parity();
  if (!p) throw std::invalid_argument("inner_derivation needs a homogeneous element");
  const AlgebraPtr& alg = a.alg;
  const Mat r = alg->right_mult(a.coeffs);
  Mat op = alg->left_mult(a.coeffs) - r;
  // [A,B] = AB + BA when both are odd.
  if (*p == Parity::Odd)
    for (int j = 0; j < alg->dim(); ++j)
      if (alg->parity(j) == Parity::Odd) op.col(j) += 2.0 * r.col(j);
  return {alg, op, *p};
}

/// X*(A) = [X(A*)]*.
inline Derivation involution(const Derivation& x)
{
  const Mat& j = x.alg->involution_matrix();
  return {x.alg, j * x.op.conjugate() * j.conjugate(), x.parity};
}

// ---------------------------------------------------------------------------------------
// Derivation family: a basis of a Lie sub-superalgebra of SDer(A)

class DerivationFamily;
using FamilyPtr = std::shared_ptr<const DerivationFamily>;

class DerivationFamily {
public:
  /// Keeps a linearly independent subset (greedy, in order) of homogeneous derivations.
  static FamilyPtr from_derivations(const AlgebraPtr& alg, const std::vector<Derivation>& cands,
                                    const std::vector<Element>& generators = {}, double tol = 1e-10)
  {
    auto f = std::shared_ptr<DerivationFamily>(new DerivationFamily);
    f->alg_ = alg;
    const Eigen::Index nn = static_cast<Eigen::Index>(alg->dim()) * alg->dim();
    Mat stack(nn, 0);
    for (std::size_t c = 0; c < cands.size(); ++c) {
      const auto& d = cands[c];
      if (max_abs(d.op) <= tol) continue;
      Mat trial(nn, stack.cols() + 1);
      trial << stack, vectorize(d.op);
      if (numerical_rank(trial, tol) == trial.cols()) {
        stack = std::move(trial);
        f->members_.push_back(d);
        if (!generators.empty()) f->generators_.push_back(generators[c]);
      }
    }
    f->stack_ = stack;
    f->solver_ = Eigen::CompleteOrthogonalDecomposition<Mat>(stack);
    f->compute_structure(tol);
    return f;
  }

  /// Inner derivations of homogeneous generating elements, modulo the center.
  static FamilyPtr inner(const AlgebraPtr& alg, const std::vector<Element>& elems)
  {
    std::vector<Derivation> ds;
    for (const auto& e : elems) ds.push_back(inner_derivation(e));
    return from_derivations(alg, ds, elems);
  }

  /// Default family: D_{e_i} over the algebra basis, modulo the center.
  static FamilyPtr inner(const AlgebraPtr& alg)
  {
    std::vector<Element> elems;
    for (int i = 0; i < alg->dim(); ++i) elems.push_back(basis_element(alg, i));
    return inner(alg, elems);
  }

  const AlgebraPtr& algebra() const { return alg_; }
  int size() const { return static_cast<int>(members_.size()); }
  const Derivation& operator[](int i) const { return members_[i]; }
  const std::vector<Derivation>& members() const { return members_; }
  Parity parity(int i) const { return members_[i].parity; }
  bool is_inner() const { return !generators_.empty(); }
  /// Element a_k with member k = D_{a_k} (inner families only).
  const Element& generator(int i) const { return generators_.at(i); }
  bool closed() const { return closure_residual_ <= 1e-10; }
  double closure_residual() const { return closure_residual_; }

  /// Coefficients of op over the family; throws when op lies outside the span.
  Vec expand(const Mat& op, double tol = 1e-9) const
  {
    const Vec v = vectorize(op);
    Vec c = solver_.solve(v);
    const double res = max_abs(Vec(stack_ * c - v));
    if (res > tol * std::max(1.0, max_abs(v)))
      throw std::invalid_argument("derivation is not in the span of the family (residual " + std::to_string(res) + ")");
    return c;
  }
  Vec expand(const Derivation& d, double tol = 1e-9) const { return expand(d.op, tol); }

  /// Structure constants: [X_i, X_j] = sum_k f(i,j)_k X_k.
  const Vec& structure(int i, int j) const
  {
    if (!closed()) throw std::invalid_argument("derivation family is not closed under brackets");
    return f_[static_cast<std::size_t>(i) * size() + j];
  }

  Derivation combine(const Vec& c) const
  {
    Derivation d{alg_, Mat::Zero(alg_->dim(), alg_->dim()), Parity::Even};
    bool odd = false, even = false;
    for (int k = 0; k < size(); ++k) {
      if (std::abs(c(k)) <= 1e-14) continue;
      d.op += c(k) * members_[k].op;
      (members_[k].parity == Parity::Odd ? odd : even) = true;
    }
    d.parity = (odd && !even) ? Parity::Odd : Parity::Even;
    return d;
  }

private:
  void compute_structure(double tol)
  {
    const int m = size();
    f_.assign(static_cast<std::size_t>(m) * m, Vec::Zero(m));
    closure_residual_ = 0.0;
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) {
        const Mat b = bracket(members_[i], members_[j]).op;
        const Vec v = vectorize(b);
        const Vec c = solver_.solve(v);
        closure_residual_ = std::max(closure_residual_, max_abs(Vec(stack_ * c - v)));
        f_[static_cast<std::size_t>(i) * m + j] = c;
      }
    (void)tol;
  }

  AlgebraPtr alg_;
  std::vector<Derivation> members_;
  std::vector<Element> generators_;
  Mat stack_;
  Eigen::CompleteOrthogonalDecomposition<Mat> solver_;
  std::vector<Vec> f_;
  double closure_residual_ = 0.0;
};

// ---------------------------------------------------------------------------------------
// Graded permutation signs

/// Sign relating omega(t_{sigma(0)},..) to omega(t_0,..) for a graded-skew omega:
/// (-1) times the Koszul sign for every pair whose relative order sigma inverts.
inline double permutation_sign(const std::vector<Parity>& par, const std::vector<int>& sigma)
{
  double s = 1.0;
  const std::size_t n = sigma.size();
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b)
      if (sigma[a] > sigma[b]) s *= -koszul(par[sigma[a]], par[sigma[b]]);
  return s;
}

inline double factorial(int n)
{
  double f = 1.0;
  for (int k = 2; k <= n; ++k) f *= k;
  return f;
}

// ---------------------------------------------------------------------------------------
// Cochains

/// Graded-skew multilinear A-valued map on a derivation family, stored densely over
/// ordered index tuples (first index most significant).
class Cochain {
public:
  Cochain() = default;
  Cochain(FamilyPtr fam, int degree, Parity parity) : fam_(std::move(fam)), p_(degree), s_(parity)
  {
    if (degree < 0) throw std::invalid_argument("negative cochain degree");
    std::size_t n = 1;
    for (int k = 0; k < degree; ++k) n *= static_cast<std::size_t>(fam_->size());
    comps_.assign(n, Vec::Zero(fam_->algebra()->dim()));
  }

  static Cochain zero_form(FamilyPtr fam, const Element& a)
  {
    const auto p = a.parity();
    if (!p) throw std::invalid_argument("0-forms must be homogeneous");
    Cochain c(std::move(fam), 0, *p);
    c.comps_[0] = a.coeffs;
    return c;
  }

  /// Fills every tuple with f(tuple); the caller is responsible for graded skewness.
  static Cochain from_function(FamilyPtr fam, int degree, Parity parity,
                               const std::function<Vec(const std::vector<int>&)>& f)
  {
    Cochain c(std::move(fam), degree, parity);
    for (std::size_t k = 0; k < c.comps_.size(); ++k) c.comps_[k] = f(c.tuple(k));
    return c;
  }

  const FamilyPtr& family() const { return fam_; }
  const AlgebraPtr& algebra() const { return fam_->algebra(); }
  int degree() const { return p_; }
  Parity parity() const { return s_; }
  std::size_t size() const { return comps_.size(); }
  const std::vector<Vec>& components() const { return comps_; }

  std::vector<int> tuple(std::size_t flat) const
  {
    std::vector<int> t(p_);
    const std::size_t m = static_cast<std::size_t>(fam_->size());
    for (int k = p_ - 1; k >= 0; --k) {
      t[k] = static_cast<int>(flat % m);
      flat /= m;
    }
    return t;
  }

  std::size_t flat(const std::vector<int>& t) const
  {
    std::size_t f = 0;
    for (int i : t) f = f * static_cast<std::size_t>(fam_->size()) + static_cast<std::size_t>(i);
    return f;
  }

  const Vec& at(const std::vector<int>& t) const { return comps_[flat(t)]; }
  Vec& at(const std::vector<int>& t) { return comps_[flat(t)]; }
  const Vec& at(std::size_t flat_index) const { return comps_[flat_index]; }
  Vec& at(std::size_t flat_index) { return comps_[flat_index]; }

  /// Value on arbitrary derivations in the family span (multilinear expansion).
  Vec evaluate(const std::vector<Derivation>& xs) const
  {
    if (static_cast<int>(xs.size()) != p_) throw std::invalid_argument("wrong number of cochain arguments");
    std::vector<Vec> cs;
    for (const auto& x : xs) cs.push_back(fam_->expand(x));
    Vec out = Vec::Zero(algebra()->dim());
    for (std::size_t k = 0; k < comps_.size(); ++k) {
      const auto t = tuple(k);
      cplx w = 1.0;
      for (int i = 0; i < p_ && w != cplx{}; ++i) w *= cs[i](t[i]);
      if (w != cplx{}) out += w * comps_[k];
    }
    return out;
  }

  double max_abs() const
  {
    double r = 0.0;
    for (const auto& v : comps_) r = std::max(r, ncsym::max_abs(v));
    return r;
  }

  /// Max violation of omega(..,X,Y,..) = -eta_{XY} omega(..,Y,X,..) over adjacent slots.
  double skew_residual() const
  {
    double r = 0.0;
    for (std::size_t k = 0; k < comps_.size(); ++k) {
      auto t = tuple(k);
      for (int i = 0; i + 1 < p_; ++i) {
        const double sg = -koszul(fam_->parity(t[i]), fam_->parity(t[i + 1]));
        std::swap(t[i], t[i + 1]);
        r = std::max(r, ncsym::max_abs(Vec(comps_[k] - sg * at(t))));
        std::swap(t[i], t[i + 1]);
      }
    }
    return r;
  }

  /// Max norm of the component parts whose parity differs from s + sum eps(X_i).
  double homogeneity_residual() const
  {
    double r = 0.0;
    for (std::size_t k = 0; k < comps_.size(); ++k) {
      Parity want = s_;
      for (int i : tuple(k)) want = want + fam_->parity(i);
      const Vec& v = comps_[k];
      const Vec wrong = want == Parity::Even ? algebra()->odd_part(v) : algebra()->even_part(v);
      r = std::max(r, ncsym::max_abs(wrong));
    }
    return r;
  }

  Cochain& operator+=(const Cochain& o)
  {
    check_compatible(o);
    for (std::size_t k = 0; k < comps_.size(); ++k) comps_[k] += o.comps_[k];
    return *this;
  }
  Cochain& operator-=(const Cochain& o)
  {
    check_compatible(o);
    for (std::size_t k = 0; k < comps_.size(); ++k) comps_[k] -= o.comps_[k];
    return *this;
  }
  Cochain& operator*=(cplx s)
  {
    for (auto& v : comps_) v *= s;
    return *this;
  }

  void check_compatible(const Cochain& o) const
  {
    if (fam_ != o.fam_) throw AlgebraMismatch("cochains live on different derivation families");
    if (p_ != o.p_) throw std::invalid_argument("cochain degrees differ");
  }

private:
  FamilyPtr fam_;
  int p_ = 0;
  Parity s_ = Parity::Even;
  std::vector<Vec> comps_;
};

inline Cochain operator+(Cochain a, const Cochain& b) { return a += b; }
inline Cochain operator-(Cochain a, const Cochain& b) { return a -= b; }
inline Cochain operator*(cplx s, Cochain a) { return a *= s; }

/// Max componentwise difference of two cochains on the same family and degree.
inline double distance(const Cochain& a, const Cochain& b) { return (a - b).max_abs(); }

namespace detail {

inline std::vector<Parity> tuple_parities(const DerivationFamily& f, const std::vector<int>& t)
{
  std::vector<Parity> p;
  p.reserve(t.size());
  for (int i : t) p.push_back(f.parity(i));
  return p;
}

/// Calls fn(sigma) for every permutation of {0..n-1}.
template <class Fn>
void for_each_permutation(int n, Fn&& fn)
{
  std::vector<int> sigma(n);
  std::iota(sigma.begin(), sigma.end(), 0);
  do fn(sigma);
  while (std::next_permutation(sigma.begin(), sigma.end()));
}

}  // namespace detail

/// Graded-skew projection: (1/p!) sum_sigma sign(t,sigma) omega(t_sigma).
inline Cochain antisymmetrize(const Cochain& raw)
{
  const int p = raw.degree();
  const auto& fam = *raw.family();
  Cochain out(raw.family(), p, raw.parity());
  const double norm = 1.0 / factorial(p);
  for (std::size_t k = 0; k < raw.size(); ++k) {
    const auto t = raw.tuple(k);
    const auto par = detail::tuple_parities(fam, t);
    Vec acc = Vec::Zero(raw.algebra()->dim());
    std::vector<int> ts(p);
    detail::for_each_permutation(p, [&](const std::vector<int>& sigma) {
      for (int a = 0; a < p; ++a) ts[a] = t[sigma[a]];
      acc += permutation_sign(par, sigma) * raw.at(ts);
    });
    out.at(k) = norm * acc;
  }
  return out;
}

/// Random graded-skew homogeneous cochain of degree p and parity s.
inline Cochain random_cochain(const FamilyPtr& fam, int p, Parity s, Rng& rng)
{
  Cochain raw(fam, p, s);
  for (std::size_t k = 0; k < raw.size(); ++k) {
    Parity want = s;
    for (int i : raw.tuple(k)) want = want + fam->parity(i);
    raw.at(k) = rng.homogeneous(fam->algebra(), want).coeffs;
  }
  return p <= 1 ? raw : antisymmetrize(raw);
}

/// Exterior product of an p-cochain and a q-cochain.
inline Cochain wedge(const Cochain& a, const Cochain& b)
{
  if (a.family() != b.family()) throw AlgebraMismatch("wedge of cochains on different families");
  const int p = a.degree(), q = b.degree(), n = p + q;
  const auto& fam = *a.family();
  const auto& alg = *a.algebra();
  const Parity sb = b.parity();
  Cochain out(a.family(), n, a.parity() + b.parity());
  const double norm = 1.0 / (factorial(p) * factorial(q));
  std::vector<int> ta(p), tb(q);
  for (std::size_t k = 0; k < out.size(); ++k) {
    const auto t = out.tuple(k);
    const auto par = detail::tuple_parities(fam, t);
    Vec acc = Vec::Zero(alg.dim());
    detail::for_each_permutation(n, [&](const std::vector<int>& sigma) {
      int eps = 0;
      for (int j = 0; j < p; ++j) {
        ta[j] = t[sigma[j]];
        eps += to_int(par[sigma[j]]);
      }
      for (int j = 0; j < q; ++j) tb[j] = t[sigma[p + j]];
      const double sg = permutation_sign(par, sigma) * koszul(to_int(sb), eps);
      acc += sg * alg.product(a.at(ta), b.at(tb));
    });
    out.at(k) = norm * acc;
  }
  return out;
}

/// L_Y A = Y(A).
inline Element lie_derivative(const Derivation& y, const Element& a) { return y(a); }

/// L_Y X = [Y,X].
inline Derivation lie_derivative(const Derivation& y, const Derivation& x) { return bracket(y, x); }

/// (L_Y w)(X_1..X_p) = Y[w(..)] - sum_i (-1)^{eY(ew + eX_1..eX_{i-1})} w(.., [Y,X_i], ..).
inline Cochain lie_derivative(const Derivation& y, const Cochain& w)
{
  const auto& fam = *w.family();
  const int p = w.degree(), m = fam.size();
  std::vector<Vec> ad(m);
  for (int i = 0; i < m; ++i) ad[i] = fam.expand(bracket(y, fam[i]));
  Cochain out(w.family(), p, w.parity() + y.parity);
  for (std::size_t k = 0; k < out.size(); ++k) {
    const auto t = out.tuple(k);
    Vec acc = y.op * w.at(k);
    int eps = to_int(w.parity());
    auto ts = t;
    for (int i = 0; i < p; ++i) {
      const double sg = koszul(to_int(y.parity), eps);
      for (int c = 0; c < m; ++c) {
        const cplx coef = ad[t[i]](c);
        if (std::abs(coef) <= 1e-15) continue;
        ts[i] = c;
        acc -= sg * coef * w.at(ts);
      }
      ts[i] = t[i];
      eps += to_int(fam.parity(t[i]));
    }
    out.at(k) = acc;
  }
  return out;
}

/// (i_X w)(X_1..X_{p-1}) = w(X, X_1..X_{p-1}); zero on 0-forms.
inline Cochain interior(const Derivation& x, const Cochain& w)
{
  if (w.degree() == 0) return Cochain(w.family(), 0, w.parity() + x.parity);
  const auto& fam = *w.family();
  const Vec c = fam.expand(x);
  Cochain out(w.family(), w.degree() - 1, w.parity() + x.parity);
  for (std::size_t k = 0; k < out.size(); ++k) {
    std::vector<int> t = out.tuple(k);
    t.insert(t.begin(), 0);
    Vec acc = Vec::Zero(w.algebra()->dim());
    for (int j = 0; j < fam.size(); ++j) {
      if (std::abs(c(j)) <= 1e-15) continue;
      t[0] = j;
      acc += c(j) * w.at(t);
    }
    out.at(k) = acc;
  }
  return out;
}

/// Exterior derivative via the explicit Chevalley-Eilenberg formula with graded signs.
inline Cochain exterior_derivative(const Cochain& w)
{
  const auto& fam = *w.family();
  if (!fam.closed()) throw std::invalid_argument("exterior derivative needs a bracket-closed derivation family");
  const int p = w.degree(), m = fam.size();
  const int s = to_int(w.parity());
  Cochain out(w.family(), p + 1, w.parity());
  std::vector<int> sub(p);
  for (std::size_t k = 0; k < out.size(); ++k) {
    const auto t = out.tuple(k);
    std::vector<int> e(p + 1);
    for (int i = 0; i <= p; ++i) e[i] = to_int(fam.parity(t[i]));
    Vec acc = Vec::Zero(w.algebra()->dim());
    int prefix = 0;
    for (int i = 0; i <= p; ++i) {
      const int a_i = e[i] * (s + prefix);
      for (int r = 0, c = 0; r <= p; ++r)
        if (r != i) sub[c++] = t[r];
      const double sg = ((i + a_i) & 1) ? -1.0 : 1.0;
      acc += sg * (fam[t[i]].op * w.at(sub));
      prefix += e[i];
    }
    for (int i = 0; i <= p; ++i)
      for (int j = i + 1; j <= p; ++j) {
        int b = 0;
        for (int r = i + 1; r < j; ++r) b += e[r];
        b *= e[j];
        const double sg = ((j + b) & 1) ? -1.0 : 1.0;
        // Slots: t_0..t_{i-1}, [X_i,X_j], t_{i+1}..(skip j)..t_p.
        for (int r = 0, c = 0; r <= p; ++r)
          if (r != j) sub[c++] = t[r];
        const Vec& f = fam.structure(t[i], t[j]);
        for (int c = 0; c < m; ++c) {
          if (std::abs(f(c)) <= 1e-15) continue;
          sub[i] = c;
          acc += sg * f(c) * w.at(sub);
        }
      }
    out.at(k) = acc;
  }
  return out;
}

/// d of a 0-form: (dA)(X) = eta_{XA} X(A).
inline Cochain d(const FamilyPtr& fam, const Element& a) { return exterior_derivative(Cochain::zero_form(fam, a)); }

/// w*(X_1..X_p) = [w(X_1*..X_p*)]*.
inline Cochain involution(const Cochain& w)
{
  const auto& fam = *w.family();
  const auto& alg = *w.algebra();
  const int m = fam.size();
  std::vector<Vec> star_c(m);
  for (int i = 0; i < m; ++i) star_c[i] = fam.expand(involution(fam[i]));
  Cochain out(w.family(), w.degree(), w.parity());
  for (std::size_t k = 0; k < out.size(); ++k) {
    const auto t = out.tuple(k);
    Vec acc = Vec::Zero(alg.dim());
    // Multilinear expansion over the starred arguments.
    for (std::size_t l = 0; l < out.size(); ++l) {
      const auto u = out.tuple(l);
      cplx coef = 1.0;
      for (int i = 0; i < w.degree() && coef != cplx{}; ++i) coef *= star_c[t[i]](u[i]);
      if (std::abs(coef) > 1e-15) acc += coef * w.at(l);
    }
    out.at(k) = alg.star(acc);
  }
  return out;
}

/// Max over even central K and tuples of |w(K X_1, ..) - K w(X_1, ..)|.
inline double z0_linearity_residual(const Cochain& w)
{
  if (w.degree() == 0) return 0.0;
  const auto& fam = *w.family();
  const auto& alg = w.algebra();
  double r = 0.0;
  for (const auto& k : graded_center(alg).even) {
    const Mat lk = alg->left_mult(k.coeffs);
    for (int i = 0; i < fam.size(); ++i) {
      Vec c;
      try {
        c = fam.expand(Mat(lk * fam[i].op));
      } catch (const std::invalid_argument&) {
        return std::numeric_limits<double>::infinity();
      }
      for (std::size_t f = 0; f < w.size(); ++f) {
        auto t = w.tuple(f);
        if (t[0] != i) continue;
        Vec acc = Vec::Zero(alg->dim());
        for (int j = 0; j < fam.size(); ++j) {
          t[0] = j;
          acc += c(j) * w.at(t);
        }
        r = std::max(r, max_abs(Vec(acc - alg->product(k.coeffs, w.at(f)))));
      }
    }
  }
  return r;
}

// ---------------------------------------------------------------------------------------
// Isomorphisms

struct IsoCheck {
  double product = 0.0;
  double unit = 0.0;
  double parity = 0.0;
  double involution = 0.0;
  double max() const { return std::max({product, unit, parity, involution}); }
};

/// Superalgebra *-isomorphism given by an invertible coefficient matrix.
class Isomorphism {
public:
  static Isomorphism create(AlgebraPtr src, AlgebraPtr dst, Mat map, double tol = 1e-9)
  {
    Isomorphism iso(std::move(src), std::move(dst), std::move(map));
    const auto c = iso.check();
    if (c.max() > tol)
      throw VerificationError("isomorphism verification failed (residual " + std::to_string(c.max()) + ")");
    return iso;
  }

  static Isomorphism identity(const AlgebraPtr& alg)
  {
    return create(alg, alg, Mat::Identity(alg->dim(), alg->dim()));
  }

  /// A -> U A U^dagger on an algebra with a matrix realization.
  static Isomorphism unitary_conjugation(const AlgebraPtr& alg, const Mat& u)
  {
    Mat map(alg->dim(), alg->dim());
    for (int i = 0; i < alg->dim(); ++i) map.col(i) = alg->from_matrix(u * alg->realization()[i] * u.adjoint());
    return create(alg, alg, map);
  }

  const AlgebraPtr& source() const { return src_; }
  const AlgebraPtr& target() const { return dst_; }
  const Mat& matrix() const { return map_; }
  const Mat& inverse_matrix() const { return inv_; }

  Vec operator()(const Vec& a) const { return map_ * a; }
  Element operator()(const Element& a) const { return {dst_, map_ * a.coeffs}; }
  Element inverse(const Element& b) const { return {src_, inv_ * b.coeffs}; }

  Isomorphism inverse() const { return Isomorphism(dst_, src_, inv_); }

  IsoCheck check() const
  {
    IsoCheck c;
    const int n = src_->dim();
    if (dst_->dim() != n || map_.rows() != n || map_.cols() != n) {
      c.product = std::numeric_limits<double>::infinity();
      return c;
    }
    for (int i = 0; i < n; ++i) {
      const Vec fi = map_.col(i);
      if (dst_->parity_of(fi) != src_->parity(i) && max_abs(fi) > 1e-12) c.parity = std::max(c.parity, max_abs(fi));
      for (int j = 0; j < n; ++j) {
        const Vec lhs = map_ * src_->left_mult(i).col(j);
        const Vec rhs = dst_->product(fi, map_.col(j));
        c.product = std::max(c.product, max_abs(Vec(lhs - rhs)));
      }
    }
    c.unit = max_abs(Vec(map_ * src_->unit() - dst_->unit()));
    c.involution = max_abs(Mat(map_ * src_->involution_matrix() - dst_->involution_matrix() * map_.conjugate()));
    if (!inv_.allFinite() || max_abs(Mat(inv_ * map_ - Mat::Identity(n, n))) > 1e-9) c.product = std::numeric_limits<double>::infinity();
    return c;
  }

private:
  Isomorphism(AlgebraPtr src, AlgebraPtr dst, Mat map) : src_(std::move(src)), dst_(std::move(dst)), map_(std::move(map))
  {
    inv_ = map_.rows() == map_.cols() ? Mat(map_.fullPivLu().inverse()) : Mat();
  }

  AlgebraPtr src_, dst_;
  Mat map_, inv_;
};

/// Psi o Phi.
inline Isomorphism compose(const Isomorphism& psi, const Isomorphism& phi)
{
  if (phi.target() != psi.source()) throw AlgebraMismatch("isomorphisms are not composable");
  return Isomorphism::create(phi.source(), psi.target(), psi.matrix() * phi.matrix());
}

/// (Phi_* X)(B) = Phi(X(Phi^{-1}(B))).
inline Derivation pushforward(const Isomorphism& phi, const Derivation& x)
{
  if (x.alg != phi.source()) throw AlgebraMismatch("derivation does not act on the isomorphism source");
  return {phi.target(), phi.matrix() * x.op * phi.inverse_matrix(), x.parity};
}

/// (Phi^* w)(X_1..) = Phi^{-1}[w(Phi_* X_1, ..)], as a cochain on src_family.
inline Cochain pullback(const Isomorphism& phi, const Cochain& w, const FamilyPtr& src_family)
{
  if (w.algebra() != phi.target()) throw AlgebraMismatch("cochain does not live on the isomorphism target");
  if (src_family->algebra() != phi.source()) throw AlgebraMismatch("family does not live on the isomorphism source");
  const int m = src_family->size();
  std::vector<Vec> push(m);
  for (int i = 0; i < m; ++i) push[i] = w.family()->expand(pushforward(phi, (*src_family)[i]));
  Cochain out(src_family, w.degree(), w.parity());
  for (std::size_t k = 0; k < out.size(); ++k) {
    const auto t = out.tuple(k);
    Vec acc = Vec::Zero(phi.target()->dim());
    for (std::size_t l = 0; l < w.size(); ++l) {
      const auto u = w.tuple(l);
      cplx coef = 1.0;
      for (int i = 0; i < w.degree() && coef != cplx{}; ++i) coef *= push[t[i]](u[i]);
      if (std::abs(coef) > 1e-15) acc += coef * w.at(l);
    }
    out.at(k) = phi.inverse_matrix() * acc;
  }
  return out;
}

inline Cochain pullback(const Isomorphism& phi, const Cochain& w)
{
  if (phi.source() != phi.target()) throw std::invalid_argument("pullback without a source family needs an automorphism");
  return pullback(phi, w, w.family());
}

}  // namespace ncsym

#endif  // NCSYM_CALCULUS_HPP
