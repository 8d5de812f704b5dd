#ifndef NCSYM_SUPERCLASSICAL_HPP
#define NCSYM_SUPERCLASSICAL_HPP

#include "ncsym/states.hpp"

#include <bit>
#include <map>

namespace ncsym {

// ---------------------------------------------------------------------------------------
// Functions on R^{m|n}: sparse polynomials in even x^1..x^m with Grassmann coefficients.

struct SuperMonomial {
  std::vector<int> exps;  // powers of x^1..x^m
  std::uint32_t bits = 0; // ascending product of theta^a for set bits a-1

  auto operator<=>(const SuperMonomial&) const = default;
};

enum class Side { Left, Right };

class SuperPolynomial {
public:
  SuperPolynomial(int m, int n) : m_(m), n_(n)
  {
    if (m < 0 || n < 0 || n > 16) throw std::invalid_argument("super polynomial needs 0 <= m and 0 <= n <= 16");
  }

  static SuperPolynomial constant(int m, int n, cplx c)
  {
    SuperPolynomial p(m, n);
    p.add({std::vector<int>(static_cast<std::size_t>(m), 0), 0}, c);
    return p;
  }

  /// Coordinate xi^A: even x^{A+1} for A < m, odd theta^{A-m+1} otherwise.
  static SuperPolynomial coordinate(int m, int n, int a)
  {
    if (a < 0 || a >= m + n) throw std::out_of_range("coordinate index out of range");
    SuperPolynomial p(m, n);
    SuperMonomial mono{std::vector<int>(static_cast<std::size_t>(m), 0), 0};
    if (a < m) mono.exps[static_cast<std::size_t>(a)] = 1;
    else mono.bits = 1u << (a - m);
    p.add(mono, 1.0);
    return p;
  }

  /// Element of G_n (m = 0) from its coefficient vector indexed by bit-sets.
  static SuperPolynomial from_grassmann(int n, const Vec& c)
  {
    if (c.size() != (Eigen::Index{1} << n)) throw AlgebraMismatch("coefficient vector has the wrong length for G_n");
    SuperPolynomial p(0, n);
    for (Eigen::Index s = 0; s < c.size(); ++s) p.add({{}, static_cast<std::uint32_t>(s)}, c(s));
    return p;
  }

  Vec to_grassmann() const
  {
    if (m_ != 0) throw std::invalid_argument("only m = 0 polynomials live in G_n");
    Vec c = Vec::Zero(Eigen::Index{1} << n_);
    for (const auto& [k, v] : terms_) c(k.bits) += v;
    return c;
  }

  int even_vars() const { return m_; }
  int odd_vars() const { return n_; }
  const std::map<SuperMonomial, cplx>& terms() const { return terms_; }
  bool is_zero(double tol = 0.0) const { return max_coeff() <= tol; }

  double max_coeff() const
  {
    double r = 0.0;
    for (const auto& kv : terms_) r = std::max(r, std::abs(kv.second));
    return r;
  }

  void add(const SuperMonomial& k, cplx c)
  {
    if (c == cplx{}) return;
    if (static_cast<int>(k.exps.size()) != m_ || (k.bits >> n_) != 0) throw std::invalid_argument("monomial does not fit R^{m|n}");
    auto [it, fresh] = terms_.emplace(k, c);
    if (!fresh) {
      it->second += c;
      if (it->second == cplx{}) terms_.erase(it);
    }
  }

  /// Parity when homogeneous.
  std::optional<Parity> parity() const
  {
    std::optional<Parity> p;
    for (const auto& kv : terms_) {
      const Parity q = parity_of(std::popcount(kv.first.bits));
      if (p && *p != q) return std::nullopt;
      p = q;
    }
    return p.value_or(Parity::Even);
  }

  SuperPolynomial even_part() const { return filter(Parity::Even); }
  SuperPolynomial odd_part() const { return filter(Parity::Odd); }

  /// (xi^A)* = xi^A with the Koszul rule reduces to conjugating coefficients.
  SuperPolynomial star() const
  {
    SuperPolynomial r(m_, n_);
    for (const auto& [k, v] : terms_) r.add(k, std::conj(v));
    return r;
  }

  cplx evaluate_body(const std::vector<double>& x) const
  {
    // Value of the theta-free part at x.
    cplx s = 0.0;
    for (const auto& [k, v] : terms_) {
      if (k.bits) continue;
      cplx t = v;
      for (int a = 0; a < m_; ++a) t *= std::pow(x[static_cast<std::size_t>(a)], k.exps[static_cast<std::size_t>(a)]);
      s += t;
    }
    return s;
  }

  SuperPolynomial& operator+=(const SuperPolynomial& o)
  {
    check(o);
    for (const auto& [k, v] : o.terms_) add(k, v);
    return *this;
  }
  SuperPolynomial& operator-=(const SuperPolynomial& o)
  {
    check(o);
    for (const auto& [k, v] : o.terms_) add(k, -v);
    return *this;
  }
  SuperPolynomial& operator*=(cplx s)
  {
    if (s == cplx{}) terms_.clear();
    for (auto& kv : terms_) kv.second *= s;
    return *this;
  }

  friend SuperPolynomial operator+(SuperPolynomial a, const SuperPolynomial& b) { return a += b; }
  friend SuperPolynomial operator-(SuperPolynomial a, const SuperPolynomial& b) { return a -= b; }
  friend SuperPolynomial operator*(cplx s, SuperPolynomial a) { return a *= s; }

  friend SuperPolynomial operator*(const SuperPolynomial& a, const SuperPolynomial& b)
  {
    a.check(b);
    SuperPolynomial r(a.m_, a.n_);
    for (const auto& [ka, va] : a.terms_)
      for (const auto& [kb, vb] : b.terms_) {
        const int sg = grassmann::monomial_sign(ka.bits, kb.bits);
        if (!sg) continue;
        SuperMonomial k{ka.exps, ka.bits | kb.bits};
        for (int i = 0; i < a.m_; ++i) k.exps[static_cast<std::size_t>(i)] += kb.exps[static_cast<std::size_t>(i)];
        r.add(k, static_cast<double>(sg) * va * vb);
      }
    return r;
  }

  void check(const SuperPolynomial& o) const
  {
    if (m_ != o.m_ || n_ != o.n_) throw AlgebraMismatch("super polynomials on different superspaces");
  }

private:
  SuperPolynomial filter(Parity want) const
  {
    SuperPolynomial r(m_, n_);
    for (const auto& [k, v] : terms_)
      if (parity_of(std::popcount(k.bits)) == want) r.add(k, v);
    return r;
  }

  int m_, n_;
  std::map<SuperMonomial, cplx> terms_;
};

inline double distance(const SuperPolynomial& a, const SuperPolynomial& b) { return (a - b).max_coeff(); }

/// Left (right) derivative by theta^alpha: move the generator to the front (back) of the
/// ascending monomial, collecting one sign per generator passed, then drop it.
inline SuperPolynomial odd_partial(Side side, int alpha, const SuperPolynomial& f)
{
  if (alpha < 1 || alpha > f.odd_vars()) throw std::out_of_range("odd generator index out of range");
  const std::uint32_t g = 1u << (alpha - 1);
  SuperPolynomial r(f.even_vars(), f.odd_vars());
  for (const auto& [k, v] : f.terms()) {
    if (!(k.bits & g)) continue;
    const int before = std::popcount(k.bits & (g - 1));
    const int after = std::popcount(k.bits) - 1 - before;
    const int passed = side == Side::Left ? before : after;
    r.add({k.exps, k.bits & ~g}, (passed & 1) ? -v : v);
  }
  return r;
}

/// Ordinary derivative by the even variable x^a (1-based).
inline SuperPolynomial even_partial(int a, const SuperPolynomial& f)
{
  if (a < 1 || a > f.even_vars()) throw std::out_of_range("even variable index out of range");
  const auto ia = static_cast<std::size_t>(a - 1);
  SuperPolynomial r(f.even_vars(), f.odd_vars());
  for (const auto& [k, v] : f.terms()) {
    if (k.exps[ia] == 0) continue;
    SuperMonomial d = k;
    d.exps[ia] -= 1;
    r.add(d, static_cast<double>(k.exps[ia]) * v);
  }
  return r;
}

/// Derivative by xi^A (0-based) on the given side; the side is irrelevant for even A.
inline SuperPolynomial partial(Side side, int a, const SuperPolynomial& f)
{
  return a < f.even_vars() ? even_partial(a + 1, f) : odd_partial(side, a - f.even_vars() + 1, f);
}

/// Constant coefficients _A w_B of an even symplectic form on R^{m|n}: antisymmetric on
/// the even block, symmetric on the odd block, zero mixed blocks.
class SuperPBMatrix {
public:
  static SuperPBMatrix create(int m, int n, const Mat& lower, double tol = 1e-12)
  {
    if (lower.rows() != m + n || lower.cols() != m + n) throw std::invalid_argument("super PB matrix has the wrong size");
    const Mat ee = lower.topLeftCorner(m, m), oo = lower.bottomRightCorner(n, n);
    if (max_abs(Mat(ee + ee.transpose())) > tol) throw std::invalid_argument("even block must be antisymmetric");
    if (max_abs(Mat(oo - oo.transpose())) > tol) throw std::invalid_argument("odd block must be symmetric");
    if (max_abs(Mat(lower.topRightCorner(m, n))) > tol || max_abs(Mat(lower.bottomLeftCorner(n, m))) > tol)
      throw std::invalid_argument("mixed blocks must vanish for an even form");
    Eigen::FullPivLU<Mat> lu(lower);
    if (!lu.isInvertible()) throw NondegeneracyError("super PB matrix is singular");
    SuperPBMatrix s;
    s.m_ = m;
    s.n_ = n;
    s.lower_ = lower;
    s.upper_ = lu.inverse();
    return s;
  }

  /// Variables (q1, p1, ..., q_k, p_k, theta^1..theta^n) with {p, q} = 1 and {theta^a, theta^b} = -delta_ab.
  static SuperPBMatrix canonical(int pairs, int n)
  {
    const int m = 2 * pairs;
    Mat upper = Mat::Zero(m + n, m + n);
    for (int j = 0; j < pairs; ++j) {
      upper(2 * j, 2 * j + 1) = 1.0;
      upper(2 * j + 1, 2 * j) = -1.0;
    }
    for (int a = 0; a < n; ++a) upper(m + a, m + a) = 1.0;
    return create(m, n, Mat(upper.inverse()));
  }

  int even_vars() const { return m_; }
  int odd_vars() const { return n_; }
  int size() const { return m_ + n_; }
  const Mat& lower() const { return lower_; }
  /// ^A w^B, the inverse of _A w_B.
  const Mat& upper() const { return upper_; }

private:
  int m_ = 0, n_ = 0;
  Mat lower_, upper_;
};

/// {f, g} = -(d_r f / d xi^B) ^B w^A (d_l g / d xi^A).
inline SuperPolynomial super_poisson(const SuperPBMatrix& pb, const SuperPolynomial& f, const SuperPolynomial& g)
{
  f.check(g);
  if (f.even_vars() != pb.even_vars() || f.odd_vars() != pb.odd_vars()) throw AlgebraMismatch("super PB matrix does not match the superspace");
  const int k = pb.size();
  std::vector<SuperPolynomial> dl;
  dl.reserve(static_cast<std::size_t>(k));
  for (int a = 0; a < k; ++a) dl.push_back(partial(Side::Left, a, g));
  SuperPolynomial out(f.even_vars(), f.odd_vars());
  for (int b = 0; b < k; ++b) {
    const SuperPolynomial fr = partial(Side::Right, b, f);
    if (fr.is_zero()) continue;
    for (int a = 0; a < k; ++a) {
      const cplx w = pb.upper()(b, a);
      if (w == cplx{} || dl[static_cast<std::size_t>(a)].is_zero()) continue;
      out -= w * (fr * dl[static_cast<std::size_t>(a)]);
    }
  }
  return out;
}

/// Supervector field X^A d_l/d xi^A on G_n as an operator on coefficient vectors.
inline Mat vector_field_operator(int n, const std::vector<SuperPolynomial>& components)
{
  if (static_cast<int>(components.size()) != n) throw std::invalid_argument("need one component per odd generator");
  const int dim = 1 << n;
  Mat op = Mat::Zero(dim, dim);
  for (int s = 0; s < dim; ++s) {
    Vec e = Vec::Zero(dim);
    e(s) = 1.0;
    const SuperPolynomial f = SuperPolynomial::from_grassmann(n, e);
    SuperPolynomial img(0, n);
    for (int a = 0; a < n; ++a) img += components[static_cast<std::size_t>(a)] * odd_partial(Side::Left, a + 1, f);
    op.col(s) = img.to_grassmann();
  }
  return op;
}

/// Y_{e_i} on G_n for a purely odd super PB: ops[i].col(j) = {e_i, e_j}.
inline std::vector<Mat> grassmann_poisson_operators(const SuperPBMatrix& pb)
{
  if (pb.even_vars() != 0) throw std::invalid_argument("Grassmann Poisson operators need m = 0");
  const int n = pb.odd_vars(), dim = 1 << n;
  std::vector<SuperPolynomial> basis;
  for (int s = 0; s < dim; ++s) {
    Vec e = Vec::Zero(dim);
    e(s) = 1.0;
    basis.push_back(SuperPolynomial::from_grassmann(n, e));
  }
  std::vector<Mat> ops(static_cast<std::size_t>(dim), Mat::Zero(dim, dim));
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j)
      ops[static_cast<std::size_t>(i)].col(j) = super_poisson(pb, basis[static_cast<std::size_t>(i)], basis[static_cast<std::size_t>(j)]).to_grassmann();
  return ops;
}

// ---------------------------------------------------------------------------------------
// Berezin states

/// E[x^k] for a centred Gaussian of width sigma.
inline double gaussian_moment(int k, double sigma)
{
  if (k & 1) return 0.0;
  double r = 1.0;
  for (int j = k - 1; j > 0; j -= 2) r *= j;
  return r * std::pow(sigma, k);
}

/// int f rho d theta^n..d theta^1 d^m x. For m > 0 the x-coefficients of rho are taken
/// relative to a normalized Gaussian reference weight of width sigma, integrated exactly
/// through its moments.
inline cplx berezin_expectation(const SuperPolynomial& rho, const SuperPolynomial& f, double sigma = 1.0)
{
  rho.check(f);
  const int n = rho.odd_vars();
  const std::uint32_t top = n == 32 ? ~0u : (1u << n) - 1u;
  const double sign = ((n * (n - 1) / 2) & 1) ? -1.0 : 1.0;
  const SuperPolynomial prod = f * rho;
  cplx s = 0.0;
  for (const auto& [k, v] : prod.terms()) {
    if (k.bits != top) continue;
    cplx t = sign * v;
    for (int e : k.exps) t *= gaussian_moment(e, sigma);
    s += t;
  }
  return s;
}

inline SuperPolynomial top_density(int m, int n)
{
  // theta^n ... theta^1 = (-1)^{n(n-1)/2} theta^1 ... theta^n.
  SuperPolynomial r(m, n);
  r.add({std::vector<int>(static_cast<std::size_t>(m), 0), n == 0 ? 0u : (1u << n) - 1u}, ((n * (n - 1) / 2) & 1) ? -1.0 : 1.0);
  return r;
}

struct PositivityScan {
  bool feasible = true;
  std::optional<SuperPolynomial> witness;  // f with phi(f f*) not a nonnegative real
  cplx witness_value = 0.0;
  int samples = 0;
};

/// Tests phi(f f*) >= 0 over odd linear pairs a theta^i + b theta^j on a phase grid,
/// constant-plus-quadratic even elements, and random dense elements.
inline PositivityScan positivity_scan(const SuperPolynomial& rho, Rng& rng, int random_samples = 200, double tol = 1e-10)
{
  const int m = rho.even_vars(), n = rho.odd_vars();
  PositivityScan scan;
  const auto test = [&](const SuperPolynomial& f) {
    ++scan.samples;
    const cplx v = berezin_expectation(rho, f * f.star());
    if (std::abs(v.imag()) > tol || v.real() < -tol) {
      if (scan.feasible) {
        scan.feasible = false;
        scan.witness = f;
        scan.witness_value = v;
      }
    }
  };
  const std::vector<cplx> grid{1.0, -1.0, I_unit, -I_unit, cplx(1.0, 1.0), cplx(2.0, -0.5)};
  const auto mono = [&](std::uint32_t bits, cplx c) {
    SuperPolynomial p(m, n);
    p.add({std::vector<int>(static_cast<std::size_t>(m), 0), bits}, c);
    return p;
  };
  for (int i = 0; i < n && scan.feasible; ++i)
    for (int j = i + 1; j < n; ++j)
      for (cplx a : grid)
        for (cplx b : grid) test(mono(1u << i, a) + mono(1u << j, b));
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      for (cplx a : grid)
        for (cplx b : grid) test(mono(0u, a) + mono((1u << i) | (1u << j), b));
  for (int k = 0; k < random_samples; ++k) {
    SuperPolynomial f(m, n);
    for (std::uint32_t s = 0; s < (1u << n); ++s) f.add({std::vector<int>(static_cast<std::size_t>(m), 0), s}, rng.cnormal());
    test(f);
  }
  return scan;
}

struct G3Report {
  Vec density;                 // surviving rho on G_3
  Mat constraints;             // rows: phi(theta^a theta^b) as linear forms in c
  int solution_dim = 0;        // dimension of the feasible c-space
  bool unique = false;
  bool pure = false;
  PositivityScan scan;         // scan of the surviving density
  CcVerdict cc;
  std::pair<Vec, Vec> witness; // indistinguishable observables
  std::pair<cplx, cplx> witness_values;
};

/// rho = theta^3 theta^2 theta^1 + c_a theta^a. The test elements a theta^i + b theta^j give
/// phi(f f*) = 2i Im(a conj b) phi(theta^i theta^j), so nonnegativity for all a, b forces
/// phi(theta^i theta^j) = 0, which is linear in c.
inline G3Report g3_unique_state(Rng& rng)
{
  constexpr int n = 3;
  const auto g3 = build_grassmann_algebra(n);
  const SuperPolynomial top = top_density(0, n);
  const auto gen = [&](int a) { return SuperPolynomial::coordinate(0, n, a - 1); };

  G3Report rep;
  rep.constraints = Mat::Zero(3, 3);
  int row = 0;
  for (int i = 1; i <= n; ++i)
    for (int j = i + 1; j <= n; ++j, ++row)
      for (int c = 1; c <= n; ++c) rep.constraints(row, c - 1) = berezin_expectation(gen(c), gen(i) * gen(j));
  const Mat ns = null_space(rep.constraints);
  rep.solution_dim = static_cast<int>(ns.cols());
  rep.unique = rep.solution_dim == 0;
  rep.density = top.to_grassmann();
  rep.scan = positivity_scan(top, rng);

  const State phi = make_state(g3, BerezinDensity{rep.density});
  rep.pure = rep.unique;

  // Even self-adjoint observables 1 + b theta^1 theta^2 differing only in b.
  Vec f1 = Vec::Zero(8), f2 = Vec::Zero(8);
  f1(0) = f2(0) = 1.0;
  f1(3) = 1.0;
  f2(3) = 2.0;
  rep.cc = cc_check_explicit({Element{g3, f1}, Element{g3, f2}}, {phi});
  rep.witness = rep.cc.observable_witness ? std::pair{rep.cc.observable_witness->first.coeffs, rep.cc.observable_witness->second.coeffs}
                                          : std::pair{f1, f2};
  rep.witness_values = {phi.expectation(rep.witness.first), phi.expectation(rep.witness.second)};
  return rep;
}

}  // namespace ncsym

#endif  // NCSYM_SUPERCLASSICAL_HPP
