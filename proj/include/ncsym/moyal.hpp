#ifndef NCSYM_MOYAL_HPP
#define NCSYM_MOYAL_HPP

#include "ncsym/core.hpp"

#include <cmath>
#include <compare>
#include <functional>
#include <map>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <vector>

namespace ncsym {

/// x^a p^b over several degrees of freedom.
struct PhaseMonomial {
  std::vector<int> x, p;

  auto operator<=>(const PhaseMonomial&) const = default;
};

/// Polynomial phase-space symbol with complex coefficients on n degrees of freedom.
class PhasePolynomial {
public:
  explicit PhasePolynomial(int dof = 1) : n_(dof)
  {
    if (dof < 1) throw std::invalid_argument("need at least one degree of freedom");
  }

  static PhasePolynomial constant(int dof, cplx c)
  {
    PhasePolynomial f(dof);
    f.add(f.unit_monomial(), c);
    return f;
  }
  /// Monomial x^a p^b for one degree of freedom.
  static PhasePolynomial monomial(int a, int b, cplx c = 1.0)
  {
    PhasePolynomial f(1);
    f.add(PhaseMonomial{{a}, {b}}, c);
    return f;
  }
  static PhasePolynomial x(int dof = 1, int j = 0) { return coordinate(dof, j, false); }
  static PhasePolynomial p(int dof = 1, int j = 0) { return coordinate(dof, j, true); }

  int dof() const { return n_; }
  const std::map<PhaseMonomial, cplx>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }

  void add(const PhaseMonomial& m, cplx c)
  {
    if (static_cast<int>(m.x.size()) != n_ || static_cast<int>(m.p.size()) != n_) throw std::invalid_argument("monomial has the wrong number of degrees of freedom");
    for (int k = 0; k < n_; ++k)
      if (m.x[static_cast<std::size_t>(k)] < 0 || m.p[static_cast<std::size_t>(k)] < 0) throw std::invalid_argument("negative exponent");
    if (c == cplx{}) return;
    auto [it, fresh] = terms_.try_emplace(m, c);
    if (!fresh) {
      it->second += c;
      if (it->second == cplx{}) terms_.erase(it);
    }
  }

  cplx coefficient(const PhaseMonomial& m) const
  {
    const auto it = terms_.find(m);
    return it == terms_.end() ? cplx{} : it->second;
  }

  double max_coeff() const
  {
    double m = 0.0;
    for (const auto& [k, c] : terms_) m = std::max(m, std::abs(c));
    return m;
  }

  int degree() const
  {
    int d = -1;
    for (const auto& [k, c] : terms_) {
      int s = 0;
      for (int j = 0; j < n_; ++j) s += k.x[static_cast<std::size_t>(j)] + k.p[static_cast<std::size_t>(j)];
      d = std::max(d, s);
    }
    return d;
  }

  /// Pointwise complex conjugation, the involution of the symbol algebra.
  PhasePolynomial conj() const
  {
    PhasePolynomial r(n_);
    for (const auto& [k, c] : terms_) r.add(k, std::conj(c));
    return r;
  }

  double max_imag() const
  {
    double m = 0.0;
    for (const auto& [k, c] : terms_) m = std::max(m, std::abs(c.imag()));
    return m;
  }

  cplx evaluate(const std::vector<double>& xs, const std::vector<double>& ps) const
  {
    if (static_cast<int>(xs.size()) != n_ || static_cast<int>(ps.size()) != n_) throw std::invalid_argument("point has the wrong dimension");
    cplx s = 0.0;
    for (const auto& [k, c] : terms_) {
      cplx t = c;
      for (int j = 0; j < n_; ++j)
        t *= std::pow(xs[static_cast<std::size_t>(j)], k.x[static_cast<std::size_t>(j)]) * std::pow(ps[static_cast<std::size_t>(j)], k.p[static_cast<std::size_t>(j)]);
      s += t;
    }
    return s;
  }
  cplx evaluate(double x, double p) const { return evaluate(std::vector<double>{x}, std::vector<double>{p}); }

  PhasePolynomial& operator+=(const PhasePolynomial& o)
  {
    require(o);
    for (const auto& [k, c] : o.terms_) add(k, c);
    return *this;
  }
  PhasePolynomial& operator-=(const PhasePolynomial& o)
  {
    require(o);
    for (const auto& [k, c] : o.terms_) add(k, -c);
    return *this;
  }
  PhasePolynomial& operator*=(cplx s)
  {
    if (s == cplx{}) terms_.clear();
    for (auto& [k, c] : terms_) c *= s;
    return *this;
  }

  void require(const PhasePolynomial& o) const
  {
    if (o.n_ != n_) throw std::invalid_argument("phase polynomials have different degrees of freedom");
  }

  PhaseMonomial unit_monomial() const { return {std::vector<int>(static_cast<std::size_t>(n_), 0), std::vector<int>(static_cast<std::size_t>(n_), 0)}; }

private:
  static PhasePolynomial coordinate(int dof, int j, bool momentum)
  {
    if (j < 0 || j >= dof) throw std::out_of_range("coordinate index out of range");
    PhasePolynomial f(dof);
    auto m = f.unit_monomial();
    (momentum ? m.p : m.x)[static_cast<std::size_t>(j)] = 1;
    f.add(m, 1.0);
    return f;
  }

  int n_;
  std::map<PhaseMonomial, cplx> terms_;
};

inline PhasePolynomial operator+(PhasePolynomial a, const PhasePolynomial& b) { return a += b; }
inline PhasePolynomial operator-(PhasePolynomial a, const PhasePolynomial& b) { return a -= b; }
inline PhasePolynomial operator*(cplx s, PhasePolynomial a) { return a *= s; }

/// Pointwise product.
inline PhasePolynomial operator*(const PhasePolynomial& f, const PhasePolynomial& g)
{
  f.require(g);
  PhasePolynomial r(f.dof());
  for (const auto& [a, ca] : f.terms())
    for (const auto& [b, cb] : g.terms()) {
      PhaseMonomial m = a;
      for (std::size_t j = 0; j < m.x.size(); ++j) {
        m.x[j] += b.x[j];
        m.p[j] += b.p[j];
      }
      r.add(m, ca * cb);
    }
  return r;
}

inline double distance(const PhasePolynomial& f, const PhasePolynomial& g) { return (f - g).max_coeff(); }

/// Partial derivative in x_j or p_j.
inline PhasePolynomial derivative(const PhasePolynomial& f, int j, bool momentum)
{
  PhasePolynomial r(f.dof());
  for (const auto& [k, c] : f.terms()) {
    auto m = k;
    int& e = (momentum ? m.p : m.x)[static_cast<std::size_t>(j)];
    if (e == 0) continue;
    const cplx c2 = c * static_cast<double>(e);
    --e;
    r.add(m, c2);
  }
  return r;
}

/// {f,g}_cl = sum_j (df/dp_j dg/dx_j - df/dx_j dg/dp_j), so {p,x} = 1.
inline PhasePolynomial classical_bracket(const PhasePolynomial& f, const PhasePolynomial& g)
{
  f.require(g);
  PhasePolynomial r(f.dof());
  for (int j = 0; j < f.dof(); ++j) r += derivative(f, j, true) * derivative(g, j, false) - derivative(f, j, false) * derivative(g, j, true);
  return r;
}

namespace detail {

inline double falling(int e, int k)
{
  double r = 1.0;
  for (int i = 0; i < k; ++i) r *= static_cast<double>(e - i);
  return r;
}

inline double binom(int n, int k)
{
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  return r;
}

struct MonoTerm {
  int order;  // power of hbar
  int x, p;
  cplx c;
};

/// One-dimensional x^a1 p^b1 * x^a2 p^b2 as a terminating bidifferential series.
inline std::vector<MonoTerm> star_monomials_1d(int a1, int b1, int a2, int b2)
{
  std::vector<MonoTerm> out;
  const int nmax = std::min(a1, b2) + std::min(b1, a2);
  double nfact = 1.0;
  cplx ipow = 1.0;  // (i/2)^n
  for (int n = 0; n <= nmax; ++n) {
    if (n > 0) {
      nfact *= n;
      ipow *= cplx(0.0, 0.5);
    }
    for (int k = 0; k <= n; ++k) {
      // d_x^(n-k) d_p^k on the left, d_p^(n-k) d_x^k on the right.
      if (n - k > a1 || k > b1 || n - k > b2 || k > a2) continue;
      const double w = falling(a1, n - k) * falling(b1, k) * falling(b2, n - k) * falling(a2, k);
      const double sgn = (k % 2) ? -1.0 : 1.0;
      out.push_back({n, a1 - (n - k) + a2 - k, b1 - k + b2 - (n - k), ipow / nfact * binom(n, k) * sgn * w});
    }
  }
  return out;
}

}  // namespace detail

/// f * g split by powers of hbar: result[n] multiplies hbar^n.
inline std::vector<PhasePolynomial> star_orders(const PhasePolynomial& f, const PhasePolynomial& g)
{
  f.require(g);
  const int n = f.dof();
  std::vector<PhasePolynomial> out;
  auto slot = [&](int order) -> PhasePolynomial& {
    while (static_cast<int>(out.size()) <= order) out.emplace_back(n);
    return out[static_cast<std::size_t>(order)];
  };
  slot(0);
  for (const auto& [ma, ca] : f.terms())
    for (const auto& [mb, cb] : g.terms()) {
      // Degrees of freedom star independently; combine their series.
      struct Partial {
        int order;
        PhaseMonomial m;
        cplx c;
      };
      std::vector<Partial> acc{{0, PhaseMonomial{{}, {}}, ca * cb}};
      for (int j = 0; j < n; ++j) {
        const auto js = static_cast<std::size_t>(j);
        const auto t1 = detail::star_monomials_1d(ma.x[js], ma.p[js], mb.x[js], mb.p[js]);
        std::vector<Partial> next;
        next.reserve(acc.size() * t1.size());
        for (const auto& pa : acc)
          for (const auto& t : t1) {
            Partial q = pa;
            q.order += t.order;
            q.m.x.push_back(t.x);
            q.m.p.push_back(t.p);
            q.c *= t.c;
            next.push_back(std::move(q));
          }
        acc = std::move(next);
      }
      for (const auto& q : acc) slot(q.order).add(q.m, q.c);
    }
  return out;
}

/// Groenewold star product; exact on polynomials.
inline PhasePolynomial star(const PhasePolynomial& f, const PhasePolynomial& g, double hbar)
{
  if (!(hbar > 0.0)) throw std::invalid_argument("hbar must be positive");
  const auto orders = star_orders(f, g);
  PhasePolynomial r(f.dof());
  double h = 1.0;
  for (const auto& t : orders) {
    r += h * t;
    h *= hbar;
  }
  return r;
}

/// {f,g}_M = (-i hbar)^-1 (f*g - g*f).
inline PhasePolynomial moyal_bracket(const PhasePolynomial& f, const PhasePolynomial& g, double hbar)
{
  return cplx(0.0, 1.0 / hbar) * (star(f, g, hbar) - star(g, f, hbar));
}

/// Moyal bracket split by powers of hbar; the hbar^0 entry is the classical bracket.
inline std::vector<PhasePolynomial> moyal_orders(const PhasePolynomial& f, const PhasePolynomial& g)
{
  const auto fg = star_orders(f, g), gf = star_orders(g, f);
  std::vector<PhasePolynomial> out;
  for (std::size_t n = 1; n < std::max(fg.size(), gf.size()); ++n) {
    PhasePolynomial d(f.dof());
    if (n < fg.size()) d += fg[n];
    if (n < gf.size()) d -= gf[n];
    out.push_back(cplx(0.0, 1.0) * d);
  }
  if (out.empty()) out.emplace_back(f.dof());
  return out;
}

// ---------------------------------------------------------------------------------------
// hbar-dependent symbols

/// Symbol with coefficients polynomial in hbar: orders[k] multiplies hbar^k, k may be negative.
struct HbarSymbol {
  std::map<int, PhasePolynomial> orders;

  /// Regular: only nonnegative powers of hbar, so the hbar -> 0 limit exists.
  bool regular() const
  {
    for (const auto& [k, f] : orders)
      if (k < 0 && !f.is_zero()) return false;
    return true;
  }
  PhasePolynomial limit(int dof = 1) const
  {
    if (!regular()) throw std::domain_error("symbol has no hbar -> 0 limit");
    const auto it = orders.find(0);
    return it == orders.end() ? PhasePolynomial(dof) : it->second;
  }
  PhasePolynomial at(double hbar, int dof = 1) const
  {
    PhasePolynomial r(dof);
    for (const auto& [k, f] : orders) r += std::pow(hbar, k) * f;
    return r;
  }
};

// ---------------------------------------------------------------------------------------
// Classical limit

struct ClassicalLimitReport {
  bool leading_exact = false;       // hbar^0 term of f*g equals fg
  bool first_order_exact = false;   // hbar^1 term equals -(i/2){f,g}_cl
  double leading_error = 0.0;
  double first_order_error = 0.0;
  std::vector<double> hbars;
  std::vector<double> remainder_norms;  // |f*g - fg + (i hbar/2){f,g}_cl|
  std::optional<double> slope;          // log-log slope; empty when the remainder vanishes
};

inline ClassicalLimitReport classical_limit_report(const PhasePolynomial& f, const PhasePolynomial& g, const std::vector<double>& hbars, double tol = 1e-12)
{
  ClassicalLimitReport r;
  const auto orders = star_orders(f, g);
  const PhasePolynomial zero(f.dof());
  const auto& t0 = orders[0];
  const auto& t1 = orders.size() > 1 ? orders[1] : zero;
  r.leading_error = distance(t0, f * g);
  r.first_order_error = distance(t1, cplx(0.0, -0.5) * classical_bracket(f, g));
  r.leading_exact = r.leading_error <= tol;
  r.first_order_exact = r.first_order_error <= tol;
  r.hbars = hbars;
  for (double h : hbars) {
    PhasePolynomial rem(f.dof());
    double hp = h * h;
    for (std::size_t n = 2; n < orders.size(); ++n, hp *= h) rem += hp * orders[n];
    r.remainder_norms.push_back(rem.max_coeff());
  }
  std::vector<double> lx, ly;
  for (std::size_t k = 0; k < hbars.size(); ++k)
    if (r.remainder_norms[k] > 0.0 && hbars[k] > 0.0) {
      lx.push_back(std::log(hbars[k]));
      ly.push_back(std::log(r.remainder_norms[k]));
    }
  if (lx.size() >= 2) {
    const double n = static_cast<double>(lx.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t k = 0; k < lx.size(); ++k) {
      sx += lx[k];
      sy += ly[k];
      sxx += lx[k] * lx[k];
      sxy += lx[k] * ly[k];
    }
    r.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  }
  return r;
}

// ---------------------------------------------------------------------------------------
// Phase-space dynamics

/// dx/dt = {H, x}_M, dp/dt = {H, p}_M for one degree of freedom, integrated by rk4.
struct Trajectory {
  std::vector<double> t, x, p;
  double energy_drift = 0.0;  // max |H(t) - H(0)|
};

inline Trajectory moyal_trajectory(const PhasePolynomial& h, double hbar, double x0, double p0, double t_end, double dt)
{
  if (h.dof() != 1) throw std::invalid_argument("trajectory integration supports one degree of freedom");
  if (h.max_imag() > 1e-12) throw std::invalid_argument("Hamiltonian symbol must be real");
  if (!(dt > 0.0) || !(t_end >= 0.0)) throw std::invalid_argument("need dt > 0 and t_end >= 0");
  const auto vx = moyal_bracket(h, PhasePolynomial::x(), hbar);
  const auto vp = moyal_bracket(h, PhasePolynomial::p(), hbar);
  auto field = [&](double x, double p) { return std::pair{vx.evaluate(x, p).real(), vp.evaluate(x, p).real()}; };
  Trajectory tr;
  double x = x0, p = p0, t = 0.0;
  const double e0 = h.evaluate(x, p).real();
  tr.t.push_back(t);
  tr.x.push_back(x);
  tr.p.push_back(p);
  const auto steps = static_cast<long>(std::ceil(t_end / dt - 1e-12));
  const double step = steps > 0 ? t_end / static_cast<double>(steps) : 0.0;
  for (long s = 0; s < steps; ++s) {
    const auto [k1x, k1p] = field(x, p);
    const auto [k2x, k2p] = field(x + 0.5 * step * k1x, p + 0.5 * step * k1p);
    const auto [k3x, k3p] = field(x + 0.5 * step * k2x, p + 0.5 * step * k2p);
    const auto [k4x, k4p] = field(x + step * k3x, p + step * k3p);
    x += step / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x);
    p += step / 6.0 * (k1p + 2 * k2p + 2 * k3p + k4p);
    t += step;
    tr.t.push_back(t);
    tr.x.push_back(x);
    tr.p.push_back(p);
    tr.energy_drift = std::max(tr.energy_drift, std::abs(h.evaluate(x, p).real() - e0));
  }
  return tr;
}

// ---------------------------------------------------------------------------------------
// Wigner functions

/// Wave function sampled on x_k = x_min + k dx.
struct SampledWave {
  double x_min = 0.0;
  double dx = 0.0;
  Vec values;

  double x(Eigen::Index k) const { return x_min + static_cast<double>(k) * dx; }
};

inline double default_half_width(double hbar, double spread = 1.0) { return 8.0 * std::sqrt(hbar) * std::max(1.0, spread); }

inline SampledWave sample_wave(const std::function<cplx(double)>& psi, double half_width, int points = 512)
{
  if (points < 3 || !(half_width > 0.0)) throw std::invalid_argument("need at least 3 points and a positive half-width");
  SampledWave w{-half_width, 2.0 * half_width / (points - 1), Vec(points)};
  for (int k = 0; k < points; ++k) w.values(k) = psi(w.x(k));
  return w;
}

/// (pi hbar s^2)^(-1/4) exp(-(x-x0)^2/(2 hbar s^2) + i p0 x / hbar).
inline cplx coherent_wave(double x, double hbar, double x0 = 0.0, double p0 = 0.0, double spread = 1.0)
{
  const double s2 = spread * spread;
  return std::pow(std::numbers::pi * hbar * s2, -0.25) * std::exp(cplx(-(x - x0) * (x - x0) / (2.0 * hbar * s2), p0 * x / hbar));
}

inline double trapezoid_norm(const SampledWave& w)
{
  const auto n = w.values.size();
  double s = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) s += std::norm(w.values(k)) * ((k == 0 || k == n - 1) ? 0.5 : 1.0);
  return s * w.dx;
}

struct WignerGrid {
  RVec x, p;
  RMat w;  // w(i, j) = W(x_i, p_j)
  double hbar = 1.0;
  double max_imag = 0.0;

  double dx() const { return x.size() > 1 ? x(1) - x(0) : 0.0; }
  double dp() const { return p.size() > 1 ? p(1) - p(0) : 0.0; }

  void write_csv(std::ostream& os) const
  {
    os << "x,p,W\n";
    os.precision(12);
    for (Eigen::Index i = 0; i < x.size(); ++i)
      for (Eigen::Index j = 0; j < p.size(); ++j) os << x(i) << ',' << p(j) << ',' << w(i, j) << '\n';
  }
};

/// W(x,p) = integral exp(-i p y / hbar) psi(x + y/2) psi*(x - y/2) dy on the sample grid.
inline WignerGrid wigner_function(const SampledWave& psi, double hbar, std::optional<double> p_half_width = std::nullopt,
                                  std::optional<int> p_points = std::nullopt)
{
  if (!(hbar > 0.0)) throw std::invalid_argument("hbar must be positive");
  const Eigen::Index n = psi.values.size();
  if (n < 3) throw std::invalid_argument("wave function needs at least 3 samples");
  if (std::abs(psi.values(0)) >= 1e-8 || std::abs(psi.values(n - 1)) >= 1e-8)
    throw std::domain_error("wave function does not vanish at the grid boundary");
  if (std::abs(trapezoid_norm(psi) - 1.0) > 1e-6) throw std::invalid_argument("wave function is not normalized on the grid");
  WignerGrid g;
  g.hbar = hbar;
  g.x = RVec(n);
  for (Eigen::Index k = 0; k < n; ++k) g.x(k) = psi.x(k);
  const double ph = p_half_width.value_or(-psi.x_min);
  const Eigen::Index np = p_points.value_or(static_cast<int>(n));
  g.p = RVec::LinSpaced(np, -ph, ph);
  // y = 2 s dx, so x +- y/2 stays on the grid.
  const Eigen::Index ns = 2 * n - 1;
  Mat c = Mat::Zero(n, ns);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index s = -(n - 1); s <= n - 1; ++s) {
      const Eigen::Index a = i + s, b = i - s;
      if (a < 0 || b < 0 || a >= n || b >= n) continue;
      c(i, s + n - 1) = psi.values(a) * std::conj(psi.values(b));
    }
  Mat e(ns, np);
  for (Eigen::Index j = 0; j < np; ++j)
    for (Eigen::Index s = -(n - 1); s <= n - 1; ++s) e(s + n - 1, j) = std::exp(cplx(0.0, -g.p(j) * 2.0 * static_cast<double>(s) * psi.dx / hbar));
  const Mat wc = (2.0 * psi.dx) * (c * e);
  g.w = wc.real();
  g.max_imag = max_abs(Mat(wc.imag().cast<cplx>()));
  return g;
}

namespace detail {

/// Trapezoid of f(x_i, p_j) W(x_i, p_j) over a strided subgrid, in units dx dp / (2 pi hbar).
inline double wigner_quadrature(const WignerGrid& g, const RMat& f, Eigen::Index stride)
{
  const Eigen::Index nx = (g.x.size() - 1) / stride + 1, np = (g.p.size() - 1) / stride + 1;
  double s = 0.0;
  for (Eigen::Index a = 0; a < nx; ++a)
    for (Eigen::Index b = 0; b < np; ++b) {
      const double wx = (a == 0 || a == nx - 1) ? 0.5 : 1.0, wp = (b == 0 || b == np - 1) ? 0.5 : 1.0;
      s += wx * wp * f(a * stride, b * stride) * g.w(a * stride, b * stride);
    }
  return s * g.dx() * g.dp() * static_cast<double>(stride * stride) / (2.0 * std::numbers::pi * g.hbar);
}

}  // namespace detail

/// integral A_W W dx dp / (2 pi hbar), checked against the half-resolution grid.
inline double weyl_expectation(const PhasePolynomial& a, const WignerGrid& g, double richardson_tol = 1e-3)
{
  if (a.dof() != 1) throw std::invalid_argument("Wigner grids carry one degree of freedom");
  if (a.max_imag() > 1e-12) throw std::invalid_argument("observable symbol must have real coefficients");
  RMat f(g.x.size(), g.p.size());
  for (Eigen::Index i = 0; i < g.x.size(); ++i)
    for (Eigen::Index j = 0; j < g.p.size(); ++j) f(i, j) = a.evaluate(g.x(i), g.p(j)).real();
  const double fine = detail::wigner_quadrature(g, f, 1), coarse = detail::wigner_quadrature(g, f, 2);
  if (std::abs(fine - coarse) > richardson_tol * std::max(1.0, std::abs(fine))) throw std::domain_error("Wigner grid too coarse for this observable");
  return fine;
}

inline double wigner_normalization(const WignerGrid& g) { return weyl_expectation(PhasePolynomial::constant(1, 1.0), g); }

// ---------------------------------------------------------------------------------------
// Integral form of the twisted product

/// (f*g)(x,p) = (2 pi)^-2 int exp[-i sigma(xi - eta, tau)] f(eta + hbar tau/4) g(eta - hbar tau/4) d eta d tau
/// with sigma(xi, xi') = p x' - x p', for separable symbols f = fx(x) fp(p), g = gx(x) gp(p).
/// The four-fold trapezoid sum is contracted as a trace of grid matrices.
struct SeparableSymbol {
  std::function<cplx(double)> fx, fp;
};

inline cplx twisted_product_quadrature(const SeparableSymbol& f, const SeparableSymbol& g, double x, double p, double hbar, double eta_half,
                                       double tau_half, int points)
{
  if (points < 3) throw std::invalid_argument("need at least 3 quadrature points");
  const RVec eta = RVec::LinSpaced(points, -eta_half, eta_half), tau = RVec::LinSpaced(points, -tau_half, tau_half);
  const double de = eta(1) - eta(0), dt = tau(1) - tau(0);
  auto wt = [&](Eigen::Index k) { return (k == 0 || k == points - 1) ? 0.5 : 1.0; };
  Mat ax(points, points), ap(points, points), ph1(points, points), ph2(points, points);
  for (Eigen::Index a = 0; a < points; ++a)
    for (Eigen::Index b = 0; b < points; ++b) {
      // ax(eta_x, tau_x), ap(eta_p, tau_p) carry the symbol factors and quadrature weights.
      ax(a, b) = f.fx(eta(a) + hbar * tau(b) / 4.0) * g.fx(eta(a) - hbar * tau(b) / 4.0) * wt(a) * wt(b) * de * dt;
      ap(a, b) = f.fp(eta(a) + hbar * tau(b) / 4.0) * g.fp(eta(a) - hbar * tau(b) / 4.0) * wt(a) * wt(b) * de * dt;
      // -sigma(xi - eta, tau) = -(p - eta_p) tau_x + (x - eta_x) tau_p.
      ph1(a, b) = std::exp(cplx(0.0, -(p - eta(b)) * tau(a)));  // (tau_x, eta_p)
      ph2(a, b) = std::exp(cplx(0.0, (x - eta(b)) * tau(a)));   // (tau_p, eta_x)
    }
  // sum over eta_x, tau_x, eta_p, tau_p of ax(eta_x,tau_x) ph1(tau_x,eta_p) ap(eta_p,tau_p) ph2(tau_p,eta_x).
  const cplx s = (ax * ph1 * ap * ph2).trace();
  return s / (4.0 * std::numbers::pi * std::numbers::pi);
}

}  // namespace ncsym

#endif  // NCSYM_MOYAL_HPP
