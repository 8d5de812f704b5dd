#include "ncsym/moyal.hpp"
#include "ncsym/random.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <sstream>

using namespace ncsym;

namespace {

using Poly1 = std::map<std::pair<int, int>, cplx>;  // (a, b) -> coefficient of x^a p^b

Poly1 to_poly1(const PhasePolynomial& f)
{
  Poly1 r;
  for (const auto& [m, c] : f.terms()) r[{m.x[0], m.p[0]}] += c;
  return r;
}

Poly1 d1(const Poly1& f, bool momentum, int times)
{
  Poly1 r = f;
  for (int t = 0; t < times; ++t) {
    Poly1 next;
    for (const auto& [k, c] : r) {
      int e = momentum ? k.second : k.first;
      if (e == 0) continue;
      next[momentum ? std::pair{k.first, e - 1} : std::pair{e - 1, k.second}] += c * static_cast<double>(e);
    }
    r = next;
  }
  return r;
}

/// Reference star product: sum_n (i hbar/2)^n / n! sum_k C(n,k) (-1)^k (d_x^(n-k) d_p^k f)(d_p^(n-k) d_x^k g).
Poly1 star_oracle(const Poly1& f, const Poly1& g, double hbar, int max_order = 12)
{
  Poly1 out;
  double nfact = 1.0;
  for (int n = 0; n <= max_order; ++n) {
    if (n > 0) nfact *= n;
    const cplx pref = std::pow(cplx(0.0, hbar / 2.0), n) / nfact;
    for (int k = 0; k <= n; ++k) {
      const double bin = std::tgamma(n + 1.0) / (std::tgamma(k + 1.0) * std::tgamma(n - k + 1.0));
      const Poly1 lf = d1(d1(f, false, n - k), true, k), rg = d1(d1(g, true, n - k), false, k);
      for (const auto& [a, ca] : lf)
        for (const auto& [b, cb] : rg) out[{a.first + b.first, a.second + b.second}] += pref * bin * ((k % 2) ? -1.0 : 1.0) * ca * cb;
    }
  }
  return out;
}

double poly1_distance(const Poly1& a, const PhasePolynomial& b)
{
  Poly1 diff = a;
  for (const auto& [k, c] : to_poly1(b)) diff[k] -= c;
  double m = 0.0;
  for (const auto& [k, c] : diff) m = std::max(m, std::abs(c));
  return m;
}

PhasePolynomial random_poly(Rng& rng, int dof, int max_degree, int terms = 6)
{
  PhasePolynomial f(dof);
  for (int t = 0; t < terms; ++t) {
    PhaseMonomial m{std::vector<int>(static_cast<std::size_t>(dof), 0), std::vector<int>(static_cast<std::size_t>(dof), 0)};
    int budget = rng.index(max_degree + 1);
    while (budget-- > 0) {
      const auto j = static_cast<std::size_t>(rng.index(dof));
      (rng.index(2) ? m.x : m.p)[j] += 1;
    }
    f.add(m, rng.cnormal());
  }
  return f;
}

const auto X = PhasePolynomial::x();
const auto P = PhasePolynomial::p();

/// d^m/dx^m exp(-a (x - c)^2) via Hermite polynomials.
double gaussian_derivative(int m, double a, double c, double x)
{
  const double u = std::sqrt(a) * (x - c);
  double h0 = 1.0, h1 = 2.0 * u;
  double hm = m == 0 ? h0 : h1;
  for (int k = 2; k <= m; ++k) {
    hm = 2.0 * u * h1 - 2.0 * (k - 1) * h0;
    h0 = h1;
    h1 = hm;
  }
  return std::pow(-std::sqrt(a), m) * hm * std::exp(-a * (x - c) * (x - c));
}

}  // namespace

TEST_CASE("star product examples", "[moyal]")
{
  const double h = 0.37;
  const auto xp = star(X, P, h);
  CHECK(distance(xp, X * P + PhasePolynomial::constant(1, cplx(0.0, h / 2.0))) <= 1e-15);
  Rng rng(1);
  const auto f = random_poly(rng, 1, 4);
  CHECK(distance(star(f, PhasePolynomial::constant(1, 1.0), h), f) <= 1e-15);
  CHECK(distance(star(PhasePolynomial::constant(1, 1.0), f, h), f) <= 1e-15);
  const auto x2 = X * X, p2 = P * P;
  const auto expect = x2 * p2 + cplx(0.0, 2.0 * h) * (X * P) + PhasePolynomial::constant(1, -h * h / 2.0);
  CHECK(distance(star(x2, p2, h), expect) <= 1e-14);
  CHECK_THROWS_AS(star(X, P, 0.0), std::invalid_argument);
}

TEST_CASE("star product matches the bidifferential oracle", "[moyal]")
{
  Rng rng(2);
  double worst = 0.0;
  for (int k = 0; k < 50; ++k) {
    const auto f = random_poly(rng, 1, 5), g = random_poly(rng, 1, 5);
    const double h = rng.uniform(0.1, 2.0);
    worst = std::max(worst, poly1_distance(star_oracle(to_poly1(f), to_poly1(g), h), star(f, g, h)) / std::max(1.0, star(f, g, h).max_coeff()));
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("star product is associative and conjugation reverses it", "[moyal][property]")
{
  Rng rng(3);
  double assoc = 0.0, invol = 0.0;
  for (int k = 0; k < 100; ++k) {
    const int dof = k < 80 ? 1 : 2;
    const auto f = random_poly(rng, dof, 4), g = random_poly(rng, dof, 4), h = random_poly(rng, dof, 4);
    const double hb = rng.uniform(0.1, 1.5);
    const auto lhs = star(star(f, g, hb), h, hb), rhs = star(f, star(g, h, hb), hb);
    assoc = std::max(assoc, distance(lhs, rhs) / std::max(1.0, lhs.max_coeff()));
    invol = std::max(invol, distance(star(f, g, hb).conj(), star(g.conj(), f.conj(), hb)));
  }
  CHECK(assoc <= 1e-10);
  CHECK(invol <= 1e-10);
}

TEST_CASE("Moyal bracket", "[moyal]")
{
  const double h = 0.8;
  CHECK(distance(moyal_bracket(P, X, h), PhasePolynomial::constant(1, 1.0)) <= 1e-15);
  Rng rng(4);
  const auto f = random_poly(rng, 1, 4);
  CHECK(moyal_bracket(f, f, h).max_coeff() <= 1e-12);
  // The hbar^0 part is the classical bracket: {x^2, p^2}_cl = -4xp.
  const auto o = moyal_orders(X * X, P * P);
  CHECK(distance(o[0], cplx(-4.0) * (X * P)) <= 1e-15);
  CHECK(distance(classical_bracket(X * X, P * P), cplx(-4.0) * (X * P)) <= 1e-15);

  double jac = 0.0, lim = 0.0, conv = 0.0;
  for (int k = 0; k < 30; ++k) {
    const int dof = k < 20 ? 1 : 2;
    const auto a = random_poly(rng, dof, 4), b = random_poly(rng, dof, 4), c = random_poly(rng, dof, 4);
    const auto mb = [&](const PhasePolynomial& u, const PhasePolynomial& v) { return moyal_bracket(u, v, h); };
    const auto j = mb(a, mb(b, c)) + mb(b, mb(c, a)) + mb(c, mb(a, b));
    jac = std::max(jac, j.max_coeff() / std::max(1.0, mb(a, mb(b, c)).max_coeff()));
    lim = std::max(lim, distance(moyal_orders(a, b)[0], classical_bracket(a, b)));
    // Odd powers of hbar vanish in the bracket, so the error at hbar shrinks like hbar^2.
    const double e1 = distance(moyal_bracket(a, b, 1e-2), classical_bracket(a, b));
    const double e2 = distance(moyal_bracket(a, b, 1e-3), classical_bracket(a, b));
    if (e1 > 1e-12) conv = std::max(conv, e2 / e1);
  }
  CHECK(jac <= 1e-10);
  CHECK(lim <= 1e-12);
  CHECK(conv <= 0.02);
}

TEST_CASE("classical limit report", "[moyal]")
{
  const std::vector<double> hbars{1e-1, 1e-2, 1e-3, 1e-4};
  const auto r = classical_limit_report(X * X, P * P, hbars);
  CHECK(r.leading_exact);
  CHECK(r.first_order_exact);
  const auto t1 = star_orders(X * X, P * P)[1];
  CHECK(distance(t1, cplx(0.0, 2.0) * (X * P)) <= 1e-15);
  REQUIRE(r.slope.has_value());
  CHECK(std::abs(*r.slope - 2.0) <= 0.05);

  Rng rng(6);
  for (int k = 0; k < 5; ++k) {
    const auto f = random_poly(rng, 1, 4), g = random_poly(rng, 1, 4);
    const auto rr = classical_limit_report(f, g, hbars);
    CHECK(rr.leading_exact);
    CHECK(rr.first_order_exact);
    if (rr.slope) CHECK(std::abs(*rr.slope - 2.0) <= 0.05);
  }
  // x * p has no second-order remainder.
  CHECK_FALSE(classical_limit_report(X, P, hbars).slope.has_value());
}

TEST_CASE("hbar-dependent symbols", "[moyal]")
{
  HbarSymbol s;
  s.orders.emplace(0, X * P);
  s.orders.emplace(2, P);
  CHECK(s.regular());
  CHECK(distance(s.limit(), X * P) == 0.0);
  CHECK(distance(s.at(0.5), X * P + 0.25 * P) <= 1e-15);
  s.orders.emplace(-1, X);
  CHECK_FALSE(s.regular());
  CHECK_THROWS_AS(s.limit(), std::domain_error);
}

TEST_CASE("phase-space dynamics", "[moyal]")
{
  // Quadratic Hamiltonians: the Moyal and classical brackets agree on every symbol of degree <= 2.
  Rng rng(7);
  for (int k = 0; k < 10; ++k) {
    PhasePolynomial h(1);
    for (int a = 0; a <= 2; ++a)
      for (int b = 0; a + b <= 2; ++b) h.add(PhaseMonomial{{a}, {b}}, rng.normal());
    CHECK(distance(moyal_bracket(h, X, 0.9), classical_bracket(h, X)) <= 1e-14);
    CHECK(distance(moyal_bracket(h, P, 0.9), classical_bracket(h, P)) <= 1e-14);
  }
  // Harmonic oscillator trajectories are classical.
  const auto ho = 0.5 * (P * P) + 0.5 * (X * X);
  const auto tr = moyal_trajectory(ho, 1.0, 1.0, 0.0, 5.0, 1e-3);
  CHECK(std::abs(tr.x.back() - std::cos(5.0)) <= 1e-9);
  CHECK(std::abs(tr.p.back() + std::sin(5.0)) <= 1e-9);
  // Anharmonic H_W = p^2/2m + V(x) conserves energy along rk4 trajectories.
  const double m = 1.5;
  const auto v = 0.5 * (X * X) + 0.25 * (X * X * X * X);
  const auto hw = (1.0 / (2.0 * m)) * (P * P) + v;
  const auto ta = moyal_trajectory(hw, 0.3, 0.8, 0.4, 20.0, 1e-3);
  CHECK(ta.energy_drift <= 1e-6);
  CHECK(std::abs(moyal_bracket(hw, X, 0.3).evaluate(0.0, 1.2) - 1.2 / m) <= 1e-14);
}

TEST_CASE("Wigner functions", "[moyal]")
{
  for (double hbar : {1.0, 0.5}) {
    const double l = default_half_width(hbar);
    const auto psi = sample_wave([&](double x) { return coherent_wave(x, hbar); }, l);
    const auto w = wigner_function(psi, hbar);
    CHECK(w.max_imag <= 1e-9);
    double worst = 0.0;
    for (Eigen::Index i = 0; i < w.x.size(); i += 7)
      for (Eigen::Index j = 0; j < w.p.size(); j += 7)
        worst = std::max(worst, std::abs(w.w(i, j) - 2.0 * std::exp(-(w.x(i) * w.x(i) + w.p(j) * w.p(j)) / hbar)));
    CHECK(worst <= 1e-9);
    CHECK(std::abs(wigner_normalization(w) - 1.0) <= 1e-3);
    CHECK(std::abs(weyl_expectation(X * X, w) - hbar / 2.0) <= 1e-4);
    CHECK(std::abs(weyl_expectation(X * X + P * P, w) - hbar) <= 1e-4);
  }
  // Displaced state: first moments follow the displacement.
  const double hbar = 0.7, x0 = 0.6, p0 = -0.4;
  const auto psi = sample_wave([&](double x) { return coherent_wave(x, hbar, x0, p0); }, default_half_width(hbar, 1.5));
  const auto w = wigner_function(psi, hbar);
  CHECK(std::abs(weyl_expectation(X, w) - x0) <= 1e-6);
  CHECK(std::abs(weyl_expectation(P, w) - p0) <= 1e-6);
  CHECK(std::abs(weyl_expectation(X * P + P * X, w) - 2.0 * x0 * p0) <= 1e-6);

  std::ostringstream os;
  const auto small = wigner_function(sample_wave([&](double x) { return coherent_wave(x, 1.0); }, 8.0, 65), 1.0);
  small.write_csv(os);
  const std::string csv = os.str();
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 65 * 65 + 1);

  const auto wide = sample_wave([&](double x) { return coherent_wave(x, 1.0); }, 2.0);
  CHECK_THROWS_AS(wigner_function(wide, 1.0), std::domain_error);
  CHECK_THROWS_AS(weyl_expectation(cplx(0.0, 1.0) * X, w), std::invalid_argument);

  WignerGrid rough;
  rough.x = RVec::LinSpaced(5, -1.0, 1.0);
  rough.p = RVec::LinSpaced(5, -1.0, 1.0);
  rough.w = RMat::Zero(5, 5);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) rough.w(i, j) = ((i + j) % 2) ? 10.0 : 0.0;
  CHECK_THROWS_AS(weyl_expectation(PhasePolynomial::constant(1, 1.0), rough), std::domain_error);
}

TEST_CASE("integral twisted product agrees with the series on Gaussians", "[moyal]")
{
  const double hbar = 0.5, a = 0.6, b = 0.4, xa = 0.3, pb = -0.5;
  const double x = 0.2, p = 0.1;
  // f = exp(-a (x - xa)^2) exp(-a p^2), g = exp(-b x^2) exp(-b (p - pb)^2).
  const SeparableSymbol f{[&](double u) { return cplx(std::exp(-a * (u - xa) * (u - xa))); }, [&](double u) { return cplx(std::exp(-a * u * u)); }};
  const SeparableSymbol g{[&](double u) { return cplx(std::exp(-b * u * u)); }, [&](double u) { return cplx(std::exp(-b * (u - pb) * (u - pb))); }};
  const cplx quad = twisted_product_quadrature(f, g, x, p, hbar, 7.0, 60.0, 500);

  cplx series = 0.0;
  double nfact = 1.0;
  for (int n = 0; n <= 40; ++n) {
    if (n > 0) nfact *= n;
    cplx s = 0.0;
    for (int k = 0; k <= n; ++k) {
      const double bin = std::tgamma(n + 1.0) / (std::tgamma(k + 1.0) * std::tgamma(n - k + 1.0));
      s += bin * ((k % 2) ? -1.0 : 1.0) * gaussian_derivative(n - k, a, xa, x) * gaussian_derivative(k, a, 0.0, p) *
           gaussian_derivative(n - k, b, pb, p) * gaussian_derivative(k, b, 0.0, x);
    }
    series += std::pow(cplx(0.0, hbar / 2.0), n) / nfact * s;
  }
  CHECK(std::abs(quad - series) <= 1e-8);
  // Sign-sensitive: the conjugate ordering differs at first order.
  CHECK(std::abs(series - std::conj(series)) > 1e-3);

  // Centered Gaussians: closed form (1 + hbar^2 a b)^-1 exp(-(a + b)|xi|^2 / (1 + hbar^2 a b)).
  const SeparableSymbol fc{[&](double u) { return cplx(std::exp(-a * u * u)); }, [&](double u) { return cplx(std::exp(-a * u * u)); }};
  const SeparableSymbol gc{[&](double u) { return cplx(std::exp(-b * u * u)); }, [&](double u) { return cplx(std::exp(-b * u * u)); }};
  const double den = 1.0 + hbar * hbar * a * b;
  const double closed = std::exp(-(a + b) * (x * x + p * p) / den) / den;
  CHECK(std::abs(twisted_product_quadrature(fc, gc, x, p, hbar, 7.0, 60.0, 500) - closed) <= 1e-8);
}
