#include "ncsym/calculus.hpp"
#include "oracles.hpp"

#include <catch_amalgamated.hpp>

using namespace ncsym;
using oracle::maxabs;

namespace {

struct Pauli {
  AlgebraPtr alg = build_matrix_algebra(2);
  Element x = from_matrix(alg, oracle::sx());
  Element y = from_matrix(alg, oracle::sy());
  Element z = from_matrix(alg, oracle::sz());
  FamilyPtr fam = DerivationFamily::inner(alg, {x, y, z});
};

double dist(const Element& a, const Element& b) { return max_abs(Vec(a.coeffs - b.coeffs)); }

Element value(const Cochain& w, const std::vector<Derivation>& xs) { return {w.algebra(), w.evaluate(xs)}; }

/// w_c(D_a, D_b) = [a, b] on an inner family.
Cochain canonical_two_form(const FamilyPtr& fam)
{
  return Cochain::from_function(fam, 2, Parity::Even, [&](const std::vector<int>& t) {
    return supercommutator(fam->generator(t[0]), fam->generator(t[1])).coeffs;
  });
}

/// Graded sign by successive adjacent transpositions: each swap of neighbours (u, v)
/// contributes -(-1)^{uv}. Bubble-sorts sigma back to the identity.
double bubble_sign(const std::vector<Parity>& par, std::vector<int> sigma)
{
  double s = 1.0;
  bool swapped = true;
  while (swapped) {
    swapped = false;
    for (std::size_t a = 0; a + 1 < sigma.size(); ++a)
      if (sigma[a] > sigma[a + 1]) {
        s *= -koszul(par[sigma[a]], par[sigma[a + 1]]);
        std::swap(sigma[a], sigma[a + 1]);
        swapped = true;
      }
  }
  return s;
}

/// Literal form: parity of sigma times prod over j<k with sigma^{-1}(j) > sigma^{-1}(k) of (-1)^{s_j s_k}.
double literal_sign(const std::vector<Parity>& par, const std::vector<int>& sigma)
{
  const int n = static_cast<int>(sigma.size());
  std::vector<int> inv(n);
  for (int a = 0; a < n; ++a) inv[sigma[a]] = a;
  int inversions = 0;
  double g = 1.0;
  for (int j = 0; j < n; ++j)
    for (int k = j + 1; k < n; ++k)
      if (inv[j] > inv[k]) {
        ++inversions;
        g *= koszul(par[j], par[k]);
      }
  return (inversions % 2 ? -1.0 : 1.0) * g;
}

Parity random_parity(Rng& rng, const AlgebraPtr& alg)
{
  return alg->is_graded() && rng.uniform() < 0.5 ? Parity::Odd : Parity::Even;
}

}  // namespace

TEST_CASE("inner derivations", "[calculus]")
{
  Pauli P;
  CHECK(max_abs(inner_derivation(unit_element(P.alg)).op) == 0.0);
  CHECK(dist(inner_derivation(P.z)(P.x), 2.0 * I_unit * P.y) <= 1e-14);
  const Derivation lhs = bracket(inner_derivation(P.x), inner_derivation(P.y));
  CHECK(maxabs(lhs.op - inner_derivation(supercommutator(P.x, P.y)).op) <= 1e-13);

  const auto m11 = build_matrix_algebra(2, std::pair{1, 1});
  const Element odd = basis_element(m11, 1) + basis_element(m11, 2);
  const Element mixed = odd + basis_element(m11, 0);
  CHECK_THROWS_AS(inner_derivation(mixed), std::invalid_argument);
  const Derivation dodd = inner_derivation(odd);
  CHECK(dodd.parity == Parity::Odd);
  CHECK(check_superderivation(m11, dodd.op, Parity::Odd).ok);
  // On odd arguments the odd inner derivation is the anticommutator.
  const Element b = basis_element(m11, 1);
  CHECK(dist(dodd(b), odd * b + b * odd) <= 1e-15);
}

TEST_CASE("superderivation check", "[calculus]")
{
  Pauli P;
  for (const auto& e : {P.x, P.y, P.z}) CHECK(check_superderivation(P.alg, inner_derivation(e).op, Parity::Even).ok);

  Mat transpose = Mat::Zero(4, 4);
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) transpose(b * 2 + a, a * 2 + b) = 1.0;
  const auto tr = check_superderivation(P.alg, transpose, Parity::Even);
  CHECK_FALSE(tr.ok);
  CHECK(tr.residual >= 0.5);

  const auto lm = check_superderivation(P.alg, P.alg->left_mult(P.x.coeffs), Parity::Even);
  CHECK_FALSE(lm.ok);
  CHECK(lm.residual >= 0.5);
}

TEST_CASE("pushforward", "[calculus]")
{
  Pauli P;
  Rng rng(5);
  const auto id = Isomorphism::identity(P.alg);
  const Derivation dx = inner_derivation(P.x);
  CHECK(maxabs(pushforward(id, dx).op - dx.op) == 0.0);

  const Mat u = rng.unitary(2);
  const auto phi = Isomorphism::unitary_conjugation(P.alg, u);
  for (int k = 0; k < 5; ++k) {
    const Element a = rng.element(P.alg);
    const Mat am = to_matrix(a);
    const Element phia = from_matrix(P.alg, u * am * u.adjoint());
    CHECK(maxabs(pushforward(phi, inner_derivation(a)).op - inner_derivation(phia).op) <= 1e-12);
  }

  const auto psi = Isomorphism::unitary_conjugation(P.alg, rng.unitary(2));
  const auto comp = compose(psi, phi);
  CHECK(maxabs(pushforward(comp, dx).op - pushforward(psi, pushforward(phi, dx)).op) <= 1e-12);
  // Brackets are preserved.
  const Derivation dy = inner_derivation(P.y);
  CHECK(maxabs(pushforward(phi, bracket(dx, dy)).op - bracket(pushforward(phi, dx), pushforward(phi, dy)).op) <= 1e-12);

  Mat bad = Mat::Identity(4, 4);
  bad(0, 1) = 0.3;
  CHECK_THROWS_AS(Isomorphism::create(P.alg, P.alg, bad), VerificationError);
}

TEST_CASE("wedge product", "[calculus]")
{
  Pauli P;
  const Derivation dx = inner_derivation(P.x), dy = inner_derivation(P.y);
  const Cochain dsx = d(P.fam, P.x), dsy = d(P.fam, P.y);
  const Element v = value(wedge(dsx, dsy), {dx, dy});
  CHECK(dist(v, -4.0 * unit_element(P.alg)) <= 1e-13);

  Rng rng(3);
  const Cochain beta = random_cochain(P.fam, 2, Parity::Even, rng);
  const Cochain one = Cochain::zero_form(P.fam, unit_element(P.alg));
  CHECK(distance(wedge(one, beta), beta) <= 1e-14);

  const Cochain alpha = random_cochain(P.fam, 1, Parity::Even, rng);
  const cplx s{1.5, -0.25};
  CHECK(distance(wedge(s * alpha, beta), s * wedge(alpha, beta)) <= 1e-12);
  CHECK(wedge(alpha, beta).skew_residual() <= 1e-12);
}

TEST_CASE("Lie derivative", "[calculus]")
{
  Pauli P;
  const Derivation dx = inner_derivation(P.x), dz = inner_derivation(P.z);
  CHECK(dist(lie_derivative(dz, P.x), dz(P.x)) == 0.0);
  CHECK(maxabs(lie_derivative(dz, dx).op - inner_derivation(supercommutator(P.z, P.x)).op) <= 1e-13);
  const Cochain wc = canonical_two_form(P.fam);
  CHECK(lie_derivative(dx, wc).max_abs() <= 1e-10);
}

TEST_CASE("interior product", "[calculus]")
{
  Pauli P;
  const Derivation dx = inner_derivation(P.x);
  const Cochain zero = interior(dx, Cochain::zero_form(P.fam, P.z));
  CHECK(zero.degree() == 0);
  CHECK(zero.max_abs() == 0.0);

  const Cochain wc = canonical_two_form(P.fam);
  const Cochain lhs = interior(inner_derivation(P.z), wc);
  const Cochain rhs = -1.0 * d(P.fam, P.z);
  for (const auto& e : {P.x, P.y, P.z}) {
    const Derivation de = inner_derivation(e);
    CHECK(dist(value(lhs, {de}), value(rhs, {de})) <= 1e-13);
  }
}

TEST_CASE("exterior derivative", "[calculus]")
{
  Pauli P;
  const Element v = value(d(P.fam, P.z), {inner_derivation(P.x)});
  CHECK(dist(v, -2.0 * I_unit * P.y) <= 1e-13);
  Rng rng(9);
  for (int k = 0; k < 5; ++k) {
    const Cochain da = d(P.fam, rng.element(P.alg));
    CHECK(exterior_derivative(da).max_abs() <= 1e-12);
  }
  CHECK(exterior_derivative(canonical_two_form(P.fam)).max_abs() <= 1e-10);
}

TEST_CASE("pullback", "[calculus]")
{
  Pauli P;
  Rng rng(17);
  const Cochain wc = canonical_two_form(P.fam);
  CHECK(distance(pullback(Isomorphism::identity(P.alg), wc), wc) <= 1e-14);

  const auto phi = Isomorphism::unitary_conjugation(P.alg, rng.unitary(2));
  const Cochain a = random_cochain(P.fam, 1, Parity::Even, rng), b = random_cochain(P.fam, 1, Parity::Even, rng);
  CHECK(distance(pullback(phi, wedge(a, b)), wedge(pullback(phi, a), pullback(phi, b))) <= 1e-11);
  CHECK(distance(pullback(phi, wc), wc) <= 1e-11);
}

TEST_CASE("cochain permutation signs agree with brute-force oracles", "[calculus][property]")
{
  for (int p = 1; p <= 3; ++p)
    for (int mask = 0; mask < (1 << p); ++mask) {
      std::vector<Parity> par;
      for (int k = 0; k < p; ++k) par.push_back(parity_of(mask >> k));
      std::vector<int> sigma(p);
      std::iota(sigma.begin(), sigma.end(), 0);
      do {
        CHECK(permutation_sign(par, sigma) == bubble_sign(par, sigma));
        CHECK(permutation_sign(par, sigma) == literal_sign(par, sigma));
      } while (std::next_permutation(sigma.begin(), sigma.end()));
    }

  // Random graded-skew cochains obey the general permutation law on every tuple.
  const auto alg = build_matrix_algebra(3, std::pair{2, 1});
  const auto fam = DerivationFamily::inner(alg);
  Rng rng(41);
  const Cochain w = random_cochain(fam, 3, Parity::Odd, rng);
  CHECK(w.skew_residual() <= 1e-12);
  CHECK(w.homogeneity_residual() <= 1e-12);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<int> t{rng.index(fam->size()), rng.index(fam->size()), rng.index(fam->size())};
    std::vector<Parity> par{fam->parity(t[0]), fam->parity(t[1]), fam->parity(t[2])};
    std::vector<int> sigma{0, 1, 2};
    do {
      const std::vector<int> ts{t[sigma[0]], t[sigma[1]], t[sigma[2]]};
      worst = std::max(worst, max_abs(Vec(w.at(ts) - bubble_sign(par, sigma) * w.at(t))));
    } while (std::next_permutation(sigma.begin(), sigma.end()));
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("graded calculus identities on random cochains", "[calculus][property]")
{
  for (const auto& alg : {build_matrix_algebra(2), build_matrix_algebra(2, std::pair{1, 1}), build_matrix_algebra(3, std::pair{2, 1})}) {
    INFO(alg->id());
    const auto fam = DerivationFamily::inner(alg);
    REQUIRE(fam->closed());
    Rng rng(100 + alg->dim());
    double e14 = 0, e15 = 0, e17 = 0, e18 = 0, e19 = 0, e20 = 0, d2 = 0, dl = 0, e23 = 0, skew = 0;
    for (int k = 0; k < 50; ++k) {
      const int p = k % 3, q = (k / 3) % 2;
      const Parity sa = random_parity(rng, alg), sb = random_parity(rng, alg);
      const Cochain a = random_cochain(fam, p, sa, rng), b = random_cochain(fam, q, sb, rng);
      const Derivation& X = (*fam)[rng.index(fam->size())];
      const Derivation& Y = (*fam)[rng.index(fam->size())];
      const double exa = koszul(X.parity, sa), eya = koszul(Y.parity, sa), exy = koszul(X.parity, Y.parity);
      const double sp = p % 2 ? -1.0 : 1.0;

      e14 = std::max(e14, distance(lie_derivative(X, lie_derivative(Y, a)) - exy * lie_derivative(Y, lie_derivative(X, a)),
                                   lie_derivative(bracket(X, Y), a)));
      e15 = std::max(e15, distance(lie_derivative(Y, wedge(a, b)), wedge(lie_derivative(Y, a), b) + eya * wedge(a, lie_derivative(Y, b))));
      Cochain cartan = interior(X, exterior_derivative(a));
      if (p > 0) cartan += exterior_derivative(interior(X, a));
      e20 = std::max(e20, distance(cartan, exa * lie_derivative(X, a)));
      d2 = std::max(d2, exterior_derivative(exterior_derivative(a)).max_abs());
      dl = std::max(dl, distance(exterior_derivative(lie_derivative(Y, a)), lie_derivative(Y, exterior_derivative(a))));
      e23 = std::max(e23, distance(exterior_derivative(wedge(a, b)), wedge(exterior_derivative(a), b) + sp * wedge(a, exterior_derivative(b))));
      skew = std::max(skew, exterior_derivative(a).skew_residual());
      if (p >= 1) {
        const Cochain lhs = lie_derivative(Y, interior(X, a)) - interior(X, lie_derivative(Y, a));
        e19 = std::max(e19, distance(lhs, eya * interior(bracket(Y, X), a)));
      }
      if (p >= 2) e17 = std::max(e17, (interior(X, interior(Y, a)) + exy * interior(Y, interior(X, a))).max_abs());
      if (p + q >= 1) {
        const Parity rp = sa + sb + X.parity;
        const Cochain t1 = p >= 1 ? wedge(interior(X, a), b) : Cochain(fam, p + q - 1, rp);
        const Cochain t2 = q >= 1 ? wedge(a, interior(X, b)) : Cochain(fam, p + q - 1, rp);
        e18 = std::max(e18, distance(interior(X, wedge(a, b)), koszul(X.parity, sb) * t1 + sp * t2));
      }
    }
    CHECK(e14 <= 1e-10);
    CHECK(e15 <= 1e-10);
    CHECK(e17 <= 1e-10);
    CHECK(e18 <= 1e-10);
    CHECK(e19 <= 1e-10);
    CHECK(e20 <= 1e-10);
    CHECK(d2 <= 1e-10);
    CHECK(dl <= 1e-10);
    CHECK(e23 <= 1e-10);
    CHECK(skew <= 1e-12);
  }
}

TEST_CASE("the L/i commutator has the sign fixed by the Lie and interior definitions", "[calculus]")
{
  // L_Y i_X - i_X L_Y = i_{[Y,X]} for even forms; with [X,Y] in place of [Y,X] the sign flips.
  Pauli P;
  Rng rng(8);
  const Cochain a = random_cochain(P.fam, 2, Parity::Even, rng);
  const Derivation dx = inner_derivation(P.x), dy = inner_derivation(P.y);
  const Cochain lhs = lie_derivative(dy, interior(dx, a)) - interior(dx, lie_derivative(dy, a));
  CHECK(distance(lhs, interior(bracket(dy, dx), a)) <= 1e-12);
  CHECK(distance(lhs, interior(bracket(dx, dy), a)) >= 1e-3);
}

TEST_CASE("pullback identities", "[calculus][property]")
{
  for (const auto& alg : {build_matrix_algebra(2), build_matrix_algebra(2, std::pair{1, 1})}) {
    INFO(alg->id());
    const auto fam = DerivationFamily::inner(alg);
    Rng rng(77);
    // Block-diagonal unitaries preserve the grading of M_{1|1}.
    auto grading_unitary = [&]() {
      Mat u = Mat::Zero(2, 2);
      u(0, 0) = std::polar(1.0, rng.uniform(0, 6.28));
      u(1, 1) = std::polar(1.0, rng.uniform(0, 6.28));
      return alg->is_graded() ? u : rng.unitary(2);
    };
    const auto phi = Isomorphism::unitary_conjugation(alg, grading_unitary());
    const auto psi = Isomorphism::unitary_conjugation(alg, grading_unitary());
    double e27 = 0, e28 = 0, e29 = 0;
    for (int k = 0; k < 10; ++k) {
      const int p = k % 3;
      const Cochain a = random_cochain(fam, p, random_parity(rng, alg), rng);
      const Cochain b = random_cochain(fam, 2 - p, random_parity(rng, alg), rng);
      e27 = std::max(e27, distance(pullback(compose(psi, phi), a), pullback(phi, pullback(psi, a))));
      e28 = std::max(e28, distance(pullback(phi, wedge(a, b)), wedge(pullback(phi, a), pullback(phi, b))));
      e29 = std::max(e29, distance(pullback(phi, exterior_derivative(a)), exterior_derivative(pullback(phi, a))));
    }
    CHECK(e27 <= 1e-10);
    CHECK(e28 <= 1e-10);
    CHECK(e29 <= 1e-10);
  }
}

TEST_CASE("bracket with central multiples", "[calculus]")
{
  // [X, KY] = X(K) Y + eta_{XK} K [X,Y] on a block algebra with a nonscalar center.
  const auto alg = build_block_algebra({2, 1});
  Mat km = Mat::Identity(3, 3);
  km(2, 2) = -1.0;
  const Element k = from_matrix(alg, km);
  Rng rng(31);
  for (int t = 0; t < 10; ++t) {
    const Derivation x = inner_derivation(rng.element(alg)), y = inner_derivation(rng.element(alg));
    const Mat lk = alg->left_mult(k.coeffs);
    const Derivation ky{alg, lk * y.op, y.parity};
    const Mat rhs = alg->left_mult(x(k).coeffs) * y.op + lk * bracket(x, y).op;
    CHECK(maxabs(bracket(x, ky).op - rhs) <= 1e-11);
  }
}

TEST_CASE("Z0-linearity of cochains", "[calculus]")
{
  const auto blk = build_block_algebra({2, 1});
  const auto fam = DerivationFamily::inner(blk);
  // w(X) = X(A) is Z0-linear; the constant cochain w(X) = I on the family basis is not.
  Rng rng(12);
  CHECK(z0_linearity_residual(d(fam, rng.element(blk))) <= 1e-12);
  const Cochain constant = Cochain::from_function(fam, 1, Parity::Even, [&](const std::vector<int>&) { return blk->unit(); });
  CHECK(z0_linearity_residual(constant) >= 1e-3);

  // For matrix algebras with trivial center every cochain is Z0-linear.
  Pauli P;
  CHECK(z0_linearity_residual(random_cochain(P.fam, 2, Parity::Even, rng)) <= 1e-12);
}

TEST_CASE("cochain involution", "[calculus]")
{
  Pauli P;
  const Cochain wc = canonical_two_form(P.fam);
  CHECK(distance(involution(wc), -1.0 * wc) <= 1e-12);
  Rng rng(4);
  const Cochain a = random_cochain(P.fam, 2, Parity::Even, rng);
  CHECK(distance(involution(involution(a)), a) <= 1e-12);
}
