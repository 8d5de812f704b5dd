#include "ncsym/algebra.hpp"
#include "ncsym/random.hpp"
#include "oracles.hpp"

#include <catch_amalgamated.hpp>

using namespace ncsym;
using oracle::maxabs;

namespace {

Element el(const AlgebraPtr& a, const Mat& m) { return from_matrix(a, m); }

double dist(const Element& a, const Element& b) { return max_abs(Vec(a.coeffs - b.coeffs)); }

/// Bit-set index of a Grassmann monomial.
int gmono(std::initializer_list<int> gens)
{
  int s = 0;
  for (int g : gens) s |= 1 << (g - 1);
  return s;
}

}  // namespace

TEST_CASE("matrix algebra construction", "[algebra]")
{
  const auto m2 = build_matrix_algebra(2);
  CHECK(m2->dim() == 4);
  CHECK_FALSE(m2->is_graded());
  CHECK(maxabs(m2->to_matrix(m2->unit()) - oracle::id(2)) == 0.0);
  CHECK(m2->check().max() <= 1e-12);

  const auto m11 = build_matrix_algebra(2, std::pair{1, 1});
  // Index a*n+b for E_{a+1,b+1}.
  CHECK(m11->parity(0) == Parity::Even);
  CHECK(m11->parity(3) == Parity::Even);
  CHECK(m11->parity(1) == Parity::Odd);
  CHECK(m11->parity(2) == Parity::Odd);
  CHECK(m11->check().max() <= 1e-12);

  CHECK_THROWS_AS(build_matrix_algebra(0), std::invalid_argument);
  CHECK_THROWS_AS(build_matrix_algebra(3, std::pair{1, 1}), std::invalid_argument);
}

TEST_CASE("matrix products follow matrix multiplication", "[algebra]")
{
  const auto m2 = build_matrix_algebra(2);
  const Element x = el(m2, oracle::sx()), y = el(m2, oracle::sy()), z = el(m2, oracle::sz());
  CHECK(dist(x * y, I_unit * z) <= 1e-14);
  CHECK(dist(unit_element(m2) * x, x) == 0.0);
  CHECK(dist(supercommutator(x, y), 2.0 * I_unit * z) <= 1e-14);
  CHECK(max_abs(supercommutator(x, unit_element(m2)).coeffs) == 0.0);
  CHECK(dist(involution(y), y) <= 1e-15);
  CHECK(dist(involution(I_unit * unit_element(m2)), -I_unit * unit_element(m2)) == 0.0);

  Rng rng(7);
  for (int k = 0; k < 20; ++k) {
    const Mat a = rng.cmat(2, 2), b = rng.cmat(2, 2);
    CHECK(maxabs(to_matrix(el(m2, a) * el(m2, b)) - a * b) <= 1e-12);
    CHECK(maxabs(to_matrix(involution(el(m2, a))) - a.adjoint()) <= 1e-12);
  }
}

TEST_CASE("mixing algebras is rejected", "[algebra]")
{
  const auto m2 = build_matrix_algebra(2);
  const auto g2 = build_grassmann_algebra(2);
  CHECK_THROWS_AS(mul(unit_element(m2), unit_element(g2)), AlgebraMismatch);
  CHECK_THROWS_AS(supercommutator(unit_element(m2), unit_element(g2)), AlgebraMismatch);
}

TEST_CASE("Grassmann algebra", "[algebra]")
{
  const auto g3 = build_grassmann_algebra(3);
  CHECK(g3->dim() == 8);
  CHECK(g3->check().max() <= 1e-12);
  const Element t1 = basis_element(g3, gmono({1})), t2 = basis_element(g3, gmono({2}));
  const Element t12 = basis_element(g3, gmono({1, 2}));
  CHECK(max_abs((t1 * t1).coeffs) == 0.0);
  CHECK(dist(t2 * t1, -t12) == 0.0);
  CHECK(dist(t1 * t2, t12) == 0.0);
  CHECK(t12.parity() == Parity::Even);
  CHECK(max_abs(supercommutator(t1, t2).coeffs) == 0.0);
  // (t1 t2)* = t2* t1* with a Koszul sign: -t2 t1 = t1 t2.
  CHECK(dist(involution(t12), t12) == 0.0);
  CHECK(dist(involution(I_unit * t12), -I_unit * t12) == 0.0);
  CHECK_THROWS(build_grassmann_algebra(0));

  const Element t3 = basis_element(g3, gmono({3}));
  CHECK(dist(t3 * t2 * t1, -basis_element(g3, gmono({1, 2, 3}))) == 0.0);
}

TEST_CASE("graded matrix involution satisfies the Koszul rule", "[algebra]")
{
  const auto m11 = build_matrix_algebra(2, std::pair{1, 1});
  const Element e12 = basis_element(m11, 1), e21 = basis_element(m11, 2);
  const Element lhs = involution(e12 * e21);
  const Element rhs = -(involution(e21) * involution(e12));
  CHECK(dist(lhs, rhs) <= 1e-15);
  CHECK(dist(involution(involution(e12)), e12) == 0.0);
  // Odd off-diagonal entries pick up a factor i relative to the plain adjoint.
  CHECK(dist(involution(e12), I_unit * e21) == 0.0);
}

TEST_CASE("graded center", "[algebra]")
{
  const auto m2 = build_matrix_algebra(2);
  auto z = graded_center(m2);
  REQUIRE(z.even.size() == 1);
  CHECK(z.odd.empty());
  const Vec u = m2->unit();
  CHECK(std::abs(std::abs(z.even[0].coeffs.dot(u)) - z.even[0].coeffs.norm() * u.norm()) <= 1e-12);

  const auto g3 = build_grassmann_algebra(3);
  z = graded_center(g3);
  CHECK(z.dim() == 8);
  CHECK(z.even.size() == 4);
  CHECK(z.odd.size() == 4);

  const auto blk = build_block_algebra({2, 3});
  CHECK(blk->dim() == 13);
  CHECK(graded_center(blk).even.size() == 2);

  const auto m11 = build_matrix_algebra(2, std::pair{1, 1});
  z = graded_center(m11);
  CHECK(z.even.size() == 1);
  CHECK(z.odd.empty());
}

TEST_CASE("coherent sectors", "[algebra]")
{
  auto sectors = coherent_sectors(build_matrix_algebra(2));
  REQUIRE(sectors.size() == 1);
  CHECK(sectors[0].dim == 2);
  CHECK(maxabs(sectors[0].projection - oracle::id(2)) <= 1e-12);

  const auto blk = build_block_algebra({2, 3});
  sectors = coherent_sectors(blk);
  REQUIRE(sectors.size() == 2);
  std::vector<int> dims{sectors[0].dim, sectors[1].dim};
  std::sort(dims.begin(), dims.end());
  CHECK(dims == std::vector<int>{2, 3});
  Mat sum = Mat::Zero(5, 5);
  for (const auto& s : sectors) {
    CHECK(maxabs(s.projection * s.projection - s.projection) <= 1e-12);
    sum += s.projection;
  }
  CHECK(maxabs(sum - oracle::id(5)) <= 1e-12);

  // Algebra commuting with diag(1,1,-1), labelled by that element.
  const auto b21 = build_block_algebra({2, 1});
  Mat k = Mat::Identity(3, 3);
  k(2, 2) = -1.0;
  sectors = coherent_sectors(b21, from_matrix(b21, k));
  REQUIRE(sectors.size() == 2);
  for (const auto& s : sectors) {
    REQUIRE(s.labels.size() == 1);
    if (s.labels[0] > 0) {
      CHECK(s.dim == 2);
      CHECK(s.labels[0] == Catch::Approx(1.0));
    } else {
      CHECK(s.dim == 1);
      CHECK(s.labels[0] == Catch::Approx(-1.0));
    }
  }
  CHECK_THROWS(coherent_sectors(build_grassmann_algebra(2)));
}

TEST_CASE("tensor algebra", "[algebra]")
{
  const auto m2 = build_matrix_algebra(2);
  const auto t = tensor_algebra(m2, m2);
  CHECK(t->dim() == 16);
  CHECK(t->check().max() <= 1e-12);
  CHECK(max_abs(Vec(t->unit() - tensor(unit_element(m2), unit_element(m2), t).coeffs)) == 0.0);

  Rng rng(11);
  for (int k = 0; k < 10; ++k) {
    const Mat a = rng.cmat(2, 2), b = rng.cmat(2, 2), c = rng.cmat(2, 2), d = rng.cmat(2, 2);
    const Element ab = tensor(el(m2, a), el(m2, b), t), cd = tensor(el(m2, c), el(m2, d), t);
    CHECK(maxabs(to_matrix(ab * cd) - oracle::kron(a, b) * oracle::kron(c, d)) <= 1e-12);
  }

  // Structure constants coincide with M4 built directly after Kronecker reindexing
  // E_ab x E_cd -> E_{(a,c),(b,d)}.
  const auto m4 = build_matrix_algebra(4);
  auto reindex = [](int i) {
    const int l = i / 4, r = i % 4;
    const int a = l / 2, b = l % 2, c = r / 2, d = r % 2;
    return (2 * a + c) * 4 + (2 * b + d);
  };
  double worst = 0.0;
  for (int i = 0; i < 16; ++i)
    for (int j = 0; j < 16; ++j)
      for (int k = 0; k < 16; ++k)
        worst = std::max(worst, std::abs(t->structure(i, j, k) - m4->structure(reindex(i), reindex(j), reindex(k))));
  CHECK(worst == 0.0);

  const auto g1 = build_grassmann_algebra(1);
  const auto gg = tensor_algebra(g1, g1);
  CHECK(gg->check().max() <= 1e-12);
  const Element th = basis_element(g1, 1), one = unit_element(g1);
  const Element lhs = tensor(one, th, gg) * tensor(th, one, gg);
  CHECK(dist(lhs, -tensor(th, th, gg)) == 0.0);

  // The componentwise involution is a Koszul antihomomorphism on a graded product.
  const auto m11 = build_matrix_algebra(2, std::pair{1, 1});
  CHECK(tensor_algebra(m11, g1)->check().max() <= 1e-12);
}

TEST_CASE("supercommutator identities on random homogeneous samples", "[algebra][property]")
{
  Rng rng(2024);
  for (const auto& alg : {build_matrix_algebra(2), build_matrix_algebra(3), build_matrix_algebra(2, std::pair{1, 1}),
                          build_grassmann_algebra(3), tensor_algebra(build_matrix_algebra(2), build_grassmann_algebra(1))}) {
    double anti = 0.0, jac = 0.0;
    for (int k = 0; k < 100; ++k) {
      const Element a = rng.homogeneous(alg), b = rng.homogeneous(alg), c = rng.homogeneous(alg);
      const double eab = koszul(*a.parity(), *b.parity());
      anti = std::max(anti, (supercommutator(a, b) + eab * supercommutator(b, a)).norm());
      // eta_{ca}[a,[b,c]] + eta_{ab}[b,[c,a]] + eta_{bc}[c,[a,b]] = 0
      const double eca = koszul(*c.parity(), *a.parity()), ebc = koszul(*b.parity(), *c.parity());
      const Element s = eca * supercommutator(a, supercommutator(b, c)) + eab * supercommutator(b, supercommutator(c, a)) +
                        ebc * supercommutator(c, supercommutator(a, b));
      jac = std::max(jac, s.norm());
    }
    INFO(alg->id());
    CHECK(anti <= 1e-12);
    CHECK(jac <= 1e-10);
  }
}

TEST_CASE("custom algebra validation rejects broken structure constants", "[algebra]")
{
  auto data = build_matrix_algebra(2)->data();
  data.left_mult[1](0, 2) += 0.5;
  CHECK_THROWS_AS(Algebra::create(data), VerificationError);
  auto bad_inv = build_matrix_algebra(2, std::pair{1, 1})->data();
  bad_inv.involution = Mat::Zero(4, 4);
  for (int i = 0; i < 4; ++i) bad_inv.involution((i % 2) * 2 + i / 2, i) = 1.0;  // plain transpose
  CHECK_THROWS_AS(Algebra::create(bad_inv), VerificationError);
}
