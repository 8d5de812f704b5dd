#include "ncsym/suites.hpp"
#include "oracles.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <sstream>

using namespace ncsym;

namespace {

/// Bitwise equality of every stored field.
void require_same_algebra(const AlgebraPtr& a, const AlgebraPtr& b)
{
  REQUIRE(a->dim() == b->dim());
  CHECK(a->id() == b->id());
  CHECK(a->labels() == b->labels());
  CHECK(a->parities() == b->parities());
  for (int i = 0; i < a->dim(); ++i) CHECK((a->left_mult(i).array() == b->left_mult(i).array()).all());
  CHECK((a->unit().array() == b->unit().array()).all());
  CHECK((a->involution_matrix().array() == b->involution_matrix().array()).all());
  CHECK(a->kind().kind == b->kind().kind);
  CHECK(a->kind().n == b->kind().n);
  CHECK(a->kind().p == b->kind().p);
  CHECK(a->kind().q == b->kind().q);
  REQUIRE(a->realization().size() == b->realization().size());
  for (std::size_t k = 0; k < a->realization().size(); ++k) CHECK((a->realization()[k].array() == b->realization()[k].array()).all());
}

SuiteConfig config(const std::string& suite, std::uint64_t seed = 1)
{
  SuiteConfig c;
  c.suite = suite;
  c.seed = seed;
  return c;
}

}  // namespace

TEST_CASE("algebra descriptors round-trip exactly", "[serialize]")
{
  const auto m2 = build_matrix_algebra(2);
  for (const auto& alg : {m2, build_matrix_algebra(2, std::pair{1, 1}), build_grassmann_algebra(3), tensor_algebra(m2, m2)}) {
    INFO(alg->id());
    const Json j = algebra_json(alg);
    CHECK(j.at("schema") == kSchema);
    CHECK(j.at("dim") == alg->dim());
    CHECK(j.at("structure").size() == static_cast<std::size_t>(alg->dim()));
    // Through text, not just through the in-memory document.
    const auto back = algebra_from_json(Json::parse(j.dump()));
    require_same_algebra(alg, back);
    CHECK(algebra_json(back).dump() == j.dump());
  }
  // Awkward doubles survive the text form.
  Algebra::Data d;
  const auto base = build_matrix_algebra(1);
  d.id = "scaled";
  d.labels = {"e"};
  d.parity = {Parity::Even};
  d.left_mult = {Mat::Identity(1, 1)};
  d.unit = Vec::Ones(1);
  d.involution = Mat::Identity(1, 1);
  d.realization = {Mat::Constant(1, 1, cplx(1.0, 0.0))};
  const auto custom = Algebra::create(d);
  Json j = algebra_json(custom);
  j["realization"][0][0][0] = Json::array({0.1 + 0.2, -1.0 / 3.0});
  const auto odd = algebra_from_json(Json::parse(j.dump()));
  CHECK(odd->realization()[0](0, 0) == cplx(0.1 + 0.2, -1.0 / 3.0));
}

TEST_CASE("descriptors reject a broken document", "[serialize]")
{
  Json j = algebra_json(build_matrix_algebra(2));
  j["schema"] = "other/9";
  CHECK_THROWS_AS(algebra_from_json(j), std::invalid_argument);
  j = algebra_json(build_matrix_algebra(2));
  j["structure"][1][1][0] = Json::array({5.0, 0.0});
  CHECK_THROWS_AS(algebra_from_json(j), VerificationError);
  j = algebra_json(build_matrix_algebra(2));
  j["kind"]["name"] = "mystery";
  CHECK_THROWS_AS(algebra_from_json(j), std::invalid_argument);
}

TEST_CASE("Grassmann tables and complex arrays", "[serialize]")
{
  Vec c = Vec::Zero(8);
  c(0) = 1.0;
  c(5) = cplx(0.25, -2.0);
  c(7) = -1.0;
  const Json t = grassmann_json(c);
  CHECK(t.size() == 3u);
  CHECK(t.at("5") == Json::array({0.25, -2.0}));
  CHECK((grassmann_from_json(Json::parse(t.dump()), 3).array() == c.array()).all());
  CHECK_THROWS_AS(grassmann_from_json(Json{{"8", Json::array({1.0, 0.0})}}, 3), std::invalid_argument);

  Rng rng(4);
  const Mat m = rng.cmat(3, 2);
  const Mat back = mat_from(Json::parse(mat_json(m).dump()));
  CHECK((back.array() == m.array()).all());
}

TEST_CASE("objects serialize with their algebra id", "[serialize]")
{
  const auto m2 = build_matrix_algebra(2);
  const auto fam = DerivationFamily::inner(m2);
  Rng rng(2);
  const Cochain w = random_cochain(fam, 2, Parity::Even, rng);
  const Json jw = cochain_json(w);
  CHECK(jw.at("algebra") == m2->id());
  CHECK(jw.at("degree") == 2);
  CHECK(jw.at("components").size() == w.size());
  CHECK(jw.at("family").size() == static_cast<std::size_t>(fam->size()));

  const State s = pure_state(m2, rng.cvec(2));
  const Json js = state_json(s);
  CHECK(js.at("kind") == state_kind_name(s.kind()));
  CHECK(js.at("pure") == true);
  CHECK((mat_from(js.at("density")).array() == s.density()->array()).all());

  const auto g = gns(m2, s);
  const Json jg = gns_json(g);
  CHECK(jg.at("dim") == 2);
  CHECK(jg.at("operators").size() == 4u);

  const HamiltonianSystem hs(quantum_form(m2, 1.0), from_matrix(m2, oracle::sz()));
  const Json jh = hamiltonian_system_json(hs);
  CHECK(jh.at("form") == "quantum");
  CHECK((mat_from(jh.at("generator")).array() == hs.generator().array()).all());

  const auto r = product_symplectic(quantum_form(m2, 1.0), quantum_form(build_matrix_algebra(2), 1.0));
  const Json jr = compatibility_json(r);
  CHECK(jr.at("verdict") == "ExistsQuantum");
  CHECK(jr.at("left").at("table").size() == 16u);
}

TEST_CASE("report checks and their text forms", "[serialize]")
{
  const double nan = std::numeric_limits<double>::quiet_NaN();
  CHECK(check_le("a", 1.0, 1.0).pass);
  CHECK_FALSE(check_le("a", nan, 1.0).pass);
  CHECK_FALSE(check_ge("a", nan, 0.0).pass);
  CHECK(check_in("a", 5e-4, 4e-4, 6e-4).pass);
  CHECK_FALSE(check_in("a", 7e-4, 4e-4, 6e-4).pass);
  CHECK(check_eq("a", 0.0, 0.0).pass);
  CHECK_FALSE(check_true("a", false).pass);

  Report r("demo", Json{{"seed", 3}});
  r.add(check_le("zeta", 0.5, 1.0));
  r.add(check_in("alpha", 2.0, 0.0, 1.0));
  r.add(check_le("mid", nan, 1.0));
  CHECK_FALSE(r.passed());
  CHECK(r.failures() == std::vector<std::string>{"alpha", "mid"});
  const Json j = report_json(r);
  CHECK(j.at("checks").at(0).at("id") == "alpha");
  CHECK(j.at("checks").at(1).at("value").is_null());
  CHECK(j.at("checks").at(0).at("upper") == 1.0);
  CHECK(j.at("passed") == false);

  // Assembly order never shows in the output.
  Report s("demo", Json{{"seed", 3}});
  s.add(check_le("mid", nan, 1.0));
  s.add(check_le("zeta", 0.5, 1.0));
  s.add(check_in("alpha", 2.0, 0.0, 1.0));
  CHECK(report_text(r) == report_text(s));

  std::ostringstream os;
  write_report_csv(os, r);
  const std::string csv = os.str();
  CHECK(csv.rfind("id,value,relation,bound,upper,pass\n", 0) == 0);
  CHECK(csv.find("alpha,2.0,in,0.0,1.0,false\n") != std::string::npos);
  CHECK(csv.find("mid,null,le,1.0,,false\n") != std::string::npos);
}

TEST_CASE("suite arguments are validated", "[serialize][cli]")
{
  CHECK(parse_algebra("m3")->dim() == 9);
  CHECK(parse_algebra("m1|1")->is_graded());
  CHECK(parse_algebra("g3")->dim() == 8);
  for (const char* bad : {"m0", "m", "x2", "m1|", "g9", "m2 "}) CHECK_THROWS_AS(parse_algebra(bad), UsageError);
  CHECK(parse_factor("quantum:0.5").alg->dim() == 4);
  CHECK(parse_factor("quantum:1:m3").alg->dim() == 9);
  CHECK(parse_factor("commutative:g4").alg->dim() == 16);
  for (const char* bad : {"quantum", "quantum:-1", "quantum:abc", "quantum:1x", "commutative:m2", "classical", "canonical:m2:x"})
    CHECK_THROWS_AS(parse_factor(bad), UsageError);
  CHECK_THROWS_AS(run_suite(config("frobnicate")), UsageError);
  auto sg = config("stern-gerlach");
  sg.preset = "lab";
  CHECK_THROWS_AS(run_suite(sg), UsageError);
  auto v = config("verify");
  v.algebras = {"g2"};
  CHECK_THROWS_AS(run_suite(v), UsageError);
  auto half = config("coupling");
  half.left = "quantum:1";
  CHECK_THROWS_AS(run_suite(half), UsageError);
}

TEST_CASE("suite reports are byte-identical for a fixed seed", "[serialize][property]")
{
  for (const std::string s : {"coupling", "gns", "grassmann", "moyal-limit", "stern-gerlach", "evolve"}) {
    INFO(s);
    const auto a = run_suite(config(s, 9)), b = run_suite(config(s, 9));
    CHECK(a.passed());
    CHECK(report_text(a) == report_text(b));
    std::ostringstream ca, cb;
    write_report_csv(ca, a);
    write_report_csv(cb, b);
    CHECK(ca.str() == cb.str());
  }
  // A different seed changes the sampled residuals.
  CHECK(report_text(run_suite(config("evolve", 9))) != report_text(run_suite(config("evolve", 10))));
}

TEST_CASE("tolerance override and single-pair coupling", "[serialize][cli]")
{
  auto tight = config("verify");
  tight.algebras = {"m2"};
  tight.samples = 10;
  tight.tol = 1e-30;
  const auto r = run_suite(tight);
  CHECK_FALSE(r.passed());
  CHECK_FALSE(r.failures().empty());

  auto pair = config("coupling");
  pair.left = "quantum:1.0";
  pair.right = "commutative";
  const auto pr = run_suite(pair);
  CHECK(pr.passed());
  CHECK(pr.data.at("verdict") == "NoneExistsMixed");

  pair.right = "quantum:1.0:m3";
  const auto qq = run_suite(pair);
  CHECK(qq.passed());
  CHECK(qq.data.at("verdict") == "ExistsQuantum");
  CHECK(qq.find("product.super-jacobi") != nullptr);
}
