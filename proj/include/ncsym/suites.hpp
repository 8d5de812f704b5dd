#ifndef NCSYM_SUITES_HPP
#define NCSYM_SUITES_HPP

#include "ncsym/serialize.hpp"
#include "ncsym/superclassical.hpp"

#include <cmath>
#include <cstdint>
#include <optional>
#include <regex>
#include <string>
#include <vector>

namespace ncsym {

/// Bad suite name, algebra name, factor spec or preset.
struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Everything a suite reads. Output path and format are not part of the report.
struct SuiteConfig {
  std::string suite;
  std::vector<std::string> algebras;
  std::uint64_t seed = 1;
  std::optional<int> samples;
  std::optional<double> tol;
  std::string left, right;
  std::string preset = "paper";

  Json json() const
  {
    Json j{{"suite", suite}, {"seed", seed}, {"algebras", algebras}, {"left", left}, {"right", right}, {"preset", preset}};
    j["samples"] = samples ? Json(*samples) : Json();
    j["tol"] = tol ? Json(*tol) : Json();
    return j;
  }
};

inline const std::vector<std::string>& suite_names()
{
  static const std::vector<std::string> names{"verify", "coupling", "gns", "grassmann", "moyal-limit", "stern-gerlach", "decoherence", "evolve"};
  return names;
}

/// "m<n>" is M_n, "m<p>|<q>" is M_{p|q}, "g<n>" is the Grassmann algebra on n generators.
inline AlgebraPtr parse_algebra(const std::string& name)
{
  std::smatch m;
  if (std::regex_match(name, m, std::regex(R"(m([1-9]))"))) return build_matrix_algebra(std::stoi(m[1]));
  if (std::regex_match(name, m, std::regex(R"(m([1-9])\|([1-9]))"))) {
    const int p = std::stoi(m[1]), q = std::stoi(m[2]);
    return build_matrix_algebra(p + q, std::pair{p, q});
  }
  if (std::regex_match(name, m, std::regex(R"(g([1-8]))"))) return build_grassmann_algebra(std::stoi(m[1]));
  throw UsageError("unknown algebra '" + name + "' (use m<n>, m<p>|<q> or g<n>)");
}

/// "quantum:<hbar>[:<algebra>]", "canonical[:<algebra>]", "commutative[:g<n>]".
inline PoissonFactor parse_factor(const std::string& spec)
{
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = spec.find(':', start);
    parts.push_back(spec.substr(start, pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  const std::string& kind = parts[0];
  if (kind == "quantum") {
    if (parts.size() < 2 || parts.size() > 3) throw UsageError("quantum factor needs quantum:<hbar>[:<algebra>]");
    double hbar = 0.0;
    try {
      std::size_t used = 0;
      hbar = std::stod(parts[1], &used);
      if (used != parts[1].size()) throw std::invalid_argument("trailing text");
    } catch (const std::exception&) {
      throw UsageError("bad hbar '" + parts[1] + "'");
    }
    if (!(hbar > 0.0)) throw UsageError("hbar must be positive");
    return factor_from_structure(quantum_form(parse_algebra(parts.size() == 3 ? parts[2] : "m2"), hbar));
  }
  if (kind == "canonical") {
    if (parts.size() > 2) throw UsageError("canonical factor needs canonical[:<algebra>]");
    return factor_from_structure(canonical_form(parse_algebra(parts.size() == 2 ? parts[1] : "m2")));
  }
  if (kind == "commutative") {
    if (parts.size() > 2) throw UsageError("commutative factor needs commutative[:g<n>]");
    const std::string g = parts.size() == 2 ? parts[1] : "g2";
    std::smatch m;
    if (!std::regex_match(g, m, std::regex(R"(g([1-8]))"))) throw UsageError("commutative factor must be a Grassmann algebra g<n>");
    return grassmann_factor(SuperPBMatrix::canonical(0, std::stoi(m[1])));
  }
  throw UsageError("unknown factor '" + spec + "' (use quantum:<hbar>, canonical or commutative)");
}

namespace detail {

inline double dist(const Element& a, const Element& b) { return max_abs(Vec(a.coeffs - b.coeffs)); }

inline Parity random_parity(Rng& rng, const AlgebraPtr& alg)
{
  return alg->is_graded() && rng.uniform() < 0.5 ? Parity::Odd : Parity::Even;
}

/// Unitaries preserving the grading: block diagonal for M_{p|q}.
inline Mat grading_unitary(Rng& rng, const AlgebraPtr& alg)
{
  const auto& k = alg->kind();
  if (k.kind != AlgebraKind::GradedMatrix) return rng.unitary(k.n);
  Mat u = Mat::Zero(k.p + k.q, k.p + k.q);
  u.topLeftCorner(k.p, k.p) = rng.unitary(k.p);
  u.bottomRightCorner(k.q, k.q) = rng.unitary(k.q);
  return u;
}

inline std::vector<double> log_space(double lo, double hi, int n)
{
  std::vector<double> v;
  for (int k = 0; k < n; ++k) v.push_back(std::pow(10.0, std::log10(lo) + (std::log10(hi) - std::log10(lo)) * k / (n - 1)));
  return v;
}

inline PhasePolynomial random_phase_poly(Rng& rng, int dof, int max_degree, int terms = 6)
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

inline Mat random_density(Rng& rng, int n)
{
  const Mat a = rng.cmat(n, n);
  const Mat rho = a * a.adjoint();
  return rho / rho.trace().real();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// verify: bracket identities under the quantum form and the cochain calculus.

inline Report verify_suite(const SuiteConfig& cfg)
{
  Report r{"verify", cfg.json()};
  const double tol_pb = cfg.tol.value_or(1e-9), tol_calc = cfg.tol.value_or(1e-10);
  const int samples = cfg.samples.value_or(200);
  const int calc_samples = std::max(12, samples / 4);
  const auto names = cfg.algebras.empty() ? std::vector<std::string>{"m2", "m3", "m1|1"} : cfg.algebras;
  std::uint64_t salt = 0;
  for (const auto& name : names) {
    const auto alg = parse_algebra(name);
    if (alg->kind().kind == AlgebraKind::Grassmann) throw UsageError("verify needs a matrix algebra; '" + name + "' is supercommutative");
    Rng rng(cfg.seed * 1000003u + salt++);

    const auto wq = quantum_form(alg, 1.0);
    double jac = 0, leib = 0, hom = 0, real = 0;
    for (int k = 0; k < samples; ++k) {
      const Element a = rng.homogeneous(alg), b = rng.homogeneous(alg), c = rng.homogeneous(alg);
      const int ea = to_int(*a.parity()), eb = to_int(*b.parity()), ec = to_int(*c.parity());
      const Element j = wq.poisson(a, wq.poisson(b, c)) + koszul(ea, eb + ec) * wq.poisson(b, wq.poisson(c, a)) +
                        koszul(ec, ea + eb) * wq.poisson(c, wq.poisson(a, b));
      jac = std::max(jac, j.norm());
      leib = std::max(leib, detail::dist(wq.poisson(a, b * c), wq.poisson(a, b) * c + koszul(ea, eb) * (b * wq.poisson(a, c))));
      hom = std::max(hom, max_abs(Mat(bracket(wq.hamiltonian_derivation(a), wq.hamiltonian_derivation(b)).op -
                                      wq.hamiltonian_derivation(wq.poisson(a, b)).op)));
      real = std::max(real, detail::dist(involution(wq.poisson(a, b)), -koszul(ea, eb) * wq.poisson(involution(b), involution(a))));
    }
    const std::string n = std::to_string(samples) + " homogeneous triples";
    r.add(check_le(name + ".pb.super-jacobi", jac, tol_pb, n));
    r.add(check_le(name + ".pb.leibniz", leib, tol_pb, n));
    r.add(check_le(name + ".pb.reality", real, tol_pb, n));
    r.add(check_le(name + ".pb.hamiltonian-homomorphism", hom, tol_pb, n));

    const auto fam = DerivationFamily::inner(alg);
    double d2 = 0, cartan = 0, wl = 0;
    for (int k = 0; k < calc_samples; ++k) {
      const int p = k % 3, q = (k / 3) % 2;
      const Parity sa = detail::random_parity(rng, alg), sb = detail::random_parity(rng, alg);
      const Cochain a = random_cochain(fam, p, sa, rng), b = random_cochain(fam, q, sb, rng);
      const Derivation& x = (*fam)[rng.index(fam->size())];
      d2 = std::max(d2, exterior_derivative(exterior_derivative(a)).max_abs());
      Cochain c = interior(x, exterior_derivative(a));
      if (p > 0) c += exterior_derivative(interior(x, a));
      cartan = std::max(cartan, distance(c, koszul(x.parity, sa) * lie_derivative(x, a)));
      const double sp = p % 2 ? -1.0 : 1.0;
      wl = std::max(wl, distance(exterior_derivative(wedge(a, b)), wedge(exterior_derivative(a), b) + sp * wedge(a, exterior_derivative(b))));
    }
    const auto phi = Isomorphism::unitary_conjugation(alg, detail::grading_unitary(rng, alg));
    const auto psi = Isomorphism::unitary_conjugation(alg, detail::grading_unitary(rng, alg));
    double pc = 0, pw = 0, pd = 0;
    for (int k = 0; k < std::max(3, calc_samples / 5); ++k) {
      const int p = k % 3;
      const Cochain a = random_cochain(fam, p, detail::random_parity(rng, alg), rng);
      const Cochain b = random_cochain(fam, 2 - p, detail::random_parity(rng, alg), rng);
      pc = std::max(pc, distance(pullback(compose(psi, phi), a), pullback(phi, pullback(psi, a))));
      pw = std::max(pw, distance(pullback(phi, wedge(a, b)), wedge(pullback(phi, a), pullback(phi, b))));
      pd = std::max(pd, distance(pullback(phi, exterior_derivative(a)), exterior_derivative(pullback(phi, a))));
    }
    const std::string cn = std::to_string(calc_samples) + " random cochains of degree <= 2";
    r.add(check_le(name + ".calculus.d-squared", d2, tol_calc, cn));
    r.add(check_le(name + ".calculus.cartan", cartan, tol_calc, cn));
    r.add(check_le(name + ".calculus.wedge-leibniz", wl, tol_calc, cn));
    r.add(check_le(name + ".calculus.pullback-composition", pc, tol_calc));
    r.add(check_le(name + ".calculus.pullback-wedge", pw, tol_calc));
    r.add(check_le(name + ".calculus.pullback-d", pd, tol_calc));
    r.data[name] = Json{{"dim", alg->dim()}, {"family", fam->size()}, {"familyClosed", fam->closed()}};
  }
  return r;
}

// ---------------------------------------------------------------------------
// coupling: the four-scenario verdict matrix, or a single requested pair.

inline Report coupling_suite(const SuiteConfig& cfg)
{
  Report r{"coupling", cfg.json()};
  const double tol = cfg.tol.value_or(1e-9);
  Rng rng(cfg.seed);
  if (!cfg.left.empty() || !cfg.right.empty()) {
    if (cfg.left.empty() || cfg.right.empty()) throw UsageError("coupling needs both --left and --right");
    const auto res = product_symplectic(parse_factor(cfg.left), parse_factor(cfg.right), tol);
    r.data = compatibility_json(res);
    for (const auto* f : {&res.left, &res.right}) {
      const std::string side = f == &res.left ? "left" : "right";
      if (f->supercommutative)
        r.add(check_le(side + ".supercommutator", f->commutator_norm, 1e-12, "factor " + f->label));
      else
        r.add(check_le(side + ".lambda-fit", f->residual, tol, "factor " + f->label));
    }
    if (res.exists()) {
      const auto& t = res.product->algebra();
      double jac = 0, leib = 0;
      const int samples = cfg.samples.value_or(20);
      for (int k = 0; k < samples; ++k) {
        const Element a = rng.homogeneous(t), b = rng.homogeneous(t), c = rng.homogeneous(t);
        const Parity pa = *a.parity(), pb = *b.parity();
        const auto br = [&](const Element& x, const Element& y) { return product_poisson(res, x, y); };
        jac = std::max(jac, max_abs(Vec((br(a, br(b, c)) - br(br(a, b), c) - koszul(pa, pb) * br(b, br(a, c))).coeffs)));
        leib = std::max(leib, max_abs(Vec((br(a, b * c) - br(a, b) * c - koszul(pa, pb) * (b * br(a, c))).coeffs)));
      }
      r.add(check_le("product.super-jacobi", jac, tol));
      r.add(check_le("product.leibniz", leib, tol));
    }
    return r;
  }

  const auto q = [](double hbar) { return factor_from_structure(quantum_form(build_matrix_algebra(2), hbar)); };
  const auto c = [] { return grassmann_factor(SuperPBMatrix::canonical(0, 2)); };
  struct Scenario {
    std::string id;
    CompatibilityReport res;
    Verdict expect;
  };
  std::vector<Scenario> sc;
  sc.push_back({"commutative-commutative", product_symplectic(c(), c()), Verdict::ExistsCommutative});
  sc.push_back({"commutative-quantum", product_symplectic(c(), q(1.0)), Verdict::NoneExistsMixed});
  sc.push_back({"quantum-quantum", product_symplectic(q(1.0), q(1.0)), Verdict::ExistsQuantum});
  sc.push_back({"quantum-quantum2", product_symplectic(q(1.0), q(2.0)), Verdict::MismatchedParameters});
  Json verdicts = Json::object();
  for (const auto& s : sc) {
    r.add(check_true("scenario." + s.id + ".verdict", s.res.verdict == s.expect, verdict_name(s.res.verdict) + " (expected " + verdict_name(s.expect) + ")"));
    verdicts[s.id] = compatibility_json(s.res);
  }
  r.add(check_le("scenario.quantum-quantum.lambda", std::abs(sc[2].res.lambda - cplx(0.0, 1.0)), 1e-12, "lambda = i hbar at hbar = 1"));
  r.data["scenarios"] = verdicts;

  const auto& qq = sc[2].res;
  const auto& t = qq.product->algebra();
  const int pairs = cfg.samples.value_or(100);
  double worst = 0.0;
  for (int k = 0; k < pairs; ++k) {
    const Element x{t, rng.cvec(16)}, y{t, rng.cvec(16)};
    const Mat xm = to_matrix(x), ym = to_matrix(y);
    worst = std::max(worst, max_abs(Mat(to_matrix(product_poisson(qq, x, y)) - (xm * ym - ym * xm) / cplx(0.0, -1.0))));
  }
  r.add(check_le("product.kronecker-commutator", worst, 1e-12, std::to_string(pairs) + " random M2xM2 pairs"));

  const auto& p = *qq.product;
  double fitted = 0.0, perturbed = 1e300;
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) {
      const Vec ea = p.left().alg->basis(a), eb = p.right().alg->basis(b);
      fitted = std::max(fitted, check_superderivation(t, p.hamiltonian_from_factors(ea, eb, qq.lambda), Parity::Even).residual);
      // Central factors give derivations for every lambda.
      if (a == 0 || b == 0) continue;
      perturbed = std::min(perturbed, check_superderivation(t, p.hamiltonian_from_factors(ea, eb, qq.lambda + 0.1), Parity::Even).residual);
    }
  r.add(check_le("product.fitted-lambda-derivation", fitted, 1e-10));
  r.add(check_ge("product.perturbed-lambda-derivation", perturbed, 1e-3, "lambda + 0.1 breaks the Leibniz rule"));
  return r;
}

// ---------------------------------------------------------------------------
// gns: vector and tracial states on M_n.

inline Report gns_suite(const SuiteConfig& cfg)
{
  Report r{"gns", cfg.json()};
  const double tol = cfg.tol.value_or(1e-10);
  const int samples = cfg.samples.value_or(100);
  const auto names = cfg.algebras.empty() ? std::vector<std::string>{"m2", "m3"} : cfg.algebras;
  Rng rng(cfg.seed);
  for (const auto& name : names) {
    const auto alg = parse_algebra(name);
    if (alg->kind().kind != AlgebraKind::Matrix) throw UsageError("gns needs an ungraded matrix algebra m<n>, got '" + name + "'");
    const int n = alg->kind().n;
    const State pure = pure_state(alg, rng.cvec(n));
    const auto g = gns(alg, pure);
    double worst = 0.0;
    for (int k = 0; k < samples; ++k) {
      const Element a = rng.element(alg);
      worst = std::max(worst, std::abs(g.vector_state(a.coeffs) - pure.expectation(a)));
    }
    r.add(check_eq(name + ".vector.dim", g.dim, n));
    r.add(check_true(name + ".vector.irreducible", g.irreducible));
    r.add(check_eq(name + ".vector.commutant-dim", g.commutant_dim, 1));
    r.add(check_le(name + ".vector.reproduction", worst, tol, std::to_string(samples) + " random elements"));
    const auto tr = gns(alg, tracial_state(alg));
    r.add(check_eq(name + ".tracial.dim", tr.dim, n * n));
    r.add(check_eq(name + ".tracial.commutant-dim", tr.commutant_dim, n * n));
    r.data[name] = Json{{"vector", gns_json(g)}, {"tracial", Json{{"dim", tr.dim}, {"commutantDim", tr.commutant_dim}, {"irreducible", tr.irreducible}}}};
  }
  return r;
}

// ---------------------------------------------------------------------------
// grassmann: the single Berezin state on G_3 and its compatible-completeness failure.

inline Report grassmann_suite(const SuiteConfig& cfg)
{
  Report r{"grassmann", cfg.json()};
  Rng rng(cfg.seed);
  const auto rep = g3_unique_state(rng);
  const Vec top = top_density(0, 3).to_grassmann();
  r.add(check_eq("g3.feasible-dim", rep.solution_dim, 0, "linear constraints leave only the top density"));
  r.add(check_eq("g3.density", max_abs(Vec(rep.density - top)), 0.0, "surviving density equals -theta^1 theta^2 theta^3 exactly"));
  r.add(check_true("g3.density-positive", rep.scan.feasible, std::to_string(rep.scan.samples) + " test elements"));
  r.add(check_true("g3.cc-fails", !rep.cc.holds, "failed clause " + std::to_string(rep.cc.failed_clause)));
  r.add(check_eq("g3.witness.value-gap", std::abs(rep.witness_values.first - rep.witness_values.second), 0.0, "the single state cannot tell the pair apart"));
  r.add(check_ge("g3.witness.observable-gap", max_abs(Vec(rep.witness.first - rep.witness.second)), 1.0, "the pair differs as elements"));
  r.data = Json{{"density", grassmann_json(rep.density)},
                {"witness", Json::array({grassmann_json(rep.witness.first), grassmann_json(rep.witness.second)})},
                {"witnessValues", Json::array({cplx_json(rep.witness_values.first), cplx_json(rep.witness_values.second)})},
                {"constraints", mat_json(rep.constraints)},
                {"scanSamples", rep.scan.samples}};
  return r;
}

// ---------------------------------------------------------------------------
// moyal-limit: associativity, the hbar^2 remainder, {p,x}_M = 1.

inline Report moyal_suite(const SuiteConfig& cfg)
{
  Report r{"moyal-limit", cfg.json()};
  const int samples = cfg.samples.value_or(100);
  Rng rng(cfg.seed);
  double assoc = 0.0;
  for (int k = 0; k < samples; ++k) {
    const int dof = k % 5 == 4 ? 2 : 1;
    const auto f = detail::random_phase_poly(rng, dof, 4), g = detail::random_phase_poly(rng, dof, 4), h = detail::random_phase_poly(rng, dof, 4);
    const double hb = rng.uniform(0.1, 1.5);
    const auto lhs = star(star(f, g, hb), h, hb);
    assoc = std::max(assoc, distance(lhs, star(f, star(g, h, hb), hb)) / std::max(1.0, lhs.max_coeff()));
  }
  r.add(check_le("star.associativity", assoc, cfg.tol.value_or(1e-10), std::to_string(samples) + " random triples of degree <= 4, relative"));

  const auto hbars = detail::log_space(1e-4, 1e-1, 7);
  const auto X = PhasePolynomial::x(), P = PhasePolynomial::p();
  std::vector<std::pair<PhasePolynomial, PhasePolynomial>> pairs{{X * X, P * P}};
  for (int k = 0; k < std::max(1, samples / 10); ++k) pairs.emplace_back(detail::random_phase_poly(rng, 1, 4), detail::random_phase_poly(rng, 1, 4));
  double worst = 0.0;
  bool orders_exact = true;
  int fitted = 0;
  Json rows = Json::array();
  for (const auto& [f, g] : pairs) {
    const auto rep = classical_limit_report(f, g, hbars);
    orders_exact = orders_exact && rep.leading_exact && rep.first_order_exact;
    if (!rep.slope) continue;
    ++fitted;
    worst = std::max(worst, std::abs(*rep.slope - 2.0));
    rows.push_back(Json{{"slope", *rep.slope}, {"remainders", rep.remainder_norms}});
  }
  r.add(check_le("limit.slope-deviation", worst, 0.05, std::to_string(fitted) + " pairs with a nonzero remainder, hbar in [1e-4, 1e-1]"));
  r.add(check_true("limit.orders-exact", orders_exact, "f*g = fg - (i hbar/2){f,g} + O(hbar^2) term by term"));
  r.data = Json{{"hbars", hbars}, {"pairs", rows}};

  const auto mo = moyal_orders(P, X);
  double order_err = distance(mo[0], PhasePolynomial::constant(1, 1.0));
  for (std::size_t k = 1; k < mo.size(); ++k) order_err = std::max(order_err, mo[k].max_coeff());
  r.add(check_eq("bracket.p-x.orders", order_err, 0.0, "{p,x}_M has the single term 1"));
  double num_err = 0.0;
  for (double hb : {1.0, 0.5, 0.125, 1.0 / 1024}) num_err = std::max(num_err, distance(moyal_bracket(P, X, hb), PhasePolynomial::constant(1, 1.0)));
  r.add(check_eq("bracket.p-x.evaluated", num_err, 0.0, "dyadic hbar"));
  return r;
}

// ---------------------------------------------------------------------------
// stern-gerlach: order-of-magnitude estimate for the silver-atom apparatus.

inline Report stern_gerlach_suite(const SuiteConfig& cfg)
{
  Report r{"stern-gerlach", cfg.json()};
  if (cfg.preset != "paper") throw UsageError("unknown preset '" + cfg.preset + "' (available: paper)");
  const SternGerlachParams sg;
  const auto res = stern_gerlach(sg);
  const auto red = reduced_final_state(stern_gerlach_model(sg));
  r.add(check_in("tau", res.tau, 4e-4, 6e-4, "s"));
  r.add(check_in("eta", res.eta, 1e-20, 1e-19, "erg s"));
  r.add(check_in("ratio", res.ratio, 1e7, 1e9, "eta / hbar"));
  r.add(check_le("interference", red.residual, cfg.tol.value_or(1e-6), "largest surviving off-diagonal term"));
  r.data = stern_gerlach_json(sg, res, red);
  return r;
}

// ---------------------------------------------------------------------------
// decoherence: interference suppression and the matrix-apparatus cross-check.

inline std::vector<SweepPoint> default_sweep() { return suppression_sweep(detail::log_space(1e-2, 1e9, 23)); }

inline Report decoherence_suite(const SuiteConfig& cfg)
{
  Report r{"decoherence", cfg.json()};
  Rng rng(cfg.seed);
  Vec c = rng.cvec(2);
  c.normalize();
  const std::vector<cplx> amps{c(0), c(1)};
  // eta / hbar = (lambda_2 - lambda_1) <K> tau / hbar = 1e8.
  const auto big = MeasurementModel::create({0.5, -0.5}, amps, 1.0, 1e8, 1.0);
  const double mag = interference_magnitude(big, 0, 1);
  r.add(check_le("uniform.kappa-1e8", mag, 1e-7, "|int rho_0(s) e^{i kappa s} ds| at kappa = 1e8"));
  const auto red = reduced_final_state(big);
  double gap = 0.0;
  for (std::size_t j = 0; j < amps.size(); ++j) gap = std::max(gap, std::abs(red.probabilities[j] - std::norm(amps[j])));
  r.add(check_eq("reduced.probabilities", gap, 0.0, "p_j = |c_j|^2 exactly"));
  r.add(check_true("reduced.matches-projection", red.matches_projection));

  const double hbar = 1.0, tau = 0.8;
  const auto mm = MeasurementModel::create({0.5, -0.5}, amps, 1.0, tau, hbar);
  const auto app = momentum_shift_apparatus(4, mm.lambdas(), {1, -1}, tau, hbar);
  std::vector<PointerDomain> doms;
  for (int j = 0; j < 2; ++j) doms.push_back({"M" + std::to_string(j + 1), [j](const std::vector<double>& q) { return static_cast<int>(q.at(0)) == j; }});
  const auto sim = simulate_matrix_apparatus(mm, app, PointerModel::create(std::move(doms), {1.0, 2.0}));
  r.add(check_le("apparatus.probabilities", sim.max_probability_error, 1e-6, "unitary evolution of a 2 x 4 system-pointer model"));
  r.add(check_le("apparatus.projection", sim.projection_error, 1e-6, "sector state against diag(p_j)"));
  r.add(check_le("apparatus.interference", sim.interference, 1e-6));

  Json sweep = Json::array();
  for (const auto& p : default_sweep()) sweep.push_back(Json::array({p.kappa, p.magnitude}));
  r.data = Json{{"magnitude", mag}, {"probabilities", red.probabilities}, {"apparatusProbabilities", sim.probabilities}, {"sweep", sweep}};
  return r;
}

// ---------------------------------------------------------------------------
// evolve: Schroedinger and Heisenberg pictures agree.

inline std::vector<double> evolve_times()
{
  std::vector<double> t;
  for (int k = 0; k <= 20; ++k) t.push_back(0.5 * k);
  return t;
}

/// Trace of <phi(t), A> and <phi, A(t)> for the first single-factor system.
inline std::vector<TraceRow> evolve_trace(std::uint64_t seed)
{
  Rng rng(seed);
  const auto m2 = build_matrix_algebra(2);
  const HamiltonianSystem hs(quantum_form(m2, rng.uniform(0.5, 1.5)), rng.hermitian_element(m2));
  const State s = make_state(m2, DensityMatrix{detail::random_density(rng, 2)});
  const Element a = rng.hermitian_element(m2);
  std::vector<TraceRow> rows;
  for (double t : evolve_times()) rows.push_back({t, {evolve_liouville(hs, s, t).expectation(a).real(), s.expectation(evolve_heisenberg(hs, a, t)).real()}});
  return rows;
}

inline Report evolve_suite(const SuiteConfig& cfg)
{
  Report r{"evolve", cfg.json()};
  const double tol = cfg.tol.value_or(1e-8);
  const int systems = cfg.samples.value_or(5);
  const auto times = evolve_times();
  Rng rng(cfg.seed + 1);

  const auto m2 = build_matrix_algebra(2);
  double single = 0.0;
  for (int k = 0; k < systems; ++k) {
    const HamiltonianSystem hs(quantum_form(m2, rng.uniform(0.5, 1.5)), rng.hermitian_element(m2));
    const State s = make_state(m2, DensityMatrix{detail::random_density(rng, 2)});
    const Element a = rng.element(m2);
    for (double t : times) single = std::max(single, std::abs(evolve_liouville(hs, s, t).expectation(a) - s.expectation(evolve_heisenberg(hs, a, t))));
  }
  r.add(check_le("m2.duality", single, tol, std::to_string(systems) + " random systems, t in [0, 10]"));

  double coupled = 0.0;
  for (int k = 0; k < systems; ++k) {
    const double hbar = rng.uniform(0.5, 1.5);
    const auto res = product_symplectic(quantum_form(build_matrix_algebra(2), hbar), quantum_form(build_matrix_algebra(2), hbar));
    const auto& l = res.product->left().alg;
    const auto& rt = res.product->right().alg;
    const CoupledSystem sys(res, rng.hermitian_element(l), rng.hermitian_element(rt), {{rng.hermitian_element(l), rng.hermitian_element(rt)}});
    const auto& t4 = res.product->algebra();
    const State s = make_state(t4, DensityMatrix{detail::random_density(rng, 4)});
    const Element a = rng.element(t4);
    for (double t : times) coupled = std::max(coupled, std::abs(coupled_evolution(sys, s, t).expectation(a) - s.expectation(coupled_evolution(sys, a, t))));
  }
  r.add(check_le("m2xm2.duality", coupled, tol, std::to_string(systems) + " random coupled systems, t in [0, 10]"));
  r.data = Json{{"times", times}, {"systems", systems}};
  return r;
}

// ---------------------------------------------------------------------------

inline Report run_suite(const SuiteConfig& cfg)
{
  if (cfg.suite == "verify") return verify_suite(cfg);
  if (cfg.suite == "coupling") return coupling_suite(cfg);
  if (cfg.suite == "gns") return gns_suite(cfg);
  if (cfg.suite == "grassmann") return grassmann_suite(cfg);
  if (cfg.suite == "moyal-limit") return moyal_suite(cfg);
  if (cfg.suite == "stern-gerlach") return stern_gerlach_suite(cfg);
  if (cfg.suite == "decoherence") return decoherence_suite(cfg);
  if (cfg.suite == "evolve") return evolve_suite(cfg);
  throw UsageError("unknown command '" + cfg.suite + "'");
}

}  // namespace ncsym

#endif  // NCSYM_SUITES_HPP
