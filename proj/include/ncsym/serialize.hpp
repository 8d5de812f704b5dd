#ifndef NCSYM_SERIALIZE_HPP
#define NCSYM_SERIALIZE_HPP

#include "ncsym/coupling.hpp"
#include "ncsym/measurement.hpp"
#include "ncsym/moyal.hpp"
#include "ncsym/states.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <string>
#include <vector>

namespace ncsym {

using Json = nlohmann::json;

inline constexpr const char* kSchema = "ncsym/1";

// ---------------------------------------------------------------------------
// Complex arrays as [re, im] pairs. Doubles print in shortest round-trip form.

inline Json cplx_json(cplx c) { return Json::array({c.real(), c.imag()}); }

inline cplx cplx_from(const Json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

inline Json vec_json(const Vec& v)
{
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(cplx_json(v(i)));
  return a;
}

inline Vec vec_from(const Json& j)
{
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = cplx_from(j.at(static_cast<std::size_t>(i)));
  return v;
}

/// Row-major nested array.
inline Json mat_json(const Mat& m)
{
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) rows.push_back(vec_json(m.row(r).transpose()));
  return rows;
}

inline Mat mat_from(const Json& j)
{
  const auto rows = static_cast<Eigen::Index>(j.size());
  const Eigen::Index cols = rows == 0 ? 0 : static_cast<Eigen::Index>(j.at(0).size());
  Mat m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) m.row(r) = vec_from(j.at(static_cast<std::size_t>(r))).transpose();
  return m;
}

// ---------------------------------------------------------------------------
// Algebra descriptors. structure[i][j][k] = c_ij^k; round-trips exactly.

inline AlgebraKind kind_from_name(const std::string& s)
{
  for (AlgebraKind k : {AlgebraKind::Matrix, AlgebraKind::GradedMatrix, AlgebraKind::Grassmann, AlgebraKind::Tensor, AlgebraKind::Custom})
    if (kind_name(k) == s) return k;
  throw std::invalid_argument("unknown algebra kind '" + s + "'");
}

inline Json algebra_json(const AlgebraPtr& alg)
{
  const int n = alg->dim();
  Json j;
  j["schema"] = kSchema;
  j["id"] = alg->id();
  j["dim"] = n;
  j["labels"] = alg->labels();
  Json par = Json::array();
  for (int i = 0; i < n; ++i) par.push_back(to_int(alg->parity(i)));
  j["parity"] = par;
  Json st = Json::array();
  for (int a = 0; a < n; ++a) {
    Json row = Json::array();
    for (int b = 0; b < n; ++b) row.push_back(vec_json(alg->left_mult(a).col(b)));
    st.push_back(row);
  }
  j["structure"] = st;
  j["unit"] = vec_json(alg->unit());
  j["involution"] = mat_json(alg->involution_matrix());
  const auto& k = alg->kind();
  Json kind{{"name", kind_name(k.kind)}, {"n", k.n}, {"p", k.p}, {"q", k.q}};
  if (k.left) kind["left"] = algebra_json(k.left);
  if (k.right) kind["right"] = algebra_json(k.right);
  j["kind"] = kind;
  if (alg->has_realization()) {
    Json real = Json::array();
    for (const auto& m : alg->realization()) real.push_back(mat_json(m));
    j["realization"] = real;
  }
  return j;
}

inline AlgebraPtr algebra_from_json(const Json& j)
{
  if (j.at("schema").get<std::string>() != kSchema) throw std::invalid_argument("unsupported algebra schema");
  const int n = j.at("dim").get<int>();
  Algebra::Data d;
  d.id = j.at("id").get<std::string>();
  d.labels = j.at("labels").get<std::vector<std::string>>();
  for (const auto& p : j.at("parity")) d.parity.push_back(p.get<int>() ? Parity::Odd : Parity::Even);
  d.left_mult.assign(static_cast<std::size_t>(n), Mat::Zero(n, n));
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) d.left_mult[static_cast<std::size_t>(a)].col(b) = vec_from(j.at("structure").at(static_cast<std::size_t>(a)).at(static_cast<std::size_t>(b)));
  d.unit = vec_from(j.at("unit"));
  d.involution = mat_from(j.at("involution"));
  const auto& k = j.at("kind");
  d.kind.kind = kind_from_name(k.at("name").get<std::string>());
  d.kind.n = k.at("n").get<int>();
  d.kind.p = k.at("p").get<int>();
  d.kind.q = k.at("q").get<int>();
  if (k.contains("left")) d.kind.left = algebra_from_json(k.at("left"));
  if (k.contains("right")) d.kind.right = algebra_from_json(k.at("right"));
  if (j.contains("realization"))
    for (const auto& m : j.at("realization")) d.realization.push_back(mat_from(m));
  return Algebra::create(std::move(d));
}

// ---------------------------------------------------------------------------
// Calculus objects, tagged with their algebra id.

inline Json derivation_json(const Derivation& x)
{
  return Json{{"schema", kSchema}, {"algebra", x.alg->id()}, {"parity", to_int(x.parity)}, {"operator", mat_json(x.op)}};
}

/// components[k] is the value on the k-th family tuple in lexicographic order.
inline Json cochain_json(const Cochain& w)
{
  Json comps = Json::array();
  for (const auto& c : w.components()) comps.push_back(vec_json(c));
  Json fam = Json::array();
  for (const auto& x : w.family()->members()) fam.push_back(derivation_json(x));
  return Json{{"schema", kSchema}, {"algebra", w.algebra()->id()}, {"degree", w.degree()}, {"parity", to_int(w.parity())},
              {"family", fam}, {"components", comps}};
}

// ---------------------------------------------------------------------------
// Symplectic structures, Hamiltonian systems, evolution traces.

inline Json hamiltonian_system_json(const HamiltonianSystem& hs)
{
  return Json{{"schema", kSchema},
              {"algebra", hs.algebra()->id()},
              {"form", form_kind_name(hs.structure().kind())},
              {"hbar", hs.structure().hbar()},
              {"hamiltonian", vec_json(hs.hamiltonian().coeffs)},
              {"generator", mat_json(hs.generator())}};
}

struct TraceRow {
  double t = 0.0;
  std::vector<double> values;
};

/// Header "t,<name_1>,...": one row per time.
inline void write_trace_csv(std::ostream& os, const std::vector<std::string>& names, const std::vector<TraceRow>& rows)
{
  os << "t";
  for (const auto& n : names) os << ',' << n;
  os << '\n';
  os.precision(17);
  for (const auto& r : rows) {
    os << r.t;
    for (double v : r.values) os << ',' << v;
    os << '\n';
  }
}

// ---------------------------------------------------------------------------
// Coupling verdicts with per-factor residual tables.

inline Json factor_fit_json(const FactorFit& f)
{
  Json table = Json::array();
  for (const auto& r : f.table) table.push_back(Json{{"i", r.i}, {"j", r.j}, {"residual", r.residual}});
  Json j{{"label", f.label},
         {"supercommutative", f.supercommutative},
         {"commutatorNorm", f.commutator_norm},
         {"bracketNorm", f.bracket_norm},
         {"residual", f.residual},
         {"generalized", f.generalized},
         {"table", table}};
  j["lambda"] = f.lambda ? cplx_json(*f.lambda) : Json();
  return j;
}

inline Json compatibility_json(const CompatibilityReport& r)
{
  Json j{{"schema", kSchema},
         {"verdict", verdict_name(r.verdict)},
         {"exists", r.exists()},
         {"lambda", cplx_json(r.lambda)},
         {"generalized", r.generalized},
         {"detail", r.detail},
         {"left", factor_fit_json(r.left)},
         {"right", factor_fit_json(r.right)}};
  j["lambdaLeft"] = r.lambda_left ? cplx_json(*r.lambda_left) : Json();
  j["lambdaRight"] = r.lambda_right ? cplx_json(*r.lambda_right) : Json();
  if (r.product) j["productAlgebra"] = r.product->algebra()->id();
  return j;
}

// ---------------------------------------------------------------------------
// States and GNS data.

inline Json state_json(const State& s)
{
  Json j{{"schema", kSchema}, {"algebra", s.algebra()->id()}, {"kind", state_kind_name(s.kind())}, {"functional", vec_json(s.functional())}};
  j["pure"] = s.pure() ? Json(*s.pure()) : Json();
  if (s.density()) j["density"] = mat_json(*s.density());
  if (s.berezin()) j["berezin"] = vec_json(*s.berezin());
  if (s.weights()) j["weights"] = std::vector<double>(s.weights()->data(), s.weights()->data() + s.weights()->size());
  return j;
}

inline Json gns_json(const GnsResult& g)
{
  Json ops = Json::array();
  for (const auto& m : g.operators) ops.push_back(mat_json(m));
  return Json{{"schema", kSchema},
              {"dim", g.dim},
              {"irreducible", g.irreducible},
              {"commutantDim", g.commutant_dim},
              {"nullIdealDim", g.null_ideal_dim},
              {"homomorphismResidual", g.homomorphism_residual},
              {"involutionResidual", g.involution_residual},
              {"chi", vec_json(g.chi)},
              {"operators", ops}};
}

// ---------------------------------------------------------------------------
// Grassmann elements as {monomialBits: coeff}, zero coefficients omitted.

inline Json grassmann_json(const Vec& c)
{
  Json t = Json::object();
  for (Eigen::Index s = 0; s < c.size(); ++s)
    if (c(s) != cplx{}) t[std::to_string(s)] = cplx_json(c(s));
  return t;
}

inline Vec grassmann_from_json(const Json& j, int n)
{
  Vec c = Vec::Zero(Eigen::Index{1} << n);
  for (const auto& [k, v] : j.items()) {
    const long bits = std::stol(k);
    if (bits < 0 || bits >= c.size()) throw std::invalid_argument("monomial bits out of range for G_" + std::to_string(n));
    c(bits) = cplx_from(v);
  }
  return c;
}

// ---------------------------------------------------------------------------
// Measurement reports.

inline Json stern_gerlach_json(const SternGerlachParams& p, const SternGerlachResult& r, const ReducedState& red)
{
  return Json{{"schema", kSchema},
              {"params", Json{{"mu", p.mu}, {"b1", p.b1}, {"z1", p.z1}, {"z2", p.z2}, {"x1", p.x1}, {"x2", p.x2}, {"x3", p.x3}, {"vx", p.vx}, {"hbar", p.hbar}}},
              {"tau", r.tau},
              {"eta", r.eta},
              {"ratio", r.ratio},
              {"magnitudeBound", r.magnitude_bound},
              {"residual", red.residual},
              {"probabilities", red.probabilities}};
}

// ---------------------------------------------------------------------------
// Suite reports. Checks are sorted by id so assembly order never shows in the output.

enum class Relation { AtMost, AtLeast, Equal, Within };

inline std::string relation_name(Relation r)
{
  switch (r) {
    case Relation::AtMost: return "le";
    case Relation::AtLeast: return "ge";
    case Relation::Equal: return "eq";
    case Relation::Within: return "in";
  }
  return "le";
}

struct Check {
  std::string id;
  double value = 0.0;
  Relation relation = Relation::AtMost;
  double bound = 0.0;  // lower end for Within
  double upper = 0.0;  // Within only
  bool pass = false;
  std::string detail;
};

inline Check check_le(std::string id, double value, double bound, std::string detail = {})
{
  return {std::move(id), value, Relation::AtMost, bound, 0.0, std::isfinite(value) && value <= bound, std::move(detail)};
}
inline Check check_ge(std::string id, double value, double bound, std::string detail = {})
{
  return {std::move(id), value, Relation::AtLeast, bound, 0.0, std::isfinite(value) && value >= bound, std::move(detail)};
}
inline Check check_eq(std::string id, double value, double expect, std::string detail = {})
{
  return {std::move(id), value, Relation::Equal, expect, 0.0, value == expect, std::move(detail)};
}
inline Check check_in(std::string id, double value, double lo, double hi, std::string detail = {})
{
  return {std::move(id), value, Relation::Within, lo, hi, std::isfinite(value) && value >= lo && value <= hi, std::move(detail)};
}
inline Check check_true(std::string id, bool ok, std::string detail = {})
{
  return {std::move(id), ok ? 1.0 : 0.0, Relation::Equal, 1.0, 0.0, ok, std::move(detail)};
}

struct Report {
  Report() = default;
  Report(std::string name, Json cfg) : suite(std::move(name)), config(std::move(cfg)) {}

  std::string suite;
  Json config;
  std::vector<Check> checks;
  Json data = Json::object();

  void add(Check c) { checks.push_back(std::move(c)); }
  bool passed() const
  {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
  }
  std::vector<std::string> failures() const
  {
    std::vector<std::string> f;
    for (const auto& c : sorted()) f.push_back(c.id);
    f.erase(std::remove_if(f.begin(), f.end(), [&](const std::string& id) { return find(id)->pass; }), f.end());
    return f;
  }
  const Check* find(const std::string& id) const
  {
    for (const auto& c : checks)
      if (c.id == id) return &c;
    return nullptr;
  }
  std::vector<Check> sorted() const
  {
    std::vector<Check> s = checks;
    std::stable_sort(s.begin(), s.end(), [](const Check& a, const Check& b) { return a.id < b.id; });
    return s;
  }
};

/// Non-finite values serialize as null.
inline Json number_json(double v) { return std::isfinite(v) ? Json(v) : Json(); }

inline Json report_json(const Report& r)
{
  Json checks = Json::array();
  for (const auto& c : r.sorted()) {
    Json j{{"id", c.id}, {"value", number_json(c.value)}, {"relation", relation_name(c.relation)}, {"bound", number_json(c.bound)}, {"pass", c.pass}};
    if (c.relation == Relation::Within) j["upper"] = number_json(c.upper);
    if (!c.detail.empty()) j["detail"] = c.detail;
    checks.push_back(j);
  }
  return Json{{"schema", kSchema}, {"suite", r.suite}, {"config", r.config}, {"passed", r.passed()}, {"checks", checks}, {"data", r.data}};
}

inline std::string report_text(const Report& r) { return report_json(r).dump(2) + "\n"; }

/// Fixed header "id,value,relation,bound,upper,pass".
inline void write_report_csv(std::ostream& os, const Report& r)
{
  os << "id,value,relation,bound,upper,pass\n";
  for (const auto& c : r.sorted()) {
    os << c.id << ',' << number_json(c.value).dump() << ',' << relation_name(c.relation) << ',' << number_json(c.bound).dump() << ','
       << (c.relation == Relation::Within ? number_json(c.upper).dump() : std::string()) << ',' << (c.pass ? "true" : "false") << '\n';
  }
}

}  // namespace ncsym

#endif  // NCSYM_SERIALIZE_HPP
