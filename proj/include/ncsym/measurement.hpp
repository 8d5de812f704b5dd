#ifndef NCSYM_MEASUREMENT_HPP
#define NCSYM_MEASUREMENT_HPP

#include "ncsym/coupling.hpp"
#include "ncsym/moyal.hpp"
#include "ncsym/random.hpp"
#include "ncsym/states.hpp"

#include <functional>
#include <ostream>
#include <variant>

namespace ncsym {

// ---------------------------------------------------------------------------------------
// Ready-state profiles over the dimensionless variable s

/// Uniform density on [s0, s0 + 1].
struct UniformProfile {
  double s0 = 0.0;
};

/// Piecewise-linear density through (s_i, rho_i); normalized on construction.
struct SampledProfile {
  std::vector<double> s, rho;
};

using Profile = std::variant<UniformProfile, SampledProfile>;

namespace detail {

/// int_0^h e^{i k u} du and int_0^h u e^{i k u} du, with series near k h = 0.
inline std::pair<cplx, cplx> segment_moments(double k, double h)
{
  const double kh = k * h;
  if (std::abs(kh) < 0.1) {
    cplx e0 = 0.0, e1 = 0.0, term = 1.0;  // term = (i k h)^n / n!
    for (int n = 0; n < 12; ++n) {
      if (n > 0) term *= cplx(0.0, kh) / static_cast<double>(n);
      e0 += term / static_cast<double>(n + 1);
      e1 += term / static_cast<double>(n + 2);
    }
    return {h * e0, h * h * e1};
  }
  const cplx ik(0.0, k), e = std::exp(cplx(0.0, kh));
  const cplx e0 = (e - 1.0) / ik;
  return {e0, h * e / ik - e0 / ik};
}

inline SampledProfile normalized(SampledProfile p)
{
  if (p.s.size() != p.rho.size() || p.s.size() < 2) throw std::invalid_argument("sampled profile needs matching s and rho with at least 2 points");
  double mass = 0.0;
  for (std::size_t i = 0; i + 1 < p.s.size(); ++i) {
    if (!(p.s[i + 1] > p.s[i])) throw std::invalid_argument("profile abscissae must increase");
    if (p.rho[i] < 0.0 || p.rho[i + 1] < 0.0) throw std::invalid_argument("profile density must be nonnegative");
    mass += 0.5 * (p.rho[i] + p.rho[i + 1]) * (p.s[i + 1] - p.s[i]);
  }
  if (!(mass > 0.0)) throw std::invalid_argument("profile has zero mass");
  for (double& r : p.rho) r /= mass;
  return p;
}

}  // namespace detail

/// int rho(s) e^{i kappa s} ds, exact for uniform and piecewise-linear profiles.
inline cplx profile_transform(const Profile& prof, double kappa)
{
  if (const auto* u = std::get_if<UniformProfile>(&prof)) {
    const auto [e0, e1] = detail::segment_moments(kappa, 1.0);
    (void)e1;
    return std::exp(cplx(0.0, kappa * u->s0)) * e0;
  }
  const auto p = detail::normalized(std::get<SampledProfile>(prof));
  cplx sum = 0.0;
  for (std::size_t i = 0; i + 1 < p.s.size(); ++i) {
    const double h = p.s[i + 1] - p.s[i];
    const auto [e0, e1] = detail::segment_moments(kappa, h);
    sum += std::exp(cplx(0.0, kappa * p.s[i])) * (p.rho[i] * e0 + (p.rho[i + 1] - p.rho[i]) / h * e1);
  }
  return sum;
}

// ---------------------------------------------------------------------------------------
// Measurement model

class MeasurementModel {
public:
  /// lambdas: nondegenerate eigenvalues of the measured observable; amps: c_j in its eigenbasis.
  static MeasurementModel create(std::vector<double> lambdas, std::vector<cplx> amps, double k_mean, double tau, double hbar,
                                 Profile profile = UniformProfile{}, double tol = 1e-9)
  {
    if (lambdas.size() != amps.size() || lambdas.size() < 2) throw std::invalid_argument("need matching eigenvalues and amplitudes, at least two");
    double norm = 0.0;
    for (const auto& c : amps) norm += std::norm(c);
    if (std::abs(norm - 1.0) > tol) throw std::invalid_argument("amplitudes are not normalized");
    for (std::size_t j = 0; j < lambdas.size(); ++j)
      for (std::size_t k = j + 1; k < lambdas.size(); ++k)
        if (std::abs(lambdas[j] - lambdas[k]) <= tol * std::max(std::abs(lambdas[j]), std::abs(lambdas[k]))) throw std::invalid_argument("eigenvalues must be distinct");
    if (!(tau > 0.0) || !(hbar > 0.0)) throw std::invalid_argument("need tau > 0 and hbar > 0");
    if (const auto* s = std::get_if<SampledProfile>(&profile)) profile = detail::normalized(*s);
    MeasurementModel m;
    m.lambdas_ = std::move(lambdas);
    m.amps_ = std::move(amps);
    m.k_mean_ = k_mean;
    m.tau_ = tau;
    m.hbar_ = hbar;
    m.profile_ = std::move(profile);
    return m;
  }

  int outcomes() const { return static_cast<int>(lambdas_.size()); }
  const std::vector<double>& lambdas() const { return lambdas_; }
  const std::vector<cplx>& amplitudes() const { return amps_; }
  double k_mean() const { return k_mean_; }
  double tau() const { return tau_; }
  double hbar() const { return hbar_; }
  const Profile& profile() const { return profile_; }
  /// A vanishing mean coupling leaves interference unsuppressed.
  bool degenerate() const { return k_mean_ == 0.0; }

  /// eta_jk = (lambda_k - lambda_j) <K>_0 tau.
  double eta(int j, int k) const { return (lambdas_.at(static_cast<std::size_t>(k)) - lambdas_.at(static_cast<std::size_t>(j))) * k_mean_ * tau_; }

private:
  std::vector<double> lambdas_;
  std::vector<cplx> amps_;
  double k_mean_ = 0.0, tau_ = 0.0, hbar_ = 1.0;
  Profile profile_;
};

/// |int rho_0(s) e^{i eta_jk s / hbar} ds|.
inline double interference_magnitude(const MeasurementModel& mm, int j, int k)
{
  if (j == k) throw std::invalid_argument("interference needs two distinct outcomes");
  return std::abs(profile_transform(mm.profile(), mm.eta(j, k) / mm.hbar()));
}

/// 2|sin(kappa/2)| / |kappa| for the uniform profile.
inline double uniform_magnitude(double kappa) { return kappa == 0.0 ? 1.0 : 2.0 * std::abs(std::sin(0.5 * kappa)) / std::abs(kappa); }

struct ReducedState {
  std::vector<double> probabilities;  // |c_j|^2
  double residual = 0.0;              // max_{j != k} |c_k* c_j| |I_jk|
  double threshold = 0.0;
  bool matches_projection = false;    // residual <= threshold
  bool degenerate = false;
  Mat projected;  // diag(p_j) in the eigenbasis
  Mat averaged;   // c_j c_k* I_jk: system state after phase averaging over the ready domain
};

inline ReducedState reduced_final_state(const MeasurementModel& mm, double threshold = 1e-6)
{
  const int n = mm.outcomes();
  ReducedState r;
  r.threshold = threshold;
  r.degenerate = mm.degenerate();
  r.projected = Mat::Zero(n, n);
  r.averaged = Mat::Zero(n, n);
  const auto& c = mm.amplitudes();
  for (int j = 0; j < n; ++j) {
    const auto js = static_cast<std::size_t>(j);
    r.probabilities.push_back(std::norm(c[js]));
    r.projected(j, j) = std::norm(c[js]);
    r.averaged(j, j) = std::norm(c[js]);
    for (int k = 0; k < n; ++k) {
      if (k == j) continue;
      const cplx ijk = profile_transform(mm.profile(), mm.eta(j, k) / mm.hbar());
      r.averaged(j, k) = c[js] * std::conj(c[static_cast<std::size_t>(k)]) * ijk;
      r.residual = std::max(r.residual, std::abs(r.averaged(j, k)));
    }
  }
  r.matches_projection = r.residual <= threshold;
  return r;
}

struct SweepPoint {
  double kappa, magnitude, bound;  // bound = min(1, 2/|kappa|)
};

inline std::vector<SweepPoint> suppression_sweep(const std::vector<double>& kappas, const Profile& profile = UniformProfile{})
{
  std::vector<SweepPoint> out;
  for (double k : kappas) out.push_back({k, std::abs(profile_transform(profile, k)), k == 0.0 ? 1.0 : std::min(1.0, 2.0 / std::abs(k))});
  return out;
}

inline void write_sweep_csv(std::ostream& os, const std::vector<SweepPoint>& pts)
{
  os << "kappa,magnitude\n";
  os.precision(12);
  for (const auto& p : pts) os << p.kappa << ',' << p.magnitude << '\n';
}

// ---------------------------------------------------------------------------------------
// Pointer observables

/// A region of apparatus phase space.
struct PointerDomain {
  std::string label;
  std::function<bool(const std::vector<double>&)> contains;
};

class PointerModel {
public:
  /// values b_j label the pointer positions; weights b'_j define J^cl = sum_j b'_j chi_{D_j}.
  static PointerModel create(std::vector<PointerDomain> domains, std::vector<double> values, std::optional<std::vector<double>> weights = std::nullopt)
  {
    if (domains.size() != values.size() || domains.empty()) throw std::invalid_argument("need one value per pointer domain");
    auto distinct = [](const std::vector<double>& v, const char* what) {
      for (std::size_t j = 0; j < v.size(); ++j)
        for (std::size_t k = j + 1; k < v.size(); ++k)
          if (v[j] == v[k]) throw std::invalid_argument(std::string("duplicate pointer ") + what);
    };
    distinct(values, "values");
    PointerModel p;
    p.weights_ = weights.value_or(values);
    if (p.weights_.size() != values.size()) throw std::invalid_argument("need one classical weight per pointer domain");
    distinct(p.weights_, "weights");
    p.domains_ = std::move(domains);
    p.values_ = std::move(values);
    return p;
  }

  int size() const { return static_cast<int>(values_.size()); }
  const std::vector<double>& values() const { return values_; }
  const std::vector<double>& weights() const { return weights_; }
  const PointerDomain& domain(int j) const { return domains_.at(static_cast<std::size_t>(j)); }

  /// Index of the pointer domain holding the point; empty inside the ready domain.
  std::optional<int> locate(const std::vector<double>& point) const
  {
    std::optional<int> hit;
    for (int j = 0; j < size(); ++j)
      if (domains_[static_cast<std::size_t>(j)].contains(point)) {
        if (hit) throw std::logic_error("pointer domains overlap at the given point");
        hit = j;
      }
    return hit;
  }

  /// J^cl at a phase point.
  double classical(const std::vector<double>& point) const
  {
    const auto j = locate(point);
    return j ? weights_[static_cast<std::size_t>(*j)] : 0.0;
  }

  /// Expectation of J^cl in the density uniform on D_j, by rejection sampling in a box.
  double uniform_expectation(int j, const std::vector<std::pair<double, double>>& box, Rng& rng, int samples = 1000) const
  {
    double s = 0.0;
    int hits = 0, tries = 0;
    std::vector<double> pt(box.size());
    while (hits < samples) {
      if (++tries > 1000 * samples) throw std::domain_error("pointer domain has negligible volume in the sampling box");
      for (std::size_t a = 0; a < box.size(); ++a) pt[a] = rng.uniform(box[a].first, box[a].second);
      if (!domain(j).contains(pt)) continue;
      s += classical(pt);
      ++hits;
    }
    return s / hits;
  }

  /// J = sum_j b_j P_j for orthogonal projectors P_j of a matrix apparatus.
  Mat quantum(const std::vector<Mat>& projectors, double tol = 1e-10) const
  {
    if (static_cast<int>(projectors.size()) != size()) throw std::invalid_argument("need one projector per pointer position");
    const auto m = projectors.front().rows();
    Mat j = Mat::Zero(m, m);
    for (std::size_t a = 0; a < projectors.size(); ++a) {
      const Mat& p = projectors[a];
      if (max_abs(Mat(p - p.adjoint())) > tol || max_abs(Mat(p * p - p)) > tol) throw std::invalid_argument("pointer operator is not a projector");
      for (std::size_t b = a + 1; b < projectors.size(); ++b)
        if (max_abs(Mat(p * projectors[b])) > tol) throw std::invalid_argument("pointer projectors are not orthogonal");
      j += values_[a] * p;
    }
    return j;
  }

private:
  std::vector<PointerDomain> domains_;
  std::vector<double> values_, weights_;
};

// ---------------------------------------------------------------------------------------
// Stern-Gerlach estimate (CGS units)

struct SternGerlachParams {
  double mu = 0.9e-20;  // erg/gauss
  double b1 = 1e5;      // gauss/cm
  double z1 = 0.0, z2 = 0.1;
  double x1 = 0.0, x2 = 3.0, x3 = 23.0;
  double vx = 5e4;  // cm/s
  double hbar = 1.1e-27;

  void validate() const
  {
    if (!(z2 > z1) || !(x3 > x2) || !(x2 > x1)) throw std::invalid_argument("need z2 > z1 and x3 > x2 > x1");
    if (!(mu > 0.0) || !(b1 != 0.0) || !(vx > 0.0) || !(hbar > 0.0)) throw std::invalid_argument("need mu, vx, hbar > 0 and b1 != 0");
  }
};

struct SternGerlachResult {
  double tau = 0.0;    // (x3 - x1) / vx
  double eta = 0.0;    // mu |b1| (z2 - z1) tau
  double ratio = 0.0;  // eta / hbar
  double magnitude_bound = 0.0;  // 2 hbar / eta
};

inline SternGerlachResult stern_gerlach(const SternGerlachParams& sg)
{
  sg.validate();
  SternGerlachResult r;
  r.tau = (sg.x3 - sg.x1) / sg.vx;
  r.eta = sg.mu * std::abs(sg.b1) * (sg.z2 - sg.z1) * r.tau;
  r.ratio = r.eta / sg.hbar;
  r.magnitude_bound = std::min(1.0, 2.0 / r.ratio);
  return r;
}

/// Spin-1/2 measurement of S_3 = +-hbar/2 with the uniform profile over the gap.
inline MeasurementModel stern_gerlach_model(const SternGerlachParams& sg, std::vector<cplx> amps = {cplx(1.0 / std::numbers::sqrt2), cplx(1.0 / std::numbers::sqrt2)})
{
  const auto r = stern_gerlach(sg);
  // |lambda_1 - lambda_2| = hbar, so <K>_0 = mu |b1| (z2 - z1) / hbar reproduces |eta|.
  return MeasurementModel::create({0.5 * sg.hbar, -0.5 * sg.hbar}, std::move(amps), r.eta / (sg.hbar * r.tau), r.tau, sg.hbar);
}

/// Pointer domains D_1 = {x > x2, p_z > 0}, D_2 = {x > x2, p_z < 0} on (x, y, z, p_x, p_y, p_z).
inline PointerModel stern_gerlach_pointer(const SternGerlachParams& sg)
{
  const double x2 = sg.x2;
  return PointerModel::create({{"up", [x2](const std::vector<double>& q) { return q.at(0) > x2 && q.at(5) > 0.0; }},
                               {"down", [x2](const std::vector<double>& q) { return q.at(0) > x2 && q.at(5) < 0.0; }}},
                              {1.0, -1.0});
}

// ---------------------------------------------------------------------------------------
// Matrix apparatus

/// Finite apparatus: coupling K, ready density, and one projector per pointer position.
struct MatrixApparatus {
  Mat k, ready;
  std::vector<Mat> projectors;
};

/// Momentum-shift pointer on C^m: K generates a cyclic shift of momentum index by
/// shifts[j] when the system sits in eigenstate j; projectors select momentum windows.
inline MatrixApparatus momentum_shift_apparatus(int m, const std::vector<double>& lambdas, const std::vector<int>& shifts, double tau, double hbar,
                                                int half_window = 0)
{
  if (lambdas.size() != shifts.size()) throw std::invalid_argument("need one shift per eigenvalue");
  // K = kappa Z with Z = diag(a); exp(-i lambda_j kappa Z tau / hbar) shifts momentum by -lambda_j kappa tau m / (2 pi hbar).
  const double unit = -2.0 * std::numbers::pi * hbar / (static_cast<double>(m) * tau);
  const double kappa = unit * shifts[0] / lambdas[0];
  for (std::size_t j = 0; j < lambdas.size(); ++j)
    if (std::abs(kappa * lambdas[j] - unit * shifts[j]) > 1e-9 * std::abs(unit * shifts[j]) + 1e-300)
      throw std::invalid_argument("shifts must be proportional to the eigenvalues");
  MatrixApparatus a;
  a.k = Mat::Zero(m, m);
  for (int z = 0; z < m; ++z) a.k(z, z) = kappa * z;
  // Momentum states |q> = m^-1/2 sum_z e^{2 pi i q z / m} |z>.
  Mat f(m, m);
  for (int z = 0; z < m; ++z)
    for (int q = 0; q < m; ++q) f(z, q) = std::exp(cplx(0.0, 2.0 * std::numbers::pi * q * z / m)) / std::sqrt(static_cast<double>(m));
  a.ready = f.col(0) * f.col(0).adjoint();
  for (int s : shifts) {
    Mat p = Mat::Zero(m, m);
    for (int w = -half_window; w <= half_window; ++w) {
      const int q = ((s + w) % m + m) % m;
      p += f.col(q) * f.col(q).adjoint();
    }
    a.projectors.push_back(p);
  }
  return a;
}

struct ApparatusReport {
  std::vector<double> probabilities;  // Phi_f(I x P_j)
  double max_probability_error = 0.0; // against reduced_final_state
  double interference = 0.0;          // max_{j != k} |Phi_f(|psi_j><psi_k| x J)|
  Mat sector_state;                   // sum_j Tr_A[(I x P_j) Phi_f (I x P_j)]
  double projection_error = 0.0;      // |sector_state - diag(p_j)|
};

/// Evolves |psi><psi| x ready under H = F x K with the product bracket and reads pointer sectors.
inline ApparatusReport simulate_matrix_apparatus(const MeasurementModel& mm, const MatrixApparatus& app, const PointerModel& pointer)
{
  const int n = mm.outcomes();
  const auto m = static_cast<int>(app.k.rows());
  const auto as = build_matrix_algebra(n), aa = build_matrix_algebra(m);
  const auto r = product_symplectic(quantum_form(as, mm.hbar()), quantum_form(aa, mm.hbar()));
  const auto& t = r.product->algebra();
  Mat fm = Mat::Zero(n, n);
  for (int j = 0; j < n; ++j) fm(j, j) = mm.lambdas()[static_cast<std::size_t>(j)];
  const CoupledSystem sys(r, zero_element(as), zero_element(aa), {{from_matrix(as, fm), from_matrix(aa, app.k)}});
  Vec psi(n);
  for (int j = 0; j < n; ++j) psi(j) = mm.amplitudes()[static_cast<std::size_t>(j)];
  const Mat rho_in = Eigen::kroneckerProduct(Mat(psi * psi.adjoint()), app.ready).eval();
  const auto phi = make_state(t, DensityMatrix{rho_in});
  const auto phif = coupled_evolution(sys, phi, mm.tau());
  const Mat rho = *phif.density();

  const auto red = reduced_final_state(mm);
  ApparatusReport rep;
  const Mat jq = pointer.quantum(app.projectors);
  rep.sector_state = Mat::Zero(n, n);
  for (std::size_t a = 0; a < app.projectors.size(); ++a) {
    const Mat big = Eigen::kroneckerProduct(Mat::Identity(n, n), app.projectors[a]).eval();
    const double p = (rho * big).trace().real();
    rep.probabilities.push_back(p);
    if (a < red.probabilities.size()) rep.max_probability_error = std::max(rep.max_probability_error, std::abs(p - red.probabilities[a]));
    const Mat sec = big * rho * big;
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < n; ++k) rep.sector_state(i, k) += sec.block(i * m, k * m, m, m).trace();
  }
  rep.projection_error = max_abs(Mat(rep.sector_state - red.projected));
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) {
      if (j == k) continue;
      Mat ejk = Mat::Zero(n, n);
      ejk(j, k) = 1.0;
      rep.interference = std::max(rep.interference, std::abs((rho * Eigen::kroneckerProduct(ejk, jq).eval()).trace()));
    }
  return rep;
}

// ---------------------------------------------------------------------------------------
// System operator times phase-space symbol

/// sum_i M_i x f_i in M_n x A_W.
using OperatorSymbol = std::vector<std::pair<Mat, PhasePolynomial>>;

inline Mat evaluate(const OperatorSymbol& s, double x, double p)
{
  if (s.empty()) throw std::invalid_argument("empty operator symbol");
  Mat r = Mat::Zero(s.front().first.rows(), s.front().first.cols());
  for (const auto& [m, f] : s) r += f.evaluate(x, p) * m;
  return r;
}

/// {F x K, A x J} = (-i hbar)^-1 ( [F,A] x (K*J + J*K)/2 + (FA + AF)/2 x (K*J - J*K) ).
inline OperatorSymbol split_bracket(const Mat& f, const PhasePolynomial& k, const Mat& a, const PhasePolynomial& j, double hbar)
{
  const cplx pre = 1.0 / cplx(0.0, -hbar);
  const auto kj = star(k, j, hbar), jk = star(j, k, hbar);
  return {{Mat(pre * (f * a - a * f)), 0.5 * (kj + jk)}, {Mat(pre * 0.5 * (f * a + a * f)), kj - jk}};
}

/// (-i hbar)^-1 [X, Y] with (M x f)(N x g) = MN x f*g.
inline OperatorSymbol tensor_commutator_bracket(const OperatorSymbol& x, const OperatorSymbol& y, double hbar)
{
  const cplx pre = 1.0 / cplx(0.0, -hbar);
  OperatorSymbol out;
  for (const auto& [m, f] : x)
    for (const auto& [n, g] : y) {
      out.push_back({Mat(pre * (m * n)), star(f, g, hbar)});
      out.push_back({Mat(-pre * (n * m)), star(g, f, hbar)});
    }
  return out;
}

/// Leading classical form (-i hbar)^-1 [F,A] x K J.
inline OperatorSymbol classical_approximation(const Mat& f, const PhasePolynomial& k, const Mat& a, const PhasePolynomial& j, double hbar)
{
  return {{Mat((f * a - a * f) / cplx(0.0, -hbar)), k * j}};
}

}  // namespace ncsym

#endif  // NCSYM_MEASUREMENT_HPP
