#ifndef NCSYM_CORE_HPP
#define NCSYM_CORE_HPP

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ncsym {

using cplx = std::complex<double>;
using Vec = Eigen::VectorXcd;
using Mat = Eigen::MatrixXcd;
using RVec = Eigen::VectorXd;
using RMat = Eigen::MatrixXd;

inline constexpr cplx I_unit{0.0, 1.0};

/// Default comparison tolerance for structural checks.
inline constexpr double kDefaultTol = 1e-9;

/// Z2 grade of a homogeneous object.
enum class Parity : std::uint8_t { Even = 0, Odd = 1 };

constexpr Parity operator+(Parity a, Parity b) noexcept
{
  return static_cast<Parity>((static_cast<int>(a) + static_cast<int>(b)) & 1);
}

constexpr int to_int(Parity p) noexcept { return static_cast<int>(p); }

constexpr Parity parity_of(int bits) noexcept { return static_cast<Parity>(bits & 1); }

/// Koszul sign (-1)^{ab}.
constexpr double koszul(Parity a, Parity b) noexcept
{
  return (to_int(a) & to_int(b)) ? -1.0 : 1.0;
}

constexpr double koszul(int a, int b) noexcept { return ((a & b) & 1) ? -1.0 : 1.0; }

// Error types. Everything derives from std::runtime_error so callers may catch broadly.

struct AlgebraMismatch : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct NondegeneracyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct VerificationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InternalInconsistency : std::logic_error {
  using std::logic_error::logic_error;
};

struct InvalidState : std::runtime_error {
  InvalidState(const std::string& what, std::optional<Vec> witness = std::nullopt)
      : std::runtime_error(what), witness(std::move(witness))
  {
  }
  /// Coefficients of an element A with phi(A*A) < 0, or an eigenvector of a non-PSD density.
  std::optional<Vec> witness;
};

inline double max_abs(const Vec& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }
inline double max_abs(const Mat& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

/// Orthonormal basis (columns) of the null space of m, with rank decided relative to the
/// largest singular value.
inline Mat null_space(const Mat& m, double rel_tol = 1e-10)
{
  if (m.rows() == 0) return Mat::Identity(m.cols(), m.cols());
  Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  const double smax = s.size() ? s(0) : 0.0;
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > rel_tol * std::max(smax, 1e-300) && smax > 1e-14) ++rank;
  return svd.matrixV().rightCols(m.cols() - rank);
}

inline Eigen::Index numerical_rank(const Mat& m, double rel_tol = 1e-10)
{
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<Mat> svd(m);
  const auto& s = svd.singularValues();
  const double smax = s(0);
  if (smax <= 1e-14) return 0;
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > rel_tol * smax) ++rank;
  return rank;
}

/// Column-major vectorisation.
inline Vec vectorize(const Mat& m)
{
  return Eigen::Map<const Vec>(m.data(), m.size());
}

inline Mat unvectorize(const Vec& v, Eigen::Index rows, Eigen::Index cols)
{
  return Eigen::Map<const Mat>(v.data(), rows, cols);
}

}  // namespace ncsym

#endif  // NCSYM_CORE_HPP
