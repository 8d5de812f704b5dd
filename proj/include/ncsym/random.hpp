#ifndef NCSYM_RANDOM_HPP
#define NCSYM_RANDOM_HPP

#include "ncsym/algebra.hpp"

#include <cstdint>
#include <random>

namespace ncsym {

/// Seeded source of reproducible random samples. Distributions are implemented here
/// rather than via std::*_distribution so results do not depend on the standard library.
class Rng {
public:
  explicit Rng(std::uint64_t seed = 0) : eng_(seed) {}

  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal()
  {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
  }

  cplx cnormal() { return {normal(), normal()}; }

  int index(int n) { return static_cast<int>(eng_() % static_cast<std::uint64_t>(n)); }

  Vec cvec(Eigen::Index n)
  {
    Vec v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = cnormal();
    return v;
  }

  RVec rvec(Eigen::Index n)
  {
    RVec v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = normal();
    return v;
  }

  Mat cmat(Eigen::Index r, Eigen::Index c)
  {
    Mat m(r, c);
    for (Eigen::Index j = 0; j < c; ++j)
      for (Eigen::Index i = 0; i < r; ++i) m(i, j) = cnormal();
    return m;
  }

  Mat hermitian(Eigen::Index n)
  {
    const Mat a = cmat(n, n);
    return 0.5 * (a + a.adjoint());
  }

  Mat unitary(Eigen::Index n)
  {
    Eigen::HouseholderQR<Mat> qr(cmat(n, n));
    Mat q = qr.householderQ();
    return q;
  }

  Element element(const AlgebraPtr& alg) { return {alg, cvec(alg->dim())}; }

  Element homogeneous(const AlgebraPtr& alg, Parity p)
  {
    Vec v = cvec(alg->dim());
    for (int i = 0; i < alg->dim(); ++i)
      if (alg->parity(i) != p) v(i) = 0.0;
    return {alg, v};
  }

  /// Homogeneous element with a random parity (even when the algebra has no odd part).
  Element homogeneous(const AlgebraPtr& alg)
  {
    const Parity p = alg->is_graded() && (eng_() & 1u) ? Parity::Odd : Parity::Even;
    return homogeneous(alg, p);
  }

  /// Even element with A* = A.
  Element hermitian_element(const AlgebraPtr& alg)
  {
    const Vec v = alg->even_part(cvec(alg->dim()));
    return {alg, 0.5 * (v + alg->star(v))};
  }

  std::mt19937_64& engine() { return eng_; }

private:
  std::mt19937_64 eng_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace ncsym

#endif  // NCSYM_RANDOM_HPP
