#pragma once

#include <cmath>

#include <Eigen/Dense>

namespace dposf {

template <typename Scalar>
struct LineFit {
  Scalar intercept{};
  Scalar slope{};
  Scalar r_squared{};
};

/// Ordinary least squares y = intercept + slope * x. Requires x.size() == y.size() >= 2 and
/// non-constant x.
template <typename DerivedX, typename DerivedY>
LineFit<typename DerivedX::Scalar> fit_line(const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedY>& y) {
  using Scalar = typename DerivedX::Scalar;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  const Eigen::Index n = x.size();
  Matrix design(n, 2);
  design.col(0).setOnes();
  design.col(1) = x;
  const Vector coef = design.colPivHouseholderQr().solve(y.derived().template cast<Scalar>());

  const Vector residual = y - design * coef;
  const Scalar ss_res = residual.squaredNorm();
  const Scalar ss_tot = (y.array() - y.mean()).matrix().squaredNorm();
  const Scalar r2 = ss_tot > Scalar(0) ? Scalar(1) - ss_res / ss_tot : Scalar(0);
  return {coef(0), coef(1), r2};
}

/// -Σ p log2 p over strictly positive entries of a probability vector.
template <typename Derived>
typename Derived::Scalar entropy_bits(const Eigen::ArrayBase<Derived>& p) {
  using Scalar = typename Derived::Scalar;
  Scalar h(0);
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p(i) > Scalar(0)) h -= p(i) * std::log2(p(i));
  }
  return h;
}

}  // namespace dposf
