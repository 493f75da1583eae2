// quadrature.hpp — Adaptive Gauss-Kronrod 7-15 integration for real, complex
// and dense-matrix valued integrands.

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <stdexcept>

namespace poissonq::quad {

inline double value_norm(double x) { return std::abs(x); }
inline double value_norm(const std::complex<double>& x) { return std::abs(x); }
inline double value_norm(const Eigen::MatrixXcd& m) {
  return m.cwiseAbs().maxCoeff();
}

namespace detail {

// 15-point Kronrod extension of 7-point Gauss on [-1, 1].
inline constexpr double kNodes[8] = {
    0.000000000000000, 0.207784955007898, 0.405845151377397,
    0.586087235467691, 0.741531185599394, 0.864864423359769,
    0.949107912342759, 0.991455371120813};
inline constexpr double kWeightsK[8] = {
    0.209482141084728, 0.204432940075298, 0.190350578064785,
    0.169004726639267, 0.140653259715525, 0.104790010322250,
    0.063092092629979, 0.022935322010529};
// Gauss-7 weights for nodes 0, 2, 4, 6 above.
inline constexpr double kWeightsG[4] = {0.417959183673469, 0.381830050505119,
                                        0.279705391489277,
                                        0.129484966168870};

template <class F, class Value>
void gauss_kronrod(F& f, double a, double b, Value& kronrod, double& err) {
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  Value fc = f(mid);
  Value k = kWeightsK[0] * fc;
  Value g = kWeightsG[0] * fc;
  for (int i = 1; i < 8; ++i) {
    const double dx = half * kNodes[i];
    Value sum = f(mid - dx);
    sum += f(mid + dx);
    k += kWeightsK[i] * sum;
    if (i % 2 == 0) g += kWeightsG[i / 2] * sum;
  }
  kronrod = half * k;
  err = value_norm(half * (k - g));
}

template <class F, class Value>
Value adaptive(F& f, double a, double b, double tol, int depth) {
  Value k;
  double err;
  gauss_kronrod(f, a, b, k, err);
  if (err <= tol) return k;
  if (b - a < 1e-14 * (std::abs(a) + std::abs(b) + 1.0)) return k;
  if (depth <= 0) {
    throw std::runtime_error(
        "adaptive quadrature: tolerance not reached (recursion exhausted)");
  }
  const double mid = 0.5 * (a + b);
  Value left = adaptive<F, Value>(f, a, mid, 0.5 * tol, depth - 1);
  Value right = adaptive<F, Value>(f, mid, b, 0.5 * tol, depth - 1);
  return left + right;
}

}  // namespace detail

// Integrate f over [a, b] to absolute tolerance abs_tol.
template <class F>
auto integrate(F&& f, double a, double b, double abs_tol, int max_depth = 48)
    -> decltype(f(a)) {
  using Value = decltype(f(a));
  if (!(b > a)) throw std::invalid_argument("quad::integrate: need b > a");
  return detail::adaptive<std::remove_reference_t<F>, Value>(f, a, b, abs_tol,
                                                             max_depth);
}

}  // namespace poissonq::quad
