#pragma once

#include "sma/linalg.hpp"

#include <cstddef>
#include <cstdint>

namespace sma {

//! Parameters of a Gaussian quadratic form gamma^T B gamma with B >= 0:
//! p_trace = tr B, v2 = tr B^2, lambda = ||B||_op.
struct QFParams {
  double p_trace = 0.0;
  double v2 = 0.0;
  double lambda = 0.0;
  double x = 0.0;
};

//! Derives p_trace, v2 and lambda from a symmetric PSD matrix.
[[nodiscard]] QFParams qf_params(const Matrix& b, double x);

//! p + 2 sqrt(v2 x) + 2 lambda x; exceeded with probability <= e^{-x}.
[[nodiscard]] double qf_upper(const QFParams& params);

//! sqrt(p) + sqrt(2 lambda x); bound for ||B^{1/2} gamma||.
[[nodiscard]] double norm_upper(double p_trace, double lambda, double x);

//! max(0, p - 2 sqrt(v2 x)); undershot with probability <= e^{-x}.
[[nodiscard]] double qf_lower(double p_trace, double v2, double x);

//! 1/2 sqrt(delta2 + beta_quad) with delta2 = tr (B - I)^2 and beta_quad = beta^T B beta.
[[nodiscard]] double pinsker_tv_bound(double delta2, double beta_quad);

//! Operator-norm form 1/2 sqrt(p eps^2 + (1 + eps) ||beta||^2).
[[nodiscard]] double pinsker_tv_bound(std::size_t p, double eps, double beta_norm2);

//! (1 + alpha_plus) sqrt(p) + sqrt(2 lambda (x + log n_models)).
[[nodiscard]] double payment_cap(double p, double lambda, double x, double alpha_plus,
                                 std::size_t n_models);

//! alpha_plus sqrt(p) + sqrt(2 lambda {2 (1 + a) log(p/p0) + log n_models}).
[[nodiscard]] double power_payment_cap(double p, double p0, double lambda, double a,
                                       double alpha_plus, std::size_t n_models);

//! Outcome of a Monte-Carlo falsification run for qf_upper and qf_lower.
struct QFCheck {
  double x = 0.0;
  double upper = 0.0;
  double lower = 0.0;
  Index n_mc = 0;
  Index upper_exceedances = 0;  // gamma^T B gamma > upper
  Index lower_exceedances = 0;  // gamma^T B gamma < lower
  double allowed = 0.0;         // e^{-x} + 3 sqrt(e^{-x} / n_mc)
  [[nodiscard]] double upper_frequency() const { return double(upper_exceedances) / double(n_mc); }
  [[nodiscard]] double lower_frequency() const { return double(lower_exceedances) / double(n_mc); }
  [[nodiscard]] bool passed() const
  {
    return upper_frequency() <= allowed && lower_frequency() <= allowed;
  }
};

//! Samples gamma^T B gamma for B = diag(eigenvalues); by rotation invariance
//! this covers every PSD B with that spectrum.
[[nodiscard]] QFCheck qf_mc_check(const Vector& eigenvalues, double x, Index n_mc,
                                  std::uint64_t seed, unsigned threads = 0);

} // namespace sma
