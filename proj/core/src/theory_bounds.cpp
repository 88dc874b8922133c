#include "sma/theory_bounds.hpp"

#include "sma/errors.hpp"
#include "sma/parallel.hpp"
#include "sma/random.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace sma {
namespace {

void require_nonnegative(double v, const char* name)
{
  if (!(v >= 0.0) || !std::isfinite(v)) {
    throw Error(ErrorCode::InvalidArgument, std::string(name) + " must be finite and >= 0");
  }
}

} // namespace

QFParams qf_params(const Matrix& b, double x)
{
  if (b.rows() != b.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "quadratic form matrix must be square");
  }
  QFParams out;
  out.p_trace = b.trace();
  out.v2 = (b * b).trace();
  out.lambda = std::max(0.0, linalg::max_eigenvalue(b));
  out.x = x;
  return out;
}

double qf_upper(const QFParams& params)
{
  require_nonnegative(params.p_trace, "p_trace");
  require_nonnegative(params.v2, "v2");
  require_nonnegative(params.lambda, "lambda");
  require_nonnegative(params.x, "x");
  return params.p_trace + 2.0 * std::sqrt(params.v2 * params.x) + 2.0 * params.lambda * params.x;
}

double norm_upper(double p_trace, double lambda, double x)
{
  require_nonnegative(p_trace, "p_trace");
  require_nonnegative(lambda, "lambda");
  require_nonnegative(x, "x");
  return std::sqrt(p_trace) + std::sqrt(2.0 * lambda * x);
}

double qf_lower(double p_trace, double v2, double x)
{
  require_nonnegative(p_trace, "p_trace");
  require_nonnegative(v2, "v2");
  require_nonnegative(x, "x");
  return std::max(0.0, p_trace - 2.0 * std::sqrt(v2 * x));
}

double pinsker_tv_bound(double delta2, double beta_quad)
{
  require_nonnegative(delta2, "delta2");
  require_nonnegative(beta_quad, "beta_quad");
  return 0.5 * std::sqrt(delta2 + beta_quad);
}

double pinsker_tv_bound(std::size_t p, double eps, double beta_norm2)
{
  require_nonnegative(eps, "eps");
  require_nonnegative(beta_norm2, "beta_norm2");
  return 0.5 * std::sqrt(static_cast<double>(p) * eps * eps + (1.0 + eps) * beta_norm2);
}

double payment_cap(double p, double lambda, double x, double alpha_plus, std::size_t n_models)
{
  require_nonnegative(p, "p");
  require_nonnegative(lambda, "lambda");
  const double level = x + std::log(static_cast<double>(std::max<std::size_t>(n_models, 1)));
  return (1.0 + alpha_plus) * std::sqrt(p) + std::sqrt(2.0 * lambda * std::max(0.0, level));
}

double power_payment_cap(double p, double p0, double lambda, double a, double alpha_plus,
                         std::size_t n_models)
{
  require_nonnegative(p, "p");
  require_nonnegative(lambda, "lambda");
  if (!(p0 > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "p0 must be > 0");
  }
  const double level = 2.0 * (1.0 + a) * std::log(p / p0) +
                       std::log(static_cast<double>(std::max<std::size_t>(n_models, 1)));
  return alpha_plus * std::sqrt(p) + std::sqrt(2.0 * lambda * std::max(0.0, level));
}

QFCheck qf_mc_check(const Vector& eigenvalues, double x, Index n_mc, std::uint64_t seed,
                    unsigned threads)
{
  if (eigenvalues.size() == 0 || eigenvalues.minCoeff() < 0.0) {
    throw Error(ErrorCode::InvalidArgument, "B must have a nonempty nonnegative spectrum");
  }
  if (n_mc < 1) {
    throw Error(ErrorCode::InvalidArgument, "n_mc must be >= 1");
  }
  QFCheck out;
  out.x = x;
  out.n_mc = n_mc;
  const QFParams params{eigenvalues.sum(), eigenvalues.squaredNorm(), eigenvalues.maxCoeff(), x};
  out.upper = qf_upper(params);
  out.lower = qf_lower(params.p_trace, params.v2, x);
  out.allowed = std::exp(-x) + 3.0 * std::sqrt(std::exp(-x) / static_cast<double>(n_mc));

  const auto dim = static_cast<std::size_t>(eigenvalues.size());
  std::vector<char> above(static_cast<std::size_t>(n_mc), 0);
  std::vector<char> below(static_cast<std::size_t>(n_mc), 0);
  parallel_for(static_cast<std::size_t>(n_mc), threads, [&](std::size_t begin, std::size_t end) {
    Vector g(eigenvalues.size());
    for (std::size_t r = begin; r < end; ++r) {
      fill_standard_normal(seed, r, std::span<double>(g.data(), dim));
      const double q = eigenvalues.dot(g.cwiseAbs2());
      above[r] = q > out.upper ? 1 : 0;
      below[r] = q < out.lower ? 1 : 0;
    }
  });
  out.upper_exceedances = static_cast<Index>(std::count(above.begin(), above.end(), 1));
  out.lower_exceedances = static_cast<Index>(std::count(below.begin(), below.end(), 1));
  return out;
}

} // namespace sma
