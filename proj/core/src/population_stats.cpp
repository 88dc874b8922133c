#include "sma/population_stats.hpp"

namespace sma {
namespace {

void check_length(const ModelFamily& family, const Vector& v, const char* what)
{
  if (v.size() != family.samples()) {
    throw Error(ErrorCode::DimensionMismatch,
                std::string(what) + " has length " + std::to_string(v.size()) + ", expected n = " +
                  std::to_string(family.samples()));
  }
}

// H = Phi diag(variances) Phi^T, the noise covariance seen by the reduced coefficients.
Matrix projected_covariance(const ModelFamily& family, const Vector& variances)
{
  check_length(family, variances, "variance vector");
  const Matrix& phi = family.noise_basis();
  return phi * variances.asDiagonal() * phi.transpose();
}

PairMoments moments_of(const Matrix& d, const Matrix& h, bool with_lambda, bool keep)
{
  Matrix v = d * h * d.transpose();
  PairMoments out;
  out.p_pair = v.trace();
  if (with_lambda) {
    out.lambda_pair = std::max(0.0, linalg::max_eigenvalue(v));
  }
  if (keep) {
    out.v_matrix = std::move(v);
  }
  return out;
}

} // namespace

PairMoments pair_variance(const ModelFamily& family, const NoiseSpec& noise, int m, int base,
                          bool keep_matrix)
{
  (void)family.pairs().at(m, base);
  const Matrix h = projected_covariance(family, noise.variances());
  const Matrix d = family.coefficients(m) - family.coefficients(base);
  return moments_of(d, h, true, keep_matrix);
}

std::vector<PairMoments> all_pair_moments(const ModelFamily& family, const Vector& variances,
                                          bool with_lambda)
{
  const Matrix h = projected_covariance(family, variances);
  const auto& pairs = family.pairs();
  std::vector<PairMoments> out;
  out.reserve(pairs.size());
  for (const auto& pr : pairs.pairs()) {
    const Matrix d = family.coefficients(pr.m) - family.coefficients(pr.base);
    out.push_back(moments_of(d, h, with_lambda, false));
  }
  return out;
}

std::vector<PairMoments> single_model_moments(const ModelFamily& family, const Vector& variances)
{
  const Matrix h = projected_covariance(family, variances);
  std::vector<PairMoments> out;
  out.reserve(family.size());
  for (std::size_t k = 0; k < family.size(); ++k) {
    out.push_back(moments_of(family.coefficients_at(k), h, true, false));
  }
  return out;
}

Vector pair_bias_vector(const ModelFamily& family, const Vector& f_true, int m, int base)
{
  (void)family.pairs().at(m, base);
  check_length(family, f_true, "f_true");
  return family.difference(m, base) * f_true;
}

double pair_bias(const ModelFamily& family, const Vector& f_true, int m, int base)
{
  (void)family.pairs().at(m, base);
  check_length(family, f_true, "f_true");
  const Vector z = family.noise_basis() * f_true;
  const Vector d = family.coefficients(m) * z - family.coefficients(base) * z;
  return d.norm();
}

Vector best_linear_fit(const DesignMatrix& design, const Vector& f_true)
{
  if (f_true.size() != design.samples()) {
    throw Error(ErrorCode::DimensionMismatch, "f_true length differs from n");
  }
  const Matrix& psi = design.entries();
  const Matrix gram = psi * psi.transpose();
  if (gram.cwiseAbs().maxCoeff() == 0.0) {
    throw Error(ErrorCode::SingularGram, "full design Gram matrix is identically zero");
  }
  return linalg::pinv_psd(gram).inverse * (psi * f_true);
}

std::vector<RiskRecord> risk_profile(const ModelFamily& family, const Vector& f_true,
                                     const NoiseSpec& noise)
{
  check_length(family, f_true, "f_true");
  const auto single = single_model_moments(family, noise.variances());
  const Vector target = family.weighting() * best_linear_fit(family.design(), f_true);
  std::vector<RiskRecord> out;
  out.reserve(family.size());
  for (std::size_t k = 0; k < family.size(); ++k) {
    const int m = family.models()[k];
    RiskRecord r;
    r.m = m;
    r.bias2 = (family.op(m) * f_true - target).squaredNorm();
    r.variance = single[k].p_pair;
    r.risk = r.bias2 + r.variance;
    out.push_back(r);
  }
  return out;
}

double functional_variance(const ModelFamily& family, const NoiseSpec& noise, int m)
{
  if (family.output_dim() != 1) {
    throw Error(ErrorCode::NotFunctional,
                "weighting has q = " + std::to_string(family.output_dim()) + ", expected 1");
  }
  const Vector& var = noise.variances();
  check_length(family, var, "variance vector");
  const auto row = family.op(m).row(0);
  return (row.array().square() * var.transpose().array()).sum();
}

} // namespace sma
