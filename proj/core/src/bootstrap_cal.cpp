#include "sma/bootstrap_cal.hpp"

#include <cmath>

namespace sma {
namespace {

inline constexpr double kResidualFlush = 1e-12;

int resolve_dagger(const ModelFamily& family, int m_dagger)
{
  const int md = m_dagger == 0 ? family.largest() : m_dagger;
  if (md < 1 || md > family.design().features()) {
    throw Error(ErrorCode::InvalidArgument,
                "m_dagger = " + std::to_string(md) + " outside [1, p]");
  }
  return md;
}

Matrix gram_pinv_checked(const DesignMatrix& design, int m)
{
  const auto psi = design.leading(m);
  const Matrix gram = psi * psi.transpose();
  if (gram.cwiseAbs().maxCoeff() == 0.0) {
    throw Error(ErrorCode::SingularGram,
                "Gram matrix of model " + std::to_string(m) + " is identically zero");
  }
  return linalg::pinv_psd(gram).inverse;
}

// Symmetric PSD power with spectral truncation at the pseudo-inverse cutoff.
Matrix psd_power(const Matrix& a, double power)
{
  Eigen::SelfAdjointEigenSolver<Matrix> eig(a);
  const Vector& values = eig.eigenvalues();
  const double cutoff = linalg::kPinvRelativeCutoff * values.cwiseAbs().maxCoeff();
  Vector d = Vector::Zero(values.size());
  for (Index i = 0; i < values.size(); ++i) {
    if (values(i) > cutoff) {
      d(i) = std::pow(values(i), power);
    }
  }
  return eig.eigenvectors() * d.asDiagonal() * eig.eigenvectors().transpose();
}

} // namespace

Matrix presmooth_projector(const DesignMatrix& design, int m_dagger)
{
  if (m_dagger < 1 || m_dagger > design.features()) {
    throw Error(ErrorCode::InvalidArgument, "m_dagger outside [1, p]");
  }
  const auto psi = design.leading(m_dagger);
  return psi.transpose() * gram_pinv_checked(design, m_dagger) * psi;
}

PresmoothResult presmooth(const ModelFamily& family, const Vector& y, int m_dagger)
{
  if (y.size() != family.samples()) {
    throw Error(ErrorCode::DimensionMismatch, "response length differs from n");
  }
  PresmoothResult out;
  out.m_dagger = resolve_dagger(family, m_dagger);
  const auto psi = family.design().leading(out.m_dagger);
  const Matrix ginv = gram_pinv_checked(family.design(), out.m_dagger);
  out.fitted = psi.transpose() * (ginv * (psi * y));
  out.residuals = y - out.fitted;
  if (out.residuals.norm() <= kResidualFlush * y.norm()) {
    out.residuals.setZero();
  }
  return out;
}

JointDrawMatrix bootstrap_joint_draws(const ModelFamily& family, const Vector& residuals,
                                      Index n_sim, std::uint64_t seed, unsigned threads)
{
  if (residuals.size() != family.samples()) {
    throw Error(ErrorCode::DimensionMismatch, "residual length differs from n");
  }
  if (residuals.cwiseAbs().maxCoeff() == 0.0) {
    throw Error(ErrorCode::AllZeroResiduals, "all presmoothing residuals are zero");
  }
  auto draws = sample_scaled_draws(family, residuals, n_sim, seed, threads);
  if (draws.values().size() > 0 && draws.values().maxCoeff() == 0.0) {
    throw Error(ErrorCode::AllZeroResiduals,
                "residuals lie outside the range of every comparison; all draws are zero");
  }
  return draws;
}

std::vector<double> bootstrap_effective_dims(const ModelFamily& family, const Vector& residuals)
{
  std::vector<double> out;
  for (const auto& mom : all_pair_moments(family, residuals.array().square().matrix(), false)) {
    out.push_back(mom.p_pair);
  }
  return out;
}

BootstrapCalibrationTable bootstrap_calibrate(const ModelFamily& family, const Vector& residuals,
                                              const CalibrationSettings& settings)
{
  const auto draws =
    bootstrap_joint_draws(family, residuals, settings.n_sim, settings.seed, settings.threads);
  const Vector var = residuals.array().square().matrix();
  auto moments = all_pair_moments(family, var);
  std::vector<double> p_single;
  if (settings.mode == CalibrationMode::PowerLoss) {
    for (const auto& mom : single_model_moments(family, var)) {
      p_single.push_back(mom.p_pair);
    }
  }
  BootstrapCalibrationTable out;
  out.p_boot.reserve(moments.size());
  for (const auto& mom : moments) {
    out.p_boot.push_back(mom.p_pair);
  }
  out.table = calibrate_from_draws(draws, moments, p_single, settings);
  out.source_seed = settings.seed;
  out.n_sim = settings.n_sim;
  return out;
}

BootstrapCalibrationTable bootstrap_calibrate(const ModelFamily& family, const Vector& residuals,
                                              double x_level, double alpha_plus, Index n_sim,
                                              std::uint64_t seed, unsigned threads)
{
  CalibrationSettings settings;
  settings.x_level = x_level;
  settings.alpha_plus = alpha_plus;
  settings.n_sim = n_sim;
  settings.seed = seed;
  settings.threads = threads;
  return bootstrap_calibrate(family, residuals, settings);
}

ValidityDiagnostics validity_diagnostics(const ModelFamily& family, const KnownTruth& truth,
                                         int m_dagger, double x_level)
{
  if (!truth.noise.is_known() || truth.f_true.size() == 0) {
    throw Error(ErrorCode::RequiresKnownTruth, "diagnostics need the noise variances and f*");
  }
  const Index n = family.samples();
  const Vector& var = truth.noise.variances();
  if (var.size() != n || truth.f_true.size() != n) {
    throw Error(ErrorCode::DimensionMismatch, "known truth does not match n");
  }
  if (!(x_level >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "x_level must be >= 0");
  }

  ValidityDiagnostics d;
  d.n = n;
  d.p = family.largest();
  d.m_dagger = resolve_dagger(family, m_dagger);
  d.x_level = x_level;

  const Vector sd = var.cwiseSqrt();
  const Vector inv_sd = sd.cwiseInverse();
  const Matrix& psi = family.noise_basis();

  // Design regularity: max_i ||S^{-1/2} Psi_i|| sigma_i with S = Psi Sigma Psi^T.
  const Matrix s = psi * var.asDiagonal() * psi.transpose();
  const Matrix scaled = psd_power(s, -0.5) * psi;
  for (Index i = 0; i < n; ++i) {
    d.delta_psi = std::max(d.delta_psi, scaled.col(i).norm() * sd(i));
  }

  const Matrix pi = presmooth_projector(family.design(), d.m_dagger);
  const Vector bias = inv_sd.asDiagonal() * (truth.f_true - pi * truth.f_true);
  d.bias_sup = bias.cwiseAbs().maxCoeff();
  d.bias_l2 = bias.norm();

  // Var of Sigma^{-1/2}(I - Pi) eps.
  const Matrix resid = Matrix::Identity(n, n) - pi;
  const Matrix a = inv_sd.asDiagonal() * resid * sd.asDiagonal();
  const Matrix cov = a * a.transpose();
  const Matrix dev = cov - Matrix::Identity(n, n);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(dev, Eigen::EigenvaluesOnly);
  d.delta_one = eig.eigenvalues().cwiseAbs().maxCoeff();
  d.delta_eps = dev.diagonal().cwiseAbs().maxCoeff();

  const Matrix upsilon = inv_sd.asDiagonal() * pi * sd.asDiagonal();
  d.upsilon = upsilon.rowwise().norm().maxCoeff();

  const double p = static_cast<double>(d.p);
  const double x = x_level;
  const double xn = x + std::log(static_cast<double>(n));
  const double xp = x + std::log(2.0 * p);
  const double xm = x + 2.0 * std::log(static_cast<double>(family.size()));
  const double dp = d.delta_psi;
  const double dp2 = dp * dp;
  const double b_inf = d.bias_sup;
  const double b_l2 = d.bias_l2;
  const double ups = d.upsilon;

  d.delta2 = 2.0 * std::sqrt(dp2 * p * xn) + std::sqrt(d.delta_eps * d.delta_eps * p) +
             std::sqrt(std::pow(b_inf, 4) * p) + 4.0 * dp2 * b_l2 * (1.0 + std::sqrt(x));
  d.delta0 = b_inf * b_inf + dp2 * b_l2 * std::sqrt(2.0 * x) + 2.0 * ups * xn + ups * ups * xn +
             2.0 * dp * std::sqrt(xp) + 2.0 * dp2 * xp;
  d.delta0_scaled = std::sqrt(p) * d.delta0;
  d.delta_p = b_inf * b_inf + 4.0 * std::sqrt(xm) * dp2 * b_l2 + 4.0 * std::sqrt(xm) * dp +
              4.0 * xm * dp2 + d.delta_eps;
  d.tv_bound = 0.5 * d.delta2;
  d.applicability_ratio = p * p * std::log(static_cast<double>(n)) / static_cast<double>(n);
  d.asymptotic_regime = d.applicability_ratio < 1.0;
  if (!d.asymptotic_regime) {
    d.warnings.push_back({WarningCode::AsymptoticRegimeNotReached,
                          "p^2 log(n)/n = " + std::to_string(d.applicability_ratio) +
                            " is not small; bootstrap error bounds are not informative"});
  }
  return d;
}

} // namespace sma
