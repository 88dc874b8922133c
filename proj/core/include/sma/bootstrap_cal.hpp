#pragma once

#include "sma/calibration_mc.hpp"

#include <cstdint>
#include <vector>

namespace sma {

struct PresmoothResult {
  Vector residuals;  // Y - Pi Y
  Vector fitted;     // Pi Y
  int m_dagger = 0;
};

//! Pi = Psi_m^T (Psi_m Psi_m^T)^+ Psi_m as an explicit n x n matrix.
[[nodiscard]] Matrix presmooth_projector(const DesignMatrix& design, int m_dagger);

//! Projects y on the span of the leading m_dagger features (0 selects the
//! largest model). Residuals whose norm is below 1e-12 ||y|| are set to zero.
[[nodiscard]] PresmoothResult presmooth(const ModelFamily& family, const Vector& y,
                                        int m_dagger = 0);

//! Wild-bootstrap draws ||K_{m,base} diag(residuals) w||, w ~ N(0, I), one w
//! per row shared by all pairs. Throws AllZeroResiduals when every draw is 0.
[[nodiscard]] JointDrawMatrix bootstrap_joint_draws(const ModelFamily& family,
                                                    const Vector& residuals, Index n_sim,
                                                    std::uint64_t seed, unsigned threads = 0);

//! p_boot_{m,base} = sum_i residual_i^2 ||column i of K_{m,base}||^2, per pair column.
[[nodiscard]] std::vector<double> bootstrap_effective_dims(const ModelFamily& family,
                                                           const Vector& residuals);

struct BootstrapCalibrationTable {
  CalibrationTable table;       // moments hold the bootstrap p and lambda
  std::vector<double> p_boot;   // per pair column
  std::uint64_t source_seed = 0;
  Index n_sim = 0;
};

[[nodiscard]] BootstrapCalibrationTable bootstrap_calibrate(const ModelFamily& family,
                                                            const Vector& residuals,
                                                            const CalibrationSettings& settings);

[[nodiscard]] BootstrapCalibrationTable bootstrap_calibrate(const ModelFamily& family,
                                                            const Vector& residuals,
                                                            double x_level, double alpha_plus,
                                                            Index n_sim, std::uint64_t seed,
                                                            unsigned threads = 0);

//! Ground truth available only in validation runs.
struct KnownTruth {
  NoiseSpec noise;
  Vector f_true;
};

struct ValidityDiagnostics {
  Index n = 0;
  Index p = 0;          // feature count of the largest model
  int m_dagger = 0;
  double x_level = 0.0;
  double delta_psi = 0.0;
  double delta_one = 0.0;
  double delta_eps = 0.0;
  double upsilon = 0.0;  // max row norm of Sigma^{-1/2} Pi Sigma^{1/2}
  double bias_sup = 0.0;
  double bias_l2 = 0.0;
  double delta2 = 0.0;
  double delta0 = 0.0;
  double delta0_scaled = 0.0;  // sqrt(p) * delta0
  double delta_p = 0.0;
  double tv_bound = 0.0;       // delta2 / 2
  double applicability_ratio = 0.0;
  bool asymptotic_regime = false;  // applicability_ratio < 1
  Warnings warnings;
};

//! Error terms of the bootstrap validity bounds. Throws RequiresKnownTruth
//! when the noise is unknown or f_true is empty.
[[nodiscard]] ValidityDiagnostics validity_diagnostics(const ModelFamily& family,
                                                       const KnownTruth& truth, int m_dagger,
                                                       double x_level);

} // namespace sma
