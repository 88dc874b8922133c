#pragma once

#include "sma/model_family.hpp"
#include "sma/noise.hpp"

#include <optional>
#include <vector>

namespace sma {

//! Trace and operator norm of a covariance block V (variance units).
struct PairMoments {
  double p_pair = 0.0;
  double lambda_pair = 0.0;
  std::optional<Matrix> v_matrix;  // in reduced r x r coordinates
};

//! Moments of V_{m,base} = K_{m,base} diag(variances) K_{m,base}^T.
//! Throws NotOrderedPair when m <= base.
[[nodiscard]] PairMoments pair_variance(const ModelFamily& family, const NoiseSpec& noise, int m,
                                        int base, bool keep_matrix = false);

//! Pair moments for every column of family.pairs(), under an arbitrary
//! nonnegative per-observation variance vector. The bootstrap path passes
//! squared residuals here. Set with_lambda = false to skip the eigensolves.
[[nodiscard]] std::vector<PairMoments> all_pair_moments(const ModelFamily& family,
                                                        const Vector& variances,
                                                        bool with_lambda = true);

//! Moments of V_m = K_m diag(variances) K_m^T, one entry per model.
[[nodiscard]] std::vector<PairMoments> single_model_moments(const ModelFamily& family,
                                                            const Vector& variances);

//! b_{m,base} = K_{m,base} f.
[[nodiscard]] Vector pair_bias_vector(const ModelFamily& family, const Vector& f_true, int m,
                                      int base);
//! ||K_{m,base} f||.
[[nodiscard]] double pair_bias(const ModelFamily& family, const Vector& f_true, int m, int base);

//! theta* = (Psi Psi^T)^+ Psi f, the best linear fit over all p features.
[[nodiscard]] Vector best_linear_fit(const DesignMatrix& design, const Vector& f_true);

struct RiskRecord {
  int m = 0;
  double bias2 = 0.0;
  double variance = 0.0;
  double risk = 0.0;
};

//! R_m = ||K_m f - W theta*||^2 + tr(K_m Sigma K_m^T) for every model.
[[nodiscard]] std::vector<RiskRecord> risk_profile(const ModelFamily& family, const Vector& f_true,
                                                   const NoiseSpec& noise);

//! v_m^2 = K_m Sigma K_m^T for a rank-one (q = 1) weighting; throws NotFunctional otherwise.
[[nodiscard]] double functional_variance(const ModelFamily& family, const NoiseSpec& noise, int m);

} // namespace sma
