#pragma once

#include "sma/errors.hpp"
#include "sma/model_family.hpp"
#include "sma/noise.hpp"
#include "sma/pairs.hpp"
#include "sma/population_stats.hpp"

#include <cstdint>
#include <map>
#include <vector>

namespace sma {

//! n_sim x |pairs| matrix of simulated ||xi_{m,base}||. Every row comes from
//! one noise vector shared by all pairs, so the joint law is preserved.
class JointDrawMatrix {
public:
  JointDrawMatrix(PairIndex pairs, Matrix draws, std::uint64_t seed);

  [[nodiscard]] const PairIndex& pairs() const noexcept { return pairs_; }
  [[nodiscard]] const Matrix& values() const noexcept { return draws_; }
  [[nodiscard]] Index n_sim() const noexcept { return draws_.rows(); }
  [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }
  [[nodiscard]] auto column(int m, int base) const
  {
    return draws_.col(static_cast<Index>(pairs_.at(m, base)));
  }

private:
  PairIndex pairs_;
  Matrix draws_;
  std::uint64_t seed_;
};

//! Draws with eps ~ N(0, Sigma), row r using the stream keyed by (seed, r).
[[nodiscard]] JointDrawMatrix sample_joint_draws(const ModelFamily& family, const NoiseSpec& noise,
                                                 Index n_sim, std::uint64_t seed,
                                                 unsigned threads = 0);

//! Draws with eps_i = scales_i * g_i, g ~ N(0, I). Shared by the known-noise
//! path (scales = sigma) and the bootstrap path (scales = residuals).
[[nodiscard]] JointDrawMatrix sample_scaled_draws(const ModelFamily& family, const Vector& scales,
                                                  Index n_sim, std::uint64_t seed,
                                                  unsigned threads = 0);

//! Draws from caller-supplied noise vectors (n x n_sim, one column per row).
[[nodiscard]] JointDrawMatrix joint_draws_from_noise(const ModelFamily& family,
                                                     const Matrix& noise);

enum class TailFlag { Ok, SparseTail, TailTooDeep, FullMass };

struct TailQuantile {
  double value = 0.0;
  TailFlag flag = TailFlag::Ok;
};

//! Empirical tail functions z_{m,base}(t) over sorted draw columns.
class TailFunctions {
public:
  //! Minimum number of draws above the quantile before SparseTail is raised.
  static constexpr Index kMinTailPoints = 10;

  explicit TailFunctions(const JointDrawMatrix& draws);

  [[nodiscard]] const PairIndex& pairs() const noexcept { return pairs_; }
  [[nodiscard]] Index n_sim() const noexcept { return sorted_.rows(); }
  [[nodiscard]] const Matrix& draws() const noexcept { return draws_; }

  //! Upper order statistic at rank ceil((1 - e^{-t}) n_sim). For t <= 0 the
  //! whole mass is requested and the maximum draw is returned (FullMass); for
  //! e^{-t} < 1/n_sim the maximum is returned with TailTooDeep.
  [[nodiscard]] TailQuantile quantile(std::size_t column, double t) const;
  [[nodiscard]] TailQuantile quantile(int m, int base, double t) const
  {
    return quantile(pairs_.at(m, base), t);
  }

private:
  PairIndex pairs_;
  Matrix draws_;
  Matrix sorted_;
};

[[nodiscard]] TailQuantile tail_quantile(const JointDrawMatrix& draws, int m, int base, double t);

//! Rows where some pair (m, base), m > base, strictly exceeds z_{m,base}(t).
[[nodiscard]] Index familywise_exceedances(const TailFunctions& tails, int base, double t);

inline constexpr double kCorrectionResolution = 1e-4;

//! Smallest q >= 0 (to kCorrectionResolution) such that the in-sample
//! family-wise exceedance at z(x + q) is at most e^{-x} n_sim. Returns exactly
//! 0 when base has a single comparison.
[[nodiscard]] double multiplicity_correction(const TailFunctions& tails, int base, double x_level);
[[nodiscard]] double multiplicity_correction(const JointDrawMatrix& draws, int base,
                                             double x_level);

enum class CalibrationMode { Probabilistic, PowerLoss };

[[nodiscard]] const char* to_string(CalibrationMode mode) noexcept;

//! Thresholds for every pair of a family. Per-pair vectors are indexed by the
//! column order of pairs().
struct CalibrationTable {
  CalibrationMode mode = CalibrationMode::Probabilistic;
  double a = 0.0;
  double x_level = 0.0;
  double alpha_plus = 0.0;
  PairIndex pairs;
  std::map<int, double> corrections;  // q_{base}; empty in power-loss mode
  std::map<int, double> levels;       // tail level t used for each base
  std::vector<double> tail;           // z_{m,base}(levels[base])
  std::vector<double> critical;       // tail + alpha_plus * sqrt(p)
  std::vector<PairMoments> moments;
  Warnings warnings;

  //! Throws MissingPair when the pair is not covered.
  [[nodiscard]] double critical_value(int m, int base) const;
  [[nodiscard]] const PairMoments& moment(int m, int base) const;
};

//! z(x + q_base) + alpha_plus sqrt(p_{m,base}) for every pair.
[[nodiscard]] CalibrationTable critical_values(const TailFunctions& tails,
                                               const std::vector<PairMoments>& moments,
                                               double x_level, double alpha_plus);

//! alpha_m and per-base levels x_{base} of the power-loss variant.
struct PowerLossParams {
  double a = 1.0;
  std::vector<int> models;
  std::vector<double> alpha;       // per model
  std::map<int, double> levels;    // x_{base} for each base with a successor
};

//! alpha_m = sqrt(3) (p_m/p_{m0})^{-1-a}; x_{base} = 2(1+a) log(p_{next}/p_{m0})
//! where next is the successor of base. Throws BadExponent for a <= 0.
[[nodiscard]] PowerLossParams power_loss_params(const std::vector<int>& models,
                                                const std::vector<double>& p_single, double a);

//! z(x_{base}) + alpha_plus sqrt(p_{m,base}); no multiplicity correction.
[[nodiscard]] CalibrationTable power_loss_critical_values(const TailFunctions& tails,
                                                          const std::vector<PairMoments>& moments,
                                                          const PowerLossParams& params,
                                                          double alpha_plus);

struct CalibrationSettings {
  double x_level = 2.0;
  double alpha_plus = 1.0;
  CalibrationMode mode = CalibrationMode::Probabilistic;
  double a = 1.0;
  Index n_sim = 1000;
  std::uint64_t seed = 0;
  unsigned threads = 0;
};

//! Builds the probabilistic or power-loss table from a draw matrix and the
//! pair/single moments that go with it.
[[nodiscard]] CalibrationTable calibrate_from_draws(const JointDrawMatrix& draws,
                                                    const std::vector<PairMoments>& pair_moments,
                                                    const std::vector<double>& p_single,
                                                    const CalibrationSettings& settings);

//! Known-noise calibration: sample draws, then calibrate_from_draws.
[[nodiscard]] CalibrationTable calibrate_known(const ModelFamily& family, const NoiseSpec& noise,
                                               const CalibrationSettings& settings);

struct ExcessRiskEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  Index n_sim = 0;
};

//! Monte-Carlo estimate of E[(||xi_m||^2/p_m v 1) 1(A)], where A is the event
//! that some pair (m', pred) with pred the predecessor of m exceeds
//! z_{m',pred}(x). Thresholds come from tails; x <= 0 means a zero
//! threshold. The integrand is averaged over fresh draws keyed by seed.
[[nodiscard]] ExcessRiskEstimate excess_risk_mc(const ModelFamily& family, const NoiseSpec& noise,
                                                const TailFunctions& tails, int m,
                                                double x_candidate, Index n_sim,
                                                std::uint64_t seed, unsigned threads = 0);

//! Convenience form: tail functions from n_sim draws keyed by seed, integrand
//! on an independent stream derived from seed.
[[nodiscard]] ExcessRiskEstimate excess_risk_mc(const ModelFamily& family, const NoiseSpec& noise,
                                                int m, double x_candidate, Index n_sim,
                                                std::uint64_t seed, unsigned threads = 0);

} // namespace sma
