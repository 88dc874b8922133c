#pragma once

#include "sma/bootstrap_cal.hpp"
#include "sma/calibration_mc.hpp"
#include "sma/selector.hpp"
#include "sma/serialization.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace sma {

struct NoiseProfile {
  enum class Kind { Linear, Constant, Explicit };
  Kind kind = Kind::Linear;
  double sigma_lo = 0.5;   // Linear: sigma(x) = lo + (hi - lo) x
  double sigma_hi = 2.0;
  double sigma = 1.0;      // Constant
  std::vector<double> sigmas;  // Explicit, one standard deviation per observation

  [[nodiscard]] double at(double x, Index i) const;
};

struct ExperimentSeeds {
  std::uint64_t data = 1;
  std::uint64_t noise = 2;
  std::uint64_t calibration = 3;
  std::uint64_t bootstrap = 4;
};

struct ExperimentConfig {
  enum class Coefficients { QuadraticDecay, Explicit };
  enum class Weighting { Prediction, Derivative, FullVector };
  enum class Design { Grid, RandomUniform };

  Index n = 200;
  Index p_max = 200;
  Coefficients coefficient_rule = Coefficients::QuadraticDecay;
  std::vector<double> coefficients;  // Explicit rule
  NoiseProfile noise_profile;
  std::vector<int> models;           // empty means 1..37
  int m_dagger = 20;
  double x_level = 2.0;
  double alpha_plus = 1.0;
  Index n_sim = 1000;
  Index n_hist = 100;
  ExperimentSeeds seeds;
  Weighting weighting = Weighting::Prediction;
  CalibrationMode mode = CalibrationMode::Probabilistic;
  double a = 1.0;
  Design design = Design::Grid;

  //! Number of basis functions in the design, min(p_max, n).
  [[nodiscard]] Index design_dim() const noexcept { return std::min(p_max, n); }
  //! Fills defaults (models = 1..37) and throws ConfigInvalid on violations.
  void validate();
};

[[nodiscard]] ExperimentConfig config_from_json(const Json& j);
[[nodiscard]] Json to_json(const ExperimentConfig& config);

//! Fourier basis on [0, 1]: psi_1 = 1, psi_{2k} = sqrt2 cos(2 pi k x),
//! psi_{2k+1} = sqrt2 sin(2 pi k x). j is 1-based.
[[nodiscard]] double fourier(Index j, double x);
[[nodiscard]] double fourier_derivative(Index j, double x);

struct Scenario {
  Vector grid;
  DesignMatrix design;      // psi_j(x_i) / sqrt(n)
  Vector coefficients;      // c_j
  Vector f_true;
  Vector sigmas;
  NoiseSpec noise;
};

[[nodiscard]] Scenario generate_scenario(const ExperimentConfig& config);

//! Estimation family for the configured weighting. Derivative weighting maps
//! theta to the derivative values on the grid (q = n).
[[nodiscard]] ModelFamily build_family(const ExperimentConfig& config, const Scenario& scenario);

//! Y for replicate r: f* + sigma .* g with g from the (noise seed, r) stream.
[[nodiscard]] Vector replicate_response(const ExperimentConfig& config, const Scenario& scenario,
                                        Index replicate);

[[nodiscard]] CalibrationSettings calibration_settings(const ExperimentConfig& config,
                                                       std::uint64_t seed, unsigned threads);

struct ReplicateRecord {
  Index replicate = 0;
  std::uint64_t bootstrap_seed = 0;
  int m_oracle = 0;
  int m_sma_known = 0;
  int m_sma_boot = 0;  // 0 when the bootstrap failed
  double loss_oracle = 0.0;
  double loss_known = 0.0;
  double loss_boot = 0.0;
  std::string boot_status = "ok";
};

struct ComparisonResult {
  int m_oracle = 0;
  CalibrationTable known_table;
  std::vector<ReplicateRecord> records;
};

//! n_hist fresh-noise replicates on a fixed f*: oracle, known-noise SmA and
//! bootstrap SmA, with losses ||K_m Y - W theta*||^2. Replicates run in
//! parallel; output does not depend on the thread count.
[[nodiscard]] ComparisonResult run_comparison(const ExperimentConfig& config, unsigned threads = 0);

void write_results_csv(std::ostream& out, const std::vector<ReplicateRecord>& records);

struct RatioTable {
  PairIndex pairs;
  std::vector<double> ratio;  // (boot critical / known critical)^2
  std::vector<double> z_known;
  std::vector<double> z_boot;
  std::vector<double> p_known;
  std::vector<double> p_boot;
  double min = 0.0;
  double mean = 0.0;
  double max = 0.0;
};

//! Per-pair squared ratio of two tables over the same pair set.
[[nodiscard]] RatioTable quantile_ratios(const CalibrationTable& known,
                                         const BootstrapCalibrationTable& boot);

//! Ratios for replicate 0 of the configured scenario.
[[nodiscard]] RatioTable quantile_ratio_table(const ExperimentConfig& config,
                                              unsigned threads = 0);

void write_ratios_csv(std::ostream& out, const RatioTable& table);

struct SweepRecord {
  int m_dagger = 0;
  int m_hat_boot = 0;  // 0 when the bootstrap failed
  std::string status = "ok";
  double ratio_min = 0.0;
  double ratio_mean = 0.0;
  double ratio_max = 0.0;
};

//! Bootstrap selection on replicate 0 for each presmoothing dimension.
[[nodiscard]] std::vector<SweepRecord> mdagger_sweep(const ExperimentConfig& config,
                                                     const std::vector<int>& m_daggers,
                                                     unsigned threads = 0);

void write_sweep_csv(std::ostream& out, const std::vector<SweepRecord>& records);

} // namespace sma
