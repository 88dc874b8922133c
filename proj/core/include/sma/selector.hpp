#pragma once

#include "sma/bootstrap_cal.hpp"
#include "sma/calibration_mc.hpp"

#include <map>
#include <vector>

namespace sma {

//! T_{m,base} = ||K_{m,base} Y|| per pair column.
struct TestStatistics {
  PairIndex pairs;
  std::vector<double> values;

  [[nodiscard]] double at(int m, int base) const { return values.at(pairs.at(m, base)); }
};

[[nodiscard]] TestStatistics test_statistics(const ModelFamily& family, const Vector& y);

struct SelectionResult {
  int m_hat = 0;
  std::map<int, bool> accepted;  // every model; the largest is accepted vacuously
  TestStatistics stats;
  CalibrationMode table_mode = CalibrationMode::Probabilistic;
};

//! Smallest base accepted against every larger model (T <= threshold).
//! Throws MissingPair if the table lacks a threshold for a pair in stats.
[[nodiscard]] SelectionResult sma_select(const TestStatistics& stats,
                                         const CalibrationTable& table);
[[nodiscard]] SelectionResult sma_select(const TestStatistics& stats,
                                         const BootstrapCalibrationTable& table);
//! Same rule with explicit thresholds in the column order of stats.pairs.
[[nodiscard]] SelectionResult sma_select(const TestStatistics& stats,
                                         const std::vector<double>& thresholds);

//! Smallest base whose squared bias against larger models stays within
//! alpha_plus^2 times the pair effective dimension. In power-loss mode every
//! pair (m', m) with m' > m >= base must satisfy the condition.
[[nodiscard]] int oracle_index(const ModelFamily& family, const Vector& f_true,
                               const NoiseSpec& noise, double alpha_plus, CalibrationMode mode);

struct Payment {
  double z_bar = 0.0;         // max over m < m_star of critical(m_star, m); 0 if none
  double z_bar_theory = 0.0;  // closed-form cap
};

//! Payment for adaptation from a calibration table, with the cap matching
//! the table's mode. Uses the single-model moments of m_star under noise.
[[nodiscard]] Payment payment_for_adaptation(const ModelFamily& family, const NoiseSpec& noise,
                                             int m_star, const CalibrationTable& table);

struct InsensitivityEntry {
  int m = 0;
  double bias = 0.0;       // ||b_{m_star, m}||
  double critical = 0.0;   // critical(m_star, m)
  double tail = 0.0;       // z_{m_star, m}(x_s)
  bool rejected = false;   // member of the complement zone
};

//! Models below m_star whose bias exceeds critical + z(x_s), with
//! x_s = x + log|zone| solved by shrinking fixed-point iteration from the
//! set obtained at x_s = x.
struct InsensitivityZone {
  std::vector<int> complement;
  std::vector<InsensitivityEntry> entries;
  double x_s = 0.0;
  double z_bar_zone = 0.0;  // max critical over the zone (models not in complement)
};

[[nodiscard]] InsensitivityZone insensitivity_zone(const ModelFamily& family,
                                                   const Vector& f_true, int m_star,
                                                   const CalibrationTable& table,
                                                   const TailFunctions& tails);

struct OracleReport {
  int m_star = 0;
  CalibrationMode mode = CalibrationMode::Probabilistic;
  double z_bar = 0.0;
  double z_bar_theory = 0.0;
  std::vector<RiskRecord> risk;
  InsensitivityZone zone;
};

//! Full validation-mode report. tails must come from the draws behind table.
[[nodiscard]] OracleReport oracle_report(const ModelFamily& family, const KnownTruth& truth,
                                         const CalibrationTable& table,
                                         const TailFunctions& tails);

struct AicComparison {
  int m_aic = 0;
  int m_sma = 0;
  bool equivalent = false;
};

//! Compares argmin_m ||Y - Pi_m Y||^2 + 2 sigma^2 m (smallest index on ties)
//! with SmA under thresholds sigma sqrt(2 (m - base)). Requires prediction
//! weighting; throws NotProjectionFamily otherwise.
[[nodiscard]] AicComparison aic_comparison(const ModelFamily& family, double sigma,
                                           const Vector& y);
[[nodiscard]] bool aic_equivalence_check(const ModelFamily& family, double sigma,
                                         const Vector& y);

} // namespace sma
