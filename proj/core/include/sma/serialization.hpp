#pragma once

#include "sma/bootstrap_cal.hpp"
#include "sma/calibration_mc.hpp"
#include "sma/selector.hpp"

#include <nlohmann/json.hpp>

#include <iosfwd>
#include <string>
#include <vector>

namespace sma {

using Json = nlohmann::ordered_json;

//! %.17g: round-trips every double and is locale independent.
[[nodiscard]] std::string format_double(double v);

[[nodiscard]] Json to_json(const Warnings& warnings);
[[nodiscard]] Json to_json(const PairMoments& moments);
[[nodiscard]] Json to_json(const CalibrationTable& table);
[[nodiscard]] Json to_json(const BootstrapCalibrationTable& table);
[[nodiscard]] Json to_json(const SelectionResult& result);
[[nodiscard]] Json to_json(const ValidityDiagnostics& diagnostics);
[[nodiscard]] Json to_json(const OracleReport& report);

//! Reads the table part of either calibration schema. Throws ConfigInvalid on
//! missing or malformed entries.
[[nodiscard]] CalibrationTable calibration_from_json(const Json& j);

//! Columns m, bias2, variance, risk.
void write_risk_csv(std::ostream& out, const std::vector<RiskRecord>& risk);

} // namespace sma
