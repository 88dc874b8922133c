#include "sma/serialization.hpp"

#include <array>
#include <cstdio>
#include <ostream>

namespace sma {
namespace {

CalibrationMode mode_from_string(const std::string& s)
{
  if (s == "probabilistic") {
    return CalibrationMode::Probabilistic;
  }
  if (s == "power_loss") {
    return CalibrationMode::PowerLoss;
  }
  throw Error(ErrorCode::ConfigInvalid, "unknown calibration mode '" + s + "'");
}

Json per_pair(const PairIndex& pairs, const std::vector<double>& values)
{
  Json j = Json::object();
  for (std::size_t c = 0; c < pairs.size(); ++c) {
    j[pair_key(pairs.pair(c))] = values[c];
  }
  return j;
}

Json per_model(const std::map<int, double>& values)
{
  Json j = Json::object();
  for (const auto& [m, v] : values) {
    j[std::to_string(m)] = v;
  }
  return j;
}

std::map<int, double> read_per_model(const Json& j)
{
  std::map<int, double> out;
  for (const auto& [k, v] : j.items()) {
    out[std::stoi(k)] = v.get<double>();
  }
  return out;
}

const Json& field(const Json& j, const char* name)
{
  if (!j.contains(name)) {
    throw Error(ErrorCode::ConfigInvalid, std::string("calibration JSON lacks '") + name + "'");
  }
  return j.at(name);
}

} // namespace

std::string format_double(double v)
{
  std::array<char, 32> buf{};
  std::snprintf(buf.data(), buf.size(), "%.17g", v);
  return buf.data();
}

Json to_json(const Warnings& warnings)
{
  Json j = Json::array();
  for (const auto& w : warnings) {
    j.push_back({{"code", to_string(w.code)}, {"message", w.message}});
  }
  return j;
}

Json to_json(const PairMoments& moments)
{
  return {{"p", moments.p_pair}, {"lambda", moments.lambda_pair}};
}

Json to_json(const CalibrationTable& table)
{
  Json j;
  j["mode"] = to_string(table.mode);
  j["a"] = table.a;
  j["x_level"] = table.x_level;
  j["alpha_plus"] = table.alpha_plus;
  j["models"] = table.pairs.models();
  j["corrections"] = per_model(table.corrections);
  j["levels"] = per_model(table.levels);
  j["critical"] = per_pair(table.pairs, table.critical);
  j["tail"] = per_pair(table.pairs, table.tail);
  Json moments = Json::object();
  for (std::size_t c = 0; c < table.pairs.size(); ++c) {
    moments[pair_key(table.pairs.pair(c))] = to_json(table.moments[c]);
  }
  j["moments"] = std::move(moments);
  j["warnings"] = to_json(table.warnings);
  return j;
}

Json to_json(const BootstrapCalibrationTable& table)
{
  Json j = to_json(table.table);
  j["p_boot"] = per_pair(table.table.pairs, table.p_boot);
  j["source_seed"] = table.source_seed;
  j["n_sim"] = table.n_sim;
  return j;
}

Json to_json(const SelectionResult& result)
{
  Json accepted = Json::object();
  for (const auto& [m, ok] : result.accepted) {
    accepted[std::to_string(m)] = ok;
  }
  Json j;
  j["m_hat"] = result.m_hat;
  j["accepted"] = std::move(accepted);
  j["stats"] = per_pair(result.stats.pairs, result.stats.values);
  j["table_mode"] = to_string(result.table_mode);
  return j;
}

Json to_json(const ValidityDiagnostics& d)
{
  Json j;
  j["n"] = d.n;
  j["p"] = d.p;
  j["m_dagger"] = d.m_dagger;
  j["x_level"] = d.x_level;
  j["delta_psi"] = d.delta_psi;
  j["delta_one"] = d.delta_one;
  j["delta_eps"] = d.delta_eps;
  j["upsilon"] = d.upsilon;
  j["bias_sup"] = d.bias_sup;
  j["bias_l2"] = d.bias_l2;
  j["delta2"] = d.delta2;
  j["delta0"] = d.delta0;
  j["delta0_scaled"] = d.delta0_scaled;
  j["delta_p"] = d.delta_p;
  j["tv_bound"] = d.tv_bound;
  j["applicability_ratio"] = d.applicability_ratio;
  j["asymptotic_regime"] = d.asymptotic_regime;
  j["warnings"] = to_json(d.warnings);
  return j;
}

Json to_json(const OracleReport& report)
{
  Json j;
  j["m_star"] = report.m_star;
  j["mode"] = to_string(report.mode);
  j["z_bar"] = report.z_bar;
  j["z_bar_theory"] = report.z_bar_theory;
  Json risk = Json::array();
  for (const auto& r : report.risk) {
    risk.push_back({{"m", r.m}, {"bias2", r.bias2}, {"variance", r.variance}, {"risk", r.risk}});
  }
  j["risk"] = std::move(risk);
  Json entries = Json::array();
  for (const auto& e : report.zone.entries) {
    entries.push_back({{"m", e.m},
                       {"bias", e.bias},
                       {"critical", e.critical},
                       {"tail", e.tail},
                       {"rejected", e.rejected}});
  }
  j["insensitivity"] = {{"x_s", report.zone.x_s},
                        {"complement", report.zone.complement},
                        {"z_bar_zone", report.zone.z_bar_zone},
                        {"entries", std::move(entries)}};
  return j;
}

CalibrationTable calibration_from_json(const Json& j)
{
  try {
    CalibrationTable t;
    t.mode = mode_from_string(field(j, "mode").get<std::string>());
    t.a = field(j, "a").get<double>();
    t.x_level = field(j, "x_level").get<double>();
    t.alpha_plus = field(j, "alpha_plus").get<double>();
    t.pairs = PairIndex(field(j, "models").get<std::vector<int>>());
    t.corrections = read_per_model(field(j, "corrections"));
    t.levels = read_per_model(field(j, "levels"));
    const Json& critical = field(j, "critical");
    const Json& tail = field(j, "tail");
    const Json& moments = field(j, "moments");
    for (const auto& pr : t.pairs.pairs()) {
      const std::string key = pair_key(pr);
      if (!critical.contains(key) || !tail.contains(key) || !moments.contains(key)) {
        throw Error(ErrorCode::ConfigInvalid, "calibration JSON lacks pair " + key);
      }
      t.critical.push_back(critical.at(key).get<double>());
      t.tail.push_back(tail.at(key).get<double>());
      PairMoments mom;
      mom.p_pair = moments.at(key).at("p").get<double>();
      mom.lambda_pair = moments.at(key).at("lambda").get<double>();
      t.moments.push_back(std::move(mom));
    }
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigInvalid, std::string("malformed calibration JSON: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ConfigInvalid) {
      throw;
    }
    throw Error(ErrorCode::ConfigInvalid, e.what());
  } catch (const std::logic_error& e) {
    throw Error(ErrorCode::ConfigInvalid, std::string("malformed model key: ") + e.what());
  }
}

void write_risk_csv(std::ostream& out, const std::vector<RiskRecord>& risk)
{
  out << "m,bias2,variance,risk\n";
  for (const auto& r : risk) {
    out << r.m << ',' << format_double(r.bias2) << ',' << format_double(r.variance) << ','
        << format_double(r.risk) << '\n';
  }
}

} // namespace sma
