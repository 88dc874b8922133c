#include "sma/selector.hpp"

#include "sma/theory_bounds.hpp"

#include <cmath>
#include <set>

namespace sma {

TestStatistics test_statistics(const ModelFamily& family, const Vector& y)
{
  const Matrix u = family.reduced_estimates(y);
  const auto& pairs = family.pairs();
  TestStatistics out;
  out.pairs = pairs;
  out.values.reserve(pairs.size());
  for (const auto& pr : pairs.pairs()) {
    const auto a = static_cast<Index>(*pairs.position(pr.m));
    const auto b = static_cast<Index>(*pairs.position(pr.base));
    out.values.push_back((u.col(a) - u.col(b)).norm());
  }
  return out;
}

SelectionResult sma_select(const TestStatistics& stats, const std::vector<double>& thresholds)
{
  if (thresholds.size() != stats.values.size()) {
    throw Error(ErrorCode::DimensionMismatch, "one threshold per pair is required");
  }
  SelectionResult out;
  out.stats = stats;
  const auto& models = stats.pairs.models();
  out.m_hat = models.back();
  bool found = false;
  for (const int base : models) {
    bool ok = true;
    for (const std::size_t col : stats.pairs.columns_for_base(base)) {
      if (stats.values[col] > thresholds[col]) {
        ok = false;
        break;
      }
    }
    out.accepted[base] = ok;
    if (ok && !found) {
      out.m_hat = base;
      found = true;
    }
  }
  return out;
}

SelectionResult sma_select(const TestStatistics& stats, const CalibrationTable& table)
{
  std::vector<double> thresholds;
  thresholds.reserve(stats.pairs.size());
  for (const auto& pr : stats.pairs.pairs()) {
    thresholds.push_back(table.critical_value(pr.m, pr.base));
  }
  auto out = sma_select(stats, thresholds);
  out.table_mode = table.mode;
  return out;
}

SelectionResult sma_select(const TestStatistics& stats, const BootstrapCalibrationTable& table)
{
  return sma_select(stats, table.table);
}

int oracle_index(const ModelFamily& family, const Vector& f_true, const NoiseSpec& noise,
                 double alpha_plus, CalibrationMode mode)
{
  const auto moments = all_pair_moments(family, noise.variances(), false);
  const auto& pairs = family.pairs();
  const auto& models = pairs.models();
  const double a2 = alpha_plus * alpha_plus;

  if (f_true.size() != family.samples()) {
    throw Error(ErrorCode::DimensionMismatch, "f_true length differs from n");
  }
  // Biases below round-off of the fitted values count as zero, so that alpha_+ = 0
  // recovers the exact support of a sparse f*.
  constexpr double kRoundoff = 1e-10;
  const Matrix u = family.reduced_estimates(f_true);
  std::vector<char> good(pairs.size());
  for (std::size_t c = 0; c < pairs.size(); ++c) {
    const auto& pr = pairs.pair(c);
    const auto a = static_cast<Index>(*pairs.position(pr.m));
    const auto b = static_cast<Index>(*pairs.position(pr.base));
    const double bias = (u.col(a) - u.col(b)).norm();
    const double floor = kRoundoff * std::max(u.col(a).norm(), u.col(b).norm());
    good[c] = bias * bias <= a2 * moments[c].p_pair + floor * floor ? 1 : 0;
  }
  const auto base_good = [&](int base) {
    for (const std::size_t c : pairs.columns_for_base(base)) {
      if (!good[c]) {
        return false;
      }
    }
    return true;
  };

  if (mode == CalibrationMode::Probabilistic) {
    for (const int base : models) {
      if (base_good(base)) {
        return base;
      }
    }
    return models.back();
  }
  // Power loss: base and every larger model must be good; scan from the top.
  int best = models.back();
  for (auto it = models.rbegin(); it != models.rend(); ++it) {
    if (!base_good(*it)) {
      break;
    }
    best = *it;
  }
  return best;
}

Payment payment_for_adaptation(const ModelFamily& family, const NoiseSpec& noise, int m_star,
                               const CalibrationTable& table)
{
  const std::size_t pos = family.position(m_star);
  const auto single = single_model_moments(family, noise.variances());
  Payment out;
  for (std::size_t k = 0; k < pos; ++k) {
    out.z_bar = std::max(out.z_bar, table.critical_value(m_star, family.models()[k]));
  }
  const double p = single[pos].p_pair;
  const double lambda = single[pos].lambda_pair;
  if (table.mode == CalibrationMode::Probabilistic) {
    out.z_bar_theory = payment_cap(p, lambda, table.x_level, table.alpha_plus, family.size());
  } else {
    out.z_bar_theory = power_payment_cap(p, single.front().p_pair, lambda, table.a,
                                         table.alpha_plus, family.size());
  }
  return out;
}

InsensitivityZone insensitivity_zone(const ModelFamily& family, const Vector& f_true, int m_star,
                                     const CalibrationTable& table, const TailFunctions& tails)
{
  const std::size_t pos = family.position(m_star);
  const auto& models = family.models();
  InsensitivityZone zone;
  for (std::size_t k = 0; k < pos; ++k) {
    InsensitivityEntry e;
    e.m = models[k];
    e.bias = pair_bias(family, f_true, m_star, e.m);
    e.critical = table.critical_value(m_star, e.m);
    zone.entries.push_back(e);
  }
  const auto base_level = [&](int m) {
    return table.mode == CalibrationMode::Probabilistic ? table.x_level : table.levels.at(m);
  };

  std::set<int> current;
  bool first = true;
  for (std::size_t iter = 0; iter <= models.size(); ++iter) {
    const double shift =
      current.empty() ? 0.0 : std::log(static_cast<double>(current.size()));
    std::set<int> next;
    for (auto& e : zone.entries) {
      e.tail = tails.quantile(m_star, e.m, base_level(e.m) + shift).value;
      const bool hit = e.bias > e.critical + e.tail;
      if (hit && (first || current.count(e.m) > 0)) {
        next.insert(e.m);
      }
    }
    zone.x_s = table.x_level + shift;
    const bool stable = !first && next == current;
    current = std::move(next);
    first = false;
    if (stable) {
      break;
    }
  }
  for (auto& e : zone.entries) {
    e.rejected = current.count(e.m) > 0;
    if (!e.rejected) {
      zone.z_bar_zone = std::max(zone.z_bar_zone, e.critical);
    }
  }
  zone.complement.assign(current.begin(), current.end());
  return zone;
}

OracleReport oracle_report(const ModelFamily& family, const KnownTruth& truth,
                           const CalibrationTable& table, const TailFunctions& tails)
{
  if (!truth.noise.is_known() || truth.f_true.size() == 0) {
    throw Error(ErrorCode::RequiresKnownTruth, "oracle report needs the noise variances and f*");
  }
  OracleReport out;
  out.mode = table.mode;
  out.m_star = oracle_index(family, truth.f_true, truth.noise, table.alpha_plus, table.mode);
  const Payment pay = payment_for_adaptation(family, truth.noise, out.m_star, table);
  out.z_bar = pay.z_bar;
  out.z_bar_theory = pay.z_bar_theory;
  out.risk = risk_profile(family, truth.f_true, truth.noise);
  out.zone = insensitivity_zone(family, truth.f_true, out.m_star, table, tails);
  return out;
}

AicComparison aic_comparison(const ModelFamily& family, double sigma, const Vector& y)
{
  if (family.weighting_kind() != WeightingScheme::Kind::Prediction) {
    throw Error(ErrorCode::NotProjectionFamily, "AIC comparison needs prediction weighting");
  }
  if (!(sigma > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "sigma must be > 0");
  }
  if (y.size() != family.samples()) {
    throw Error(ErrorCode::DimensionMismatch, "response length differs from n");
  }
  const auto& models = family.models();
  AicComparison out;
  double best = 0.0;
  for (std::size_t k = 0; k < models.size(); ++k) {
    const int m = models[k];
    const auto psi = family.design().leading(m);
    const Vector fit = psi.transpose() * (family.gram_pinv(m) * (psi * y));
    const double aic = (y - fit).squaredNorm() + 2.0 * sigma * sigma * m;
    if (k == 0 || aic < best) {
      best = aic;
      out.m_aic = m;
    }
  }

  // ||W theta|| = ||Psi^T theta|| / sigma_w, so T sigma_w is the projection gap.
  TestStatistics stats = test_statistics(family, y);
  for (double& t : stats.values) {
    t *= family.prediction_scale();
  }
  std::vector<double> thresholds;
  for (const auto& pr : stats.pairs.pairs()) {
    thresholds.push_back(sigma * std::sqrt(2.0 * (pr.m - pr.base)));
  }
  out.m_sma = sma_select(stats, thresholds).m_hat;
  out.equivalent = out.m_aic == out.m_sma;
  return out;
}

bool aic_equivalence_check(const ModelFamily& family, double sigma, const Vector& y)
{
  return aic_comparison(family, sigma, y).equivalent;
}

} // namespace sma
