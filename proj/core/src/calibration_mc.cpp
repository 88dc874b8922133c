#include "sma/calibration_mc.hpp"

#include "sma/parallel.hpp"
#include "sma/random.hpp"

#include <algorithm>
#include <cmath>

namespace sma {
namespace {

struct PairPositions {
  std::vector<std::pair<Index, Index>> cols;  // (position of m, position of base)
};

PairPositions pair_positions(const ModelFamily& family)
{
  PairPositions out;
  const auto& pairs = family.pairs();
  out.cols.reserve(pairs.size());
  for (const auto& pr : pairs.pairs()) {
    out.cols.emplace_back(static_cast<Index>(*pairs.position(pr.m)),
                          static_cast<Index>(*pairs.position(pr.base)));
  }
  return out;
}

// Calls fn(row, u) where column k of u holds C_k Phi eps for the row's noise
// vector eps = scales .* g, g drawn from the (seed, row) stream.
template <typename RowFn>
void for_each_draw_row(const ModelFamily& family, const Vector& scales, Index n_sim,
                       std::uint64_t seed, unsigned threads, RowFn&& fn)
{
  const Index n = family.samples();
  if (scales.size() != n) {
    throw Error(ErrorCode::DimensionMismatch, "noise scale vector length differs from n");
  }
  if (n_sim < 1) {
    throw Error(ErrorCode::InvalidArgument, "n_sim must be >= 1");
  }
  const Matrix& phi = family.noise_basis();
  parallel_for(static_cast<std::size_t>(n_sim), threads, [&](std::size_t begin, std::size_t end) {
    Vector g(n);
    Vector z(phi.rows());
    Matrix u;
    for (std::size_t r = begin; r < end; ++r) {
      fill_standard_normal(seed, r, std::span<double>(g.data(), static_cast<std::size_t>(n)));
      g.array() *= scales.array();
      z.noalias() = phi * g;
      family.reduced_estimates_into(z, u);
      fn(static_cast<Index>(r), u);
    }
  });
}

void fill_pair_norms(const PairPositions& pos, const Matrix& u, Index row, Matrix& draws)
{
  for (std::size_t c = 0; c < pos.cols.size(); ++c) {
    const auto [a, b] = pos.cols[c];
    draws(row, static_cast<Index>(c)) = (u.col(a) - u.col(b)).norm();
  }
}

const char* flag_name(TailFlag flag)
{
  switch (flag) {
  case TailFlag::SparseTail: return "sparse tail";
  case TailFlag::TailTooDeep: return "tail beyond sample";
  case TailFlag::FullMass: return "level <= 0, full mass";
  case TailFlag::Ok: break;
  }
  return "ok";
}

WarningCode flag_code(TailFlag flag)
{
  switch (flag) {
  case TailFlag::SparseTail: return WarningCode::SparseTail;
  case TailFlag::TailTooDeep: return WarningCode::TailTooDeep;
  default: return WarningCode::FullMassTail;
  }
}

// Collapses per-pair tail flags into one warning per flag kind.
class FlagCollector {
public:
  void add(TailFlag flag, const ModelPair& pair)
  {
    if (flag != TailFlag::Ok) {
      hits_[flag].push_back(pair_key(pair));
    }
  }

  void emit(Warnings& out) const
  {
    for (const auto& [flag, keys] : hits_) {
      std::string msg = std::string(flag_name(flag)) + " for " + std::to_string(keys.size()) +
                        " pair(s):";
      const std::size_t shown = std::min<std::size_t>(keys.size(), 6);
      for (std::size_t i = 0; i < shown; ++i) {
        msg += " " + keys[i];
      }
      if (shown < keys.size()) {
        msg += " ...";
      }
      out.push_back({flag_code(flag), msg});
    }
  }

private:
  std::map<TailFlag, std::vector<std::string>> hits_;
};

void check_moments(const PairIndex& pairs, const std::vector<PairMoments>& moments)
{
  if (moments.size() != pairs.size()) {
    throw Error(ErrorCode::DimensionMismatch, "moment list does not match the pair set");
  }
}

CalibrationTable table_shell(const TailFunctions& tails, const std::vector<PairMoments>& moments,
                             double alpha_plus)
{
  check_moments(tails.pairs(), moments);
  if (!(alpha_plus >= 0.0) || !std::isfinite(alpha_plus)) {
    throw Error(ErrorCode::InvalidArgument, "alpha_plus must be finite and >= 0");
  }
  CalibrationTable table;
  table.alpha_plus = alpha_plus;
  table.pairs = tails.pairs();
  table.moments = moments;
  table.tail.assign(table.pairs.size(), 0.0);
  table.critical.assign(table.pairs.size(), 0.0);
  return table;
}

void fill_base(CalibrationTable& table, const TailFunctions& tails, int base, double level,
               FlagCollector& flags)
{
  table.levels[base] = level;
  for (const std::size_t col : table.pairs.columns_for_base(base)) {
    const TailQuantile tq = tails.quantile(col, level);
    flags.add(tq.flag, table.pairs.pair(col));
    table.tail[col] = tq.value;
    table.critical[col] =
      tq.value + table.alpha_plus * std::sqrt(std::max(0.0, table.moments[col].p_pair));
  }
}

} // namespace

JointDrawMatrix::JointDrawMatrix(PairIndex pairs, Matrix draws, std::uint64_t seed)
  : pairs_(std::move(pairs))
  , draws_(std::move(draws))
  , seed_(seed)
{
  if (draws_.cols() != static_cast<Index>(pairs_.size())) {
    throw Error(ErrorCode::DimensionMismatch, "draw matrix width differs from the pair count");
  }
}

JointDrawMatrix sample_scaled_draws(const ModelFamily& family, const Vector& scales, Index n_sim,
                                    std::uint64_t seed, unsigned threads)
{
  const PairPositions pos = pair_positions(family);
  Matrix draws(n_sim, static_cast<Index>(pos.cols.size()));
  for_each_draw_row(family, scales, n_sim, seed, threads,
                    [&](Index row, const Matrix& u) { fill_pair_norms(pos, u, row, draws); });
  return {family.pairs(), std::move(draws), seed};
}

JointDrawMatrix sample_joint_draws(const ModelFamily& family, const NoiseSpec& noise, Index n_sim,
                                   std::uint64_t seed, unsigned threads)
{
  return sample_scaled_draws(family, noise.std_devs(), n_sim, seed, threads);
}

JointDrawMatrix joint_draws_from_noise(const ModelFamily& family, const Matrix& noise)
{
  if (noise.rows() != family.samples()) {
    throw Error(ErrorCode::DimensionMismatch, "noise matrix must have n rows");
  }
  const PairPositions pos = pair_positions(family);
  Matrix draws(noise.cols(), static_cast<Index>(pos.cols.size()));
  Matrix u;
  for (Index r = 0; r < noise.cols(); ++r) {
    family.reduced_estimates_into(family.noise_basis() * noise.col(r), u);
    fill_pair_norms(pos, u, r, draws);
  }
  return {family.pairs(), std::move(draws), 0};
}

TailFunctions::TailFunctions(const JointDrawMatrix& draws)
  : pairs_(draws.pairs())
  , draws_(draws.values())
  , sorted_(draws.values())
{
  if (sorted_.rows() < 1) {
    throw Error(ErrorCode::InvalidArgument, "draw matrix has no rows");
  }
  for (Index c = 0; c < sorted_.cols(); ++c) {
    std::sort(sorted_.col(c).begin(), sorted_.col(c).end());
  }
}

TailQuantile TailFunctions::quantile(std::size_t column, double t) const
{
  const Index n = sorted_.rows();
  const auto col = sorted_.col(static_cast<Index>(column));
  if (std::isnan(t)) {
    throw Error(ErrorCode::InvalidArgument, "tail level is NaN");
  }
  if (t <= 0.0) {
    return {col(n - 1), TailFlag::FullMass};
  }
  const double tail = std::exp(-t);
  if (tail * static_cast<double>(n) < 1.0) {
    return {col(n - 1), TailFlag::TailTooDeep};
  }
  auto k = static_cast<Index>(std::ceil(-std::expm1(-t) * static_cast<double>(n) - 1e-9));
  k = std::clamp<Index>(k, 1, n);
  const TailFlag flag = (n - k < kMinTailPoints) ? TailFlag::SparseTail : TailFlag::Ok;
  return {col(k - 1), flag};
}

TailQuantile tail_quantile(const JointDrawMatrix& draws, int m, int base, double t)
{
  const auto column = draws.column(m, base);
  const Index n = column.size();
  if (std::isnan(t)) {
    throw Error(ErrorCode::InvalidArgument, "tail level is NaN");
  }
  std::vector<double> sorted(column.begin(), column.end());
  std::sort(sorted.begin(), sorted.end());
  if (t <= 0.0) {
    return {sorted.back(), TailFlag::FullMass};
  }
  if (std::exp(-t) * static_cast<double>(n) < 1.0) {
    return {sorted.back(), TailFlag::TailTooDeep};
  }
  auto k = static_cast<Index>(std::ceil(-std::expm1(-t) * static_cast<double>(n) - 1e-9));
  k = std::clamp<Index>(k, 1, n);
  const TailFlag flag =
    (n - k < TailFunctions::kMinTailPoints) ? TailFlag::SparseTail : TailFlag::Ok;
  return {sorted[static_cast<std::size_t>(k - 1)], flag};
}

Index familywise_exceedances(const TailFunctions& tails, int base, double t)
{
  const auto cols = tails.pairs().columns_for_base(base);
  const Index n = tails.n_sim();
  std::vector<char> hit(static_cast<std::size_t>(n), 0);
  for (const std::size_t c : cols) {
    const double thr = tails.quantile(c, t).value;
    const auto col = tails.draws().col(static_cast<Index>(c));
    for (Index r = 0; r < n; ++r) {
      if (col(r) > thr) {
        hit[static_cast<std::size_t>(r)] = 1;
      }
    }
  }
  return static_cast<Index>(std::count(hit.begin(), hit.end(), 1));
}

double multiplicity_correction(const TailFunctions& tails, int base, double x_level)
{
  const auto cols = tails.pairs().columns_for_base(base);
  if (cols.empty()) {
    throw Error(ErrorCode::MissingPair,
                "model " + std::to_string(base) + " has no larger model to compare against");
  }
  if (cols.size() == 1) {
    return 0.0;
  }
  const double budget = std::floor(std::exp(-x_level) * static_cast<double>(tails.n_sim()) + 1e-9);
  const auto passes = [&](double q) {
    return static_cast<double>(familywise_exceedances(tails, base, x_level + q)) <= budget;
  };
  if (passes(0.0)) {
    return 0.0;
  }
  double lo = 0.0;
  double hi = std::log(static_cast<double>(cols.size())) + 1.0;
  // Bonferroni makes hi pass on any sample; widen defensively all the same.
  while (!passes(hi) && hi < 64.0) {
    lo = hi;
    hi *= 2.0;
  }
  while (hi - lo > kCorrectionResolution) {
    const double mid = 0.5 * (lo + hi);
    if (passes(mid)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

double multiplicity_correction(const JointDrawMatrix& draws, int base, double x_level)
{
  return multiplicity_correction(TailFunctions(draws), base, x_level);
}

const char* to_string(CalibrationMode mode) noexcept
{
  return mode == CalibrationMode::Probabilistic ? "probabilistic" : "power_loss";
}

double CalibrationTable::critical_value(int m, int base) const
{
  return critical.at(pairs.at(m, base));
}

const PairMoments& CalibrationTable::moment(int m, int base) const
{
  return moments.at(pairs.at(m, base));
}

CalibrationTable critical_values(const TailFunctions& tails,
                                 const std::vector<PairMoments>& moments, double x_level,
                                 double alpha_plus)
{
  if (!std::isfinite(x_level)) {
    throw Error(ErrorCode::InvalidArgument, "x_level must be finite");
  }
  CalibrationTable table = table_shell(tails, moments, alpha_plus);
  table.mode = CalibrationMode::Probabilistic;
  table.x_level = x_level;
  FlagCollector flags;
  for (const int base : table.pairs.bases()) {
    const double q = multiplicity_correction(tails, base, x_level);
    table.corrections[base] = q;
    fill_base(table, tails, base, x_level + q, flags);
  }
  flags.emit(table.warnings);
  return table;
}

PowerLossParams power_loss_params(const std::vector<int>& models,
                                  const std::vector<double>& p_single, double a)
{
  if (!(a > 0.0) || !std::isfinite(a)) {
    throw Error(ErrorCode::BadExponent, "power-loss exponent a must be > 0");
  }
  validate_models(models);
  if (p_single.size() != models.size()) {
    throw Error(ErrorCode::DimensionMismatch, "one effective dimension per model is required");
  }
  for (std::size_t k = 0; k < p_single.size(); ++k) {
    if (!(p_single[k] > 0.0) || !std::isfinite(p_single[k])) {
      throw Error(ErrorCode::InvalidArgument, "effective dimensions must be finite and > 0");
    }
    if (k > 0 && p_single[k] < p_single[k - 1] * (1.0 - 1e-12)) {
      throw Error(ErrorCode::InvalidArgument, "effective dimensions must be nondecreasing");
    }
  }
  PowerLossParams out;
  out.a = a;
  out.models = models;
  const double p0 = p_single.front();
  for (const double p : p_single) {
    out.alpha.push_back(std::sqrt(3.0) * std::pow(p / p0, -1.0 - a));
  }
  for (std::size_t k = 0; k + 1 < models.size(); ++k) {
    out.levels[models[k]] = 2.0 * (1.0 + a) * std::log(p_single[k + 1] / p0);
  }
  return out;
}

CalibrationTable power_loss_critical_values(const TailFunctions& tails,
                                            const std::vector<PairMoments>& moments,
                                            const PowerLossParams& params, double alpha_plus)
{
  CalibrationTable table = table_shell(tails, moments, alpha_plus);
  table.mode = CalibrationMode::PowerLoss;
  table.a = params.a;
  FlagCollector flags;
  for (const int base : table.pairs.bases()) {
    const auto it = params.levels.find(base);
    if (it == params.levels.end()) {
      throw Error(ErrorCode::MissingPair, "no power-loss level for model " + std::to_string(base));
    }
    fill_base(table, tails, base, it->second, flags);
  }
  flags.emit(table.warnings);
  return table;
}

CalibrationTable calibrate_from_draws(const JointDrawMatrix& draws,
                                      const std::vector<PairMoments>& pair_moments,
                                      const std::vector<double>& p_single,
                                      const CalibrationSettings& settings)
{
  const TailFunctions tails(draws);
  if (settings.mode == CalibrationMode::Probabilistic) {
    return critical_values(tails, pair_moments, settings.x_level, settings.alpha_plus);
  }
  const auto params = power_loss_params(draws.pairs().models(), p_single, settings.a);
  CalibrationTable table =
    power_loss_critical_values(tails, pair_moments, params, settings.alpha_plus);
  table.x_level = settings.x_level;
  return table;
}

CalibrationTable calibrate_known(const ModelFamily& family, const NoiseSpec& noise,
                                 const CalibrationSettings& settings)
{
  const Vector& var = noise.variances();
  const auto draws = sample_joint_draws(family, noise, settings.n_sim, settings.seed,
                                        settings.threads);
  std::vector<double> p_single;
  if (settings.mode == CalibrationMode::PowerLoss) {
    for (const auto& mom : single_model_moments(family, var)) {
      p_single.push_back(mom.p_pair);
    }
  }
  return calibrate_from_draws(draws, all_pair_moments(family, var), p_single, settings);
}

ExcessRiskEstimate excess_risk_mc(const ModelFamily& family, const NoiseSpec& noise,
                                  const TailFunctions& tails, int m, double x_candidate,
                                  Index n_sim, std::uint64_t seed, unsigned threads)
{
  const std::size_t pos = family.position(m);
  if (pos == 0) {
    throw Error(ErrorCode::InvalidArgument,
                "model " + std::to_string(m) + " has no smaller model in the family");
  }
  if (tails.pairs().models() != family.models()) {
    throw Error(ErrorCode::DimensionMismatch, "tail functions belong to another model list");
  }
  const int pred = family.models()[pos - 1];
  const Vector& var = noise.variances();
  const double p_m = single_model_moments(family, var)[pos].p_pair;
  if (!(p_m > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "model " + std::to_string(m) + " has zero variance");
  }

  std::vector<std::pair<Index, double>> checks;  // (position of m', threshold)
  const auto& pairs = family.pairs();
  for (const std::size_t col : pairs.columns_for_base(pred)) {
    const double thr = x_candidate <= 0.0 ? 0.0 : tails.quantile(col, x_candidate).value;
    checks.emplace_back(static_cast<Index>(*pairs.position(pairs.pair(col).m)), thr);
  }
  const auto pm = static_cast<Index>(pos);
  const auto pp = static_cast<Index>(pos - 1);

  Vector values(n_sim);
  for_each_draw_row(family, noise.std_devs(), n_sim, seed, threads, [&](Index row, const Matrix& u) {
    bool fired = false;
    for (const auto& [k, thr] : checks) {
      if ((u.col(k) - u.col(pp)).norm() > thr) {
        fired = true;
        break;
      }
    }
    values(row) = fired ? std::max(1.0, u.col(pm).squaredNorm() / p_m) : 0.0;
  });

  ExcessRiskEstimate out;
  out.n_sim = n_sim;
  out.mean = values.mean();
  if (n_sim > 1) {
    const double var_hat =
      (values.array() - out.mean).square().sum() / static_cast<double>(n_sim - 1);
    out.std_error = std::sqrt(var_hat / static_cast<double>(n_sim));
  }
  return out;
}

ExcessRiskEstimate excess_risk_mc(const ModelFamily& family, const NoiseSpec& noise, int m,
                                  double x_candidate, Index n_sim, std::uint64_t seed,
                                  unsigned threads)
{
  const TailFunctions tails(sample_joint_draws(family, noise, n_sim, seed, threads));
  return excess_risk_mc(family, noise, tails, m, x_candidate, n_sim, derive_seed(seed, 1), threads);
}

} // namespace sma
