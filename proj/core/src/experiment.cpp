#include "sma/experiment.hpp"

#include "sma/parallel.hpp"
#include "sma/random.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <set>

namespace sma {
namespace {

[[noreturn]] void invalid(const std::string& message)
{
  throw Error(ErrorCode::ConfigInvalid, message);
}

constexpr int kDefaultLargestModel = 37;

const std::set<std::string>& known_keys()
{
  static const std::set<std::string> keys = {
    "n",          "p_max",  "coefficient_rule", "coefficients", "noise_profile",
    "models",     "m_dagger", "x_level",        "alpha_plus",   "n_sim",
    "n_hist",     "seeds",  "weighting",        "mode",         "a",
    "design"};
  return keys;
}

const char* to_string(ExperimentConfig::Weighting w)
{
  switch (w) {
  case ExperimentConfig::Weighting::Prediction: return "prediction";
  case ExperimentConfig::Weighting::Derivative: return "derivative";
  case ExperimentConfig::Weighting::FullVector: return "full_vector";
  }
  return "prediction";
}

NoiseProfile noise_from_json(const Json& j)
{
  NoiseProfile np;
  const std::string kind = j.at("kind").get<std::string>();
  for (const auto& [k, v] : j.items()) {
    static const std::set<std::string> allowed = {"kind", "sigma_lo", "sigma_hi", "sigma",
                                                  "sigmas"};
    if (allowed.count(k) == 0) {
      invalid("unknown noise_profile field '" + k + "'");
    }
  }
  if (kind == "linear") {
    np.kind = NoiseProfile::Kind::Linear;
    np.sigma_lo = j.value("sigma_lo", np.sigma_lo);
    np.sigma_hi = j.value("sigma_hi", np.sigma_hi);
  } else if (kind == "constant") {
    np.kind = NoiseProfile::Kind::Constant;
    np.sigma = j.value("sigma", np.sigma);
  } else if (kind == "explicit") {
    np.kind = NoiseProfile::Kind::Explicit;
    np.sigmas = j.at("sigmas").get<std::vector<double>>();
  } else {
    invalid("unknown noise_profile kind '" + kind + "'");
  }
  return np;
}

Json noise_to_json(const NoiseProfile& np)
{
  switch (np.kind) {
  case NoiseProfile::Kind::Linear:
    return {{"kind", "linear"}, {"sigma_lo", np.sigma_lo}, {"sigma_hi", np.sigma_hi}};
  case NoiseProfile::Kind::Constant:
    return {{"kind", "constant"}, {"sigma", np.sigma}};
  case NoiseProfile::Kind::Explicit:
    return {{"kind", "explicit"}, {"sigmas", np.sigmas}};
  }
  return {};
}

bool positive_finite(double v)
{
  return v > 0.0 && std::isfinite(v);
}

double loss(const ModelFamily& family, int m, const Vector& y, const Vector& target)
{
  return (family.op(m) * y - target).squaredNorm();
}

} // namespace

double NoiseProfile::at(double x, Index i) const
{
  switch (kind) {
  case Kind::Linear: return sigma_lo + (sigma_hi - sigma_lo) * x;
  case Kind::Constant: return sigma;
  case Kind::Explicit: return sigmas.at(static_cast<std::size_t>(i));
  }
  return sigma;
}

void ExperimentConfig::validate()
{
  if (n < 1) {
    invalid("n must be >= 1");
  }
  if (p_max < 1) {
    invalid("p_max must be >= 1");
  }
  const Index pd = design_dim();
  if (models.empty()) {
    const int top = static_cast<int>(std::min<Index>(kDefaultLargestModel, pd));
    for (int m = 1; m <= top; ++m) {
      models.push_back(m);
    }
  }
  try {
    validate_models(models);
  } catch (const Error& e) {
    invalid(e.what());
  }
  if (models.back() > pd) {
    invalid("largest model " + std::to_string(models.back()) + " exceeds min(p_max, n) = " +
            std::to_string(pd));
  }
  if (m_dagger < 1 || m_dagger > models.back()) {
    invalid("m_dagger must lie in [1, max(models)]");
  }
  if (!positive_finite(x_level)) {
    invalid("x_level must be > 0");
  }
  if (!(alpha_plus >= 0.0) || !std::isfinite(alpha_plus)) {
    invalid("alpha_plus must be >= 0");
  }
  if (n_sim < 10) {
    invalid("n_sim must be >= 10");
  }
  if (n_hist < 1) {
    invalid("n_hist must be >= 1");
  }
  if (mode == CalibrationMode::PowerLoss && !positive_finite(a)) {
    invalid("power-loss exponent a must be > 0");
  }
  if (coefficient_rule == Coefficients::Explicit) {
    if (coefficients.empty() || static_cast<Index>(coefficients.size()) > p_max) {
      invalid("explicit coefficients need 1..p_max entries");
    }
    for (const double c : coefficients) {
      if (!std::isfinite(c)) {
        invalid("coefficients must be finite");
      }
    }
  }
  switch (noise_profile.kind) {
  case NoiseProfile::Kind::Linear:
    if (!positive_finite(noise_profile.sigma_lo) || !positive_finite(noise_profile.sigma_hi)) {
      invalid("linear noise profile needs sigma_lo, sigma_hi > 0");
    }
    break;
  case NoiseProfile::Kind::Constant:
    if (!positive_finite(noise_profile.sigma)) {
      invalid("constant noise profile needs sigma > 0");
    }
    break;
  case NoiseProfile::Kind::Explicit:
    if (static_cast<Index>(noise_profile.sigmas.size()) != n) {
      invalid("explicit noise profile needs n standard deviations");
    }
    for (const double s : noise_profile.sigmas) {
      if (!positive_finite(s)) {
        invalid("explicit noise standard deviations must be > 0");
      }
    }
    break;
  }
}

ExperimentConfig config_from_json(const Json& j)
{
  if (!j.is_object()) {
    invalid("config must be a JSON object");
  }
  for (const auto& [k, v] : j.items()) {
    if (known_keys().count(k) == 0) {
      invalid("unknown config field '" + k + "'");
    }
  }
  ExperimentConfig c;
  try {
    c.n = j.value("n", c.n);
    c.p_max = j.value("p_max", c.p_max);
    if (j.contains("coefficient_rule")) {
      const auto rule = j.at("coefficient_rule").get<std::string>();
      if (rule == "quadratic_decay") {
        c.coefficient_rule = ExperimentConfig::Coefficients::QuadraticDecay;
      } else if (rule == "explicit") {
        c.coefficient_rule = ExperimentConfig::Coefficients::Explicit;
      } else {
        invalid("unknown coefficient_rule '" + rule + "'");
      }
    }
    if (j.contains("coefficients")) {
      c.coefficients = j.at("coefficients").get<std::vector<double>>();
      if (!j.contains("coefficient_rule")) {
        c.coefficient_rule = ExperimentConfig::Coefficients::Explicit;
      }
    }
    if (j.contains("noise_profile")) {
      c.noise_profile = noise_from_json(j.at("noise_profile"));
    }
    if (j.contains("models")) {
      c.models = j.at("models").get<std::vector<int>>();
    }
    c.m_dagger = j.value("m_dagger", c.m_dagger);
    c.x_level = j.value("x_level", c.x_level);
    c.alpha_plus = j.value("alpha_plus", c.alpha_plus);
    c.n_sim = j.value("n_sim", c.n_sim);
    c.n_hist = j.value("n_hist", c.n_hist);
    if (j.contains("seeds")) {
      const Json& s = j.at("seeds");
      for (const auto& [k, v] : s.items()) {
        if (k != "data" && k != "noise" && k != "calibration" && k != "bootstrap") {
          invalid("unknown seed '" + k + "'");
        }
      }
      c.seeds.data = s.value("data", c.seeds.data);
      c.seeds.noise = s.value("noise", c.seeds.noise);
      c.seeds.calibration = s.value("calibration", c.seeds.calibration);
      c.seeds.bootstrap = s.value("bootstrap", c.seeds.bootstrap);
    }
    if (j.contains("weighting")) {
      const auto w = j.at("weighting").get<std::string>();
      if (w == "prediction") {
        c.weighting = ExperimentConfig::Weighting::Prediction;
      } else if (w == "derivative") {
        c.weighting = ExperimentConfig::Weighting::Derivative;
      } else if (w == "full_vector") {
        c.weighting = ExperimentConfig::Weighting::FullVector;
      } else {
        invalid("unknown weighting '" + w + "'");
      }
    }
    if (j.contains("mode")) {
      const auto m = j.at("mode").get<std::string>();
      if (m == "prob" || m == "probabilistic") {
        c.mode = CalibrationMode::Probabilistic;
      } else if (m == "power" || m == "power_loss") {
        c.mode = CalibrationMode::PowerLoss;
      } else {
        invalid("unknown mode '" + m + "'");
      }
    }
    c.a = j.value("a", c.a);
    if (j.contains("design")) {
      const auto d = j.at("design").get<std::string>();
      if (d == "grid") {
        c.design = ExperimentConfig::Design::Grid;
      } else if (d == "random_uniform") {
        c.design = ExperimentConfig::Design::RandomUniform;
      } else {
        invalid("unknown design '" + d + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    invalid(std::string("malformed config: ") + e.what());
  }
  c.validate();
  return c;
}

Json to_json(const ExperimentConfig& c)
{
  Json j;
  j["n"] = c.n;
  j["p_max"] = c.p_max;
  j["coefficient_rule"] =
    c.coefficient_rule == ExperimentConfig::Coefficients::QuadraticDecay ? "quadratic_decay" : "explicit";
  if (c.coefficient_rule == ExperimentConfig::Coefficients::Explicit) {
    j["coefficients"] = c.coefficients;
  }
  j["noise_profile"] = noise_to_json(c.noise_profile);
  j["models"] = c.models;
  j["m_dagger"] = c.m_dagger;
  j["x_level"] = c.x_level;
  j["alpha_plus"] = c.alpha_plus;
  j["n_sim"] = c.n_sim;
  j["n_hist"] = c.n_hist;
  j["seeds"] = {{"data", c.seeds.data},
                {"noise", c.seeds.noise},
                {"calibration", c.seeds.calibration},
                {"bootstrap", c.seeds.bootstrap}};
  j["weighting"] = to_string(c.weighting);
  j["mode"] = c.mode == CalibrationMode::Probabilistic ? "prob" : "power";
  j["a"] = c.a;
  j["design"] = c.design == ExperimentConfig::Design::Grid ? "grid" : "random_uniform";
  return j;
}

double fourier(Index j, double x)
{
  if (j < 1) {
    throw Error(ErrorCode::InvalidArgument, "basis index must be >= 1");
  }
  if (j == 1) {
    return 1.0;
  }
  const double k = static_cast<double>(j / 2);
  const double arg = 2.0 * std::numbers::pi * k * x;
  return std::numbers::sqrt2 * (j % 2 == 0 ? std::cos(arg) : std::sin(arg));
}

double fourier_derivative(Index j, double x)
{
  if (j < 1) {
    throw Error(ErrorCode::InvalidArgument, "basis index must be >= 1");
  }
  if (j == 1) {
    return 0.0;
  }
  const double w = 2.0 * std::numbers::pi * static_cast<double>(j / 2);
  const double arg = w * x;
  return std::numbers::sqrt2 * w * (j % 2 == 0 ? -std::sin(arg) : std::cos(arg));
}

Scenario generate_scenario(const ExperimentConfig& config)
{
  ExperimentConfig c = config;
  c.validate();
  const Index n = c.n;
  const Index pd = c.design_dim();

  Vector grid(n);
  if (c.design == ExperimentConfig::Design::Grid) {
    for (Index i = 0; i < n; ++i) {
      grid(i) = (static_cast<double>(i) + 0.5) / static_cast<double>(n);
    }
  } else {
    Engine eng = row_engine(c.seeds.data, 1);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (Index i = 0; i < n; ++i) {
      grid(i) = unif(eng);
    }
    std::sort(grid.begin(), grid.end());
  }

  Vector coef;
  if (c.coefficient_rule == ExperimentConfig::Coefficients::QuadraticDecay) {
    coef.resize(c.p_max);
    fill_standard_normal(c.seeds.data, 0,
                         std::span<double>(coef.data(), static_cast<std::size_t>(c.p_max)));
    for (Index j = 11; j <= c.p_max; ++j) {
      const double d = static_cast<double>(j - 10);
      coef(j - 1) /= d * d;
    }
  } else {
    coef = Eigen::Map<const Vector>(c.coefficients.data(),
                                    static_cast<Index>(c.coefficients.size()));
  }

  Vector f = Vector::Zero(n);
  Matrix psi(pd, n);
  Vector sigmas(n);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (Index i = 0; i < n; ++i) {
    const double x = grid(i);
    for (Index j = 1; j <= coef.size(); ++j) {
      f(i) += coef(j - 1) * fourier(j, x);
    }
    for (Index j = 1; j <= pd; ++j) {
      psi(j - 1, i) = fourier(j, x) * scale;
    }
    sigmas(i) = c.noise_profile.at(x, i);
  }
  return Scenario{std::move(grid), DesignMatrix(std::move(psi)), std::move(coef), std::move(f),
                  sigmas, NoiseSpec::known(sigmas.array().square().matrix())};
}

ModelFamily build_family(const ExperimentConfig& config, const Scenario& scenario)
{
  std::vector<int> models = config.models;
  if (models.empty()) {
    ExperimentConfig c = config;
    c.validate();
    models = c.models;
  }
  switch (config.weighting) {
  case ExperimentConfig::Weighting::Prediction:
    return {scenario.design, WeightingScheme::prediction(1.0), models};
  case ExperimentConfig::Weighting::FullVector:
    return {scenario.design, WeightingScheme::full_vector(), models};
  case ExperimentConfig::Weighting::Derivative: {
    const Index n = scenario.design.samples();
    const Index pd = scenario.design.features();
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    Matrix w(n, pd);
    for (Index i = 0; i < n; ++i) {
      for (Index j = 1; j <= pd; ++j) {
        w(i, j - 1) = fourier_derivative(j, scenario.grid(i)) * scale;
      }
    }
    return {scenario.design, WeightingScheme::custom(std::move(w)), models};
  }
  }
  throw Error(ErrorCode::ConfigInvalid, "unknown weighting");
}

Vector replicate_response(const ExperimentConfig& config, const Scenario& scenario,
                          Index replicate)
{
  const Index n = scenario.f_true.size();
  Vector g(n);
  fill_standard_normal(config.seeds.noise, static_cast<std::uint64_t>(replicate),
                       std::span<double>(g.data(), static_cast<std::size_t>(n)));
  return scenario.f_true + scenario.sigmas.cwiseProduct(g);
}

CalibrationSettings calibration_settings(const ExperimentConfig& config, std::uint64_t seed,
                                         unsigned threads)
{
  CalibrationSettings s;
  s.x_level = config.x_level;
  s.alpha_plus = config.alpha_plus;
  s.mode = config.mode;
  s.a = config.a;
  s.n_sim = config.n_sim;
  s.seed = seed;
  s.threads = threads;
  return s;
}

ComparisonResult run_comparison(const ExperimentConfig& config_in, unsigned threads)
{
  ExperimentConfig config = config_in;
  config.validate();
  const Scenario sc = generate_scenario(config);
  const ModelFamily family = build_family(config, sc);

  ComparisonResult out;
  out.m_oracle = oracle_index(family, sc.f_true, sc.noise, config.alpha_plus, config.mode);
  out.known_table =
    calibrate_known(family, sc.noise, calibration_settings(config, config.seeds.calibration, threads));
  const Vector target = family.weighting() * best_linear_fit(sc.design, sc.f_true);

  out.records.resize(static_cast<std::size_t>(config.n_hist));
  parallel_for(out.records.size(), threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t r = begin; r < end; ++r) {
      ReplicateRecord& rec = out.records[r];
      rec.replicate = static_cast<Index>(r);
      rec.bootstrap_seed = derive_seed(config.seeds.bootstrap, r);
      const Vector y = replicate_response(config, sc, rec.replicate);
      const TestStatistics stats = test_statistics(family, y);
      rec.m_oracle = out.m_oracle;
      rec.m_sma_known = sma_select(stats, out.known_table).m_hat;
      rec.loss_oracle = loss(family, rec.m_oracle, y, target);
      rec.loss_known = loss(family, rec.m_sma_known, y, target);
      try {
        const auto pre = presmooth(family, y, config.m_dagger);
        const auto boot = bootstrap_calibrate(family, pre.residuals,
                                              calibration_settings(config, rec.bootstrap_seed, 1));
        rec.m_sma_boot = sma_select(stats, boot).m_hat;
        rec.loss_boot = loss(family, rec.m_sma_boot, y, target);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::AllZeroResiduals) {
          throw;
        }
        rec.m_sma_boot = 0;
        rec.loss_boot = std::numeric_limits<double>::quiet_NaN();
        rec.boot_status = "all_zero_residuals";
      }
    }
  });
  return out;
}

void write_results_csv(std::ostream& out, const std::vector<ReplicateRecord>& records)
{
  out << "replicate,bootstrap_seed,m_oracle,m_sma_known,m_sma_boot,loss_oracle,loss_known,"
         "loss_boot,boot_status\n";
  for (const auto& r : records) {
    out << r.replicate << ',' << r.bootstrap_seed << ',' << r.m_oracle << ',' << r.m_sma_known
        << ',' << r.m_sma_boot << ',' << format_double(r.loss_oracle) << ','
        << format_double(r.loss_known) << ',' << format_double(r.loss_boot) << ','
        << r.boot_status << '\n';
  }
}

RatioTable quantile_ratios(const CalibrationTable& known, const BootstrapCalibrationTable& boot)
{
  const CalibrationTable& b = boot.table;
  if (known.pairs.models() != b.pairs.models()) {
    throw Error(ErrorCode::DimensionMismatch, "ratio tables cover different model lists");
  }
  RatioTable out;
  out.pairs = known.pairs;
  double sum = 0.0;
  for (std::size_t c = 0; c < known.pairs.size(); ++c) {
    const double zk = known.critical[c];
    const double zb = b.critical[c];
    const double r = (zb / zk) * (zb / zk);
    out.ratio.push_back(r);
    out.z_known.push_back(zk);
    out.z_boot.push_back(zb);
    out.p_known.push_back(known.moments[c].p_pair);
    out.p_boot.push_back(boot.p_boot[c]);
    sum += r;
  }
  if (!out.ratio.empty()) {
    out.min = *std::min_element(out.ratio.begin(), out.ratio.end());
    out.max = *std::max_element(out.ratio.begin(), out.ratio.end());
    out.mean = sum / static_cast<double>(out.ratio.size());
  }
  return out;
}

RatioTable quantile_ratio_table(const ExperimentConfig& config_in, unsigned threads)
{
  ExperimentConfig config = config_in;
  config.validate();
  const Scenario sc = generate_scenario(config);
  const ModelFamily family = build_family(config, sc);
  const auto known =
    calibrate_known(family, sc.noise, calibration_settings(config, config.seeds.calibration, threads));
  const Vector y = replicate_response(config, sc, 0);
  const auto pre = presmooth(family, y, config.m_dagger);
  const auto boot = bootstrap_calibrate(
    family, pre.residuals, calibration_settings(config, derive_seed(config.seeds.bootstrap, 0), threads));
  return quantile_ratios(known, boot);
}

void write_ratios_csv(std::ostream& out, const RatioTable& table)
{
  out << "m,base,ratio,z_known,z_boot,p_known,p_boot\n";
  for (std::size_t c = 0; c < table.pairs.size(); ++c) {
    const auto& pr = table.pairs.pair(c);
    out << pr.m << ',' << pr.base << ',' << format_double(table.ratio[c]) << ','
        << format_double(table.z_known[c]) << ',' << format_double(table.z_boot[c]) << ','
        << format_double(table.p_known[c]) << ',' << format_double(table.p_boot[c]) << '\n';
  }
}

std::vector<SweepRecord> mdagger_sweep(const ExperimentConfig& config_in,
                                       const std::vector<int>& m_daggers, unsigned threads)
{
  ExperimentConfig config = config_in;
  config.validate();
  const Scenario sc = generate_scenario(config);
  const ModelFamily family = build_family(config, sc);
  for (const int md : m_daggers) {
    if (md < 1 || md > config.design_dim()) {
      invalid("sweep m_dagger " + std::to_string(md) + " outside [1, min(p_max, n)]");
    }
  }
  const auto known =
    calibrate_known(family, sc.noise, calibration_settings(config, config.seeds.calibration, threads));
  const Vector y = replicate_response(config, sc, 0);
  const TestStatistics stats = test_statistics(family, y);
  const std::uint64_t seed = derive_seed(config.seeds.bootstrap, 0);

  std::vector<SweepRecord> out(m_daggers.size());
  parallel_for(out.size(), threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) {
      SweepRecord& rec = out[k];
      rec.m_dagger = m_daggers[k];
      try {
        const auto pre = presmooth(family, y, rec.m_dagger);
        const auto boot =
          bootstrap_calibrate(family, pre.residuals, calibration_settings(config, seed, 1));
        rec.m_hat_boot = sma_select(stats, boot).m_hat;
        const RatioTable ratios = quantile_ratios(known, boot);
        rec.ratio_min = ratios.min;
        rec.ratio_mean = ratios.mean;
        rec.ratio_max = ratios.max;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::AllZeroResiduals) {
          throw;
        }
        rec.status = "all_zero_residuals";
        rec.ratio_min = rec.ratio_mean = rec.ratio_max = std::numeric_limits<double>::quiet_NaN();
      }
    }
  });
  return out;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRecord>& records)
{
  out << "m_dagger,m_hat_boot,ratio_min,ratio_mean,ratio_max,status\n";
  for (const auto& r : records) {
    out << r.m_dagger << ',' << r.m_hat_boot << ',' << format_double(r.ratio_min) << ','
        << format_double(r.ratio_mean) << ',' << format_double(r.ratio_max) << ',' << r.status
        << '\n';
  }
}

} // namespace sma
