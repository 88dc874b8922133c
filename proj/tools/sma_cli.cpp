// Command line front end for the SmA experiments.
//
// Exit codes: 0 success, 2 configuration or usage error, 3 numeric failure
// (singular Gram matrix, all-zero residuals, ...), 4 a checked property was
// violated (bounds-check, --self-test).

#include "sma/bootstrap_cal.hpp"
#include "sma/calibration_mc.hpp"
#include "sma/draws_io.hpp"
#include "sma/experiment.hpp"
#include "sma/population_stats.hpp"
#include "sma/random.hpp"
#include "sma/selector.hpp"
#include "sma/serialization.hpp"
#include "sma/theory_bounds.hpp"
#include "sma/version.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitProperty = 4;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed_data;
  std::optional<std::uint64_t> seed_noise;
  std::optional<std::uint64_t> seed_calibration;
  std::optional<std::uint64_t> seed_bootstrap;
  std::string mode;
  std::optional<double> a;
  bool validate = false;
  unsigned threads = 0;
  std::string y_path;
  std::string calibration_path;
  std::string draws_path;
  bool bootstrap = false;
  std::vector<int> m_daggers;
  sma::Index n_mc = 100000;
};

void add_common(CLI::App* cmd, Options& o)
{
  cmd->add_option("--config", o.config_path, "Experiment config (JSON)");
  cmd->add_option("--out", o.out_dir, "Output directory")->capture_default_str();
  cmd->add_option("--seed-data", o.seed_data, "Override seeds.data");
  cmd->add_option("--seed-noise", o.seed_noise, "Override seeds.noise");
  cmd->add_option("--seed-calibration", o.seed_calibration, "Override seeds.calibration");
  cmd->add_option("--seed-bootstrap", o.seed_bootstrap, "Override seeds.bootstrap");
  cmd->add_option("--mode", o.mode, "Calibration mode")->check(CLI::IsMember({"prob", "power"}));
  cmd->add_option("--a", o.a, "Power-loss exponent a > 0");
  cmd->add_flag("--validate", o.validate, "Enable known-truth diagnostics");
  cmd->add_option("--threads", o.threads, "Worker threads (0 = all cores)");
}

sma::ExperimentConfig load_config(const Options& o)
{
  sma::Json j = sma::Json::object();
  if (!o.config_path.empty()) {
    std::ifstream in(o.config_path);
    if (!in) {
      throw sma::Error(sma::ErrorCode::ConfigInvalid, "cannot read " + o.config_path);
    }
    try {
      j = sma::Json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw sma::Error(sma::ErrorCode::ConfigInvalid,
                       o.config_path + " is not valid JSON: " + e.what());
    }
  }
  if (o.seed_data || o.seed_noise || o.seed_calibration || o.seed_bootstrap) {
    sma::Json& seeds = j["seeds"];
    if (o.seed_data) seeds["data"] = *o.seed_data;
    if (o.seed_noise) seeds["noise"] = *o.seed_noise;
    if (o.seed_calibration) seeds["calibration"] = *o.seed_calibration;
    if (o.seed_bootstrap) seeds["bootstrap"] = *o.seed_bootstrap;
  }
  if (!o.mode.empty()) {
    j["mode"] = o.mode;
  }
  if (o.a) {
    j["a"] = *o.a;
  }
  return sma::config_from_json(j);
}

void write_file(const fs::path& path, const std::string& content)
{
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw std::runtime_error("cannot write " + path.string());
  }
  out << content;
}

void write_json(const fs::path& path, const sma::Json& j)
{
  write_file(path, j.dump(2) + "\n");
}

void write_meta(const Options& o, const std::string& command, const sma::ExperimentConfig& cfg,
                sma::Json extra = sma::Json::object())
{
  sma::Json meta;
  meta["command"] = command;
  meta["config"] = sma::to_json(cfg);
  meta["validate"] = o.validate;
  meta["versions"] = {
    {"sma", SMA_VERSION_STRING},
    {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                "." + std::to_string(EIGEN_MINOR_VERSION)},
    {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                        std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                        std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
    {"cli11", CLI11_VERSION},
    {"compiler", __VERSION__}};
  for (auto& [k, v] : extra.items()) {
    meta[k] = v;
  }
  write_json(fs::path(o.out_dir) / "meta.json", meta);
}

sma::Vector read_response(const std::string& path, sma::Index n)
{
  std::ifstream in(path);
  if (!in) {
    throw sma::Error(sma::ErrorCode::ConfigInvalid, "cannot read " + path);
  }
  std::stringstream buf;
  buf << in.rdbuf();
  std::string text = buf.str();
  for (char& ch : text) {
    if (ch == ',' || ch == ';') {
      ch = ' ';
    }
  }
  std::istringstream values(text);
  std::vector<double> y;
  std::string token;
  while (values >> token) {
    try {
      std::size_t used = 0;
      y.push_back(std::stod(token, &used));
      if (used != token.size()) {
        throw std::invalid_argument(token);
      }
    } catch (const std::exception&) {
      throw sma::Error(sma::ErrorCode::ConfigInvalid, "bad number '" + token + "' in " + path);
    }
  }
  if (static_cast<sma::Index>(y.size()) != n) {
    throw sma::Error(sma::ErrorCode::ConfigInvalid,
                     path + " holds " + std::to_string(y.size()) + " values, expected n = " +
                       std::to_string(n));
  }
  return Eigen::Map<sma::Vector>(y.data(), n);
}

struct KnownCalibration {
  sma::JointDrawMatrix draws;
  sma::CalibrationTable table;
};

KnownCalibration known_calibration(const sma::ExperimentConfig& cfg, const sma::ModelFamily& family,
                                   const sma::Scenario& sc, unsigned threads)
{
  const auto settings = sma::calibration_settings(cfg, cfg.seeds.calibration, threads);
  auto draws = sma::sample_joint_draws(family, sc.noise, settings.n_sim, settings.seed, threads);
  std::vector<double> p_single;
  for (const auto& mom : sma::single_model_moments(family, sc.noise.variances())) {
    p_single.push_back(mom.p_pair);
  }
  auto table = sma::calibrate_from_draws(draws, sma::all_pair_moments(family, sc.noise.variances()),
                                         p_single, settings);
  return {std::move(draws), std::move(table)};
}

sma::Vector response_for(const Options& o, const sma::ExperimentConfig& cfg, const sma::Scenario& sc)
{
  return o.y_path.empty() ? sma::replicate_response(cfg, sc, 0) : read_response(o.y_path, cfg.n);
}

void print_warnings(const sma::Warnings& warnings)
{
  for (const auto& w : warnings) {
    std::cerr << "warning [" << sma::to_string(w.code) << "]: " << w.message << '\n';
  }
}

void write_validation(const Options& o, const sma::ExperimentConfig& cfg,
                      const sma::ModelFamily& family, const sma::Scenario& sc, unsigned threads)
{
  const fs::path out(o.out_dir);
  const sma::KnownTruth truth{sc.noise, sc.f_true};
  auto diag = sma::validity_diagnostics(family, truth, cfg.m_dagger, cfg.x_level);
  print_warnings(diag.warnings);
  sma::Json dj = sma::to_json(diag);
  const auto ordering = sma::check_ordering(family, sc.noise);
  dj["ordered"] = ordering.ordered;
  write_json(out / "diagnostics.json", dj);

  const auto known = known_calibration(cfg, family, sc, threads);
  const sma::TailFunctions tails(known.draws);
  write_json(out / "oracle.json", sma::to_json(sma::oracle_report(family, truth, known.table, tails)));

  std::ostringstream risk;
  sma::write_risk_csv(risk, sma::risk_profile(family, sc.f_true, sc.noise));
  write_file(out / "risk.csv", risk.str());
}

int cmd_calibrate(const Options& o)
{
  const auto cfg = load_config(o);
  const auto sc = sma::generate_scenario(cfg);
  const auto family = sma::build_family(cfg, sc);
  const fs::path out(o.out_dir);
  if (o.bootstrap) {
    const sma::Vector y = response_for(o, cfg, sc);
    const auto pre = sma::presmooth(family, y, cfg.m_dagger);
    const auto seed = sma::derive_seed(cfg.seeds.bootstrap, 0);
    const auto draws = sma::bootstrap_joint_draws(family, pre.residuals, cfg.n_sim, seed, o.threads);
    if (!o.draws_path.empty()) {
      sma::write_draws(o.draws_path, draws);
    }
    const auto boot =
      sma::bootstrap_calibrate(family, pre.residuals, sma::calibration_settings(cfg, seed, o.threads));
    print_warnings(boot.table.warnings);
    write_json(out / "calibration.json", sma::to_json(boot));
  } else {
    const auto known = known_calibration(cfg, family, sc, o.threads);
    if (!o.draws_path.empty()) {
      sma::write_draws(o.draws_path, known.draws);
    }
    print_warnings(known.table.warnings);
    write_json(out / "calibration.json", sma::to_json(known.table));
  }
  write_meta(o, "calibrate", cfg, {{"bootstrap", o.bootstrap}});
  std::cout << "calibration written to " << (out / "calibration.json").string() << '\n';
  return kExitOk;
}

int cmd_select(const Options& o)
{
  const auto cfg = load_config(o);
  const auto sc = sma::generate_scenario(cfg);
  const auto family = sma::build_family(cfg, sc);
  const fs::path out(o.out_dir);
  const sma::Vector y = response_for(o, cfg, sc);
  const auto stats = sma::test_statistics(family, y);

  sma::SelectionResult result;
  if (!o.calibration_path.empty()) {
    std::ifstream in(o.calibration_path);
    if (!in) {
      throw sma::Error(sma::ErrorCode::ConfigInvalid, "cannot read " + o.calibration_path);
    }
    sma::Json j;
    try {
      j = sma::Json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw sma::Error(sma::ErrorCode::ConfigInvalid, e.what());
    }
    result = sma::sma_select(stats, sma::calibration_from_json(j));
  } else {
    const auto pre = sma::presmooth(family, y, cfg.m_dagger);
    const auto boot = sma::bootstrap_calibrate(
      family, pre.residuals,
      sma::calibration_settings(cfg, sma::derive_seed(cfg.seeds.bootstrap, 0), o.threads));
    print_warnings(boot.table.warnings);
    result = sma::sma_select(stats, boot);
  }
  write_json(out / "selection.json", sma::to_json(result));
  if (o.validate) {
    const auto known = known_calibration(cfg, family, sc, o.threads);
    write_json(out / "selection_known.json", sma::to_json(sma::sma_select(stats, known.table)));
    write_validation(o, cfg, family, sc, o.threads);
  }
  write_meta(o, "select", cfg, {{"response", o.y_path.empty() ? "replicate 0" : o.y_path}});
  std::cout << "m_hat = " << result.m_hat << '\n';
  return kExitOk;
}

int cmd_simulate(const Options& o)
{
  const auto cfg = load_config(o);
  const fs::path out(o.out_dir);
  const auto result = sma::run_comparison(cfg, o.threads);
  std::ostringstream csv;
  sma::write_results_csv(csv, result.records);
  write_file(out / "results.csv", csv.str());
  write_json(out / "calibration.json", sma::to_json(result.known_table));
  if (o.validate) {
    const auto sc = sma::generate_scenario(cfg);
    const auto family = sma::build_family(cfg, sc);
    write_validation(o, cfg, family, sc, o.threads);
  }
  write_meta(o, "simulate", cfg, {{"m_oracle", result.m_oracle}});
  std::cout << "simulated " << result.records.size() << " replicates (m_oracle = "
            << result.m_oracle << ")\n";
  return kExitOk;
}

int cmd_sweep(const Options& o)
{
  const auto cfg = load_config(o);
  const std::vector<int> list = o.m_daggers.empty() ? cfg.models : o.m_daggers;
  const auto records = sma::mdagger_sweep(cfg, list, o.threads);
  std::ostringstream csv;
  sma::write_sweep_csv(csv, records);
  write_file(fs::path(o.out_dir) / "sweep.csv", csv.str());
  write_meta(o, "sweep", cfg, {{"m_daggers", list}});
  std::cout << "swept " << records.size() << " presmoothing dimensions\n";
  return kExitOk;
}

int cmd_ratios(const Options& o)
{
  const auto cfg = load_config(o);
  const auto table = sma::quantile_ratio_table(cfg, o.threads);
  std::ostringstream csv;
  sma::write_ratios_csv(csv, table);
  write_file(fs::path(o.out_dir) / "ratios.csv", csv.str());
  write_meta(o, "ratios", cfg,
             {{"ratio_summary", {{"min", table.min}, {"mean", table.mean}, {"max", table.max}}}});
  std::cout << "ratio min/mean/max = " << table.min << " / " << table.mean << " / " << table.max
            << '\n';
  return kExitOk;
}

int cmd_diagnose(const Options& o)
{
  if (!o.validate) {
    throw UsageError("diagnose uses the true f* and noise; pass --validate to confirm");
  }
  const auto cfg = load_config(o);
  const auto sc = sma::generate_scenario(cfg);
  const auto family = sma::build_family(cfg, sc);
  write_validation(o, cfg, family, sc, o.threads);
  write_meta(o, "diagnose", cfg);
  std::cout << "diagnostics written to " << (fs::path(o.out_dir) / "diagnostics.json").string()
            << '\n';
  return kExitOk;
}

struct BoundsCase {
  std::string name;
  sma::Vector spectrum;
};

std::vector<BoundsCase> bounds_grid()
{
  sma::Vector mixed(3);
  mixed << 1.0, 0.5, 0.1;
  return {{"I1", sma::Vector::Ones(1)},
          {"I2", sma::Vector::Ones(2)},
          {"I5", sma::Vector::Ones(5)},
          {"diag(1,0.5,0.1)", mixed}};
}

int cmd_bounds_check(const Options& o)
{
  const std::uint64_t seed = o.seed_calibration.value_or(3);
  std::ostringstream csv;
  csv << "B,x,upper,lower,upper_freq,lower_freq,allowed,passed\n";
  int failures = 0;
  std::uint64_t cell = 0;
  for (const auto& bc : bounds_grid()) {
    for (const double x : {0.5, 1.0, 2.0, 3.0}) {
      const auto r =
        sma::qf_mc_check(bc.spectrum, x, o.n_mc, sma::derive_seed(seed, cell++), o.threads);
      csv << '"' << bc.name << "\"," << sma::format_double(x) << ','
          << sma::format_double(r.upper) << ',' << sma::format_double(r.lower) << ','
          << sma::format_double(r.upper_frequency()) << ','
          << sma::format_double(r.lower_frequency()) << ',' << sma::format_double(r.allowed)
          << ',' << (r.passed() ? "true" : "false") << '\n';
      if (!r.passed()) {
        ++failures;
        std::cerr << "violation: B = " << bc.name << ", x = " << x << '\n';
      }
    }
  }
  write_file(fs::path(o.out_dir) / "bounds.csv", csv.str());
  std::cout << "bounds-check: " << (16 - failures) << "/16 cells passed\n";
  return failures == 0 ? kExitOk : kExitProperty;
}

// Quick built-in checks against closed forms on the canonical 3-feature toy.
int self_test(unsigned threads)
{
  using namespace sma;
  Matrix psi = Matrix::Zero(3, 4);
  psi(0, 0) = psi(1, 1) = psi(2, 2) = 1.0;
  const ModelFamily toy(DesignMatrix(psi), WeightingScheme::full_vector(), {1, 2, 3});
  const NoiseSpec unit = NoiseSpec::homogeneous(4, 1.0);
  int failures = 0;
  const auto check = [&](bool ok, const std::string& what) {
    std::cout << (ok ? "[PASS] " : "[FAIL] ") << what << '\n';
    failures += ok ? 0 : 1;
  };

  const auto mom = pair_variance(toy, unit, 3, 1);
  check(std::abs(mom.p_pair - 2.0) < 1e-12 && std::abs(mom.lambda_pair - 1.0) < 1e-12,
        "toy moments p(3,1) = 2, lambda(3,1) = 1");

  const auto draws = sample_joint_draws(toy, unit, 40000, 11, threads);
  const TailFunctions tails(draws);
  double worst = 0.0;
  for (const double t : {1.0, 2.0, 3.0}) {
    worst = std::max(worst, std::abs(tails.quantile(3, 1, t).value - std::sqrt(2.0 * t)));
  }
  check(worst <= 0.06, "chi-square(2) tail quantiles within 0.06");

  bool bounds_ok = true;
  std::uint64_t cell = 0;
  for (const auto& bc : bounds_grid()) {
    for (const double x : {0.5, 1.0, 2.0, 3.0}) {
      bounds_ok = bounds_ok && qf_mc_check(bc.spectrum, x, 20000, derive_seed(5, cell++), threads).passed();
    }
  }
  check(bounds_ok, "quadratic-form deviation bounds on 16 cells");

  const ModelFamily pred(DesignMatrix(psi), WeightingScheme::prediction(1.0), {1, 2, 3});
  bool aic_ok = true;
  for (std::uint64_t r = 0; r < 20; ++r) {
    Vector y(4);
    fill_standard_normal(17, r, std::span<double>(y.data(), 4));
    aic_ok = aic_ok && aic_equivalence_check(pred, 1.0, 2.0 * y);
  }
  check(aic_ok, "AIC equivalence on 20 toy responses");
  return failures == 0 ? kExitOk : kExitProperty;
}

int exit_code_for(const sma::Error& e)
{
  switch (e.code()) {
  case sma::ErrorCode::SingularGram:
  case sma::ErrorCode::AllZeroResiduals:
    return kExitNumeric;
  default:
    return kExitConfig;
  }
}

} // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Smallest-accepted ordered model selection"};
  app.set_version_flag("--version", SMA_VERSION_STRING);
  Options o;
  bool run_self_test = false;
  unsigned self_test_threads = 0;
  app.add_flag("--self-test", run_self_test, "Run built-in property checks and exit");
  app.add_option("--threads", self_test_threads, "Worker threads for --self-test");
  app.require_subcommand(0, 1);

  auto* calibrate = app.add_subcommand("calibrate", "Calibrate critical values");
  add_common(calibrate, o);
  calibrate->add_flag("--bootstrap", o.bootstrap, "Wild-bootstrap calibration from a response");
  calibrate->add_option("--y", o.y_path, "Response file (default: simulated replicate 0)");
  calibrate->add_option("--draws", o.draws_path, "Also persist the draw matrix (binary)");

  auto* select = app.add_subcommand("select", "Select a model for one response");
  add_common(select, o);
  select->add_option("--y", o.y_path, "Response file (default: simulated replicate 0)");
  select->add_option("--calibration", o.calibration_path, "Use a stored calibration.json");

  auto* simulate = app.add_subcommand("simulate", "Oracle / known-noise / bootstrap comparison");
  add_common(simulate, o);

  auto* sweep = app.add_subcommand("sweep", "Bootstrap selection across presmoothing dimensions");
  add_common(sweep, o);
  sweep->add_option("--m-daggers", o.m_daggers, "Presmoothing dimensions (default: models)");

  auto* ratios = app.add_subcommand("ratios", "Squared bootstrap / known critical-value ratios");
  add_common(ratios, o);

  auto* diagnose = app.add_subcommand("diagnose", "Bootstrap validity diagnostics (needs --validate)");
  add_common(diagnose, o);

  auto* bounds = app.add_subcommand("bounds-check", "Monte-Carlo check of quadratic-form bounds");
  bounds->add_option("--out", o.out_dir, "Output directory")->capture_default_str();
  bounds->add_option("--n-mc", o.n_mc, "Samples per cell")->check(CLI::PositiveNumber);
  bounds->add_option("--seed-calibration", o.seed_calibration, "Seed for the samples");
  bounds->add_option("--threads", o.threads, "Worker threads (0 = all cores)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (run_self_test) {
      return self_test(self_test_threads);
    }
    if (app.got_subcommand(calibrate)) return cmd_calibrate(o);
    if (app.got_subcommand(select)) return cmd_select(o);
    if (app.got_subcommand(simulate)) return cmd_simulate(o);
    if (app.got_subcommand(sweep)) return cmd_sweep(o);
    if (app.got_subcommand(ratios)) return cmd_ratios(o);
    if (app.got_subcommand(diagnose)) return cmd_diagnose(o);
    if (app.got_subcommand(bounds)) return cmd_bounds_check(o);
    std::cerr << app.help();
    return kExitConfig;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const sma::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumeric;
  }
}
