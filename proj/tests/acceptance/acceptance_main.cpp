// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include "sma/bootstrap_cal.hpp"
#include "sma/calibration_mc.hpp"
#include "sma/experiment.hpp"
#include "sma/population_stats.hpp"
#include "sma/random.hpp"
#include "sma/selector.hpp"
#include "sma/theory_bounds.hpp"

#include <Eigen/QR>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

using namespace sma;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  double budget_s;  // 0 means no runtime limit
  std::function<Outcome()> run;
};

std::string fmt(const char* f, auto... args)
{
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Vector gaussian(Index n, std::uint64_t seed, std::uint64_t row)
{
  Vector v(n);
  fill_standard_normal(seed, row, std::span<double>(v.data(), static_cast<std::size_t>(n)));
  return v;
}

Matrix orthonormal_rows(Index p, Index n, std::uint64_t seed)
{
  Matrix g(n, p);
  for (Index c = 0; c < p; ++c) {
    g.col(c) = gaussian(n, seed, static_cast<std::uint64_t>(c));
  }
  Eigen::HouseholderQR<Matrix> qr(g);
  const Matrix q = qr.householderQ() * Matrix::Identity(n, p);
  return q.transpose();
}

std::vector<int> range(int lo, int hi)
{
  std::vector<int> out;
  for (int m = lo; m <= hi; ++m) {
    out.push_back(m);
  }
  return out;
}

//! p x n Fourier design on the midpoint grid, rows psi_j(x_i) / sqrt(n).
Matrix fourier_design(Index p, Index n)
{
  Matrix psi(p, n);
  for (Index i = 0; i < n; ++i) {
    const double x = (static_cast<double>(i) + 0.5) / static_cast<double>(n);
    for (Index j = 1; j <= p; ++j) {
      psi(j - 1, i) = fourier(j, x) / std::sqrt(static_cast<double>(n));
    }
  }
  return psi;
}

Matrix toy_psi(Index p)
{
  Matrix psi = Matrix::Zero(p, p + 1);
  for (Index i = 0; i < p; ++i) {
    psi(i, i) = 1.0;
  }
  return psi;
}

bool base_accepts(const TestStatistics& s, int base, const std::vector<double>& thresholds)
{
  for (const std::size_t c : s.pairs.columns_for_base(base)) {
    if (s.values[c] > thresholds[c]) {
      return false;
    }
  }
  return true;
}

// 1. Exact moment identities on TOY and 50 random orthonormal-extension designs.
Outcome exact_moments()
{
  double worst = 0.0;
  const auto check = [&](const ModelFamily& fam, double sigma) {
    const auto all = all_pair_moments(fam, Vector::Constant(fam.samples(), sigma * sigma));
    for (std::size_t c = 0; c < all.size(); ++c) {
      const auto& pr = fam.pairs().pair(c);
      const double p = sigma * sigma * (pr.m - pr.base);
      const double l = sigma * sigma;
      worst = std::max({worst, std::abs(all[c].p_pair - p) / p, std::abs(all[c].lambda_pair - l) / l});
    }
  };
  check(ModelFamily(DesignMatrix(toy_psi(3)), WeightingScheme::full_vector(), {1, 2, 3}), 1.0);
  for (std::uint64_t t = 0; t < 50; ++t) {
    const Index p = 2 + static_cast<Index>(t % 7);
    const Index n = p + 3 + static_cast<Index>(t % 11);
    const ModelFamily fam(DesignMatrix(orthonormal_rows(p, n, 1000 + t)),
                          WeightingScheme::full_vector(), range(1, static_cast<int>(p)));
    check(fam, 0.2 + 0.15 * static_cast<double>(t % 13));
  }
  return {worst <= 1e-10, fmt("max relative error %.2e (tol 1e-10)", worst)};
}

// 2. Tail-function oracle against the chi-square(2) closed form.
Outcome tail_oracle()
{
  const ModelFamily fam(DesignMatrix(toy_psi(3)), WeightingScheme::full_vector(), {1, 2, 3});
  const auto draws = sample_joint_draws(fam, NoiseSpec::homogeneous(4, 1.0), 200000, 20240901);
  const TailFunctions tails(draws);
  double worst = 0.0;
  for (const double t : {1.0, 2.0, 3.0}) {
    worst = std::max(worst, std::abs(tails.quantile(3, 1, t).value - std::sqrt(2.0 * t)));
  }
  return {worst <= 0.03, fmt("max |z(t) - sqrt(2t)| = %.4f (tol 0.03)", worst)};
}

struct Harness {
  ModelFamily family;
  NoiseSpec noise;
  Vector f;
};

Harness propagation_harness(const Vector& theta)
{
  constexpr Index n = 100;
  const Matrix psi = fourier_design(10, n);
  Harness h{ModelFamily(DesignMatrix(psi), WeightingScheme::prediction(1.0), range(1, 10)),
            NoiseSpec::homogeneous(n, 1.0), psi.transpose() * theta};
  return h;
}

constexpr Index kReps = 2000;
constexpr double kX = 2.0;

// 3. Propagation: the smallest model is rejected with frequency at most e^{-x}.
Outcome propagation()
{
  const Harness h = propagation_harness(Vector::Zero(10));
  CalibrationSettings s;
  s.x_level = kX;
  s.alpha_plus = 0.0;
  s.n_sim = 20000;
  s.seed = 31;
  const auto table = calibrate_known(h.family, h.noise, s);
  Index rejected = 0;
  for (Index r = 0; r < kReps; ++r) {
    const Vector y = h.f + gaussian(100, 32, static_cast<std::uint64_t>(r));
    rejected += base_accepts(test_statistics(h.family, y), 1, table.critical) ? 0 : 1;
  }
  const double freq = static_cast<double>(rejected) / kReps;
  const double e = std::exp(-kX);
  const double limit = e + 3.0 * std::sqrt(e * (1.0 - e) / kReps);
  return {freq <= limit, fmt("rejection frequency %.4f (limit %.4f)", freq, limit)};
}

struct DeviationRun {
  int m_star = 0;
  double z_bar = 0.0;
  double cap = 0.0;
  double frequency = 0.0;
};

Vector interior_theta()
{
  Vector theta = Vector::Zero(10);
  theta << 4.0, -3.0, 3.5, 2.5, -3.0, 0.6, -0.4, 0.25, 0.0, 0.0;
  return theta;
}

// Shared by criteria 4 and 5: alpha_+ = 1 and a coefficient profile whose oracle is interior.
DeviationRun deviation_harness(std::uint64_t calibration_seed, bool simulate)
{
  const Harness h = propagation_harness(interior_theta());
  CalibrationSettings s;
  s.x_level = kX;
  s.alpha_plus = 1.0;
  s.n_sim = 20000;
  s.seed = calibration_seed;
  const auto table = calibrate_known(h.family, h.noise, s);
  DeviationRun out;
  out.m_star = oracle_index(h.family, h.f, h.noise, 1.0, CalibrationMode::Probabilistic);
  const Payment pay = payment_for_adaptation(h.family, h.noise, out.m_star, table);
  out.z_bar = pay.z_bar;
  out.cap = pay.z_bar_theory;
  if (simulate) {
    Index exceed = 0;
    for (Index r = 0; r < kReps; ++r) {
      const Vector y = h.f + gaussian(100, 41, static_cast<std::uint64_t>(r));
      const auto sel = sma_select(test_statistics(h.family, y), table);
      const double dev = (h.family.estimate(sel.m_hat, y) - h.family.estimate(out.m_star, y)).norm();
      exceed += dev > out.z_bar ? 1 : 0;
    }
    out.frequency = static_cast<double>(exceed) / kReps;
  }
  return out;
}

Outcome oracle_deviation()
{
  const auto run = deviation_harness(40, true);
  const double e = 2.0 * std::exp(-kX);
  const double limit = e + 3.0 * std::sqrt(e * (1.0 - e) / kReps);
  const bool interior = run.m_star > 1 && run.m_star < 10;
  return {interior && run.frequency <= limit,
          fmt("m* = %d, frequency %.4f (limit %.4f)", run.m_star, run.frequency, limit)};
}

// 5. The payment for adaptation respects its closed-form cap for every calibration run.
Outcome payment_cap_check()
{
  double worst = -1e300;
  int runs = 0;
  bool ok = true;
  for (std::uint64_t seed = 40; seed < 60; ++seed) {
    const auto run = deviation_harness(seed, false);
    worst = std::max(worst, run.z_bar - run.cap);
    ok = ok && run.z_bar <= run.cap + 0.05;
    ++runs;
  }
  return {ok, fmt("%d calibration runs, max(Z - cap) = %.4f (slack 0.05)", runs, worst)};
}

// 6. AIC equivalence on random projection instances.
Outcome aic_equivalence()
{
  int agree = 0;
  constexpr int kInstances = 200;
  for (std::uint64_t t = 0; t < kInstances; ++t) {
    const Index p = 1 + static_cast<Index>(t % 6);
    const Index n = p + 1 + static_cast<Index>((t * 7) % 15);
    Matrix psi(p, n);
    for (Index j = 0; j < p; ++j) {
      psi.row(j) = gaussian(n, 5000 + t, static_cast<std::uint64_t>(j)).transpose();
    }
    const double sigma = 0.2 + 0.1 * static_cast<double>((t * 3) % 19);
    const ModelFamily fam(DesignMatrix(psi), WeightingScheme::prediction(1.0), range(1, static_cast<int>(p)));
    const Vector theta = gaussian(p, 6000 + t, 0) * (0.1 * static_cast<double>(t % 5));
    const Vector y = psi.transpose() * theta + sigma * gaussian(n, 7000 + t, 0);
    agree += aic_equivalence_check(fam, sigma, y) ? 1 : 0;
  }
  return {agree == kInstances, fmt("%d/%d instances equivalent", agree, kInstances)};
}

struct BootstrapRegime {
  ModelFamily family;
  NoiseSpec noise;
  Vector f;
  int m_dagger = 20;
};

BootstrapRegime bootstrap_regime()
{
  constexpr Index n = 400;
  const Matrix psi = fourier_design(20, n);
  Vector theta = gaussian(20, 77, 0);
  for (Index j = 10; j < 20; ++j) {
    theta(j) /= static_cast<double>((j - 9) * (j - 9));
  }
  theta *= std::sqrt(static_cast<double>(n));
  return {ModelFamily(DesignMatrix(psi), WeightingScheme::prediction(1.0), range(1, 20)),
          NoiseSpec::homogeneous(n, 1.0), psi.transpose() * theta, 20};
}

// 7. Bootstrap effective dimensions and critical values track the known-noise ones.
Outcome bootstrap_fidelity()
{
  const auto reg = bootstrap_regime();
  const auto diag = validity_diagnostics(reg.family, {reg.noise, reg.f}, reg.m_dagger, kX);
  const Vector y = reg.f + gaussian(400, 88, 0);
  const auto pre = presmooth(reg.family, y, reg.m_dagger);
  CalibrationSettings s;
  s.x_level = kX;
  s.alpha_plus = 1.0;
  s.n_sim = 2000;
  s.seed = 99;
  const auto known = calibrate_known(reg.family, reg.noise, s);
  const auto boot = bootstrap_calibrate(reg.family, pre.residuals, s);

  std::size_t within = 0;
  double lo = 1e300;
  double hi = -1e300;
  bool band = true;
  for (std::size_t c = 0; c < boot.p_boot.size(); ++c) {
    const double p = known.moments[c].p_pair;
    within += std::abs(boot.p_boot[c] / p - 1.0) <= diag.delta_p ? 1 : 0;
    if (p >= 3.0) {
      const double r = std::pow(boot.table.critical[c] / known.critical[c], 2);
      lo = std::min(lo, r);
      hi = std::max(hi, r);
      band = band && r >= 0.64 && r <= 1.56;
    }
  }
  const double share = static_cast<double>(within) / static_cast<double>(boot.p_boot.size());
  return {share >= 0.95 && band,
          fmt("p-ratio within Delta_p = %.3f on %.1f%% of pairs; squared ratios in [%.3f, %.3f] "
              "(band [0.64, 1.56])",
              diag.delta_p, 100.0 * share, lo, hi)};
}

// 8. Family-wise coverage of bootstrap thresholds under the true noise.
Outcome bootstrap_coverage()
{
  const auto reg = bootstrap_regime();
  constexpr Index kBootReps = 500;
  const int base = reg.family.smallest();
  Index covered = 0;
  for (Index r = 0; r < kBootReps; ++r) {
    const Vector eps = gaussian(400, 111, static_cast<std::uint64_t>(r));
    const auto pre = presmooth(reg.family, reg.f + eps, reg.m_dagger);
    const auto boot =
      bootstrap_calibrate(reg.family, pre.residuals, kX, 0.0, 1000, derive_seed(112, r), 0);
    const auto xi = test_statistics(reg.family, eps);
    covered += base_accepts(xi, base, boot.table.tail) ? 1 : 0;
  }
  const double freq = static_cast<double>(covered) / kBootReps;
  const double gap = std::abs(freq - (1.0 - std::exp(-kX)));
  return {gap <= 0.06, fmt("coverage %.4f vs %.4f, gap %.4f (tol 0.06)", freq,
                           1.0 - std::exp(-kX), gap)};
}

// 9. Quadratic-form bound grid with zero violations.
Outcome qf_grid()
{
  Vector mixed(3);
  mixed << 1.0, 0.5, 0.1;
  const std::vector<Vector> spectra{Vector::Ones(1), Vector::Ones(2), Vector::Ones(5), mixed};
  int violations = 0;
  double worst = 0.0;
  std::uint64_t cell = 0;
  for (const auto& s : spectra) {
    for (const double x : {0.5, 1.0, 2.0, 3.0}) {
      const auto r = qf_mc_check(s, x, 100000, derive_seed(909, cell++));
      violations += r.passed() ? 0 : 1;
      worst = std::max({worst, r.upper_frequency() / r.allowed, r.lower_frequency() / r.allowed});
    }
  }
  return {violations == 0,
          fmt("%d violations in 16 cells; max frequency / allowed = %.3f", violations, worst)};
}

// 10. Power-loss levels keep the excess risk below alpha_m.
Outcome power_loss_risk()
{
  const ModelFamily fam(DesignMatrix(toy_psi(6)), WeightingScheme::full_vector(), range(1, 6));
  const auto noise = NoiseSpec::homogeneous(7, 1.0);
  std::vector<double> p_single;
  for (const auto& mom : single_model_moments(fam, noise.variances())) {
    p_single.push_back(mom.p_pair);
  }
  const auto params = power_loss_params(fam.models(), p_single, 1.0);
  const TailFunctions tails(sample_joint_draws(fam, noise, 200000, 1010));
  bool ok = true;
  std::string detail;
  for (std::size_t k = 1; k < fam.size(); ++k) {
    const int m = fam.models()[k];
    const double x_m = params.levels.at(fam.models()[k - 1]);
    const auto est = excess_risk_mc(fam, noise, tails, m, x_m, 200000, 1011);
    const bool pass = est.mean <= params.alpha[k] + 3.0 * est.std_error;
    ok = ok && pass;
    detail += fmt("m=%d: %.4f<=%.4f%s ", m, est.mean, params.alpha[k], pass ? "" : "(!)");
  }
  return {ok, detail};
}

// 11. Byte-identical results.csv across worker counts.
Outcome determinism()
{
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "sma_acceptance_determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::ofstream(dir / "config.json")
    << R"({"n": 120, "p_max": 120, "models": [1,2,3,4,5,6,7,8,9,10,11,12,13,14,15],)"
    << R"( "m_dagger": 15, "n_sim": 500, "n_hist": 12})";
  const auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  std::vector<std::string> outputs;
#ifdef SMA_CLI_PATH
  for (const char* threads : {"1", "8", "1"}) {
    const fs::path out = dir / (std::string("t") + threads + "_" + std::to_string(outputs.size()));
    const std::string cmd = std::string(SMA_CLI_PATH) + " simulate --config " +
                            (dir / "config.json").string() + " --threads " + threads + " --out " +
                            out.string() + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
      return {false, "simulate exited abnormally"};
    }
    outputs.push_back(slurp(out / "results.csv"));
  }
#else
  std::ifstream in(dir / "config.json");
  const auto cfg = config_from_json(Json::parse(in));
  for (const unsigned threads : {1U, 8U, 1U}) {
    std::ostringstream csv;
    write_results_csv(csv, run_comparison(cfg, threads).records);
    outputs.push_back(csv.str());
  }
#endif
  fs::remove_all(dir);
  const bool same = !outputs[0].empty() && outputs[0] == outputs[1] && outputs[1] == outputs[2];
  return {same, fmt("3 runs (1, 8, 1 threads), %zu bytes each, identical=%s", outputs[0].size(),
                    same ? "yes" : "no")};
}

// 12. Bootstrap thresholds scale linearly with the residuals.
Outcome scale_equivariance()
{
  const auto reg = bootstrap_regime();
  const auto pre = presmooth(reg.family, reg.f + gaussian(400, 121, 0), reg.m_dagger);
  const auto base = bootstrap_calibrate(reg.family, pre.residuals, kX, 0.0, 1000, 122, 0);
  double worst = 0.0;
  for (const double c : {0.01, 0.5, 3.7, 1000.0}) {
    const auto scaled = bootstrap_calibrate(reg.family, c * pre.residuals, kX, 0.0, 1000, 122, 0);
    for (std::size_t k = 0; k < base.table.critical.size(); ++k) {
      const double ref = c * base.table.critical[k];
      worst = std::max(worst, std::abs(scaled.table.critical[k] - ref) / ref);
      const double ref_p = c * std::sqrt(base.p_boot[k]);
      worst = std::max(worst, std::abs(std::sqrt(scaled.p_boot[k]) - ref_p) / ref_p);
    }
  }
  return {worst <= 1e-12, fmt("max relative deviation %.2e (tol 1e-12)", worst)};
}

} // namespace

int main()
{
  const std::vector<Criterion> criteria{
    {1, "exact moment identities", 1.0, exact_moments},
    {2, "tail-function oracle", 5.0, tail_oracle},
    {3, "propagation frequency", 60.0, propagation},
    {4, "oracle deviation bound", 60.0, oracle_deviation},
    {5, "payment cap", 0.0, payment_cap_check},
    {6, "AIC equivalence", 10.0, aic_equivalence},
    {7, "bootstrap fidelity", 120.0, bootstrap_fidelity},
    {8, "bootstrap family-wise coverage", 180.0, bootstrap_coverage},
    {9, "quadratic-form bound harness", 30.0, qf_grid},
    {10, "power-loss calibration", 60.0, power_loss_risk},
    {11, "determinism across threads", 0.0, determinism},
    {12, "bootstrap scale equivariance", 0.0, scale_equivariance},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = c.budget_s <= 0.0 || secs < c.budget_s;
    const bool pass = out.pass && in_time;
    failures += pass ? 0 : 1;
    std::string timing = fmt("%.2f s", secs);
    if (c.budget_s > 0.0) {
      timing += fmt(" (< %.0f s%s)", c.budget_s, in_time ? "" : ", OVER BUDGET");
    }
    std::cout << fmt("[%s] AC%02d %s: ", pass ? "PASS" : "FAIL", c.id, c.name.c_str())
              << out.detail << " | " << timing << std::endl;
  }
  std::cout << (failures == 0 ? "all acceptance criteria passed"
                              : fmt("%d acceptance criteria failed", failures))
            << std::endl;
  return failures == 0 ? 0 : 1;
}
