#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

int run(const std::string& args)
{
  const std::string cmd = std::string(SMA_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p)
{
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Cli : public ::testing::Test {
protected:
  void SetUp() override
  {
    dir_ = fs::temp_directory_path() /
           ("sma_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    std::ofstream(dir_ / "config.json")
      << R"({"n": 60, "p_max": 60, "models": [1,2,3,4,5,6,7,8,9,10], "m_dagger": 10,)"
      << R"( "n_sim": 300, "n_hist": 4})";
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string common() const
  {
    return "--config " + (dir_ / "config.json").string() + " --out " + dir_.string();
  }

  fs::path dir_;
};

} // namespace

TEST_F(Cli, HelpAndVersion)
{
  EXPECT_EQ(run("--help"), 0);
  EXPECT_EQ(run("--version"), 0);
}

TEST_F(Cli, UsageErrorsExitTwo)
{
  EXPECT_EQ(run("nonsense"), 2);
  EXPECT_EQ(run("simulate --mode wrong"), 2);
  std::ofstream(dir_ / "bad.json") << R"({"unknown_field": 1})";
  EXPECT_EQ(run("simulate --config " + (dir_ / "bad.json").string() + " --out " + dir_.string()), 2);
  std::ofstream(dir_ / "broken.json") << "{ not json";
  EXPECT_EQ(run("simulate --config " + (dir_ / "broken.json").string()), 2);
  EXPECT_EQ(run("diagnose " + common()), 2);
}

TEST_F(Cli, DegenerateBootstrapExitsThree)
{
  std::ofstream(dir_ / "tiny.json")
    << R"({"n": 7, "p_max": 7, "models": [1,2,3,4,5,6,7], "m_dagger": 7, "n_sim": 50})";
  EXPECT_EQ(run("calibrate --bootstrap --config " + (dir_ / "tiny.json").string() + " --out " +
                dir_.string()),
            3);
}

TEST_F(Cli, SimulateWritesOutputs)
{
  ASSERT_EQ(run("simulate --validate " + common()), 0);
  for (const char* f : {"results.csv", "calibration.json", "meta.json", "diagnostics.json",
                        "risk.csv", "oracle.json"}) {
    EXPECT_TRUE(fs::exists(dir_ / f)) << f;
  }
  const std::string meta = slurp(dir_ / "meta.json");
  EXPECT_NE(meta.find("\"versions\""), std::string::npos);
  EXPECT_NE(meta.find("\"m_dagger\": 10"), std::string::npos);
}

TEST_F(Cli, SimulateIsByteIdenticalAcrossThreads)
{
  const fs::path a = dir_ / "a";
  const fs::path b = dir_ / "b";
  const std::string cfg = "--config " + (dir_ / "config.json").string();
  ASSERT_EQ(run("simulate " + cfg + " --threads 1 --out " + a.string()), 0);
  ASSERT_EQ(run("simulate " + cfg + " --threads 8 --out " + b.string()), 0);
  for (const char* f : {"results.csv", "calibration.json", "meta.json"}) {
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  }
}

TEST_F(Cli, CalibrateSelectAndReuse)
{
  ASSERT_EQ(run("calibrate " + common() + " --draws " + (dir_ / "draws.bin").string()), 0);
  EXPECT_TRUE(fs::exists(dir_ / "draws.bin"));
  const fs::path known = dir_ / "known.json";
  fs::rename(dir_ / "calibration.json", known);
  ASSERT_EQ(run("select " + common() + " --calibration " + known.string()), 0);
  EXPECT_TRUE(fs::exists(dir_ / "selection.json"));

  ASSERT_EQ(run("calibrate --bootstrap " + common()), 0);
  EXPECT_NE(slurp(dir_ / "calibration.json").find("\"p_boot\""), std::string::npos);

  std::ofstream y(dir_ / "y.txt");
  for (int i = 0; i < 60; ++i) {
    y << (i % 7) * 0.25 - 0.5 << '\n';
  }
  y.close();
  ASSERT_EQ(run("select --validate " + common() + " --y " + (dir_ / "y.txt").string()), 0);
  EXPECT_TRUE(fs::exists(dir_ / "selection_known.json"));
  EXPECT_TRUE(fs::exists(dir_ / "oracle.json"));
}

TEST_F(Cli, SweepRatiosDiagnose)
{
  EXPECT_EQ(run("sweep " + common() + " --m-daggers 4 6 10"), 0);
  EXPECT_TRUE(fs::exists(dir_ / "sweep.csv"));
  EXPECT_EQ(run("ratios " + common() + " --mode power --a 0.5"), 0);
  EXPECT_TRUE(fs::exists(dir_ / "ratios.csv"));
  EXPECT_EQ(run("diagnose --validate " + common()), 0);
  EXPECT_TRUE(fs::exists(dir_ / "diagnostics.json"));
}

TEST_F(Cli, BoundsCheckAndSelfTest)
{
  EXPECT_EQ(run("bounds-check --n-mc 20000 --out " + dir_.string()), 0);
  EXPECT_TRUE(fs::exists(dir_ / "bounds.csv"));
  EXPECT_EQ(run("--self-test"), 0);
}
