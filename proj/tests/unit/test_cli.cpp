#include "gdp/estimator.hpp"
#include "gdp/io.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>
#include <unistd.h>

namespace {

namespace fs = std::filesystem;

class Cli : public ::testing::Test {
protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("gdp_cli_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  int run(const std::string& args) const {
    const std::string cmd = std::string(GDP_CLI_PATH) + " " + args + " >" + path("stdout.txt") +
                            " 2>" + path("stderr.txt");
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string slurp(const std::string& file) const {
    std::ifstream in(file);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  fs::path dir_;
};

TEST_F(Cli, SampleIsDeterministic) {
  ASSERT_EQ(run("sample --L 8 --seed 5 --out " + path("a")), 0);
  ASSERT_EQ(run("sample --L 8 --seed 5 --out " + path("b")), 0);
  EXPECT_EQ(slurp(path("a.csv")), slurp(path("b.csv")));
  const auto meta = gdp::read_json(path("a.json"));
  EXPECT_EQ(meta.at("run").at("command"), "sample");
  EXPECT_EQ(meta.at("run").at("config").at("seed"), "5");
  EXPECT_EQ(gdp::read_pattern(path("a")).size(), meta.at("run").at("payload").at("count").get<long>());
}

TEST_F(Cli, EstimateWritesEnvelope) {
  ASSERT_EQ(run("sample --L 10 --seed 2 --out " + path("p")), 0);
  ASSERT_EQ(run("estimate --pattern " + path("p") + " --r 1 --out " + path("e.json")), 0);
  const auto env = gdp::read_json(path("e.json"));
  EXPECT_EQ(env.at("schema_version"), gdp::kSchemaVersion);
  const auto sigma = gdp::matrix_from_json(env.at("payload").at("sigma_hat"));
  gdp::EstimatorConfig cfg;
  cfg.r = 1.0;
  const auto direct = gdp::estimate_scattering(gdp::read_pattern(path("p")), cfg);
  EXPECT_EQ(sigma, direct.sigma_hat);
}

TEST_F(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run("frobnicate"), 2);
  EXPECT_EQ(run(""), 2);
  EXPECT_EQ(run("estimate"), 2);
  EXPECT_EQ(run("reduce --data x.csv --method svd"), 2);
}

TEST_F(Cli, RuntimeErrorsExitOne) {
  EXPECT_EQ(run("estimate --pattern " + path("missing")), 1);
  EXPECT_FALSE(slurp(path("stderr.txt")).empty());
  EXPECT_EQ(run("reduce --data " + path("missing.csv")), 1);
}

TEST_F(Cli, BoundsMatchLibrary) {
  ASSERT_EQ(run("bounds --bernstein --eps 0.2 --R 7 --out " + path("b.json")), 0);
  const auto env = gdp::read_json(path("b.json"));
  EXPECT_DOUBLE_EQ(env.at("payload").at("bernstein").get<double>(), gdp::bernstein_tail(0.2, 7.0, 2));
}

TEST_F(Cli, ReduceAndRoc) {
  const std::string data = std::string(GDP_TEST_DATA) + "/wdbc.csv";
  ASSERT_EQ(run("reduce --data " + data + " --label-column diagnosis --method pca --k 2 --out-dir " +
                path("pca")),
            0);
  EXPECT_TRUE(fs::exists(path("pca/embedding.csv")));
  EXPECT_TRUE(fs::exists(path("pca/scree.csv")));
  ASSERT_EQ(run("roc --embedding " + path("pca/embedding.csv") + " --positive M --out-dir " +
                path("roc")),
            0);
  const double auc = gdp::read_json(path("roc/auc.json")).at("payload").at("auc").get<double>();
  ASSERT_EQ(run("roc --embedding " + path("pca/embedding.csv") + " --positive M --flip --out-dir " +
                path("roc2")),
            0);
  const double flipped = gdp::read_json(path("roc2/auc.json")).at("payload").at("auc").get<double>();
  EXPECT_NEAR(auc + flipped, 1.0, 1e-12);
}

} // namespace
