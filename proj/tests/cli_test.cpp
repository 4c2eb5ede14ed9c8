#include <sys/wait.h>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "cli.hpp"

namespace optrec {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

const fs::path kConfigs = OPTREC_CONFIG_DIR;

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    static std::atomic<int> counter{0};
    dir_ = fs::temp_directory_path() /
           ("optrec_cli_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int run(std::vector<std::string> args) {
    out_.str("");
    err_.str("");
    args.insert(args.begin(), "optrec");
    return cli::run(args, out_, err_);
  }

  fs::path write_config(const std::string& name, const json& doc) {
    const fs::path p = dir_ / name;
    std::ofstream(p) << doc.dump(2);
    return p;
  }

  static json read_json(const fs::path& p) {
    std::ifstream in(p);
    return json::parse(in);
  }

  static std::string read_text(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  bool leftover_tmp() const {
    for (const auto& e : fs::recursive_directory_iterator(dir_)) {
      if (e.path().extension() == ".tmp") return true;
    }
    return false;
  }

  fs::path dir_;
  std::ostringstream out_;
  std::ostringstream err_;
};

int exit_status(const std::string& command) {
  const int status = std::system(command.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST_F(Cli, LinearSolveSucceeds) {
  const fs::path cfg = kConfigs / "linear_poisson_1d.json";
  ASSERT_EQ(run({"solve", "--config", cfg.string(), "--out", dir_.string()}), cli::kOk) << err_.str();
  const json doc = read_json(dir_ / "linear_poisson_1d.solution.json");
  EXPECT_TRUE(doc.at("report").at("converged").get<bool>());
  EXPECT_EQ(doc.at("coefficients").size(), doc.at("basis").size());
  EXPECT_LE(doc.at("kkt").at("feasibility").get<double>(), 1e-8);
  EXPECT_EQ(doc.at("config").at("case"), "linear_poisson_1d");
  EXPECT_FALSE(leftover_tmp());
}

TEST_F(Cli, NegativeLengthscaleIsInputError) {
  const auto cfg = write_config("bad.json", {{"case", "cubic_dirichlet_1d"}, {"kernel", {{"lengthscale", -0.2}}}});
  EXPECT_EQ(run({"solve", "--config", cfg.string(), "--out", dir_.string()}), cli::kInputError);
  EXPECT_NE(err_.str().find("kernel.lengthscale"), std::string::npos) << err_.str();
}

TEST_F(Cli, UnknownKeyIsInputError) {
  const auto cfg = write_config("bad.json", {{"case", "cubic_dirichlet_1d"}, {"solver", {{"max_iter", 10}}}});
  EXPECT_EQ(run({"solve", "--config", cfg.string()}), cli::kInputError);
  EXPECT_NE(err_.str().find("solver.max_iter: unknown key"), std::string::npos) << err_.str();
}

TEST_F(Cli, EmptySweepIsInputError) {
  const auto cfg = write_config("bad.json", {{"case", "cubic_dirichlet_1d"},
                                             {"sweep", {{"parameter", "N"}, {"values", json::array()}}}});
  EXPECT_EQ(run({"study", "--config", cfg.string(), "--out", dir_.string()}), cli::kInputError);
  EXPECT_NE(err_.str().find("sweep.values"), std::string::npos) << err_.str();
}

TEST_F(Cli, MissingOrUnreadableConfigIsInputError) {
  EXPECT_EQ(run({"solve"}), cli::kInputError);
  EXPECT_EQ(run({"solve", "--config", (dir_ / "absent.json").string()}), cli::kInputError);
  std::ofstream(dir_ / "broken.json") << "{ not json";
  EXPECT_EQ(run({"solve", "--config", (dir_ / "broken.json").string()}), cli::kInputError);
  EXPECT_NE(err_.str().find("broken.json"), std::string::npos);
  EXPECT_EQ(run({"solve", "--config", (kConfigs / "linear_poisson_1d.json").string(), "--threads", "0"}),
            cli::kInputError);
}

TEST_F(Cli, ContradictoryDataReportsNonConvergence) {
  const json extra = json::array({{{"point", {0.5}}, {"target", 0.0}, {"tolerance", 0.0}},
                                  {{"point", {0.5}}, {"target", 1.0}, {"tolerance", 0.0}}});
  const auto cfg = write_config("contradiction.json", {{"case", "cubic_dirichlet_1d"},
                                                       {"measurements", {{"count", 5}, {"extra", extra}}},
                                                       {"solver", {{"max_iters", 30}}},
                                                       {"output", {{"solution", "contradiction.json.out"}}}});
  EXPECT_EQ(run({"solve", "--config", cfg.string(), "--out", dir_.string()}), cli::kNotConverged);
  const json doc = read_json(dir_ / "contradiction.json.out");
  EXPECT_FALSE(doc.at("report").at("converged").get<bool>());
  EXPECT_GT(doc.at("report").at("final_constraint_violation").get<double>(), 0.1);
}

TEST_F(Cli, StudyWritesCsvAndReproducesFromEmbeddedConfig) {
  const fs::path cfg = kConfigs / "vary_N_cubic_1d.json";
  ASSERT_EQ(run({"study", "--config", cfg.string(), "--out", dir_.string()}), cli::kOk) << err_.str();
  const std::string csv = read_text(dir_ / "vary_N.csv");
  std::istringstream lines(csv);
  std::string line;
  int count = 0;
  std::getline(lines, line);
  EXPECT_EQ(line, "control,L2,Linf,norm,kkt,violation,converged,seconds");
  while (std::getline(lines, line)) ++count;
  EXPECT_EQ(count, 4);

  const json doc = read_json(dir_ / "vary_N.json");
  ASSERT_EQ(doc.at("rows").size(), 4U);
  const fs::path again = dir_ / "again";
  const auto embedded = write_config("embedded.json", doc.at("config"));
  ASSERT_EQ(run({"study", "--config", embedded.string(), "--out", again.string()}), cli::kOk) << err_.str();
  EXPECT_EQ(read_text(again / "vary_N.csv"), csv);
  EXPECT_FALSE(leftover_tmp());
}

TEST_F(Cli, SeedOverrideIsRecorded) {
  const fs::path cfg = kConfigs / "linear_poisson_1d.json";
  ASSERT_EQ(run({"solve", "--config", cfg.string(), "--out", dir_.string(), "--seed", "7"}), cli::kOk);
  EXPECT_EQ(read_json(dir_ / "linear_poisson_1d.solution.json").at("config").at("solver").at("seed"), 7);
}

TEST_F(Cli, ValidateKernelPasses) {
  EXPECT_EQ(run({"validate-kernel", "--config", (kConfigs / "validate_gaussian.json").string()}), cli::kOk);
  EXPECT_NE(out_.str().find("all operator pairs passed"), std::string::npos);
}

TEST_F(Cli, CorruptedDerivativeIsCaughtByBinary) {
  const std::string config = (kConfigs / "validate_gaussian.json").string();
  const std::string sink = " > " + (dir_ / "log.txt").string() + " 2>&1";
  EXPECT_EQ(exit_status(std::string(OPTREC_CLI_PATH) + " validate-kernel --config " + config + sink), 0);
  EXPECT_EQ(exit_status(std::string(OPTREC_CORRUPT_CLI_PATH) + " validate-kernel --config " + config + sink), 2);
  EXPECT_NE(read_text(dir_ / "log.txt").find("FAIL"), std::string::npos);
}

}  // namespace
}  // namespace optrec
