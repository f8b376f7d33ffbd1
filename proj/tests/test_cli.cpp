#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "calderon/experiments.hpp"

using namespace calderon;
namespace fs = std::filesystem;

namespace {

class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = fs::temp_directory_path() / ("calderon_cli_test_" + std::to_string(getpid()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    std::ofstream(dir_ / "gamma.json") << spec::terms({spec::constant(1.0), spec::point_bump(0.5, 1.0, 0.4, 0.8)}).dump();
  }
  static void TearDownTestSuite() { fs::remove_all(dir_); }

  static int cli(const std::string& args) {
    const std::string cmd = std::string(CALDERON_CLI_PATH) + " " + args + " > " + (dir_ / "stdout.txt").string() +
                            " 2> " + (dir_ / "stderr.txt").string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }
  static std::string path(const std::string& name) { return (dir_ / name).string(); }
  static std::string out() { return " --out-dir " + dir_.string(); }

  static fs::path dir_;
};

fs::path Cli::dir_;

}  // namespace

TEST_F(Cli, ForwardBornAndFollowUps) {
  ASSERT_EQ(cli("forward --gamma " + path("gamma.json") + " --nr 16 --ntheta 24 --l-max 8" + out()), 0);
  const DtNReadReport rep = load_dtn(path("dtn.json"));
  EXPECT_EQ(rep.matrix.l_max(), 8);
  EXPECT_EQ(rep.matrix.provenance(), "spectral(16,24)");

  ASSERT_EQ(cli("born --dtn " + path("dtn.json") + " --i-cells 10" + out()), 0);
  const BornReconstruction rec = load_reconstruction(path("born.json"));
  const BornReconstruction ref = born_reconstruct(rep.matrix, Kappa(0.0), BasisSpec(10, 8));
  EXPECT_EQ((rec.coefficients - ref.coefficients).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_TRUE(fs::exists(path("born.csv")));
  EXPECT_TRUE(fs::exists(path("lcurve.csv")));

  EXPECT_EQ(cli("noise --dtn " + path("dtn.json") + " --noise-eps 1e-3 --seed 9" + out()), 0);
  EXPECT_EQ(load_dtn(path("dtn_noisy.json")).matrix.provenance(), "noisy(0.001,9)");
  EXPECT_EQ(cli("lcurve --dtn " + path("dtn.json") + " --i-cells 10" + out()), 0);
  const std::string fourier = "fourier-check --dtn " + path("dtn.json") + " --recon " + path("born.json");
  EXPECT_EQ(cli(fourier + " --moment-order 16 --xi-max 1" + out()), 0);
  EXPECT_TRUE(fs::exists(path("fourier_check.csv")));
  // L = 8 cannot resolve |xi| = 3 within the truncation budget
  EXPECT_EQ(cli(fourier + " --xi-max 3" + out()), 3);
  EXPECT_EQ(cli("iterate --dtn " + path("dtn.json") + " --i-cells 10 --iters 1 --nr 16 --ntheta 24 --gamma " +
                path("gamma.json") + out()),
            0);
  EXPECT_TRUE(fs::exists(path("iterate_1.json")));
  EXPECT_TRUE(fs::exists(path("errors.csv")));
}

TEST_F(Cli, ExperimentFromConfig) {
  Scenario s;
  s.name = "cli";
  s.conductivity = spec::terms({spec::constant(1.0), spec::point_bump(0.5, 1.0, 0.4, 0.8)});
  s.forward = GridSize{16, 24};
  s.work_grid = {16, 24};
  s.i_cells = 10;
  s.l_max = 8;
  std::ofstream(path("scenario.json")) << to_json(s).dump();
  ASSERT_EQ(cli("experiment --config " + path("scenario.json") + out()), 0);
  EXPECT_TRUE(fs::exists(dir_ / "experiment_cli" / "errors.csv"));
}

TEST_F(Cli, ValidationFailuresExitTwo) {
  EXPECT_EQ(cli("experiment 7" + out()), 2);
  EXPECT_EQ(cli("experiment" + out()), 2);
  EXPECT_EQ(cli("born --dtn " + path("missing.json") + out()), 2);
  EXPECT_EQ(cli("forward --gamma " + path("gamma.json") + " --l-max 0" + out()), 2);
  EXPECT_EQ(cli("forward --gamma " + path("gamma.json") + " --nr 16 --ntheta 24 --l-max 12" + out()), 2);
  EXPECT_EQ(cli("born --dtn " + path("dtn.json") + " --lambda -1" + out()), 2);
  EXPECT_EQ(cli("nonsense"), 2);
  save_dtn(path("small.json"), sigma_kappa_dtn(Kappa(0.0), 4));
  EXPECT_EQ(cli("born --dtn " + path("small.json") + " --l-max 6" + out()), 2);
  std::ifstream err(path("stderr.txt"));
  const std::string msg((std::istreambuf_iterator<char>(err)), std::istreambuf_iterator<char>());
  EXPECT_NE(msg.find("config"), std::string::npos);
}

TEST_F(Cli, DivergenceExitsThree) {
  save_dtn(path("negative.json"), sigma_kappa_dtn(Kappa(0.0), 8, -1.0));
  ASSERT_EQ(cli("born --dtn " + path("negative.json") + " --i-cells 10 --lambda 1e-6" + out()), 0);
  EXPECT_EQ(cli("iterate --recon " + path("born.json") + " --iters 2 --nr 16 --ntheta 24" + out()), 3);
}
