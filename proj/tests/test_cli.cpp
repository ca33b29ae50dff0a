#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "clr/cli.hpp"
#include "clr/io.hpp"
#include "clr/optimizer.hpp"
#include "clr/select.hpp"
#include "clr/simulate.hpp"
#include "json.hpp"

namespace {

namespace fs = std::filesystem;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using json = nlohmann::json;

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun run(std::vector<std::string> args) {
  args.insert(args.begin(), "clr");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = clr::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("clr_cli_" + std::string(::testing::UnitTest::GetInstance()
                                         ->current_test_info()
                                         ->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  // Simulated dataset on disk under prefix "s".
  void simulate(int n, int m, int p, int d, int seed) {
    const CliRun r = run({"simulate", "--n", std::to_string(n), "--m",
                       std::to_string(m), "--p", std::to_string(p), "--d",
                       std::to_string(d), "--seed", std::to_string(seed),
                       "--out-prefix", path("s")});
    ASSERT_EQ(r.code, 0) << r.err;
  }

  CliRun fit(const std::vector<std::string>& extra = {}) {
    std::vector<std::string> args = {"fit", "--foreground", path("s_foreground.csv"),
                                     "--background", path("s_background.csv"),
                                     "--response-col", "r", "-d", "1",
                                     "--out", path("m.json")};
    args.insert(args.end(), extra.begin(), extra.end());
    return run(args);
  }

  fs::path dir_;
};

TEST_F(CliTest, SimulateMatchesInMemoryGenerator) {
  simulate(30, 20, 4, 2, 7);
  clr::GenConfig g;
  g.n = 30;
  g.m = 20;
  g.p = 4;
  g.d = 2;
  g.seed = 7;
  const auto sim = clr::generate(g);
  const auto data = clr::io::read_dataset(path("s_foreground.csv"),
                                          path("s_background.csv"), "r");
  EXPECT_EQ(data.X, sim.data.X);
  EXPECT_EQ(data.Y, sim.data.Y);
  EXPECT_EQ(data.r, sim.data.r);
  const auto truth = clr::io::read_model(path("s_truth.json"));
  EXPECT_EQ(truth.params.S, sim.truth.S);
  EXPECT_EQ(truth.params.beta, sim.truth.beta);
  // Same seed, same bytes.
  const std::string before = clr::io::read_text(path("s_foreground.csv"));
  simulate(30, 20, 4, 2, 7);
  EXPECT_EQ(clr::io::read_text(path("s_foreground.csv")), before);
}

TEST_F(CliTest, SimulateNoiselessTruthFile) {
  clr::ModelParams<double> truth = clr::ModelParams<double>::zeros(3, 1);
  truth.S << 1, 2, -1;
  clr::io::write_model(path("t.json"), clr::io::ModelFile::from_params(truth));
  const CliRun r = run({"simulate", "--n", "15", "--m", "10", "--truth", path("t.json"),
                     "--sigma2", "0", "--tau2", "0", "--out-prefix", path("s")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto data = clr::io::read_dataset(path("s_foreground.csv"),
                                          path("s_background.csv"), "r");
  EXPECT_EQ(data.r, VectorXd::Zero(15));
  const VectorXd s = truth.S.col(0) / truth.S.norm();
  const MatrixXd resid = data.X - (data.X * s) * s.transpose();
  EXPECT_LE(resid.cwiseAbs().maxCoeff(), 1e-12);
}

TEST_F(CliTest, SimulateLines) {
  const CliRun r = run({"simulate", "--lines", "--n", "40", "--m", "30", "--image-side",
                     "8", "--seed", "2", "--out-prefix", path("l")});
  ASSERT_EQ(r.code, 0) << r.err;
  clr::LinesConfig cfg;
  cfg.image_side = 8;
  cfg.n_fg = 40;
  cfg.n_bg = 30;
  cfg.seed = 2;
  const auto ref = clr::generate_lines(cfg);
  const auto data = clr::io::read_dataset(path("l_foreground.csv"),
                                          path("l_background.csv"), "r");
  EXPECT_EQ(data.X, ref.X);
  EXPECT_EQ(data.r, ref.r);
  EXPECT_EQ(data.feature_names, ref.feature_names);
}

TEST_F(CliTest, SimulateInvalidSizes) {
  EXPECT_EQ(run({"simulate", "--n", "-3", "--out-prefix", path("s")}).code, 2);
  EXPECT_EQ(run({"simulate", "--p", "2", "--d", "3", "--out-prefix", path("s")}).code, 2);
}

TEST_F(CliTest, FitIsByteDeterministicAndMatchesLibrary) {
  simulate(60, 60, 3, 1, 3);
  const CliRun a = fit();
  ASSERT_EQ(a.code, 0) << a.err;
  const std::string first = clr::io::read_text(path("m.json"));
  ASSERT_EQ(fit().code, 0);
  EXPECT_EQ(clr::io::read_text(path("m.json")), first);

  const json report = json::parse(a.out);
  for (const char* key : {"final_ll", "iterations", "converged", "wall_time_seconds", "train_r2"})
    EXPECT_TRUE(report.contains(key)) << key;

  const auto data = clr::io::read_dataset(path("s_foreground.csv"),
                                          path("s_background.csv"), "r");
  const auto lib = clr::fit(data, clr::FitConfig{});
  EXPECT_EQ(report["final_ll"].get<double>(), lib.final_ll);
  const auto model = clr::io::read_model(path("m.json"));
  EXPECT_EQ(model.params.S, lib.params.S);
  EXPECT_EQ(model.feature_names, data.feature_names);
}

TEST_F(CliTest, FitAlphaZeroMatchesEmptyBackground) {
  simulate(50, 50, 3, 1, 4);
  const CliRun a = fit({"--alpha", "0"});
  ASSERT_EQ(a.code, 0) << a.err;
  clr::io::write_text(path("empty.csv"), "");
  const CliRun b = run({"fit", "--foreground", path("s_foreground.csv"), "--background",
                     path("empty.csv"), "-d", "1", "--alpha", "0", "--out",
                     path("m2.json")});
  ASSERT_EQ(b.code, 0) << b.err;
  EXPECT_EQ(json::parse(a.out)["final_ll"], json::parse(b.out)["final_ll"]);
}

TEST_F(CliTest, FitErrorsMapToExitCodes) {
  simulate(20, 20, 3, 1, 5);
  clr::io::write_text(path("bad.csv"), "f0,f1,f2,r\n1,2,3,4\n1,2,x,4\n");
  CliRun r = run({"fit", "--foreground", path("bad.csv"), "--background",
               path("s_background.csv"), "-d", "1", "--out", path("m.json")});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("bad.csv:3"), std::string::npos) << r.err;

  clr::io::write_text(path("bg4.csv"), "f0,f1,f2,f3\n1,2,3,4\n");
  r = run({"fit", "--foreground", path("s_foreground.csv"), "--background",
           path("bg4.csv"), "-d", "1", "--out", path("m.json")});
  EXPECT_EQ(r.code, 3);

  EXPECT_EQ(fit({"--mode", "newton"}).code, 2);
  EXPECT_EQ(run({"fit", "--foreground", path("s_foreground.csv")}).code, 2);
  EXPECT_EQ(run({"frobnicate"}).code, 2);
  EXPECT_EQ(run({"fit", "--foreground", path("s_foreground.csv"), "--background",
                 path("s_background.csv"), "-d", "1", "--out",
                 path("s_foreground.csv")}).code,
            2);
}

TEST_F(CliTest, PredictMatchesLibrary) {
  simulate(60, 60, 3, 1, 6);
  ASSERT_EQ(fit().code, 0);
  const CliRun r = run({"predict", "--model", path("m.json"), "--input",
                     path("s_foreground.csv"), "--out", path("p.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto pred = clr::io::read_csv(path("p.csv"));
  EXPECT_EQ(pred.header, (std::vector<std::string>{"row", "mean", "variance"}));
  const auto model = clr::io::read_model(path("m.json"));
  const auto data = clr::io::read_dataset(path("s_foreground.csv"), "", "r");
  const VectorXd lib = clr::predict_responses(model.to_fit_result(), data.X);
  EXPECT_LE((pred.values.col(1) - lib).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(pred.values(0, 0), 0);
  EXPECT_EQ(pred.values(59, 0), 59);
  EXPECT_EQ(pred.values.col(2).minCoeff(), pred.values.col(2).maxCoeff());
}

TEST_F(CliTest, PredictAtCenterAndOnDuplicates) {
  simulate(40, 40, 2, 1, 7);
  ASSERT_EQ(fit().code, 0);
  const auto model = clr::io::read_model(path("m.json"));
  MatrixXd X(3, 2);
  X.row(0) = model.center_x.transpose();
  X.row(1) << 0.3, -1.1;
  X.row(2) = X.row(1);
  clr::io::write_csv(path("q.csv"), {"f0", "f1"}, X);
  ASSERT_EQ(run({"predict", "--model", path("m.json"), "--input", path("q.csv"),
                 "--out", path("p.csv")}).code,
            0);
  const auto pred = clr::io::read_csv(path("p.csv"));
  EXPECT_NEAR(pred.values(0, 1), model.center_r, 1e-12);
  EXPECT_EQ(pred.values.row(1).tail(2), pred.values.row(2).tail(2));
}

TEST_F(CliTest, PredictShapeMismatch) {
  simulate(40, 40, 2, 1, 8);
  ASSERT_EQ(fit().code, 0);
  clr::io::write_csv(path("q.csv"), {"u", "v", "w"}, MatrixXd::Zero(2, 3));
  EXPECT_EQ(run({"predict", "--model", path("m.json"), "--input", path("q.csv"),
                 "--out", path("p.csv")}).code,
            3);
}

TEST_F(CliTest, CrossValidateMatchesLibrary) {
  simulate(40, 40, 4, 2, 9);
  const CliRun r = run({"cv", "--foreground", path("s_foreground.csv"), "--background",
                     path("s_background.csv"), "--d-grid", "1,2", "--k", "4",
                     "--seed", "3", "--restarts", "0", "--out", path("cv.json"),
                     "--csv", path("cv.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  const json j = json::parse(clr::io::read_text(path("cv.json")));
  const auto data = clr::io::read_dataset(path("s_foreground.csv"),
                                          path("s_background.csv"), "r");
  clr::FitConfig cfg;
  cfg.seed = 3;
  cfg.restarts = 0;
  const auto lib = clr::cross_validate(data, {1, 2}, 4, cfg);
  EXPECT_EQ(j["best_d"].get<long>(), lib.best_d);
  for (std::size_t di = 0; di < 2; ++di)
    for (int f = 0; f < 4; ++f)
      EXPECT_EQ(j["test_r2"][di][f].get<double>(), lib.test_r2(di, f));
  const auto tidy = clr::io::read_csv(path("cv.csv"));
  EXPECT_EQ(tidy.header, (std::vector<std::string>{"d", "fold", "train_r2", "test_r2"}));
  EXPECT_EQ(tidy.values.rows(), 8);
  EXPECT_EQ(tidy.values(5, 3), lib.test_r2(1, 1));
}

TEST_F(CliTest, CrossValidateLeaveOneOutAndConstantResponse) {
  simulate(10, 10, 3, 1, 10);
  CliRun r = run({"cv", "--foreground", path("s_foreground.csv"), "--background",
               path("s_background.csv"), "--d-grid", "1,2", "--k", "10",
               "--restarts", "0"});
  ASSERT_EQ(r.code, 0) << r.err;
  json j = json::parse(r.out);
  EXPECT_EQ(j["test_r2"][0].size(), 10u);
  EXPECT_TRUE(j["selection_valid"].get<bool>());

  auto data = clr::io::read_dataset(path("s_foreground.csv"), "", "r");
  data.r.setConstant(2.0);
  clr::io::write_dataset(data, path("c_fg.csv"), path("c_bg.csv"));
  r = run({"cv", "--foreground", path("c_fg.csv"), "--background",
           path("s_background.csv"), "--d-grid", "1", "--k", "5", "--restarts", "0"});
  ASSERT_EQ(r.code, 0) << r.err;
  j = json::parse(r.out);
  EXPECT_FALSE(j["selection_valid"].get<bool>());
  for (const auto& cell : j["test_r2"][0]) EXPECT_TRUE(cell.is_null());
  EXPECT_EQ(run({"cv", "--foreground", path("c_fg.csv"), "--background",
                 path("s_background.csv"), "--d-grid", "1", "--k", "11"}).code,
            2);
}

TEST_F(CliTest, Gradcheck) {
  CliRun r = run({"gradcheck", "--trials", "5"});
  EXPECT_EQ(r.code, 0) << r.out << r.err;
  for (const char* block : {"S ", "W ", "beta ", "sigma2 ", "tau2 "})
    EXPECT_NE(r.out.find(block), std::string::npos) << block;

  r = run({"gradcheck", "--trials", "3", "--rtol", "0"});
  EXPECT_EQ(r.code, 5);
  EXPECT_NE(r.err.find("seeds"), std::string::npos);

  r = run({"gradcheck", "--trials", "3", "--n", "0"});
  EXPECT_EQ(r.code, 0) << r.out;
  for (const char* block : {"W ", "beta ", "tau2 "}) {
    const auto at = r.out.find(std::string("\n") + block);
    ASSERT_NE(at, std::string::npos) << block;
    const std::string line = r.out.substr(at + 1, r.out.find('\n', at + 1) - at - 1);
    EXPECT_NE(line.find("max_abs_grad=0 "), std::string::npos) << line;
  }
  EXPECT_EQ(run({"gradcheck", "--trials", "0"}).code, 2);
}

TEST_F(CliTest, RankMatchesLibrary) {
  clr::ModelParams<double> m = clr::ModelParams<double>::zeros(4, 1);
  m.W << 3, -5, 0, 1;
  m.beta << 1;
  m.sigma2 = m.tau2 = 1;
  clr::io::write_model(path("m.json"),
                       clr::io::ModelFile::from_params(m, {"a", "b", "c", "d"}));
  ASSERT_EQ(run({"rank", "--model", path("m.json"), "--out", path("r.csv")}).code, 0);
  EXPECT_EQ(clr::io::read_text(path("r.csv")),
            "rank,feature,score\n1,b,-5\n2,a,3\n3,d,1\n4,c,0\n");

  clr::ModelParams<double> m3 = clr::ModelParams<double>::zeros(3, 3);
  m3.W << 1, 9, 0, 0, -2, 0, 0, 4, 0;
  m3.beta << 0, 0.7, 0;
  m3.sigma2 = m3.tau2 = 1;
  clr::io::write_model(path("m3.json"), clr::io::ModelFile::from_params(m3));
  ASSERT_EQ(run({"rank", "--model", path("m3.json"), "--out", path("r3.csv"),
                 "--no-canonical-rotation"}).code,
            0);
  EXPECT_EQ(clr::io::read_text(path("r3.csv")),
            "rank,feature,score\n1,0,9\n2,2,4\n3,1,-2\n");

  m.beta << 0;
  clr::io::write_model(path("z.json"), clr::io::ModelFile::from_params(m));
  EXPECT_EQ(run({"rank", "--model", path("z.json"), "--out", path("z.csv")}).code, 4);
}

TEST(CliProcess, ExitCodesReachTheShell) {
  const std::string tool = CLR_TOOL_PATH;
  EXPECT_EQ(std::system((tool + " --help > /dev/null").c_str()), 0);
  const int status = std::system((tool + " gradcheck --trials 2 --rtol 0 > /dev/null 2>&1").c_str());
  EXPECT_EQ(WEXITSTATUS(status), 5);
}

}  // namespace
