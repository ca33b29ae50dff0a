#include <gtest/gtest.h>

#include <Eigen/QR>

#include "clr/simulate.hpp"
#include "oracles.hpp"

namespace {

using clr::GenConfig;
using clr::ModelParams;
using Eigen::MatrixXd;
using Eigen::VectorXd;

MatrixXd sample_cov(const MatrixXd& M) {
  const MatrixXd c = M.rowwise() - M.colwise().mean();
  return c.transpose() * c / static_cast<double>(M.rows());
}

TEST(Generate, NoiselessDegenerateCase) {
  ModelParams<double> truth = ModelParams<double>::zeros(4, 2);
  truth.S << 1, 0, 0, 1, 1, 1, 2, -1;
  truth.sigma2 = 0;
  truth.tau2 = 0;
  GenConfig g;
  g.n = 50;
  g.m = 30;
  g.p = 4;
  g.d = 2;
  g.truth = truth;
  const auto sim = clr::generate(g);
  EXPECT_EQ(sim.data.r, VectorXd::Zero(50));
  // Residual of every row after projecting onto span(S).
  Eigen::HouseholderQR<MatrixXd> qr(truth.S);
  const MatrixXd Qs = qr.householderQ() * MatrixXd::Identity(4, 2);
  for (const MatrixXd* M : {&sim.data.X, &sim.data.Y}) {
    const MatrixXd resid = *M - (*M * Qs) * Qs.transpose();
    EXPECT_LE(resid.cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Generate, SameSeedSameData) {
  GenConfig g;
  g.n = 20;
  g.m = 15;
  g.p = 5;
  g.d = 2;
  g.seed = 99;
  const auto a = clr::generate(g);
  const auto b = clr::generate(g);
  EXPECT_EQ(a.data.X, b.data.X);
  EXPECT_EQ(a.data.Y, b.data.Y);
  EXPECT_EQ(a.data.r, b.data.r);
  EXPECT_EQ(a.truth.S, b.truth.S);
  g.seed = 100;
  EXPECT_NE(clr::generate(g).data.X, a.data.X);
}

TEST(Generate, DefaultTruthScales) {
  GenConfig g;
  g.n = 3;
  g.m = 3;
  const auto sim = clr::generate(g);
  EXPECT_EQ(sim.truth.sigma2, 0.25);
  EXPECT_EQ(sim.truth.tau2, 0.25);
  EXPECT_EQ(sim.truth.p(), 2);
  EXPECT_EQ(sim.data.feature_names.size(), 2u);
  EXPECT_EQ(sim.data.feature_names[0], "f0");
}

TEST(Generate, MomentsApproachTheAnalyticCovariances) {
  GenConfig g;
  g.n = 20000;
  g.m = 20000;
  g.p = 4;
  g.d = 2;
  g.seed = 5;
  const auto sim = clr::generate(g);
  const MatrixXd Q = oracle::Q(sim.truth);
  const MatrixXd P = oracle::P(sim.truth);
  EXPECT_LE((sample_cov(sim.data.X) - Q).norm(), 0.1 * Q.norm());
  EXPECT_LE((sample_cov(sim.data.Y) - P).norm(), 0.1 * P.norm());
  const VectorXd rc = sim.data.r.array() - sim.data.r.mean();
  const double var_r = rc.squaredNorm() / g.n;
  const double ref_var = sim.truth.beta.squaredNorm() + sim.truth.tau2;
  EXPECT_NEAR(var_r, ref_var, 0.1 * ref_var);
  const MatrixXd Xc = sim.data.X.rowwise() - sim.data.X.colwise().mean();
  const VectorXd cov_xr = Xc.transpose() * rc / g.n;
  const VectorXd ref = sim.truth.W * sim.truth.beta;
  EXPECT_LE((cov_xr - ref).norm(), 0.1 * std::max(ref.norm(), 1.0));
  // The signal is r without its noise.
  EXPECT_NEAR((sim.data.r - sim.signal).squaredNorm() / g.n, sim.truth.tau2, 0.02);
}

TEST(Generate, InvalidSizes) {
  GenConfig g;
  g.n = -1;
  EXPECT_THROW(clr::generate(g), clr::Error);
  g.n = 1;
  g.d = 3;
  EXPECT_THROW(clr::generate(g), clr::Error);
}

TEST(EstimationErrors, IdentityGivesZero) {
  const auto truth = clr::draw_truth(3, 2, 0.25, 0.25, 4);
  const auto e = clr::estimation_errors(truth, truth);
  EXPECT_EQ(e.beta_err, 0);
  EXPECT_EQ(e.sigma2_err, 0);
  EXPECT_EQ(e.tau2_err, 0);
  EXPECT_EQ(e.S_err, 0);
  EXPECT_EQ(e.W_err, 0);
}

TEST(EstimationErrors, RotationOfSIsInvisible) {
  const auto truth = clr::draw_truth(5, 3, 0.25, 0.25, 6);
  std::mt19937_64 rng(1);
  auto est = truth;
  est.S = truth.S * oracle::random_orthogonal(3, rng);
  EXPECT_LE(clr::estimation_errors(est, truth).S_err, 1e-14);
  // Common rotation of both sides leaves the error unchanged.
  auto est2 = clr::draw_truth(5, 3, 0.3, 0.2, 7);
  const MatrixXd R = oracle::random_orthogonal(3, rng);
  auto truth_r = truth;
  auto est2_r = est2;
  truth_r.S = truth.S * R;
  est2_r.S = est2.S * R;
  EXPECT_NEAR(clr::estimation_errors(est2_r, truth_r).S_err,
              clr::estimation_errors(est2, truth).S_err, 1e-12);
}

TEST(EstimationErrors, MatchesDenseFrobeniusRatio) {
  const auto truth = clr::draw_truth(3, 1, 0.25, 0.25, 8);
  const auto est = clr::draw_truth(3, 1, 0.5, 0.125, 9);
  const MatrixXd SS = truth.S * truth.S.transpose();
  const MatrixXd EE = est.S * est.S.transpose();
  double num = 0, den = 0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      num += (EE(i, j) - SS(i, j)) * (EE(i, j) - SS(i, j));
      den += SS(i, j) * SS(i, j);
    }
  const auto e = clr::estimation_errors(est, truth);
  EXPECT_NEAR(e.S_err, std::sqrt(num / den), 1e-14);
  EXPECT_EQ(e.sigma2_err, 0.25);
  EXPECT_EQ(e.tau2_err, -0.125);
  EXPECT_NEAR(e.beta_err, std::abs(est.beta.norm() - truth.beta.norm()), 1e-15);
}

TEST(EstimationErrors, ShapeMismatch) {
  EXPECT_THROW(clr::estimation_errors(clr::draw_truth(3, 1, 1, 1, 0),
                                      clr::draw_truth(3, 2, 1, 1, 0)),
               clr::ShapeMismatch);
}

TEST(Lines, NoiselessPixelSumCountsTheBar) {
  clr::LinesConfig cfg;
  cfg.noise_sd = 0;
  cfg.background_rank = 0;
  cfg.n_fg = 40;
  cfg.n_bg = 10;
  cfg.line_intensity = 2.0;
  const auto data = clr::generate_lines(cfg);
  ASSERT_EQ(data.p(), 28 * 28);
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    EXPECT_DOUBLE_EQ(data.X.row(i).sum(), 2.0 * data.r(i));
    EXPECT_GE(data.r(i), 1);
    EXPECT_LE(data.r(i), 28);
    // Bar pixels sit in the line column, growing up from the bottom row.
    const int h = static_cast<int>(data.r(i));
    EXPECT_EQ(data.X(i, 27 * 28 + 14), 2.0);
    EXPECT_EQ(data.X(i, (28 - h) * 28 + 14), 2.0);
    if (h < 28) {
      EXPECT_EQ(data.X(i, (27 - h) * 28 + 14), 0.0);
    }
  }
  EXPECT_EQ(data.Y.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Lines, Deterministic) {
  clr::LinesConfig cfg;
  cfg.n_fg = 30;
  cfg.n_bg = 20;
  cfg.seed = 4;
  const auto a = clr::generate_lines(cfg);
  const auto b = clr::generate_lines(cfg);
  EXPECT_EQ(a.X, b.X);
  EXPECT_EQ(a.Y, b.Y);
  EXPECT_EQ(a.r, b.r);
}

TEST(Lines, LineColumnPixelsCarryTheSignal) {
  clr::LinesConfig cfg;
  cfg.seed = 1;
  const auto data = clr::generate_lines(cfg);
  MatrixXd design(data.n(), 29);
  design.col(0).setOnes();
  for (int i = 0; i < 28; ++i) design.col(1 + i) = data.X.col(i * 28 + cfg.column());
  const VectorXd coef = design.colPivHouseholderQr().solve(data.r);
  EXPECT_GE(clr::r_squared(design * coef, data.r), 0.9);
}

TEST(RSquared, HandValues) {
  const VectorXd t = (VectorXd(3) << 1, 2, 3).finished();
  EXPECT_EQ(clr::r_squared(t, t), 1.0);
  EXPECT_NEAR(clr::r_squared(VectorXd::Constant(3, 2.0), t), 0.0, 1e-15);
  EXPECT_NEAR(clr::r_squared((VectorXd(3) << 1, 2, 4).finished(), t), 0.5, 1e-15);
  EXPECT_THROW(clr::r_squared(t, VectorXd::Constant(3, 1.0)), clr::ConstantTruth);
  EXPECT_THROW(clr::r_squared(VectorXd::Zero(1), VectorXd::Zero(1)), clr::TooFewSamples);
}

}  // namespace
