#include "clr/simulate.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>

namespace clr {

namespace {

// Column-major fill so the draw order is fixed by the shape alone.
Eigen::MatrixXd draw_normal(std::mt19937_64& rng, Index rows, Index cols,
                            double sd = 1.0) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd M(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) M(i, j) = sd * normal(rng);
  return M;
}

}  // namespace

ModelParams<double> draw_truth(Index p, Index d, double sigma2, double tau2,
                               std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  ModelParams<double> truth;
  truth.S = draw_normal(rng, p, d);
  truth.W = draw_normal(rng, p, d);
  truth.beta = draw_normal(rng, d, 1);
  truth.sigma2 = sigma2;
  truth.tau2 = tau2;
  return truth;
}

SimulatedData generate(const GenConfig& config) {
  if (config.p < 1 || config.d < 1 || config.d > config.p)
    throw InvalidParams("need 1 <= d <= p");
  if (config.n < 0 || config.m < 0)
    throw InvalidParams("sample sizes must be nonnegative");

  std::mt19937_64 rng(config.seed);
  SimulatedData out;
  if (config.truth) {
    out.truth = *config.truth;
    out.truth.validate_shapes();
    if (out.truth.p() != config.p || out.truth.d() != config.d)
      throw ShapeMismatch("truth shape differs from (p, d)");
    if (out.truth.sigma2 < 0 || out.truth.tau2 < 0)
      throw InvalidParams("variances must be nonnegative");
  } else {
    out.truth.S = draw_normal(rng, config.p, config.d);
    out.truth.W = draw_normal(rng, config.p, config.d);
    out.truth.beta = draw_normal(rng, config.d, 1);
    out.truth.sigma2 = config.sigma2;
    out.truth.tau2 = config.tau2;
  }
  const ModelParams<double>& th = out.truth;
  const double sigma = std::sqrt(th.sigma2);
  const double tau = std::sqrt(th.tau2);

  const Eigen::MatrixXd Za = draw_normal(rng, config.n, config.d);
  const Eigen::MatrixXd T = draw_normal(rng, config.n, config.d);
  const Eigen::MatrixXd Ea = draw_normal(rng, config.n, config.p, sigma);
  const Eigen::VectorXd eta = draw_normal(rng, config.n, 1, tau);
  const Eigen::MatrixXd Zb = draw_normal(rng, config.m, config.d);
  const Eigen::MatrixXd Eb = draw_normal(rng, config.m, config.p, sigma);

  out.data.X = Za * th.S.transpose() + T * th.W.transpose() + Ea;
  out.signal = T * th.beta;
  out.data.r = out.signal + eta;
  out.data.Y = Zb * th.S.transpose() + Eb;
  out.data.feature_names.reserve(config.p);
  for (Index j = 0; j < config.p; ++j)
    out.data.feature_names.push_back("f" + std::to_string(j));
  return out;
}

double subspace_error(const Eigen::MatrixXd& estimate,
                      const Eigen::MatrixXd& truth) {
  if (estimate.rows() != truth.rows())
    throw ShapeMismatch("loading matrices have different row counts");
  const Eigen::MatrixXd G_true = truth * truth.transpose();
  const double num = (estimate * estimate.transpose() - G_true).norm();
  const double den = G_true.norm();
  return den > 0 ? num / den : num;
}

ErrorReport estimation_errors(const ModelParams<double>& estimate,
                              const ModelParams<double>& truth) {
  if (estimate.S.rows() != truth.S.rows() ||
      estimate.S.cols() != truth.S.cols() ||
      estimate.W.rows() != truth.W.rows() ||
      estimate.W.cols() != truth.W.cols() ||
      estimate.beta.size() != truth.beta.size())
    throw ShapeMismatch("estimate and truth have different shapes");
  ErrorReport out;
  out.beta_err = std::abs(estimate.beta.norm() - truth.beta.norm());
  out.sigma2_err = estimate.sigma2 - truth.sigma2;
  out.tau2_err = estimate.tau2 - truth.tau2;
  out.S_err = subspace_error(estimate.S, truth.S);
  out.W_err = subspace_error(estimate.W, truth.W);
  return out;
}

Dataset<double> generate_lines(const LinesConfig& config) {
  const Index side = config.image_side;
  if (side < 1 || config.n_fg < 1 || config.n_bg < 1 ||
      config.background_rank < 0 || config.noise_sd < 0)
    throw InvalidParams("invalid lines configuration");
  const Index col = config.column();
  if (col < 0 || col >= side) throw InvalidParams("line_column out of range");
  const Index p = side * side;

  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<int> freq(0, 2);
  std::uniform_real_distribution<double> phase(0.0, 2 * std::numbers::pi);
  std::uniform_int_distribution<Index> height(1, side);

  // Smooth patterns: a few low-frequency plane waves, unit Frobenius norm.
  Eigen::MatrixXd patterns(p, config.background_rank);
  for (Index k = 0; k < config.background_rank; ++k) {
    Eigen::VectorXd pattern = Eigen::VectorXd::Zero(p);
    for (int wave = 0; wave < 3; ++wave) {
      const double fi = freq(rng), fj = freq(rng), ph = phase(rng);
      const double amp = normal(rng);
      for (Index i = 0; i < side; ++i)
        for (Index j = 0; j < side; ++j)
          pattern(i * side + j) +=
              amp * std::cos(2 * std::numbers::pi * (fi * i + fj * j) / side +
                             ph);
    }
    const double norm = pattern.norm();
    patterns.col(k) = norm > 0 ? (pattern / norm).eval() : pattern;
  }

  auto textured = [&](Index rows) {
    Eigen::MatrixXd coef(rows, config.background_rank);
    for (Index k = 0; k < config.background_rank; ++k)
      for (Index i = 0; i < rows; ++i)
        coef(i, k) = config.texture_sd * normal(rng);
    Eigen::MatrixXd images = coef * patterns.transpose();
    if (config.noise_sd > 0)
      for (Index j = 0; j < p; ++j)
        for (Index i = 0; i < rows; ++i)
          images(i, j) += config.noise_sd * normal(rng);
    return images;
  };

  Dataset<double> out;
  out.Y = textured(config.n_bg);
  out.X = textured(config.n_fg);
  out.r.resize(config.n_fg);
  for (Index s = 0; s < config.n_fg; ++s) {
    const Index h = height(rng);
    for (Index i = side - h; i < side; ++i)
      out.X(s, i * side + col) += config.line_intensity;
    out.r(s) = static_cast<double>(h);
  }
  out.feature_names.reserve(p);
  for (Index i = 0; i < side; ++i)
    for (Index j = 0; j < side; ++j)
      out.feature_names.push_back("px_" + std::to_string(i) + "_" +
                                  std::to_string(j));
  return out;
}

double r_squared(const Eigen::VectorXd& predictions,
                 const Eigen::VectorXd& truth) {
  if (predictions.size() != truth.size())
    throw ShapeMismatch("predictions and truth differ in length");
  if (truth.size() < 2)
    throw TooFewSamples("R^2 needs at least two observations");
  const double ss_tot = (truth.array() - truth.mean()).square().sum();
  if (!(ss_tot > 0)) throw ConstantTruth("truth is constant; R^2 undefined");
  const double ss_res = (truth - predictions).squaredNorm();
  return 1.0 - ss_res / ss_tot;
}

}  // namespace clr
