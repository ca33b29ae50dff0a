#include "clr/optimizer.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <random>

#include "clr/inference.hpp"
#include "clr/likelihood.hpp"
#include "clr/parameterization.hpp"
#include "clr/workspace.hpp"

namespace clr {

namespace {

constexpr double kVarianceFloor = 1e-6;
constexpr int kMaxHalvings = 60;
constexpr int kMaxShrinks = 3;

struct AscentOutcome {
  Eigen::VectorXd theta;
  std::vector<double> trace;
  bool converged = false;
  int iterations = 0;
};

bool relative_change_below(double prev, double next, double tol) {
  return std::abs(next - prev) / (std::abs(prev) + 1.0) < tol;
}

// Objective in unconstrained coordinates. Parameters that fail to factorize
// or overflow map to -inf so the line search simply rejects them.
class Objective {
 public:
  Objective(const Dataset<double>& data, Index p, Index d, double alpha)
      : data_(data), p_(p), d_(d), alpha_(alpha) {}

  double value(const Eigen::VectorXd& theta) const {
    try {
      const double l = log_likelihood(unpack(theta, p_, d_), data_, alpha_);
      return std::isfinite(l) ? l : -std::numeric_limits<double>::infinity();
    } catch (const Error&) {
      return -std::numeric_limits<double>::infinity();
    }
  }

  // Returns false when the point is not evaluable.
  bool value_and_gradient(const Eigen::VectorXd& theta, double& l,
                          Eigen::VectorXd& g) const {
    try {
      const ModelParams<double> params = unpack(theta, p_, d_);
      auto eval = evaluate_likelihood(params, data_, alpha_, true);
      g = pack_gradient(*eval.gradient, params);
      l = eval.value;
      return std::isfinite(l) && g.allFinite();
    } catch (const Error&) {
      return false;
    }
  }

 private:
  const Dataset<double>& data_;
  Index p_, d_;
  double alpha_;
};

AscentOutcome line_search_ascent(const Objective& objective,
                                 Eigen::VectorXd theta,
                                 const FitConfig& config) {
  AscentOutcome out;
  double l = 0;
  Eigen::VectorXd g;
  if (!objective.value_and_gradient(theta, l, g))
    throw NonFiniteObjective("objective is not finite at the starting point");
  out.trace.push_back(l);

  double step = config.step0;
  Eigen::VectorXd prev_theta, prev_g;
  for (int iter = 0; iter < config.max_iter; ++iter) {
    // Barzilai-Borwein trial step; fall back to growing the last step.
    if (iter > 0) {
      const Eigen::VectorXd s = theta - prev_theta;
      const Eigen::VectorXd y = g - prev_g;
      const double sy = s.dot(y);
      if (sy < 0)
        step = s.squaredNorm() / -sy;
      else
        step *= 2;
      step = std::clamp(step, 1e-14, 1e10);
    }

    // Halve until the objective increases at a point whose gradient is
    // also finite.
    Eigen::VectorXd candidate, g_candidate;
    double l_candidate = -std::numeric_limits<double>::infinity();
    bool accepted = false;
    for (int k = 0; k < kMaxHalvings; ++k) {
      candidate = theta + step * g;
      l_candidate = objective.value(candidate);
      if (l_candidate > l &&
          objective.value_and_gradient(candidate, l_candidate, g_candidate)) {
        accepted = true;
        break;
      }
      step /= 2;
    }
    out.iterations = iter + 1;
    if (!accepted) {
      // No increase representable in floating point along the gradient.
      out.converged = true;
      break;
    }

    prev_theta = std::move(theta);
    prev_g = std::move(g);
    theta = std::move(candidate);
    g = std::move(g_candidate);
    const double l_prev = l;
    l = l_candidate;
    out.trace.push_back(l);
    if (relative_change_below(l_prev, l, config.tol)) {
      out.converged = true;
      break;
    }
  }
  out.theta = std::move(theta);
  return out;
}

AscentOutcome adaptive_moment_ascent(const Objective& objective,
                                     Eigen::VectorXd theta,
                                     const FitConfig& config) {
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  AscentOutcome out;
  double l = 0;
  Eigen::VectorXd g;
  if (!objective.value_and_gradient(theta, l, g))
    throw NonFiniteObjective("objective is not finite at the starting point");
  out.trace.push_back(l);

  double rate = config.step0;
  int shrinks = 0;
  Eigen::VectorXd m1 = Eigen::VectorXd::Zero(theta.size());
  Eigen::VectorXd m2 = Eigen::VectorXd::Zero(theta.size());
  int t = 0;
  for (int iter = 0; iter < config.max_iter; ++iter) {
    ++t;
    const Eigen::VectorXd m1_next = beta1 * m1 + (1 - beta1) * g;
    const Eigen::VectorXd m2_next =
        beta2 * m2 + (1 - beta2) * g.cwiseAbs2();
    const double c1 = 1 - std::pow(beta1, t);
    const double c2 = 1 - std::pow(beta2, t);
    const Eigen::VectorXd direction =
        (m1_next / c1).array() / ((m2_next / c2).array().sqrt() + eps);
    const Eigen::VectorXd candidate = theta + rate * direction;

    double l_candidate = 0;
    Eigen::VectorXd g_candidate;
    out.iterations = iter + 1;
    if (!objective.value_and_gradient(candidate, l_candidate, g_candidate)) {
      if (++shrinks > kMaxShrinks)
        throw NonFiniteObjective(
            "objective became non-finite after shrinking the step " +
            std::to_string(kMaxShrinks) + " times");
      rate /= 10;
      m1.setZero();
      m2.setZero();
      t = 0;
      continue;
    }
    m1 = m1_next;
    m2 = m2_next;
    theta = candidate;
    g = std::move(g_candidate);
    const double l_prev = l;
    l = l_candidate;
    out.trace.push_back(l);
    if (relative_change_below(l_prev, l, config.tol)) {
      out.converged = true;
      break;
    }
  }
  out.theta = std::move(theta);
  return out;
}

Eigen::VectorXd column_means(const Eigen::MatrixXd& M) {
  if (M.rows() == 0) return Eigen::VectorXd::Zero(M.cols());
  return M.colwise().mean().transpose();
}

}  // namespace

void FitConfig::validate(Index p) const {
  if (d < 1) throw InvalidParams("d must be positive");
  if (d > p)
    throw InvalidParams("d = " + std::to_string(d) +
                        " exceeds the feature dimension " + std::to_string(p));
  if (!(tol > 0)) throw InvalidParams("tol must be positive");
  if (max_iter < 1) throw InvalidParams("max_iter must be at least 1");
  if (!(alpha >= 0) || !std::isfinite(alpha))
    throw InvalidParams("alpha must be a finite nonnegative number");
  if (!(step0 > 0)) throw InvalidParams("step0 must be positive");
  if (restarts < 0) throw InvalidParams("restarts must be nonnegative");
}

std::uint64_t restart_seed(std::uint64_t seed, int restart) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(restart)};
  std::uint32_t words[2];
  seq.generate(words, words + 2);
  return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

CenteredData center(const Dataset<double>& data) {
  data.validate();
  CenteredData out;
  out.center_x = column_means(data.X);
  out.center_y = column_means(data.Y);
  out.center_r = data.r.size() > 0 ? data.r.mean() : 0.0;
  out.data.X = data.X.rowwise() - out.center_x.transpose();
  out.data.Y = data.Y.rowwise() - out.center_y.transpose();
  out.data.r = data.r.array() - out.center_r;
  out.data.feature_names = data.feature_names;
  return out;
}

ModelParams<double> initialize(const Dataset<double>& data,
                               const FitConfig& config) {
  return initialize(data, config, config.init, config.seed);
}

ModelParams<double> initialize(const Dataset<double>& data,
                               const FitConfig& config, InitMode mode,
                               std::uint64_t seed) {
  if (data.n() == 0) throw DegenerateData("no foreground samples");
  config.validate(data.p());
  const CenteredData c = center(data);
  const Index p = data.p();
  const Index d = config.d;
  const bool use_bg = config.alpha > 0 && c.data.m() > 0;

  Eigen::MatrixXd pooled(c.data.n() + (use_bg ? c.data.m() : 0), p);
  pooled.topRows(c.data.n()) = c.data.X;
  if (use_bg) pooled.bottomRows(c.data.m()) = c.data.Y;
  const double N = static_cast<double>(pooled.rows());
  const double pooled_var = pooled.squaredNorm() / (N * p);
  if (!(pooled_var > 0))
    throw DegenerateData("all feature columns are constant");
  const double response_var =
      c.data.r.squaredNorm() / static_cast<double>(c.data.n());

  ModelParams<double> params = ModelParams<double>::zeros(p, d);
  params.sigma2 = std::max(0.5 * pooled_var, kVarianceFloor);
  params.tau2 = std::max(0.5 * response_var, kVarianceFloor);

  if (mode == InitMode::kRandomNormal) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 0.1);
    auto draw = [&](auto& M) {
      for (Index j = 0; j < M.cols(); ++j)
        for (Index i = 0; i < M.rows(); ++i) M(i, j) = normal(rng);
    };
    draw(params.S);
    draw(params.W);
    draw(params.beta);
    return params;
  }

  // PCA warm start: S from the pooled principal directions, W from the
  // foreground residual after projecting out span(S).
  Eigen::BDCSVD<Eigen::MatrixXd> pooled_svd(pooled, Eigen::ComputeThinV);
  const Index k_s = std::min<Index>(d, pooled_svd.singularValues().size());
  for (Index k = 0; k < k_s; ++k)
    params.S.col(k) = pooled_svd.matrixV().col(k) *
                      (pooled_svd.singularValues()(k) / std::sqrt(N));

  const Eigen::MatrixXd basis = pooled_svd.matrixV().leftCols(k_s);
  const Eigen::MatrixXd resid =
      c.data.X - (c.data.X * basis) * basis.transpose();
  Eigen::BDCSVD<Eigen::MatrixXd> resid_svd(resid, Eigen::ComputeFullV);
  const double n = static_cast<double>(c.data.n());
  const double w_floor = 0.1 * std::sqrt(params.sigma2);
  for (Index k = 0; k < d; ++k) {
    const double s = k < resid_svd.singularValues().size()
                         ? resid_svd.singularValues()(k) / std::sqrt(n)
                         : 0.0;
    params.W.col(k) = resid_svd.matrixV().col(k) * std::max(s, w_floor);
  }

  // beta by least squares of r on the posterior latent means E[t | x]. With
  // beta = 0 the response-linked directions get almost no gradient signal
  // when p is large, so the ascent would crawl.
  const Workspace<double> ws = build_workspace(params);
  const Eigen::MatrixXd T = c.data.X * (ws.Pinv_W * ws.A);  // n x d
  params.beta = T.colPivHouseholderQr().solve(c.data.r);
  const double resid_var = (c.data.r - T * params.beta).squaredNorm() / n;
  params.tau2 = std::max(resid_var, kVarianceFloor);
  return params;
}

FitResult fit(const Dataset<double>& data, const FitConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  data.validate();
  if (data.n() == 0) throw DegenerateData("no foreground samples");
  config.validate(data.p());

  CenteredData c = center(data);
  if (c.data.r.cwiseAbs().maxCoeff() == 0)
    throw DegenerateData(
        "foreground response is constant; the likelihood is unbounded as "
        "tau2 -> 0");
  if (config.alpha == 0) {
    // alpha = 0 removes the background from the objective entirely.
    c.data.Y.resize(0, data.p());
  }
  const Index p = data.p();
  const Index d = config.d;
  const Objective objective(c.data, p, d, config.alpha);

  FitResult best;
  bool have_best = false;
  int total_iterations = 0;
  std::vector<RestartSummary> summaries;
  for (int k = 0; k <= config.restarts; ++k) {
    const std::uint64_t seed = restart_seed(config.seed, k);
    const InitMode mode =
        k == 0 ? config.init : InitMode::kRandomNormal;
    const ModelParams<double> start_params =
        initialize(c.data, config, mode, seed);
    const Eigen::VectorXd theta0 = pack(start_params);
    AscentOutcome run = config.mode == AscentMode::kLineSearch
                            ? line_search_ascent(objective, theta0, config)
                            : adaptive_moment_ascent(objective, theta0, config);
    total_iterations += run.iterations;
    const double final_ll = run.trace.back();
    summaries.push_back({final_ll, run.iterations, run.converged});
    if (!have_best || final_ll > best.final_ll) {
      have_best = true;
      best.params = unpack(run.theta, p, d);
      best.ll_trace = std::move(run.trace);
      best.converged = run.converged;
      best.iterations = run.iterations;
      best.best_restart = k;
      best.final_ll = final_ll;
    }
  }

  Eigen::VectorXd g;
  double l = 0;
  if (objective.value_and_gradient(pack(best.params), l, g))
    best.grad_inf_norm = g.lpNorm<Eigen::Infinity>();
  best.center_x = c.center_x;
  best.center_r = c.center_r;
  best.alpha = config.alpha;
  best.seed = config.seed;
  best.total_iterations = total_iterations;
  best.restarts = std::move(summaries);
  best.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return best;
}

Eigen::VectorXd predict_responses(const FitResult& fit,
                                  const Eigen::MatrixXd& X) {
  const Workspace<double> ws = build_workspace(fit.params);
  const Eigen::MatrixXd centered = X.rowwise() - fit.center_x.transpose();
  return (predict_mean(ws, centered).array() + fit.center_r).matrix();
}

}  // namespace clr
