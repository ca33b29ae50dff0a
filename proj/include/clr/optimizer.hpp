#ifndef CLR_OPTIMIZER_HPP
#define CLR_OPTIMIZER_HPP

#include <cstdint>
#include <vector>

#include "clr/types.hpp"

namespace clr {

enum class AscentMode {
  kLineSearch,      // gradient ascent with backtracking; monotone trace
  kAdaptiveMoment,  // Adam-style moments; no monotonicity guarantee
};

enum class InitMode { kRandomNormal, kPcaWarmStart };

struct FitConfig {
  Index d = 1;
  double alpha = 1.0;
  double tol = 1e-4;  // on |delta l| / (|l| + 1)
  int max_iter = 5000;
  AscentMode mode = AscentMode::kLineSearch;
  double step0 = 1e-2;
  int restarts = 3;
  std::uint64_t seed = 0;
  InitMode init = InitMode::kPcaWarmStart;

  void validate(Index p) const;
};

struct RestartSummary {
  double final_ll = 0;
  int iterations = 0;
  bool converged = false;
};

struct FitResult {
  ModelParams<double> params;  // for centered data
  Eigen::VectorXd center_x;
  double center_r = 0;
  double alpha = 1;
  std::uint64_t seed = 0;
  std::vector<double> ll_trace;  // best restart, one entry per iterate
  bool converged = false;
  int iterations = 0;
  int best_restart = 0;
  double final_ll = 0;
  double grad_inf_norm = 0;  // unconstrained coordinates, at the returned point
  double wall_time_seconds = 0;
  int total_iterations = 0;  // summed over restarts
  std::vector<RestartSummary> restarts;
};

/// Per-group column means removed from X and Y; mean response removed from r.
struct CenteredData {
  Dataset<double> data;
  Eigen::VectorXd center_x;
  Eigen::VectorXd center_y;
  double center_r = 0;
};

CenteredData center(const Dataset<double>& data);

/// Starting point for one restart. `data` is centered internally.
ModelParams<double> initialize(const Dataset<double>& data,
                               const FitConfig& config);
ModelParams<double> initialize(const Dataset<double>& data,
                               const FitConfig& config, InitMode mode,
                               std::uint64_t seed);

/// Maximum-likelihood fit over config.restarts + 1 seeded starts.
FitResult fit(const Dataset<double>& data, const FitConfig& config);

/// Predictive means on the original (uncentered) scale.
Eigen::VectorXd predict_responses(const FitResult& fit,
                                  const Eigen::MatrixXd& X);

/// Seed of restart k, derived from the base seed.
std::uint64_t restart_seed(std::uint64_t seed, int restart);

}  // namespace clr

#endif  // CLR_OPTIMIZER_HPP
