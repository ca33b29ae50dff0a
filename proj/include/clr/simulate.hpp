#ifndef CLR_SIMULATE_HPP
#define CLR_SIMULATE_HPP

#include <cstdint>
#include <optional>

#include "clr/types.hpp"

namespace clr {

struct GenConfig {
  Index n = 0;
  Index m = 0;
  Index p = 2;
  Index d = 1;
  std::uint64_t seed = 0;
  // When absent: S, W, beta entries ~ N(0, 1) and the variances below.
  std::optional<ModelParams<double>> truth;
  double sigma2 = 0.25;
  double tau2 = 0.25;
};

struct SimulatedData {
  Dataset<double> data;
  ModelParams<double> truth;
  Eigen::VectorXd signal;  // beta' t per foreground row (r without eta)
};

/// Draws from the generative model; deterministic per seed.
SimulatedData generate(const GenConfig& config);

/// Draws a truth parameter set the way generate() does when none is given.
ModelParams<double> draw_truth(Index p, Index d, double sigma2, double tau2,
                               std::uint64_t seed);

struct ErrorReport {
  double beta_err = 0;    // | ||beta_hat|| - ||beta|| |
  double sigma2_err = 0;  // signed, estimate - truth
  double tau2_err = 0;    // signed, estimate - truth
  double S_err = 0;       // ||S^S^' - SS'||_F / ||SS'||_F
  double W_err = 0;
};

ErrorReport estimation_errors(const ModelParams<double>& estimate,
                              const ModelParams<double>& truth);

/// ||A^A^' - AA'||_F / ||AA'||_F; the bare numerator when AA' = 0.
double subspace_error(const Eigen::MatrixXd& estimate,
                      const Eigen::MatrixXd& truth);

/*
 * Synthetic stand-in for the corrupted-lines images: every image carries a
 * shared smooth low-rank texture plus pixel noise; foreground images add a
 * vertical bar of random height h (1..side) at line_column, and r = h.
 * Images are flattened row-major (pixel (i, j) -> column i * side + j), with
 * row 0 at the top and the bar growing upward from the bottom row.
 */
struct LinesConfig {
  Index image_side = 28;
  Index n_fg = 300;
  Index n_bg = 300;
  Index background_rank = 2;
  double noise_sd = 0.1;
  Index line_column = -1;  // -1 selects image_side / 2
  double line_intensity = 1.0;
  double texture_sd = 5.0;
  std::uint64_t seed = 0;

  Index column() const { return line_column < 0 ? image_side / 2 : line_column; }
};

Dataset<double> generate_lines(const LinesConfig& config);

/// Coefficient of determination 1 - SS_res / SS_tot.
double r_squared(const Eigen::VectorXd& predictions,
                 const Eigen::VectorXd& truth);

}  // namespace clr

#endif  // CLR_SIMULATE_HPP
