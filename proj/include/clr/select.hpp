#ifndef CLR_SELECT_HPP
#define CLR_SELECT_HPP

#include <optional>
#include <string>
#include <vector>

#include "clr/optimizer.hpp"
#include "clr/types.hpp"

namespace clr {

/*
 * k-fold cross-validation over a grid of latent dimensions.
 *
 * Cells are (d, fold). A cell whose fit or R^2 fails holds NaN and a message
 * in `errors`; it is left out of the means. The background travels with every
 * training split.
 */
struct CVReport {
  std::vector<Index> d_grid;
  int k = 0;
  std::uint64_t seed = 0;
  Eigen::MatrixXd train_r2;        // |d_grid| x k
  Eigen::MatrixXd test_r2;         // |d_grid| x k
  Eigen::VectorXd mean_train_r2;   // NaN when no valid cell
  Eigen::VectorXd mean_test_r2;    // NaN when no valid cell
  Eigen::VectorXd pooled_test_r2;  // R^2 of all out-of-fold predictions
  std::vector<std::vector<std::string>> errors;  // [d][fold], empty if valid
  std::vector<int> fold_of;                      // fold index per sample
  Index best_d = 0;
  bool selection_valid = false;

  bool cell_valid(std::size_t di, int fold) const {
    return errors[di][fold].empty();
  }
};

/// Seeded uniform partition of n samples into k folds.
std::vector<int> assign_folds(Index n, int k, std::uint64_t seed);

CVReport cross_validate(const Dataset<double>& data,
                        const std::vector<Index>& d_grid, int k,
                        const FitConfig& config);

/// PCA on the training foreground, then least squares of r on the scores.
Eigen::VectorXd pca_linear_baseline(const Dataset<double>& train,
                                    const Eigen::MatrixXd& test_X, Index d);

struct FeatureRanking {
  Index component_index = 0;  // 0-based latent dimension
  Eigen::VectorXd scores;     // loadings of the selected component
  std::vector<Index> order;   // 0-based features, by |score| descending
  std::vector<std::string> names;
};

enum class RankRotation {
  kCanonical,  // rotate so beta = ||beta|| e_1, then take that component
  kLiteral,    // component with the largest |beta_k|, no rotation
};

FeatureRanking rank_features(const ModelParams<double>& params,
                             const std::vector<std::string>& names = {},
                             RankRotation rotation = RankRotation::kCanonical);

FeatureRanking rank_features(const FitResult& fit,
                             const std::vector<std::string>& names = {},
                             RankRotation rotation = RankRotation::kCanonical);

/// Orthogonal R (Householder) with R' beta = ||beta|| e_1.
Eigen::MatrixXd canonical_rotation(const Eigen::VectorXd& beta);

}  // namespace clr

#endif  // CLR_SELECT_HPP
