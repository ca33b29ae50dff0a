#include "clr/select.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "clr/simulate.hpp"

namespace clr {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kTieTolerance = 1e-12;

Eigen::MatrixXd select_rows(const Eigen::MatrixXd& M,
                            const std::vector<Index>& rows) {
  Eigen::MatrixXd out(static_cast<Index>(rows.size()), M.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(i) = M.row(rows[i]);
  return out;
}

Eigen::VectorXd select_entries(const Eigen::VectorXd& v,
                               const std::vector<Index>& rows) {
  Eigen::VectorXd out(static_cast<Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) out(i) = v(rows[i]);
  return out;
}

double mean_of_finite(const Eigen::VectorXd& v) {
  double sum = 0;
  int count = 0;
  for (Index i = 0; i < v.size(); ++i)
    if (std::isfinite(v(i))) {
      sum += v(i);
      ++count;
    }
  return count > 0 ? sum / count : kNaN;
}

// Index into d_grid of the best finite statistic; ties go to the smaller d.
std::optional<std::size_t> argmax_smallest_d(const std::vector<Index>& d_grid,
                                             const Eigen::VectorXd& stat) {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < d_grid.size(); ++i) {
    if (!std::isfinite(stat(i))) continue;
    if (!best) {
      best = i;
      continue;
    }
    const double diff = stat(i) - stat(*best);
    if (diff > kTieTolerance ||
        (std::abs(diff) <= kTieTolerance && d_grid[i] < d_grid[*best]))
      best = i;
  }
  return best;
}

}  // namespace

std::vector<int> assign_folds(Index n, int k, std::uint64_t seed) {
  std::vector<Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{0});
  std::mt19937_64 rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<int> fold(static_cast<std::size_t>(n));
  for (std::size_t pos = 0; pos < perm.size(); ++pos)
    fold[perm[pos]] = static_cast<int>(pos % static_cast<std::size_t>(k));
  return fold;
}

CVReport cross_validate(const Dataset<double>& data,
                        const std::vector<Index>& d_grid, int k,
                        const FitConfig& config) {
  data.validate();
  if (k < 2) throw TooFewSamples("cross-validation needs k >= 2");
  if (data.n() < k)
    throw TooFewSamples("n = " + std::to_string(data.n()) +
                        " is smaller than k = " + std::to_string(k));
  if (d_grid.empty()) throw InvalidParams("d_grid is empty");
  for (Index d : d_grid)
    if (d < 1 || d > data.p())
      throw InvalidParams("d = " + std::to_string(d) + " outside [1, p]");

  const std::size_t nd = d_grid.size();
  CVReport report;
  report.d_grid = d_grid;
  report.k = k;
  report.seed = config.seed;
  report.train_r2 = Eigen::MatrixXd::Constant(nd, k, kNaN);
  report.test_r2 = Eigen::MatrixXd::Constant(nd, k, kNaN);
  report.pooled_test_r2 = Eigen::VectorXd::Constant(nd, kNaN);
  report.errors.assign(nd, std::vector<std::string>(k));
  report.fold_of = assign_folds(data.n(), k, config.seed);

  std::vector<std::vector<Index>> train_rows(k), test_rows(k);
  for (Index i = 0; i < data.n(); ++i)
    for (int f = 0; f < k; ++f)
      (report.fold_of[i] == f ? test_rows : train_rows)[f].push_back(i);

  for (std::size_t di = 0; di < nd; ++di) {
    FitConfig cfg = config;
    cfg.d = d_grid[di];
    Eigen::VectorXd out_of_fold = Eigen::VectorXd::Constant(data.n(), kNaN);
    for (int f = 0; f < k; ++f) {
      Dataset<double> train;
      train.X = select_rows(data.X, train_rows[f]);
      train.r = select_entries(data.r, train_rows[f]);
      train.Y = data.Y;
      const Eigen::MatrixXd test_X = select_rows(data.X, test_rows[f]);
      const Eigen::VectorXd test_r = select_entries(data.r, test_rows[f]);
      std::string& err = report.errors[di][f];
      FitResult fitted;
      try {
        fitted = fit(train, cfg);
      } catch (const Error& e) {
        err = e.what();
        continue;
      }
      const Eigen::VectorXd pred_test = predict_responses(fitted, test_X);
      for (std::size_t i = 0; i < test_rows[f].size(); ++i)
        out_of_fold(test_rows[f][i]) = pred_test(i);
      try {
        report.train_r2(di, f) =
            r_squared(predict_responses(fitted, train.X), train.r);
        report.test_r2(di, f) = r_squared(pred_test, test_r);
      } catch (const Error& e) {
        err = e.what();
      }
    }
    if (out_of_fold.allFinite()) {
      try {
        report.pooled_test_r2(di) = r_squared(out_of_fold, data.r);
      } catch (const Error&) {
      }
    }
  }

  report.mean_train_r2.resize(nd);
  report.mean_test_r2.resize(nd);
  for (std::size_t di = 0; di < nd; ++di) {
    report.mean_train_r2(di) = mean_of_finite(report.train_r2.row(di).transpose());
    report.mean_test_r2(di) = mean_of_finite(report.test_r2.row(di).transpose());
  }

  // Mean per-fold test R^2 decides; pooled out-of-fold R^2 is the fallback
  // when no fold has a defined test R^2 (e.g. leave-one-out).
  auto best = argmax_smallest_d(d_grid, report.mean_test_r2);
  if (!best) best = argmax_smallest_d(d_grid, report.pooled_test_r2);
  report.selection_valid = best.has_value();
  report.best_d = best ? d_grid[*best]
                       : *std::min_element(d_grid.begin(), d_grid.end());
  return report;
}

Eigen::VectorXd pca_linear_baseline(const Dataset<double>& train,
                                    const Eigen::MatrixXd& test_X, Index d) {
  const Index p = train.X.cols();
  if (d < 1 || d > p) throw InvalidParams("d must lie in [1, p]");
  if (test_X.cols() != p) throw ShapeMismatch("test_X column count differs");
  if (train.r.size() != train.X.rows())
    throw ShapeMismatch("response length differs from training rows");

  const Eigen::RowVectorXd mean = train.X.colwise().mean();
  const Eigen::MatrixXd Xc = train.X.rowwise() - mean;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(Xc, Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();
  const double cutoff = sv.size() > 0
                            ? sv(0) * std::numeric_limits<double>::epsilon() *
                                  static_cast<double>(std::max(Xc.rows(), p))
                            : 0.0;
  const Index nonzero = (sv.array() > cutoff).count();
  if (nonzero < d)
    throw RankDeficiencyError("training X has only " + std::to_string(nonzero) +
                              " nonzero singular values");

  const Eigen::MatrixXd V = svd.matrixV().leftCols(d);
  Eigen::MatrixXd design(Xc.rows(), d + 1);
  design.col(0).setOnes();
  design.rightCols(d) = Xc * V;
  const Eigen::VectorXd coef =
      Eigen::ColPivHouseholderQR<Eigen::MatrixXd>(design).solve(train.r);

  const Eigen::MatrixXd test_scores = (test_X.rowwise() - mean) * V;
  return (test_scores * coef.tail(d)).array() + coef(0);
}

Eigen::MatrixXd canonical_rotation(const Eigen::VectorXd& beta) {
  const Index d = beta.size();
  const double norm = beta.norm();
  if (!(norm >= 1e-12)) throw ZeroBeta("||beta|| is below 1e-12");
  // Householder H = I - 2 v v' / v'v with H beta = ||beta|| e_1; H = H'.
  Eigen::VectorXd v = beta;
  v(0) -= norm;
  const double vv = v.squaredNorm();
  Eigen::MatrixXd R = Eigen::MatrixXd::Identity(d, d);
  if (vv > 1e-30 * norm * norm) R -= 2.0 * v * v.transpose() / vv;
  return R;
}

FeatureRanking rank_features(const ModelParams<double>& params,
                             const std::vector<std::string>& names,
                             RankRotation rotation) {
  const Index p = params.W.rows();
  if (!names.empty() && static_cast<Index>(names.size()) != p)
    throw ShapeMismatch("names length differs from p");
  if (!(params.beta.norm() >= 1e-12))
    throw ZeroBeta("||beta|| is below 1e-12; no response-linked component");

  FeatureRanking out;
  out.names = names;
  if (rotation == RankRotation::kCanonical) {
    const Eigen::MatrixXd R = canonical_rotation(params.beta);
    out.component_index = 0;
    out.scores = params.W * R.col(0);
  } else {
    Index k = 0;
    params.beta.cwiseAbs().maxCoeff(&k);  // first maximum on ties
    out.component_index = k;
    out.scores = params.W.col(k);
  }

  out.order.resize(static_cast<std::size_t>(p));
  std::iota(out.order.begin(), out.order.end(), Index{0});
  std::stable_sort(out.order.begin(), out.order.end(), [&](Index a, Index b) {
    return std::abs(out.scores(a)) > std::abs(out.scores(b));
  });
  return out;
}

FeatureRanking rank_features(const FitResult& fit,
                             const std::vector<std::string>& names,
                             RankRotation rotation) {
  return rank_features(fit.params, names, rotation);
}

}  // namespace clr
