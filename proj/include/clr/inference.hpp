#ifndef CLR_INFERENCE_HPP
#define CLR_INFERENCE_HPP

#include <Eigen/QR>
#include <Eigen/Eigenvalues>

#include "clr/types.hpp"
#include "clr/workspace.hpp"

namespace clr {

/// r* | x* ~ N(beta' A W' P^-1 x*, tau2 + beta' A beta).
template <typename Scalar, typename Derived>
PredictiveDist<Scalar> predict(const Workspace<Scalar>& ws,
                               const Eigen::MatrixBase<Derived>& x_star) {
  if (x_star.size() != ws.pred_coef.size())
    throw ShapeMismatch("query point has the wrong length");
  return {ws.pred_coef.dot(x_star), ws.pred_var};
}

template <typename Scalar, typename Derived>
PredictiveDist<Scalar> predict(const ModelParams<Scalar>& params,
                               const Eigen::MatrixBase<Derived>& x_star) {
  return predict(build_workspace(params), x_star);
}

/// Predictive means for every row of X; the variance is shared by all rows.
template <typename Scalar>
Vector<Scalar> predict_mean(const Workspace<Scalar>& ws,
                            const Matrix<Scalar>& X) {
  if (X.cols() != ws.pred_coef.size())
    throw ShapeMismatch("query matrix has the wrong column count");
  return X * ws.pred_coef;
}

/// t | x ~ N(A W' P^-1 x, A).
template <typename Scalar, typename Derived>
LatentPosterior<Scalar> latent_posterior(const ModelParams<Scalar>& params,
                                         const Eigen::MatrixBase<Derived>& x) {
  if (x.size() != params.p())
    throw ShapeMismatch("observation has the wrong length");
  const Workspace<Scalar> ws = build_workspace(params);
  LatentPosterior<Scalar> out;
  out.t_mean = ws.A * (ws.Pinv_W.transpose() * x);
  out.t_cov = ws.A;
  return out;
}

enum class ResidualFallback { kThrow, kMinimumNorm };

/*
 * Contrastive expression: each row x minus its least-squares reconstruction
 * S z_hat. Rejects S whose Gram matrix is singular below 1e-12 ||S||_F^2
 * unless the minimum-norm solution is requested.
 */
template <typename Scalar>
Matrix<Scalar> contrastive_residuals(
    const ModelParams<Scalar>& params, const Matrix<Scalar>& X,
    ResidualFallback fallback = ResidualFallback::kThrow) {
  const Matrix<Scalar>& S = params.S;
  if (X.cols() != S.rows())
    throw ShapeMismatch("X column count differs from p");

  const Matrix<Scalar> gram = S.transpose() * S;
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> eig(gram,
                                                     Eigen::EigenvaluesOnly);
  const Scalar min_eig = eig.eigenvalues().minCoeff();
  const bool deficient = !(min_eig > Scalar(1e-12) * S.squaredNorm());

  Matrix<Scalar> Z;  // d x n latent reconstructions
  if (!deficient) {
    Z = Eigen::HouseholderQR<Matrix<Scalar>>(S).solve(X.transpose());
  } else if (fallback == ResidualFallback::kMinimumNorm) {
    Z = Eigen::CompleteOrthogonalDecomposition<Matrix<Scalar>>(S).solve(
        X.transpose());
  } else {
    throw RankDeficiencyError("shared loadings S are rank deficient");
  }
  return X - (S * Z).transpose();
}

}  // namespace clr

#endif  // CLR_INFERENCE_HPP
