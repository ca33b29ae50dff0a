#ifndef CLR_WORKSPACE_HPP
#define CLR_WORKSPACE_HPP

#include <Eigen/Cholesky>

#include <cmath>

#include "clr/types.hpp"

namespace clr {

/*
 * Derived quantities shared by the likelihood, its gradient and prediction.
 *
 *   P = S S' + sigma2 I          (background covariance)
 *   Q = S S' + W W' + sigma2 I   (foreground covariance)
 *   A = (W' P^-1 W + I)^-1       (posterior covariance of t given x)
 *
 * Immutable once built. No p x p inverse is ever formed: every P^-1 or Q^-1
 * product goes through the stored Cholesky factors.
 */
template <typename Scalar = double>
struct Workspace {
  using Mat = Matrix<Scalar>;
  using Vec = Vector<Scalar>;

  Mat P;
  Mat Q;
  Mat A;
  Eigen::LLT<Mat> chol_P;
  Eigen::LLT<Mat> chol_Q;
  Scalar logdet_P{0};
  Scalar logdet_Q{0};
  Mat Pinv_W;      // P^-1 W, p x d
  Scalar pred_var{0};  // tau2 + beta' A beta
  Vec pred_coef;       // P^-1 W A beta; predictive mean is pred_coef' x
};

namespace detail {

template <typename Scalar>
Scalar factor_or_throw(Eigen::LLT<Matrix<Scalar>>& llt, const Matrix<Scalar>& M,
                       const char* name) {
  llt.compute(M);
  if (llt.info() != Eigen::Success)
    throw FactorizationError(std::string(name) + " is not positive definite");
  const auto diag = llt.matrixLLT().diagonal();
  if (!diag.allFinite() || (diag.array() <= Scalar(0)).any())
    throw FactorizationError(std::string(name) +
                             " has a non-positive Cholesky pivot");
  return Scalar(2) * diag.array().log().sum();
}

}  // namespace detail

template <typename Scalar>
Workspace<Scalar> build_workspace(const ModelParams<Scalar>& params) {
  params.validate();
  using Mat = Matrix<Scalar>;
  const Index d = params.d();

  Workspace<Scalar> ws;
  ws.P = params.S * params.S.transpose();
  ws.P.diagonal().array() += params.sigma2;
  ws.Q = ws.P;
  ws.Q.noalias() += params.W * params.W.transpose();

  ws.logdet_P = detail::factor_or_throw(ws.chol_P, ws.P, "P");
  ws.logdet_Q = detail::factor_or_throw(ws.chol_Q, ws.Q, "Q");

  ws.Pinv_W = ws.chol_P.solve(params.W);
  Mat B = params.W.transpose() * ws.Pinv_W;
  B = (B + B.transpose()).eval() / Scalar(2);
  B.diagonal().array() += Scalar(1);
  Eigen::LLT<Mat> chol_B(B);
  if (chol_B.info() != Eigen::Success)
    throw FactorizationError("W' P^-1 W + I is not positive definite");
  ws.A = chol_B.solve(Mat::Identity(d, d));
  ws.A = (ws.A + ws.A.transpose()).eval() / Scalar(2);

  const Vector<Scalar> A_beta = ws.A * params.beta;
  ws.pred_var = params.tau2 + params.beta.dot(A_beta);
  ws.pred_coef = ws.Pinv_W * A_beta;
  return ws;
}

}  // namespace clr

#endif  // CLR_WORKSPACE_HPP
