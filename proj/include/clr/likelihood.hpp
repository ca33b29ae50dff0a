#ifndef CLR_LIKELIHOOD_HPP
#define CLR_LIKELIHOOD_HPP

#include <cmath>
#include <numbers>
#include <optional>

#include "clr/types.hpp"
#include "clr/workspace.hpp"

namespace clr {

namespace detail {

template <typename Scalar>
void check_compatible(const ModelParams<Scalar>& params,
                      const Dataset<Scalar>& data, Scalar alpha) {
  data.validate();
  if (data.n() > 0 && data.p() != params.p())
    throw ShapeMismatch("foreground has " + std::to_string(data.p()) +
                        " columns, model expects " +
                        std::to_string(params.p()));
  if (data.m() > 0 && data.Y.cols() != params.p())
    throw ShapeMismatch("background has " + std::to_string(data.Y.cols()) +
                        " columns, model expects " +
                        std::to_string(params.p()));
  if (!(alpha >= Scalar(0)) || !std::isfinite(alpha))
    throw InvalidParams("alpha must be a finite nonnegative number");
}

/// tr(M^-1) for SPD M given its Cholesky factor, as ||L^-1||_F^2.
template <typename Scalar>
Scalar trace_of_inverse(const Eigen::LLT<Matrix<Scalar>>& llt) {
  const Index p = llt.rows();
  Matrix<Scalar> Linv = Matrix<Scalar>::Identity(p, p);
  llt.matrixL().solveInPlace(Linv);
  return Linv.squaredNorm();
}

}  // namespace detail

template <typename Scalar>
struct LikelihoodEvaluation {
  Scalar value{0};
  std::optional<GradientSet<Scalar>> gradient;
};

/*
 * Log-likelihood of (X, r, Y) and optionally its gradient.
 *
 *   l = sum_i log N(r_i; c'x_i, v) + sum_i log N(x_i; 0, Q)
 *       + alpha * sum_j log N(y_j; 0, P)
 *
 * with c = P^-1 W A beta = Q^-1 W beta and v = tau2 + beta' A beta. All
 * normalizing constants are included. The gradient is assembled from the
 * symmetric sensitivities dl/dQ and dl/dP, then pushed through
 * Q = SS' + WW' + sigma2 I and P = SS' + sigma2 I.
 */
template <typename Scalar>
LikelihoodEvaluation<Scalar> evaluate_likelihood(const ModelParams<Scalar>& params,
                                                 const Dataset<Scalar>& data,
                                                 Scalar alpha,
                                                 bool with_gradient) {
  using Mat = Matrix<Scalar>;
  using Vec = Vector<Scalar>;
  detail::check_compatible(params, data, alpha);
  const Workspace<Scalar> ws = build_workspace(params);

  const Index p = params.p();
  const Index d = params.d();
  const Scalar n = static_cast<Scalar>(data.n());
  const Scalar m = static_cast<Scalar>(data.m());
  const Scalar log2pi = std::log(Scalar(2) * std::numbers::pi_v<Scalar>);
  const bool use_fg = data.n() > 0;
  const bool use_bg = data.m() > 0 && alpha != Scalar(0);

  LikelihoodEvaluation<Scalar> out;
  Scalar value = 0;

  Mat Zx;  // L_Q^-1 X'
  Vec resid;
  const Scalar v = ws.pred_var;
  if (use_fg) {
    Zx = data.X.transpose();
    ws.chol_Q.matrixL().solveInPlace(Zx);
    resid = data.r - data.X * ws.pred_coef;
    value += -n / 2 * std::log(v) - resid.squaredNorm() / (2 * v) -
             n / 2 * ws.logdet_Q - Zx.squaredNorm() / 2 -
             (n * p + n) / 2 * log2pi;
  }

  Mat Zy;  // L_P^-1 Y'
  if (use_bg) {
    Zy = data.Y.transpose();
    ws.chol_P.matrixL().solveInPlace(Zy);
    value += alpha * (-m / 2 * ws.logdet_P - Zy.squaredNorm() / 2 -
                      m * p / 2 * log2pi);
  }
  out.value = value;
  if (!with_gradient) return out;

  GradientSet<Scalar> g;
  g.dS = Mat::Zero(p, d);
  g.dW = Mat::Zero(p, d);
  g.dbeta = Vec::Zero(d);

  if (use_fg) {
    const Vec u = params.W * params.beta;
    const Vec c = ws.chol_Q.solve(u);
    const Scalar dl_dv = -n / (2 * v) + resid.squaredNorm() / (2 * v * v);
    const Vec dl_dc = data.X.transpose() * resid / v;
    const Vec h = ws.chol_Q.solve(dl_dc);
    Mat Kx = Zx;  // Q^-1 X'
    ws.chol_Q.matrixU().solveInPlace(Kx);

    // dl/dQ applied to a p x k block.
    auto apply_MQ = [&](const Mat& B) -> Mat {
      const Eigen::Matrix<Scalar, 1, Eigen::Dynamic> cB = c.transpose() * B;
      const Eigen::Matrix<Scalar, 1, Eigen::Dynamic> hB = h.transpose() * B;
      Mat out_block = dl_dv * c * cB - Scalar(0.5) * (h * cB + c * hB);
      out_block -= n / 2 * ws.chol_Q.solve(B);
      out_block.noalias() += Scalar(0.5) * Kx * (Kx.transpose() * B);
      return out_block;
    };
    const Scalar trace_MQ = dl_dv * c.squaredNorm() - h.dot(c) -
                            n / 2 * detail::trace_of_inverse(ws.chol_Q) +
                            Kx.squaredNorm() / 2;

    const Vec dl_du = h - 2 * dl_dv * c;
    g.dS += 2 * apply_MQ(params.S);
    g.dW += 2 * apply_MQ(params.W);
    g.dW.noalias() += dl_du * params.beta.transpose();
    g.dbeta += params.W.transpose() * dl_du + 2 * dl_dv * params.beta;
    g.dsigma2 += trace_MQ;
    g.dtau2 += dl_dv;
  }

  if (use_bg) {
    Mat Ky = Zy;  // P^-1 Y'
    ws.chol_P.matrixU().solveInPlace(Ky);
    Mat MP_S = -m / 2 * ws.chol_P.solve(params.S);
    MP_S.noalias() += Scalar(0.5) * Ky * (Ky.transpose() * params.S);
    g.dS += 2 * alpha * MP_S;
    g.dsigma2 += alpha * (-m / 2 * detail::trace_of_inverse(ws.chol_P) +
                          Ky.squaredNorm() / 2);
  }

  out.gradient = std::move(g);
  return out;
}

template <typename Scalar>
Scalar log_likelihood(const ModelParams<Scalar>& params,
                      const Dataset<Scalar>& data, Scalar alpha = Scalar(1)) {
  return evaluate_likelihood(params, data, alpha, false).value;
}

template <typename Scalar>
GradientSet<Scalar> grad_log_likelihood(const ModelParams<Scalar>& params,
                                        const Dataset<Scalar>& data,
                                        Scalar alpha = Scalar(1)) {
  return *evaluate_likelihood(params, data, alpha, true).gradient;
}

}  // namespace clr

#endif  // CLR_LIKELIHOOD_HPP
