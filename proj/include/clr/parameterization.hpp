#ifndef CLR_PARAMETERIZATION_HPP
#define CLR_PARAMETERIZATION_HPP

#include <cmath>

#include "clr/likelihood.hpp"
#include "clr/types.hpp"

namespace clr {

/*
 * Unconstrained coordinates used by the optimizer and the finite-difference
 * oracle:  [ vec(S) ; vec(W) ; beta ; log sigma2 ; log tau2 ]
 * (column-major vec). Length 2pd + d + 2.
 */
inline Index unconstrained_size(Index p, Index d) {
  return 2 * p * d + d + 2;
}

template <typename Scalar>
Vector<Scalar> pack(const ModelParams<Scalar>& params) {
  const Index p = params.p(), d = params.d();
  Vector<Scalar> theta(unconstrained_size(p, d));
  theta.segment(0, p * d) = params.S.reshaped();
  theta.segment(p * d, p * d) = params.W.reshaped();
  theta.segment(2 * p * d, d) = params.beta;
  theta(2 * p * d + d) = std::log(params.sigma2);
  theta(2 * p * d + d + 1) = std::log(params.tau2);
  return theta;
}

template <typename Scalar>
ModelParams<Scalar> unpack(const Vector<Scalar>& theta, Index p, Index d) {
  if (theta.size() != unconstrained_size(p, d))
    throw ShapeMismatch("parameter vector has the wrong length");
  ModelParams<Scalar> params;
  params.S = theta.segment(0, p * d).reshaped(p, d);
  params.W = theta.segment(p * d, p * d).reshaped(p, d);
  params.beta = theta.segment(2 * p * d, d);
  params.sigma2 = std::exp(theta(2 * p * d + d));
  params.tau2 = std::exp(theta(2 * p * d + d + 1));
  return params;
}

/// Chain rule onto the unconstrained coordinates: dl/dlog(s2) = s2 dl/ds2.
template <typename Scalar>
Vector<Scalar> pack_gradient(const GradientSet<Scalar>& g,
                             const ModelParams<Scalar>& at) {
  const Index p = at.p(), d = at.d();
  Vector<Scalar> out(unconstrained_size(p, d));
  out.segment(0, p * d) = g.dS.reshaped();
  out.segment(p * d, p * d) = g.dW.reshaped();
  out.segment(2 * p * d, d) = g.dbeta;
  out(2 * p * d + d) = at.sigma2 * g.dsigma2;
  out(2 * p * d + d + 1) = at.tau2 * g.dtau2;
  return out;
}

/// Inverse of pack_gradient.
template <typename Scalar>
GradientSet<Scalar> unpack_gradient(const Vector<Scalar>& g_theta,
                                    const ModelParams<Scalar>& at) {
  const Index p = at.p(), d = at.d();
  GradientSet<Scalar> g;
  g.dS = g_theta.segment(0, p * d).reshaped(p, d);
  g.dW = g_theta.segment(p * d, p * d).reshaped(p, d);
  g.dbeta = g_theta.segment(2 * p * d, d);
  g.dsigma2 = g_theta(2 * p * d + d) / at.sigma2;
  g.dtau2 = g_theta(2 * p * d + d + 1) / at.tau2;
  return g;
}

/*
 * Central differences of log_likelihood in the unconstrained coordinates,
 * returned in natural coordinates. Independent of the analytic gradient:
 * only objective values are used.
 */
template <typename Scalar>
GradientSet<Scalar> finite_diff_gradient(const ModelParams<Scalar>& params,
                                         const Dataset<Scalar>& data,
                                         Scalar alpha, Scalar step) {
  if (!(step > Scalar(0))) throw InvalidParams("step must be positive");
  params.validate();
  const Index p = params.p(), d = params.d();
  const Vector<Scalar> theta = pack(params);
  Vector<Scalar> g_theta(theta.size());
  Vector<Scalar> probe = theta;
  for (Index i = 0; i < theta.size(); ++i) {
    probe(i) = theta(i) + step;
    const Scalar fwd = log_likelihood(unpack(probe, p, d), data, alpha);
    probe(i) = theta(i) - step;
    const Scalar bwd = log_likelihood(unpack(probe, p, d), data, alpha);
    probe(i) = theta(i);
    g_theta(i) = (fwd - bwd) / (2 * step);
  }
  return unpack_gradient(g_theta, params);
}

}  // namespace clr

#endif  // CLR_PARAMETERIZATION_HPP
