#ifndef CLR_TYPES_HPP
#define CLR_TYPES_HPP

#include <Eigen/Dense>

#include <cmath>
#include <string>
#include <vector>

#include "clr/errors.hpp"

namespace clr {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Index = Eigen::Index;

/*
 * Parameters of the contrastive regression model
 *
 *   x = S z_a + W t + eps_a,   y = S z_b + eps_b,   r = beta' t + eta
 *
 * with z_a, z_b, t ~ N(0, I_d), eps ~ N(0, sigma2 I_p), eta ~ N(0, tau2).
 * p and d are carried by the shapes of S and W.
 */
template <typename Scalar = double>
struct ModelParams {
  Matrix<Scalar> S;     // p x d shared loadings
  Matrix<Scalar> W;     // p x d foreground-specific loadings
  Vector<Scalar> beta;  // d
  Scalar sigma2{1};
  Scalar tau2{1};

  Index p() const { return S.rows(); }
  Index d() const { return S.cols(); }

  /// Shape and finiteness checks only; variances may be zero.
  void validate_shapes() const {
    if (S.rows() != W.rows() || S.cols() != W.cols())
      throw ShapeMismatch("S and W must have identical shapes");
    if (beta.size() != S.cols())
      throw ShapeMismatch("beta must have length d");
    if (S.cols() < 1 || S.rows() < 1)
      throw ShapeMismatch("p and d must be positive");
    if (S.cols() > S.rows()) throw ShapeMismatch("d must not exceed p");
    if (!S.allFinite() || !W.allFinite() || !beta.allFinite() ||
        !std::isfinite(sigma2) || !std::isfinite(tau2))
      throw InvalidParams("parameters must be finite");
  }

  void validate() const {
    validate_shapes();
    if (!(sigma2 > 0) || !(tau2 > 0))
      throw InvalidParams("sigma2 and tau2 must be positive");
  }

  static ModelParams zeros(Index p, Index d) {
    ModelParams out;
    out.S = Matrix<Scalar>::Zero(p, d);
    out.W = Matrix<Scalar>::Zero(p, d);
    out.beta = Vector<Scalar>::Zero(d);
    return out;
  }
};

/// Foreground rows X with responses r, background rows Y (rows are samples).
template <typename Scalar = double>
struct Dataset {
  Matrix<Scalar> X;
  Vector<Scalar> r;
  Matrix<Scalar> Y;
  std::vector<std::string> feature_names;

  Index n() const { return X.rows(); }
  Index m() const { return Y.rows(); }
  Index p() const { return X.cols(); }

  void validate() const {
    if (Y.rows() > 0 && Y.cols() != X.cols())
      throw ShapeMismatch("foreground and background column counts differ");
    if (r.size() != X.rows())
      throw ShapeMismatch("response length differs from foreground rows");
    if (!feature_names.empty() &&
        static_cast<Index>(feature_names.size()) != X.cols())
      throw ShapeMismatch("feature_names length differs from column count");
    if (!X.allFinite() || !r.allFinite() || !Y.allFinite())
      throw DegenerateData("dataset contains non-finite entries");
  }
};

/// d log-likelihood / d parameter, in the natural (constrained) coordinates.
template <typename Scalar = double>
struct GradientSet {
  Matrix<Scalar> dS;
  Matrix<Scalar> dW;
  Vector<Scalar> dbeta;
  Scalar dsigma2{0};
  Scalar dtau2{0};
};

template <typename Scalar = double>
struct PredictiveDist {
  Scalar mean{0};
  Scalar variance{0};
};

template <typename Scalar = double>
struct LatentPosterior {
  Vector<Scalar> t_mean;
  Matrix<Scalar> t_cov;
};

}  // namespace clr

#endif  // CLR_TYPES_HPP
