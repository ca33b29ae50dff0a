#ifndef CLR_GRADCHECK_HPP
#define CLR_GRADCHECK_HPP

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "clr/types.hpp"

namespace clr {

// Analytic gradient against central finite differences.

struct BlockComparison {
  std::string name;
  double worst_rel = 0;  // |a - f| / max(|a|, |f|), 0 when both vanish
  double worst_abs = 0;
  double max_magnitude = 0;  // largest |a| seen, to show exact-zero blocks
  bool ok = true;
};

struct GradientComparison {
  std::array<BlockComparison, 5> blocks;  // S, W, beta, sigma2, tau2
  bool ok = true;

  void merge(const GradientComparison& other);
};

/// A coordinate passes when |a - f| <= rtol max(|a|, |f|), or when both
/// values are within atol of zero.
GradientComparison compare_gradients(const GradientSet<double>& analytic,
                                     const GradientSet<double>& numeric,
                                     double rtol, double atol);

struct GradCheckConfig {
  Index p = 6;
  Index d = 2;
  Index n = 8;
  Index m = 8;
  int trials = 20;
  std::uint64_t seed = 0;
  double step = 1e-5;
  double rtol = 1e-4;
  double atol = 1e-8;
  double alpha = 1.0;
};

struct GradCheckReport {
  GradientComparison summary;
  std::vector<std::uint64_t> failing_seeds;
  bool passed() const { return summary.ok; }
};

/// Random evaluation point and data for one trial: parameters with entries
/// of order one and data drawn from an independent truth.
std::pair<ModelParams<double>, Dataset<double>> random_instance(
    Index p, Index d, Index n, Index m, std::uint64_t seed);

GradCheckReport run_gradcheck(const GradCheckConfig& config);

}  // namespace clr

#endif  // CLR_GRADCHECK_HPP
