#include "clr/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "clr/likelihood.hpp"
#include "clr/parameterization.hpp"
#include "clr/simulate.hpp"

namespace clr {

namespace {

void compare_block(BlockComparison& block, const double* a, const double* f,
                   Index count, double rtol, double atol) {
  for (Index i = 0; i < count; ++i) {
    const double diff = std::abs(a[i] - f[i]);
    const double scale = std::max(std::abs(a[i]), std::abs(f[i]));
    const double rel = scale > 0 ? diff / scale : 0.0;
    block.worst_rel = std::max(block.worst_rel, rel);
    block.worst_abs = std::max(block.worst_abs, diff);
    block.max_magnitude = std::max(block.max_magnitude, std::abs(a[i]));
    const bool near_zero = scale <= atol;
    if (!(diff <= rtol * scale) && !near_zero) block.ok = false;
  }
}

}  // namespace

void GradientComparison::merge(const GradientComparison& other) {
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    blocks[b].worst_rel = std::max(blocks[b].worst_rel, other.blocks[b].worst_rel);
    blocks[b].worst_abs = std::max(blocks[b].worst_abs, other.blocks[b].worst_abs);
    blocks[b].max_magnitude =
        std::max(blocks[b].max_magnitude, other.blocks[b].max_magnitude);
    blocks[b].ok = blocks[b].ok && other.blocks[b].ok;
  }
  ok = ok && other.ok;
}

GradientComparison compare_gradients(const GradientSet<double>& a,
                                     const GradientSet<double>& f, double rtol,
                                     double atol) {
  if (a.dS.size() != f.dS.size() || a.dW.size() != f.dW.size() ||
      a.dbeta.size() != f.dbeta.size())
    throw ShapeMismatch("gradient shapes differ");
  GradientComparison out;
  out.blocks[0].name = "S";
  out.blocks[1].name = "W";
  out.blocks[2].name = "beta";
  out.blocks[3].name = "sigma2";
  out.blocks[4].name = "tau2";
  compare_block(out.blocks[0], a.dS.data(), f.dS.data(), a.dS.size(), rtol, atol);
  compare_block(out.blocks[1], a.dW.data(), f.dW.data(), a.dW.size(), rtol, atol);
  compare_block(out.blocks[2], a.dbeta.data(), f.dbeta.data(), a.dbeta.size(),
                rtol, atol);
  compare_block(out.blocks[3], &a.dsigma2, &f.dsigma2, 1, rtol, atol);
  compare_block(out.blocks[4], &a.dtau2, &f.dtau2, 1, rtol, atol);
  out.ok = std::all_of(out.blocks.begin(), out.blocks.end(),
                       [](const BlockComparison& b) { return b.ok; });
  return out;
}

std::pair<ModelParams<double>, Dataset<double>> random_instance(
    Index p, Index d, Index n, Index m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> log_var(-1.0, 0.5);
  const std::uint64_t data_seed = rng();
  const std::uint64_t param_seed = rng();

  GenConfig gen;
  gen.n = n;
  gen.m = m;
  gen.p = p;
  gen.d = d;
  gen.seed = data_seed;
  Dataset<double> data = generate(gen).data;

  ModelParams<double> params =
      draw_truth(p, d, std::exp(log_var(rng)), std::exp(log_var(rng)),
                 param_seed);
  params.S *= 0.7;
  params.W *= 0.7;
  return {std::move(params), std::move(data)};
}

GradCheckReport run_gradcheck(const GradCheckConfig& config) {
  GradCheckReport report;
  bool first = true;
  for (int trial = 0; trial < config.trials; ++trial) {
    const std::uint64_t seed = config.seed ^ static_cast<std::uint64_t>(trial);
    const auto [params, data] =
        random_instance(config.p, config.d, config.n, config.m, seed);
    const GradientSet<double> analytic =
        grad_log_likelihood(params, data, config.alpha);
    const GradientSet<double> numeric =
        finite_diff_gradient(params, data, config.alpha, config.step);
    const GradientComparison cmp =
        compare_gradients(analytic, numeric, config.rtol, config.atol);
    if (!cmp.ok) report.failing_seeds.push_back(seed);
    if (first) {
      report.summary = cmp;
      first = false;
    } else {
      report.summary.merge(cmp);
    }
  }
  return report;
}

}  // namespace clr
