// Fit a minimum-information copula to a Gaussian-dependent sample and print
// the stepwise path.

#include <cmath>
#include <cstdio>

#include "minvine/minvine.hpp"

using namespace minvine;

int main() {
  Eigen::MatrixXd r(2, 2);
  r << 1.0, 0.6, 0.6, 1.0;
  const auto cols = gaussian_copula_sample(r, 1500, 11);
  const PairSample sample(uniform_ranks(cols[0]), uniform_ranks(cols[1]));

  const BasisLibrary lib;
  FitConfig cfg;
  cfg.grid_n = 60;
  const auto result = stepwise_select(lib.candidate_pool(BasisKind::orthonormal_polynomial, 4), sample, 4, cfg);

  for (const auto& stage : result.stages)
    std::printf("%-16s loglik %8.3f  residual %.1e\n", stage.constraints.back().basis.label.c_str(),
                stage.log_likelihood, stage.residual);
  for (const auto& w : result.warnings) std::printf("warning: %s\n", w.c_str());

  const auto& fit = result.stages.back();
  std::printf("density at (0.1,0.1) %.3f, at (0.1,0.9) %.3f\n", std::exp(log_density(fit.copula, 0.1, 0.1)),
              std::exp(log_density(fit.copula, 0.1, 0.9)));
}
