// Fit a three-variable D-vine, save it, reload it and sample from the copy.

#include <cstdio>
#include <iostream>

#include "minvine/minvine.hpp"

using namespace minvine;

int main() {
  auto ds = rank_transform(synthetic_dataset(1500, 21));
  ds.columns.resize(3);
  ds.labels.resize(3);

  const BasisLibrary lib;
  VineFitOptions opt;
  opt.k = 2;
  opt.bins = 2;
  FitConfig cfg;
  cfg.grid_n = 40;
  const auto model = fit_vine(ds.columns, build_dvine(ds.labels),
                              lib.candidate_pool(BasisKind::orthonormal_polynomial, 4), opt, cfg);

  const auto text = dump(to_json(model));
  const auto copy = vine_model_from_json(Json::parse(text));
  std::printf("components %zu, total loglik %.3f, reloaded %.3f\n", copy.component_count(),
              model.total_log_likelihood, copy.total_log_likelihood);

  const auto draws = sample_vine(copy, 5, 7);
  write_csv(std::cout, ds.labels, draws);
}
