#ifndef MINVINE_MINFO_FIT_HPP
#define MINVINE_MINFO_FIT_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "minvine/basis.hpp"
#include "minvine/copula_grid.hpp"
#include "minvine/error.hpp"
#include "minvine/nelder_mead.hpp"

namespace minvine {

/// A basis function paired with its required expectation.
struct MomentConstraint {
  TensorBasis2D basis;
  double target;
};

/// Pseudo-observations (u_t, v_t) in [0,1]^2.
struct PairSample {
  std::vector<double> u;
  std::vector<double> v;

  PairSample() = default;
  PairSample(std::vector<double> u_, std::vector<double> v_)
      : u(std::move(u_)), v(std::move(v_)) {
    if (u.size() != v.size()) throw InvalidArgument("pair sample columns differ in length");
    for (std::size_t t = 0; t < u.size(); ++t)
      if (!(u[t] >= 0.0 && u[t] <= 1.0 && v[t] >= 0.0 && v[t] <= 1.0))
        throw DomainError("pair sample coordinate outside [0,1]");
  }

  std::size_t size() const { return u.size(); }
  bool empty() const { return u.empty(); }
};

enum class Optimizer { nelder_mead };

struct FitConfig {
  int grid_n = 200;
  double dad_tol = kDefaultDadTol;
  int dad_max_iter = kDefaultDadMaxIter;
  Optimizer optimizer = Optimizer::nelder_mead;
  double opt_tol = 1e-10;   // on L_sum
  int opt_max_evals = 20000;
  std::vector<double> lambda_init;  // empty means zeros

  void validate() const {
    if (grid_n < 2) throw ConfigError("grid_n must be at least 2");
    if (!(dad_tol > 0.0) || !(opt_tol > 0.0)) throw ConfigError("tolerances must be positive");
    if (dad_max_iter < 1 || opt_max_evals < 1) throw ConfigError("iteration limits must be positive");
  }
};

struct CopulaFit {
  std::vector<MomentConstraint> constraints;
  std::vector<double> lambdas;
  DiscretizedCopula copula;
  double log_likelihood = 0.0;
  double residual = 0.0;  // final L_sum
  int evals_used = 0;

  std::vector<TensorBasis2D> bases() const {
    std::vector<TensorBasis2D> out;
    for (const auto& c : constraints) out.push_back(c.basis);
    return out;
  }
  std::vector<double> targets() const {
    std::vector<double> out;
    for (const auto& c : constraints) out.push_back(c.target);
    return out;
  }
};

/// alpha_k = (1/N) sum_t h_k(u_t, v_t)
inline std::vector<double> empirical_moments(const PairSample& sample,
                                             std::span<const TensorBasis2D> bases) {
  if (sample.empty()) throw InvalidArgument("empirical moments of an empty sample");
  std::vector<double> out;
  out.reserve(bases.size());
  for (const auto& h : bases) {
    double acc = 0.0;
    for (std::size_t t = 0; t < sample.size(); ++t) acc += h(sample.u[t], sample.v[t]);
    out.push_back(acc / static_cast<double>(sample.size()));
  }
  return out;
}

inline double sample_log_likelihood(const DiscretizedCopula& copula, const PairSample& sample) {
  double acc = 0.0;
  for (std::size_t t = 0; t < sample.size(); ++t)
    acc += log_density(copula, sample.u[t], sample.v[t]);
  return acc;
}

/// Copula of exp(sum lambda_k h_k) projected to uniform margins.
inline DiscretizedCopula minimum_information_copula(std::span<const double> lambdas,
                                                    std::span<const TensorBasis2D> bases,
                                                    const FitConfig& config) {
  const UnitGrid grid(config.grid_n);
  return d1ad2_project(eval_kernel(lambdas, bases, grid), config.dad_tol,
                       config.dad_max_iter);
}

/// L_l = (1/n^2) sum_ij P_ij h_l(u_i, v_j) - alpha_l
inline std::vector<double> residual_vector(std::span<const double> lambdas,
                                           std::span<const MomentConstraint> constraints,
                                           const FitConfig& config) {
  std::vector<TensorBasis2D> bases;
  for (const auto& c : constraints) bases.push_back(c.basis);
  const auto cop = minimum_information_copula(lambdas, bases, config);
  std::vector<double> out;
  for (const auto& c : constraints) out.push_back(expectation(cop, c.basis) - c.target);
  return out;
}

/// Thresholds for declaring moment targets unreachable.
inline constexpr int kInfeasibleWindow = 200;
inline constexpr double kInfeasibleImprovement = 1e-14;
inline constexpr double kInfeasibleFloor = 1e-6;

/// Lagrange multipliers whose minimum-information copula matches the
/// constraint targets, found by Nelder-Mead on L_sum = sum_l L_l^2.
///
/// A stall (no 1e-14 improvement over 200 evaluations) above L_sum = 1e-6
/// means the targets are outside the reachable moment set; a stall below
/// that restarts the simplex around the best point with a smaller step.
/// `sample`, when given, is scored for the fit's log-likelihood.
inline CopulaFit solve_lambdas(std::vector<MomentConstraint> constraints,
                               const FitConfig& config,
                               const PairSample* sample = nullptr) {
  config.validate();
  if (constraints.empty()) throw InvalidArgument("solve_lambdas needs at least one constraint");
  for (const auto& c : constraints)
    if (!std::isfinite(c.target)) throw InvalidArgument("moment target must be finite");
  const std::size_t k = constraints.size();
  const UnitGrid grid(config.grid_n);
  const std::size_t n = grid.size();

  std::vector<TensorBasis2D> bases;
  std::vector<std::vector<double>> left, right;
  for (const auto& c : constraints) {
    bases.push_back(c.basis);
    left.push_back(grid.sample(c.basis.left.function));
    right.push_back(grid.sample(c.basis.right.function));
  }

  auto lsum_of = [&](const DiscretizedCopula& cop) {
    const auto& dens = cop.density();
    double acc = 0.0;
    std::vector<double> tmp(n);
    for (std::size_t l = 0; l < k; ++l) {
      double e = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        const double* row = dens.data() + i * n;
        for (std::size_t j = 0; j < n; ++j) s += row[j] * right[l][j];
        e += left[l][i] * s;
      }
      const double r = e / static_cast<double>(n * n) - constraints[l].target;
      acc += r * r;
    }
    return acc;
  };
  // Points whose kernel underflows or whose projection fails score +inf so
  // the simplex backs away from them; a search that only finds such points
  // stalls and is reported as infeasible.
  auto objective = [&](const std::vector<double>& lam) {
    constexpr double bad = std::numeric_limits<double>::infinity();
    try {
      auto kernel = eval_kernel(lam, bases, grid);
      if (*std::min_element(kernel.values.begin(), kernel.values.end()) <= 0.0) return bad;
      return lsum_of(d1ad2_project(std::move(kernel), config.dad_tol, config.dad_max_iter));
    } catch (const NonFiniteError&) {
      return bad;
    } catch (const ConvergenceFailure&) {
      return bad;
    }
  };

  std::vector<double> x0 = config.lambda_init;
  if (x0.size() != k) x0.assign(k, 0.0);

  NelderMeadOptions opt;
  opt.f_target = config.opt_tol;
  opt.stall_window = kInfeasibleWindow;
  opt.stall_improvement = kInfeasibleImprovement;

  int evals = 0;
  NelderMeadResult res;
  double step = 0.1;
  for (int restart = 0;; ++restart) {
    opt.initial_step = step;
    opt.max_evals = config.opt_max_evals - evals;
    res = nelder_mead(objective, x0, opt);
    evals += res.evals;
    if (res.status == NelderMeadStatus::reached_target) break;
    if (res.status == NelderMeadStatus::stalled && res.f > kInfeasibleFloor)
      throw InfeasibleMoments("moment targets not reachable (L_sum stalled at " +
                                  std::to_string(res.f) + ")",
                              res.f);
    if (res.status == NelderMeadStatus::max_evals || evals >= config.opt_max_evals)
      throw FitFailure("Nelder-Mead exhausted " + std::to_string(config.opt_max_evals) +
                           " evaluations with L_sum = " + std::to_string(res.f),
                       res.f);
    x0 = res.x;
    step = std::max(step * 0.1, 1e-6);
  }

  auto cop = d1ad2_project(eval_kernel(res.x, bases, grid), config.dad_tol,
                           config.dad_max_iter);
  const double ll = sample ? sample_log_likelihood(cop, *sample) : 0.0;
  return CopulaFit{std::move(constraints), res.x, std::move(cop), ll, res.f, evals};
}

/// Moment constraints with targets measured on `sample`.
inline std::vector<MomentConstraint> empirical_constraints(
    const PairSample& sample, std::span<const TensorBasis2D> bases) {
  const auto alpha = empirical_moments(sample, bases);
  std::vector<MomentConstraint> out;
  for (std::size_t i = 0; i < bases.size(); ++i) out.push_back({bases[i], alpha[i]});
  return out;
}

struct StepwiseResult {
  std::vector<CopulaFit> stages;       // fit after each added basis
  std::vector<std::string> warnings;   // candidates skipped because their fit failed
};

/// Greedy forward selection: at every stage refit with each remaining
/// candidate added and keep the one with the largest sample
/// log-likelihood. Ties go to the earlier candidate. Each refit starts from
/// the previous stage's multipliers plus a zero for the new basis.
inline StepwiseResult stepwise_select(const std::vector<TensorBasis2D>& candidates,
                                      const PairSample& sample, int k,
                                      const FitConfig& config) {
  if (k < 1) throw InvalidArgument("stepwise selection needs k >= 1");
  if (static_cast<std::size_t>(k) > candidates.size())
    throw InvalidArgument("k exceeds the number of candidate bases");
  const auto alpha = empirical_moments(sample, candidates);

  StepwiseResult out;
  std::vector<bool> used(candidates.size(), false);
  std::vector<MomentConstraint> selected;
  std::vector<double> warm;
  for (int stage = 0; stage < k; ++stage) {
    std::optional<CopulaFit> best;
    std::size_t best_idx = 0;
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      if (used[c]) continue;
      auto constraints = selected;
      constraints.push_back({candidates[c], alpha[c]});
      FitConfig cfg = config;
      cfg.lambda_init = warm;
      cfg.lambda_init.push_back(0.0);
      try {
        auto fit = solve_lambdas(std::move(constraints), cfg, &sample);
        if (!best || fit.log_likelihood > best->log_likelihood) {
          best = std::move(fit);
          best_idx = c;
        }
      } catch (const Error& e) {
        out.warnings.push_back("stage " + std::to_string(stage + 1) + ": skipped " +
                               candidates[c].label + ": " + e.what());
      }
    }
    if (!best)
      throw FitFailure("stepwise stage " + std::to_string(stage + 1) +
                           ": every candidate fit failed",
                       0.0);
    used[best_idx] = true;
    selected = best->constraints;
    warm = best->lambdas;
    out.stages.push_back(std::move(*best));
  }
  return out;
}

}  // namespace minvine

#endif  // MINVINE_MINFO_FIT_HPP
