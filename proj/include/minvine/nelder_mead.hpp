#ifndef MINVINE_NELDER_MEAD_HPP
#define MINVINE_NELDER_MEAD_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <vector>

namespace minvine {

struct NelderMeadOptions {
  double initial_step = 0.1;   // simplex edge along each axis
  double f_target = 1e-10;     // stop as soon as the best value is below this
  int max_evals = 20000;
  int stall_window = 200;      // evaluations without enough progress ...
  double stall_improvement = 1e-14;  // ... of at least this much
  double reflection = 1.0;
  double expansion = 2.0;
  double contraction = 0.5;
  double shrink = 0.5;
};

enum class NelderMeadStatus { reached_target, stalled, max_evals };

struct NelderMeadResult {
  std::vector<double> x;
  double f = std::numeric_limits<double>::infinity();
  int evals = 0;
  NelderMeadStatus status = NelderMeadStatus::max_evals;
};

/// Derivative-free minimization of f: R^d -> R (Lagarias et al. variant:
/// reflection, expansion, outside/inside contraction, shrink). Fully
/// deterministic: ties in the vertex ordering keep insertion order.
template <class F>
NelderMeadResult nelder_mead(F&& f, std::vector<double> x0,
                             const NelderMeadOptions& opt = {}) {
  const std::size_t d = x0.size();
  NelderMeadResult res;
  res.x = x0;

  double best_seen = std::numeric_limits<double>::infinity();
  int last_progress = 0;
  bool done = false;
  auto eval = [&](const std::vector<double>& x) {
    const double v = f(x);
    ++res.evals;
    const double fv = std::isnan(v) ? std::numeric_limits<double>::infinity() : v;
    if (fv < res.f) {
      res.f = fv;
      res.x = x;
    }
    if (fv < best_seen - opt.stall_improvement) {
      best_seen = fv;
      last_progress = res.evals;
    }
    if (res.f < opt.f_target) {
      res.status = NelderMeadStatus::reached_target;
      done = true;
    } else if (res.evals - last_progress >= opt.stall_window) {
      res.status = NelderMeadStatus::stalled;
      done = true;
    } else if (res.evals >= opt.max_evals) {
      res.status = NelderMeadStatus::max_evals;
      done = true;
    }
    return fv;
  };

  std::vector<std::vector<double>> simplex(d + 1, x0);
  std::vector<double> fv(d + 1);
  fv[0] = eval(simplex[0]);
  for (std::size_t i = 0; i < d && !done; ++i) {
    simplex[i + 1][i] += opt.initial_step;
    fv[i + 1] = eval(simplex[i + 1]);
  }
  if (d == 0) res.status = NelderMeadStatus::stalled;

  std::vector<std::size_t> order(d + 1);
  std::vector<double> centroid(d), xr(d), xe(d), xc(d);
  auto point = [&](std::vector<double>& out, double t, const std::vector<double>& from) {
    // out = centroid + t * (from - centroid)
    for (std::size_t k = 0; k < d; ++k) out[k] = centroid[k] + t * (from[k] - centroid[k]);
  };

  while (!done && d > 0) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
    const std::size_t best = order.front();
    const std::size_t worst = order.back();
    const std::size_t second_worst = order[d - 1];

    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t m = 0; m < d; ++m)
      for (std::size_t k = 0; k < d; ++k) centroid[k] += simplex[order[m]][k];
    for (auto& c : centroid) c /= static_cast<double>(d);

    point(xr, -opt.reflection, simplex[worst]);
    const double fr = eval(xr);
    if (done) break;

    if (fr < fv[best]) {
      point(xe, -opt.reflection * opt.expansion, simplex[worst]);
      const double fe = eval(xe);
      if (fe < fr) {
        simplex[worst] = xe;
        fv[worst] = fe;
      } else {
        simplex[worst] = xr;
        fv[worst] = fr;
      }
      continue;
    }
    if (fr < fv[second_worst]) {
      simplex[worst] = xr;
      fv[worst] = fr;
      continue;
    }
    bool accepted = false;
    if (fr < fv[worst]) {
      point(xc, opt.reflection * -opt.contraction, simplex[worst]);
      const double fc = eval(xc);
      if (fc <= fr) {
        simplex[worst] = xc;
        fv[worst] = fc;
        accepted = true;
      }
    } else {
      point(xc, opt.contraction, simplex[worst]);
      const double fc = eval(xc);
      if (fc < fv[worst]) {
        simplex[worst] = xc;
        fv[worst] = fc;
        accepted = true;
      }
    }
    if (done || accepted) continue;
    for (std::size_t m = 0; m <= d && !done; ++m) {
      if (m == best) continue;
      for (std::size_t k = 0; k < d; ++k)
        simplex[m][k] = simplex[best][k] + opt.shrink * (simplex[m][k] - simplex[best][k]);
      fv[m] = eval(simplex[m]);
    }
  }
  return res;
}

}  // namespace minvine

#endif  // MINVINE_NELDER_MEAD_HPP
