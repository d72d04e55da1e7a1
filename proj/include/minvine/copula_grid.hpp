#ifndef MINVINE_COPULA_GRID_HPP
#define MINVINE_COPULA_GRID_HPP

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "minvine/basis.hpp"
#include "minvine/error.hpp"

namespace minvine {

/// n cells per axis on [0,1] with midpoints (i + 1/2) / n.
class UnitGrid {
 public:
  explicit UnitGrid(int n) : n_(n) {
    if (n < 2) throw InvalidArgument("grid needs at least 2 cells per axis");
    midpoints_.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
      midpoints_[static_cast<std::size_t>(i)] = (i + 0.5) / n;
  }

  int n() const { return n_; }
  std::size_t size() const { return static_cast<std::size_t>(n_); }
  const std::vector<double>& midpoints() const { return midpoints_; }

  // Cell containing u; intervals half-open, the last one closed at 1.
  std::size_t cell(double u) const {
    if (!(u >= 0.0 && u <= 1.0))
      throw DomainError("grid coordinate outside [0,1]: " + std::to_string(u));
    const auto k = static_cast<std::size_t>(u * n_);
    return std::min(k, size() - 1);
  }

  // f evaluated at every midpoint.
  std::vector<double> sample(const PiecewisePolynomial& f) const {
    std::vector<double> out(size());
    for (std::size_t i = 0; i < size(); ++i) out[i] = f(midpoints_[i]);
    return out;
  }

  friend bool operator==(const UnitGrid& a, const UnitGrid& b) { return a.n_ == b.n_; }

 private:
  int n_;
  std::vector<double> midpoints_;
};

/// Positive kernel values a_ij = A(u_i, v_j), row-major with rows along u.
struct KernelField {
  UnitGrid grid;
  std::vector<double> values;

  double operator()(std::size_t i, std::size_t j) const {
    return values[i * grid.size() + j];
  }
};

/// a_ij = exp(sum_k lambda_k h_k(u_i, v_j)), shifted by the maximum exponent
/// before exponentiation (the D1AD2 projection is scale invariant).
inline KernelField eval_kernel(std::span<const double> lambdas,
                               std::span<const TensorBasis2D> bases,
                               const UnitGrid& grid) {
  if (lambdas.size() != bases.size() || bases.empty())
    throw InvalidArgument("eval_kernel needs one lambda per basis and at least one basis");
  const std::size_t n = grid.size();
  std::vector<double> logk(n * n, 0.0);
  std::vector<double> row(n);
  for (std::size_t k = 0; k < bases.size(); ++k) {
    const auto left = grid.sample(bases[k].left.function);
    const auto right = grid.sample(bases[k].right.function);
    const double lam = lambdas[k];
    for (std::size_t j = 0; j < n; ++j) row[j] = lam * right[j];
    for (std::size_t i = 0; i < n; ++i) {
      const double l = left[i];
      double* out = logk.data() + i * n;
      for (std::size_t j = 0; j < n; ++j) out[j] += l * row[j];
    }
  }
  double top = -std::numeric_limits<double>::infinity();
  for (double v : logk) {
    if (!std::isfinite(v)) throw NonFiniteError("non-finite kernel exponent");
    top = std::max(top, v);
  }
  for (auto& v : logk) v = std::exp(v - top);
  return KernelField{grid, std::move(logk)};
}

/// Discretized copula density on a UnitGrid: density_ij = n^2 d1_i d2_j a_ij.
/// Row and column means are 1 up to the projection tolerance.
class DiscretizedCopula {
 public:
  DiscretizedCopula(UnitGrid grid, std::vector<double> density,
                    std::vector<double> d1, std::vector<double> d2,
                    int iterations_used, double final_marginal_error)
      : grid_(std::move(grid)),
        density_(std::move(density)),
        d1_(std::move(d1)),
        d2_(std::move(d2)),
        iterations_used_(iterations_used),
        final_marginal_error_(final_marginal_error) {
    if (density_.size() != grid_.size() * grid_.size())
      throw InvalidArgument("density size does not match grid");
    for (double v : density_)
      if (!(v >= 0.0) || !std::isfinite(v))
        throw InvalidArgument("copula density must be finite and nonnegative");
  }

  // Density given directly; scaling vectors are ones and the marginal
  // error is measured.
  static DiscretizedCopula from_density(int n, std::vector<double> density) {
    UnitGrid grid(n);
    std::vector<double> ones(grid.size(), 1.0);
    DiscretizedCopula c(grid, std::move(density), ones, ones, 0, 0.0);
    c.final_marginal_error_ = c.marginal_error();
    return c;
  }

  static DiscretizedCopula independence(int n) {
    const auto size = static_cast<std::size_t>(n) * static_cast<std::size_t>(n);
    return from_density(n, std::vector<double>(size, 1.0));
  }

  const UnitGrid& grid() const { return grid_; }
  int n() const { return grid_.n(); }
  const std::vector<double>& density() const { return density_; }
  double density(std::size_t i, std::size_t j) const {
    return density_[i * grid_.size() + j];
  }
  const std::vector<double>& d1() const { return d1_; }
  const std::vector<double>& d2() const { return d2_; }
  int iterations_used() const { return iterations_used_; }
  double final_marginal_error() const { return final_marginal_error_; }

  // max over rows and columns of |mean - 1|
  double marginal_error() const {
    const std::size_t n = grid_.size();
    std::vector<double> col(n, 0.0);
    double err = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        s += density_[i * n + j];
        col[j] += density_[i * n + j];
      }
      err = std::max(err, std::abs(s / static_cast<double>(n) - 1.0));
    }
    for (double c : col) err = std::max(err, std::abs(c / static_cast<double>(n) - 1.0));
    return err;
  }

 private:
  UnitGrid grid_;
  std::vector<double> density_;
  std::vector<double> d1_;
  std::vector<double> d2_;
  int iterations_used_;
  double final_marginal_error_;
};

/// Thrown when the D1AD2 sweeps exhaust max_iter; carries the best iterate.
class ConvergenceFailure : public Error {
 public:
  ConvergenceFailure(const std::string& what, DiscretizedCopula best)
      : Error(what), best_(std::move(best)) {}
  const DiscretizedCopula& best() const { return best_; }
  double error() const { return best_.final_marginal_error(); }

 private:
  DiscretizedCopula best_;
};

inline constexpr double kDefaultDadTol = 1e-10;
inline constexpr int kDefaultDadMaxIter = 10000;

/// Alternating diagonal scaling (D1AD2) of a positive kernel to uniform
/// margins. d1 and d2 start at ones; each sweep updates all of d1, then all
/// of d2. Stops when max_i |n sum_j d1_i d2_j a_ij - 1| (and the same over
/// columns) drops below tol. If `trace` is given, the error after every
/// sweep is appended to it.
inline DiscretizedCopula d1ad2_project(const KernelField& kernel,
                                       double tol = kDefaultDadTol,
                                       int max_iter = kDefaultDadMaxIter,
                                       std::vector<double>* trace = nullptr) {
  if (!(tol > 0.0)) throw InvalidArgument("D1AD2 tolerance must be positive");
  if (max_iter < 1) throw InvalidArgument("D1AD2 needs max_iter >= 1");
  const std::size_t n = kernel.grid.size();
  const double dn = static_cast<double>(n);
  const double* a = kernel.values.data();
  for (double v : kernel.values)
    if (!(v > 0.0) || !std::isfinite(v))
      throw InvalidArgument("D1AD2 kernel must be positive and finite");

  // A constant kernel is already a fixed point after one sweep; return it
  // exactly instead of carrying rounding from the scaling into the density.
  if (std::all_of(kernel.values.begin(), kernel.values.end(), [&](double v) { return v == a[0]; })) {
    if (trace) trace->push_back(0.0);
    return DiscretizedCopula(kernel.grid, std::vector<double>(n * n, 1.0), std::vector<double>(n, 1.0 / (dn * a[0])),
                             std::vector<double>(n, 1.0 / dn), 1, 0.0);
  }

  std::vector<double> d1(n, 1.0), d2(n, 1.0);
  std::vector<double> rows(n), cols(n);
  // row sums sum_j a_ij d2_j for the current d2
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += a[i * n + j];
    rows[i] = s;
  }

  auto assemble = [&](const std::vector<double>& s1, const std::vector<double>& s2,
                      int iters, double err) {
    std::vector<double> dens(n * n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        dens[i * n + j] = dn * dn * s1[i] * s2[j] * a[i * n + j];
    return DiscretizedCopula(kernel.grid, std::move(dens), s1, s2, iters, err);
  };

  double best_err = std::numeric_limits<double>::infinity();
  std::vector<double> best_d1, best_d2;
  int best_iter = 0;
  for (int it = 1; it <= max_iter; ++it) {
    for (std::size_t i = 0; i < n; ++i) d1[i] = 1.0 / (dn * rows[i]);
    std::fill(cols.begin(), cols.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double di = d1[i];
      const double* ai = a + i * n;
      for (std::size_t j = 0; j < n; ++j) cols[j] += di * ai[j];
    }
    for (std::size_t j = 0; j < n; ++j) d2[j] = 1.0 / (dn * cols[j]);

    double err = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      err = std::max(err, std::abs(dn * d2[j] * cols[j] - 1.0));
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      const double* ai = a + i * n;
      for (std::size_t j = 0; j < n; ++j) s += ai[j] * d2[j];
      rows[i] = s;
      err = std::max(err, std::abs(dn * d1[i] * s - 1.0));
    }
    if (trace) trace->push_back(err);
    if (!std::isfinite(err)) break;
    if (err < best_err) {
      best_err = err;
      best_d1 = d1;
      best_d2 = d2;
      best_iter = it;
    }
    if (err < tol) return assemble(d1, d2, it, err);
  }
  if (best_d1.empty())
    throw NonFiniteError("D1AD2 produced non-finite scaling vectors");
  throw ConvergenceFailure("D1AD2 did not reach tolerance " + std::to_string(tol) +
                               " in " + std::to_string(max_iter) + " sweeps",
                           assemble(best_d1, best_d2, best_iter, best_err));
}

/// (1/n^2) sum_ij density_ij h(u_i, v_j): midpoint rule.
inline double expectation(const DiscretizedCopula& copula, const TensorBasis2D& h) {
  const auto left = copula.grid().sample(h.left.function);
  const auto right = copula.grid().sample(h.right.function);
  const std::size_t n = copula.grid().size();
  const auto& dens = copula.density();
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    const double* row = dens.data() + i * n;
    for (std::size_t j = 0; j < n; ++j) s += row[j] * right[j];
    acc += left[i] * s;
  }
  return acc / static_cast<double>(n * n);
}

/// Log of the density of the cell containing (u, v). -inf for an empty cell.
inline double log_density(const DiscretizedCopula& copula, double u, double v) {
  const double d = copula.density(copula.grid().cell(u), copula.grid().cell(v));
  return d > 0.0 ? std::log(d) : -std::numeric_limits<double>::infinity();
}

namespace detail {

// Conditional CDF along one line of cells (a row or a column) with the
// density piecewise constant inside each cell.
inline double line_cdf(const DiscretizedCopula& c, std::size_t fixed, bool along_v,
                       double x) {
  const std::size_t n = c.grid().size();
  const std::size_t k = c.grid().cell(x);
  auto w = [&](std::size_t m) { return along_v ? c.density(fixed, m) : c.density(m, fixed); };
  double below = 0.0;
  for (std::size_t m = 0; m < k; ++m) below += w(m);
  double total = below;
  for (std::size_t m = k; m < n; ++m) total += w(m);
  if (!(total > 0.0)) return x;
  const double frac = x * static_cast<double>(n) - static_cast<double>(k);
  if (x >= 1.0) return 1.0;
  return std::clamp((below + w(k) * frac) / total, 0.0, 1.0);
}

inline double line_inverse(const DiscretizedCopula& c, std::size_t fixed, bool along_v,
                           double p) {
  if (!(p >= 0.0 && p <= 1.0))
    throw DomainError("probability outside [0,1]: " + std::to_string(p));
  const std::size_t n = c.grid().size();
  auto w = [&](std::size_t m) { return along_v ? c.density(fixed, m) : c.density(m, fixed); };
  double total = 0.0;
  for (std::size_t m = 0; m < n; ++m) total += w(m);
  if (!(total > 0.0)) return p;
  if (p >= 1.0) return 1.0;
  const double target = p * total;
  double cum = 0.0;
  for (std::size_t m = 0; m < n; ++m) {
    const double wm = w(m);
    if (cum + wm > target && wm > 0.0) {
      const double frac = std::clamp((target - cum) / wm, 0.0, 1.0);
      return (static_cast<double>(m) + frac) / static_cast<double>(n);
    }
    cum += wm;
  }
  return 1.0;
}

}  // namespace detail

/// C(v | u): cumulative share of the given_u row up to v.
inline double conditional_cdf(const DiscretizedCopula& copula, double v, double given_u) {
  return detail::line_cdf(copula, copula.grid().cell(given_u), true, v);
}

inline double inverse_conditional_cdf(const DiscretizedCopula& copula, double p,
                                      double given_u) {
  return detail::line_inverse(copula, copula.grid().cell(given_u), true, p);
}

/// C(u | v): cumulative share of the given_v column up to u.
inline double conditional_cdf_given_v(const DiscretizedCopula& copula, double u,
                                      double given_v) {
  return detail::line_cdf(copula, copula.grid().cell(given_v), false, u);
}

inline double inverse_conditional_cdf_given_v(const DiscretizedCopula& copula, double p,
                                              double given_v) {
  return detail::line_inverse(copula, copula.grid().cell(given_v), false, p);
}

/// CSV export: header line, then one row per u cell, full precision.
inline void write_density_csv(std::ostream& os, const DiscretizedCopula& copula) {
  const std::size_t n = copula.grid().size();
  os << "# minvine density n=" << n << '\n';
  char buf[32];
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", copula.density(i, j));
      if (j) os << ',';
      os << buf;
    }
    os << '\n';
  }
}

inline DiscretizedCopula read_density_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line.rfind("# minvine density n=", 0) != 0)
    throw ParseError("missing density header", 1, 1);
  const int n = std::stoi(line.substr(20));
  std::vector<double> dens;
  dens.reserve(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::size_t col = 0;
    while (std::getline(ss, cell, ',')) {
      ++col;
      try {
        dens.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw ParseError("bad density value '" + cell + "'", lineno, col);
      }
    }
  }
  if (dens.size() != static_cast<std::size_t>(n) * static_cast<std::size_t>(n))
    throw ParseError("density CSV holds the wrong number of values", lineno, 1);
  return DiscretizedCopula::from_density(n, std::move(dens));
}

}  // namespace minvine

#endif  // MINVINE_COPULA_GRID_HPP
