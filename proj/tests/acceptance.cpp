// Acceptance suite: one PASS/FAIL line per criterion. Exits nonzero when a
// blocking criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "minvine/minvine.hpp"

using namespace minvine;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

struct Criterion {
  int id;
  std::string title;
  bool blocking;
  std::function<Outcome()> run;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double x, const char* spec = "%.3g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, x);
  return buf;
}

// Gauss-Legendre rule on [0,1], used as an integration oracle independent of
// the exact piecewise integrals.
struct Quadrature {
  std::vector<double> x, w;
};

Quadrature gauss_legendre(int n) {
  Quadrature q;
  for (int i = 1; i <= n; ++i) {
    double z = std::cos(M_PI * (i - 0.25) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = z;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    q.x.push_back(0.5 * (z + 1.0));
    q.w.push_back(1.0 / ((1.0 - z * z) * dp * dp));
  }
  return q;
}

// integral over [0,1] split at 1/2 so piecewise members are integrated exactly
double quad_inner(const Quadrature& q, const PiecewisePolynomial& f, const PiecewisePolynomial& g) {
  double acc = 0.0;
  for (double a : {0.0, 0.5})
    for (std::size_t i = 0; i < q.x.size(); ++i) {
      const double x = a + 0.5 * q.x[i];
      acc += 0.5 * q.w[i] * f(x) * g(x);
    }
  return acc;
}

double gram_deviation(const std::vector<PiecewisePolynomial>& fs, bool exact, const Quadrature& q) {
  double dev = 0.0;
  for (std::size_t i = 0; i < fs.size(); ++i)
    for (std::size_t j = 0; j < fs.size(); ++j) {
      const double g = exact ? inner_product(fs[i], fs[j]) : quad_inner(q, fs[i], fs[j]);
      dev = std::max(dev, std::abs(g - (i == j ? 1.0 : 0.0)));
    }
  return dev;
}

PairSample gaussian_pair(double rho, std::size_t count, std::uint64_t seed) {
  Eigen::MatrixXd r(2, 2);
  r << 1.0, rho, rho, 1.0;
  const auto cols = gaussian_copula_sample(r, count, seed);
  return PairSample(uniform_ranks(cols[0]), uniform_ranks(cols[1]));
}

double ks_uniform(std::vector<double> x) {
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) d = std::max({d, (i + 1) / n - x[i], x[i] - i / n});
  return d;
}

const BasisLibrary& library() {
  static const BasisLibrary lib(5);
  return lib;
}

// ---------------------------------------------------------------------------

Outcome basis_orthonormality() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto ortho = gram_schmidt_orthonormal(5);
  const auto scaling = legendre_scaling(5);
  const auto wavelets = solve_multiwavelets(5).first;
  std::vector<PiecewisePolynomial> mra = scaling.members;
  mra.insert(mra.end(), wavelets.members.begin(), wavelets.members.end());
  const auto q = gauss_legendre(20);
  const double d_ortho = gram_deviation(ortho.members, true, q);
  const double d_mra = gram_deviation(mra, true, q);
  const double oracle = std::max(gram_deviation(ortho.members, false, q), gram_deviation(mra, false, q));
  const double secs = seconds_since(t0);
  const bool pass = d_ortho < 1e-8 && d_mra < 1e-8 && oracle < 1e-8 && secs < 1.0;
  return {pass, "orthonormal deg<=5 max|G-I| " + fmt(d_ortho) + ", scaling+wavelets order 5 (12x12) " +
                    fmt(d_mra) + ", quadrature oracle " + fmt(oracle) + ", " + fmt(secs, "%.2f") + " s"};
}

Outcome vanishing_moments() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto wavelets = solve_multiwavelets(5).first;
  const auto q = gauss_legendre(20);
  double worst = 0.0, worst_q = 0.0;
  for (std::size_t i = 0; i < wavelets.size(); ++i)
    for (std::size_t j = 0; j <= i + 5; ++j) {
      worst = std::max(worst, std::abs(inner_product(wavelets.members[i], monomial(static_cast<int>(j)))));
      worst_q = std::max(worst_q, std::abs(quad_inner(q, wavelets.members[i], monomial(static_cast<int>(j)))));
    }
  const double secs = seconds_since(t0);
  return {worst < 1e-8 && worst_q < 1e-8 && secs < 1.0,
          "max |int psi^i x^j|, j<=i+5: exact " + fmt(worst) + ", quadrature oracle " + fmt(worst_q) + ", " +
              fmt(secs, "%.2f") + " s"};
}

// Closed forms printed for order 5. Scaling functions are sqrt(2i+1) times
// these integer polynomials; wavelets are given per half interval with the
// coefficients rounded as printed.
const std::vector<std::vector<double>> kPrintedScaling = {
    {1.0},
    {-1.0, 2.0},
    {1.0, -6.0, 6.0},
    {-1.0, 12.0, -30.0, 20.0},
    {1.0, -20.0, 90.0, -140.0, 70.0},
    {-1.0, 30.0, -210.0, 560.0, -630.0, 252.0}};

using PrintedPiece = std::vector<std::string>;
const std::vector<std::array<PrintedPiece, 2>> kPrintedWavelets = {
    {{{"3.55", "-146.72", "1419.86", "-5300.81", "8519.15", "-4997.9"},
      {"-502.87", "4122.32", "-13346.68", "21203.23", "-16470.37", "4997.907"}}},
    {{{"-3.47", "181.55", "-2188.78", "10023.38", "-19433.09", "13500.89"},
      {"-2080.47", "15646.19", "-46291.67", "67299.87", "-48071.33", "13500.89"}}},
    {{{"2.81", "-174.03", "2438.52", "-12760.78", "27823.96", "-21415.36"},
      {"-4084.87", "29360.26", "-83053.61", "1.16e5", "-79252.82", "21415.36"}}},
    {{{"1.71", "-121.14", "1911.69", "-11113.58", "26588.59", "-22203.27"},
      {"4935.99", "-34300.49", "93930.24", "-1.27e5", "84427.78", "-22203.27"}}},
    {{{"-0.71", "56.63", "-998.10", "6413.33", "-16797.83", "15222.11"},
      {"3895.43", "-26219.63", "69675.97", "-91443.07", "59312.70", "-15222.11"}}},
    {{{"0.17", "-15.67", "308.12", "-2193.38", "6324.24", "-6273.06"},
      {"1849.58", "-12047.91", "31057.19", "-39627.04", "25041.07", "-6273.06"}}}};

// One unit in the last printed place: "4997.907" -> 1e-3, "1.16e5" -> 1000.
double last_place_unit(const std::string& s) {
  const auto e = s.find('e');
  const std::string mant = s.substr(0, e);
  const int exponent = e == std::string::npos ? 0 : std::stoi(s.substr(e + 1));
  const auto dot = mant.find('.');
  const int decimals = dot == std::string::npos ? 0 : static_cast<int>(mant.size() - dot - 1);
  return std::pow(10.0, exponent - decimals);
}

double horner(const std::vector<double>& c, double x) {
  double acc = 0.0;
  for (std::size_t k = c.size(); k-- > 0;) acc = acc * x + c[k];
  return acc;
}

Outcome closed_forms() {
  const auto scaling = legendre_scaling(5);
  double scaling_err = 0.0;
  for (std::size_t i = 0; i < kPrintedScaling.size(); ++i) {
    const auto c = scaling.members[i].global_pieces()[0];
    for (std::size_t k = 0; k < kPrintedScaling[i].size(); ++k) {
      const double ck = k < c.size() ? c[k] : 0.0;
      scaling_err = std::max(scaling_err, std::abs(ck - std::sqrt(2.0 * i + 1.0) * kPrintedScaling[i][k]));
    }
  }

  const auto wavelets = solve_multiwavelets(5).first;
  std::vector<double> rel(wavelets.size());
  double max_units = 0.0;
  std::string sign_flips;
  for (std::size_t i = 0; i < wavelets.size(); ++i) {
    std::array<std::vector<double>, 2> printed;
    for (int p = 0; p < 2; ++p)
      for (const auto& s : kPrintedWavelets[i][static_cast<std::size_t>(p)]) printed[static_cast<std::size_t>(p)].push_back(std::stod(s));
    // the printed sign convention is not uniform, so compare up to sign
    const auto& f = wavelets.members[i];
    double best = std::numeric_limits<double>::infinity();
    double best_sign = 1.0;
    for (double sign : {1.0, -1.0}) {
      double diff = 0.0, norm = 0.0;
      for (int t = 0; t <= 20000; ++t) {
        const double x = t / 20000.0;
        for (int side = 0; side < 2; ++side) {
          if ((side == 0 && x > 0.5) || (side == 1 && x < 0.5)) continue;
          const double ours = side == 0 && x == 0.5 ? f(std::nextafter(0.5, 0.0)) : f(x);
          diff = std::max(diff, std::abs(ours - sign * horner(printed[static_cast<std::size_t>(side)], x)));
          norm = std::max(norm, std::abs(ours));
        }
      }
      if (diff / norm < best) {
        best = diff / norm;
        best_sign = sign;
      }
    }
    rel[i] = best;
    if (best_sign < 0) sign_flips += (sign_flips.empty() ? "" : ",") + std::to_string(i);
    const auto pieces = f.global_pieces();
    for (int p = 0; p < 2; ++p)
      for (std::size_t k = 0; k < 6; ++k) {
        const auto& s = kPrintedWavelets[i][static_cast<std::size_t>(p)][k];
        max_units = std::max(max_units, std::abs(best_sign * pieces[static_cast<std::size_t>(p)][k] - std::stod(s)) /
                                            last_place_unit(s));
      }
  }

  bool pass = scaling_err < 1e-9;
  std::string detail = "scaling max coeff err " + fmt(scaling_err) + "; psi rel sup-norm err";
  for (std::size_t i = 0; i < rel.size(); ++i) {
    detail += " " + std::to_string(i) + ":" + fmt(rel[i], "%.2g");
    if (!(rel[i] < 1e-1)) pass = false;
  }
  detail += "; printed sign opposite for psi^{" + sign_flips + "}";
  detail += "; printed psi coefficients differ from ours by at most " + fmt(max_units, "%.2f") +
            " units of their last printed digit";
  return {pass, detail};
}

Outcome projection() {
  const auto h = tensor(library().orthonormal().member(1), library().orthonormal().member(1));
  const std::vector<TensorBasis2D> bases{h};
  bool pass = true;
  std::string detail;
  for (int n : {50, 200})
    for (double lambda : {-2.0, -0.5, 0.5, 2.0}) {
      const auto t0 = std::chrono::steady_clock::now();
      const std::vector<double> lam{lambda};
      std::vector<double> trace;
      bool ok = true;
      double dev = 0.0, worst_ratio = 0.0;
      int sweeps = 0;
      try {
        const auto c = d1ad2_project(eval_kernel(lam, bases, UnitGrid(n)), 1e-10, 10000, &trace);
        sweeps = c.iterations_used();
        // independent margin check: row and column means of the density
        for (int i = 0; i < n; ++i) {
          double row = 0.0, col = 0.0;
          for (int j = 0; j < n; ++j) {
            row += c.density(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
            col += c.density(static_cast<std::size_t>(j), static_cast<std::size_t>(i));
          }
          dev = std::max({dev, std::abs(row / n - 1.0), std::abs(col / n - 1.0)});
        }
      } catch (const Error&) {
        ok = false;
      }
      for (std::size_t t = 2; t + 1 < trace.size(); ++t) worst_ratio = std::max(worst_ratio, trace[t + 1] / trace[t]);
      const double secs = seconds_since(t0);
      const bool case_ok = ok && dev < 1e-10 && sweeps < 10000 && worst_ratio < 0.9 && secs < 5.0;
      pass = pass && case_ok;
      detail += (detail.empty() ? "" : "; ") + std::string("n=") + std::to_string(n) + " l=" + fmt(lambda, "%g") +
                ": " + std::to_string(sweeps) + " sweeps, dev " + fmt(dev, "%.1e") + ", ratio " +
                fmt(worst_ratio, "%.2f");
    }
  return {pass, detail};
}

bool recover(const std::vector<TensorBasis2D>& bases, const std::vector<double>& truth, double& err,
             double& secs) {
  const auto t0 = std::chrono::steady_clock::now();
  FitConfig cfg;  // n = 200
  const auto cop = minimum_information_copula(truth, bases, cfg);
  std::vector<MomentConstraint> cons;
  for (const auto& b : bases) cons.push_back({b, expectation(cop, b)});
  const auto fit = solve_lambdas(cons, cfg);
  err = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) err = std::max(err, std::abs(fit.lambdas[i] - truth[i]));
  secs = seconds_since(t0);
  return err < 1e-3 && secs < 60.0;
}

Outcome lambda_round_trip() {
  const auto& L = library();
  const std::vector<TensorBasis2D> two{L.tensor("phi_1 x phi_1"), L.tensor("phi_2 x phi_2")};
  const std::vector<TensorBasis2D> six{L.tensor("phi_1 x phi_1"), L.tensor("phi_2 x phi_2"),
                                       L.tensor("phi_1 x phi_2"), L.tensor("phi_2 x phi_1"),
                                       L.tensor("phi_1 x phi_3"), L.tensor("phi_3 x phi_1")};
  double e2 = 0, s2 = 0, e6 = 0, s6 = 0;
  const bool a = recover(two, {0.5, -0.3}, e2, s2);
  const bool b = recover(six, {0.6, -0.3, 0.2, -0.15, 0.1, 0.25}, e6, s6);
  return {a && b, "2 constraints: max|l-l*| " + fmt(e2) + " in " + fmt(s2, "%.1f") + " s; 6 constraints: " +
                      fmt(e6) + " in " + fmt(s6, "%.1f") + " s"};
}

Outcome independence_degeneracy() {
  const auto& L = library();
  FitConfig cfg;
  const auto ind = DiscretizedCopula::independence(cfg.grid_n);
  std::vector<MomentConstraint> cons;
  for (const char* l : {"phi_1 x phi_1", "phi_2 x phi_2", "phi_1 x phi_2", "psi^1 x phi^2"})
    cons.push_back({L.tensor(l), expectation(ind, L.tensor(l))});
  const auto fit = solve_lambdas(cons, cfg);
  double worst = 0.0;
  for (double l : fit.lambdas) worst = std::max(worst, std::abs(l));
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> unif;
  std::vector<double> u(1000), v(1000);
  for (auto& x : u) x = unif(rng);
  for (auto& x : v) x = unif(rng);
  const double ll = sample_log_likelihood(fit.copula, PairSample(u, v));
  return {worst < 1e-4 && ll == 0.0, "max|lambda| " + fmt(worst) + ", log-likelihood of 1000 uniform points " + fmt(ll, "%g")};
}

std::vector<double> first_lambdas(const std::vector<TensorBasis2D>& bases, const PairSample& s, std::size_t k) {
  const std::vector<TensorBasis2D> use(bases.begin(), bases.begin() + static_cast<std::ptrdiff_t>(k));
  return solve_lambdas(empirical_constraints(s, use), FitConfig{}, &s).lambdas;
}

Outcome orthonormal_stability() {
  const auto& L = library();
  const auto s = gaussian_pair(0.5, 1000, 2024);
  const std::vector<TensorBasis2D> ortho{L.tensor("phi_1 x phi_1"), L.tensor("phi_2 x phi_2"),
                                         L.tensor("phi_1 x phi_2"), L.tensor("phi_1 x phi_3")};
  const std::vector<TensorBasis2D> mono{L.tensor("x^1 x x^1"), L.tensor("x^2 x x^2"), L.tensor("x^1 x x^2"),
                                        L.tensor("x^1 x x^3")};
  auto shift = [&](const std::vector<TensorBasis2D>& b) {
    const auto three = first_lambdas(b, s, 3);
    const auto four = first_lambdas(b, s, 4);
    double m = 0.0;
    for (std::size_t i = 0; i < 3; ++i) m = std::max(m, std::abs(four[i] - three[i]));
    return m;
  };
  const double so = shift(ortho);
  const double sm = shift(mono);
  return {so < 0.05 && sm > 0.1, "orthonormal max shift " + fmt(so) + " (< 0.05), monomial max shift " + fmt(sm) + " (> 0.1)"};
}

Outcome stepwise_monotone() {
  const auto s = gaussian_pair(0.5, 2000, 8);
  bool pass = true;
  std::string detail;
  for (auto [kind, degree] : {std::pair{BasisKind::orthonormal_polynomial, 6}, std::pair{BasisKind::legendre_multiwavelet, 4}}) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto r = stepwise_select(library().candidate_pool(kind, degree), s, 6, FitConfig{});
    bool mono = r.stages.size() == 6;
    std::string trace;
    for (std::size_t i = 0; i < r.stages.size(); ++i) {
      if (i > 0 && r.stages[i].log_likelihood < r.stages[i - 1].log_likelihood) mono = false;
      trace += (i ? " " : "") + fmt(r.stages[i].log_likelihood, "%.2f");
    }
    pass = pass && mono;
    detail += (detail.empty() ? "" : "; ") + std::string(to_string(kind)) + " [" + trace + "] " +
              fmt(seconds_since(t0), "%.1f") + " s";
  }
  return {pass, detail};
}

Columns synthetic_columns(std::size_t d, std::size_t count, std::uint64_t seed) {
  auto ds = rank_transform(synthetic_dataset(count, seed));
  ds.columns.resize(d);
  return ds.columns;
}

Outcome vine_normalization() {
  const auto t0 = std::chrono::steady_clock::now();
  VineFitOptions opt;
  opt.k = 3;
  opt.bins = 2;
  const auto model = fit_vine(synthetic_columns(3, 2000, 31), build_dvine({"T", "M", "B"}),
                              library().candidate_pool(BasisKind::orthonormal_polynomial, 6), opt, FitConfig{});
  const double fit_secs = seconds_since(t0);
  const auto t1 = std::chrono::steady_clock::now();
  const int L = 50;
  double acc = 0.0;
  std::vector<double> p(3);
  for (int i = 0; i < L; ++i)
    for (int j = 0; j < L; ++j)
      for (int k = 0; k < L; ++k) {
        p = {(i + 0.5) / L, (j + 0.5) / L, (k + 0.5) / L};
        acc += std::exp(vine_log_density(model, p));
      }
  const double integral = acc / (L * L * L);
  const double secs = seconds_since(t1);
  return {std::abs(integral - 1.0) < 2e-2 && secs < 30.0,
          "integral " + fmt(integral, "%.5f") + " over 50^3 lattice in " + fmt(secs, "%.2f") + " s (fit " +
              fmt(fit_secs, "%.1f") + " s, k=3, bins=2, n=200)"};
}

Outcome sampling_consistency() {
  VineFitOptions opt;
  opt.k = 3;
  opt.bins = 2;
  const auto model = fit_vine(synthetic_columns(4, 2000, 41), build_dvine({"T", "M", "B", "S"}),
                              library().candidate_pool(BasisKind::orthonormal_polynomial, 6), opt, FitConfig{});
  const std::size_t count = 10000;
  const auto s = sample_vine(model, count, 99);
  double ks = 0.0;
  for (const auto& col : s) ks = std::max(ks, ks_uniform(col));
  double moment = 0.0;
  for (std::size_t i = 0; i < model.structure.trees[0].size(); ++i) {
    const auto& e = model.structure.trees[0][i];
    const auto& fit = std::get<UnconditionalEdge>(model.edge_models[0][i]).fit;
    const auto bases = fit.bases();
    const auto alpha = empirical_moments(PairSample(s[e.a], s[e.b]), bases);
    for (std::size_t l = 0; l < alpha.size(); ++l) moment = std::max(moment, std::abs(alpha[l] - fit.constraints[l].target));
  }
  const double ks_bound = 1.63 / std::sqrt(double(count));
  const double m_bound = 3.0 / std::sqrt(double(count));
  return {ks < ks_bound && moment < m_bound, "max KS " + fmt(ks, "%.4f") + " (< " + fmt(ks_bound, "%.4f") +
                                                 "), max T1 moment error " + fmt(moment, "%.4f") + " (< " +
                                                 fmt(m_bound, "%.2f") + ")"};
}

Outcome fixture_replay() {
  const auto f = replay_fixture_from_json(read_json_file(std::string(MINVINE_SOURCE_DIR) + "/fixtures/tm_orthonormal.json"));
  const auto r = replay(f, library());
  std::string lam;
  for (double l : r.fit.lambdas) lam += (lam.empty() ? "" : " ") + fmt(l, "%.4f");
  return {r.within_tolerance, "T-M lambdas [" + lam + "], max error " + fmt(r.max_lambda_error, "%.4f") + " (tol " +
                                  fmt(f.lambda_tolerance, "%.2f") + ")"};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "basis orthonormality", true, basis_orthonormality},
      {2, "vanishing moments", true, vanishing_moments},
      {3, "closed-form agreement", true, closed_forms},
      {4, "doubly-stochastic projection", true, projection},
      {5, "lambda round-trip recovery", true, lambda_round_trip},
      {6, "independence degeneracy", true, independence_degeneracy},
      {7, "orthonormal-stability comparison", true, orthonormal_stability},
      {8, "stepwise monotonicity", true, stepwise_monotone},
      {9, "vine normalization", true, vine_normalization},
      {10, "sampling consistency", true, sampling_consistency},
      {11, "fixture replay (non-blocking)", false, fixture_replay},
  };
  int blocking_failures = 0;
  for (const auto& c : criteria) {
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::cout << (o.pass ? "PASS" : "FAIL") << " AC" << c.id << " " << c.title << ": " << o.detail << std::endl;
    if (!o.pass && c.blocking) ++blocking_failures;
  }

  // informational: second fixture, not an acceptance criterion
  try {
    const auto f = replay_fixture_from_json(read_json_file(std::string(MINVINE_SOURCE_DIR) + "/fixtures/mb_orthonormal.json"));
    const auto r = replay(f, library());
    std::cout << "INFO M-B fixture max lambda error " << fmt(r.max_lambda_error, "%.4f") << '\n';
  } catch (const std::exception& e) {
    std::cout << "INFO M-B fixture: " << e.what() << '\n';
  }

  std::cout << (blocking_failures ? "acceptance: " + std::to_string(blocking_failures) + " blocking criterion failed"
                                  : std::string("acceptance: all blocking criteria passed"))
            << std::endl;
  return blocking_failures ? 1 : 0;
}
