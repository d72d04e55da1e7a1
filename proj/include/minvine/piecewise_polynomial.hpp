#ifndef MINVINE_PIECEWISE_POLYNOMIAL_HPP
#define MINVINE_PIECEWISE_POLYNOMIAL_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "minvine/error.hpp"

namespace minvine {

namespace poly {

// Dense coefficient vectors, ascending degree.
using Coeffs = std::vector<double>;

inline double horner(std::span<const double> c, double t) {
  double acc = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * t + *it;
  return acc;
}

// Re-expand p(t) as q(s) with t = s + delta (Taylor shift by repeated
// synthetic division).
inline Coeffs shift(Coeffs c, double delta) {
  const std::size_t n = c.size();
  if (delta == 0.0 || n < 2) return c;
  for (std::size_t k = 0; k + 1 < n; ++k)
    for (std::size_t j = n - 1; j > k; --j) c[j - 1] += delta * c[j];
  return c;
}

inline Coeffs multiply(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) return {};
  Coeffs out(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
  return out;
}

inline Coeffs add(std::span<const double> a, std::span<const double> b,
                  double scale_b = 1.0) {
  Coeffs out(std::max(a.size(), b.size()), 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) out[i] += a[i];
  for (std::size_t i = 0; i < b.size(); ++i) out[i] += scale_b * b[i];
  return out;
}

// Integral over [-h, h] of a polynomial in the centered variable; odd
// powers vanish.
inline double integrate_symmetric(std::span<const double> c, double h) {
  double acc = 0.0;
  double hp = h;  // h^(k+1)
  for (std::size_t k = 0; k < c.size(); ++k) {
    if (k % 2 == 0) acc += c[k] * 2.0 * hp / static_cast<double>(k + 1);
    hp *= h;
  }
  return acc;
}

}  // namespace poly

/// Piecewise polynomial on [0,1].
///
/// Each piece is stored in powers of (x - c_i), c_i being the midpoint of
/// its interval; this keeps products and integrals of the high-order
/// multiwavelet pieces well conditioned. Coefficients in plain powers of x
/// are available through global_pieces(). Intervals are half-open except
/// the last, which is closed at 1.
class PiecewisePolynomial {
 public:
  PiecewisePolynomial() : breakpoints_{0.0, 1.0}, pieces_{{0.0}} {}

  static PiecewisePolynomial constant(double value) {
    return from_centered({0.0, 1.0}, {{value}});
  }

  static PiecewisePolynomial from_centered(std::vector<double> breakpoints,
                                           std::vector<poly::Coeffs> pieces) {
    PiecewisePolynomial p;
    p.breakpoints_ = std::move(breakpoints);
    p.pieces_ = std::move(pieces);
    p.validate();
    return p;
  }

  // Pieces given as coefficients of x^k.
  static PiecewisePolynomial from_global(std::vector<double> breakpoints,
                                         std::vector<poly::Coeffs> pieces) {
    PiecewisePolynomial p;
    p.breakpoints_ = std::move(breakpoints);
    p.pieces_ = std::move(pieces);
    p.validate();
    for (std::size_t i = 0; i < p.pieces_.size(); ++i)
      p.pieces_[i] = poly::shift(p.pieces_[i], p.center(i));
    return p;
  }

  const std::vector<double>& breakpoints() const { return breakpoints_; }
  std::size_t piece_count() const { return pieces_.size(); }
  const poly::Coeffs& centered_piece(std::size_t i) const { return pieces_[i]; }
  double center(std::size_t i) const {
    return 0.5 * (breakpoints_[i] + breakpoints_[i + 1]);
  }

  std::vector<poly::Coeffs> global_pieces() const {
    std::vector<poly::Coeffs> out;
    out.reserve(pieces_.size());
    for (std::size_t i = 0; i < pieces_.size(); ++i)
      out.push_back(poly::shift(pieces_[i], -center(i)));
    return out;
  }

  // Highest power with a nonzero coefficient over all pieces.
  int degree() const {
    int d = 0;
    for (const auto& c : pieces_)
      for (std::size_t k = c.size(); k-- > 0;)
        if (c[k] != 0.0) {
          d = std::max(d, static_cast<int>(k));
          break;
        }
    return d;
  }

  std::size_t locate(double u) const {
    if (!(u >= 0.0 && u <= 1.0))
      throw DomainError("piecewise polynomial evaluated outside [0,1]: " +
                        std::to_string(u));
    auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), u);
    auto idx = static_cast<std::size_t>(it - breakpoints_.begin());
    if (idx == 0) return 0;
    return std::min(idx - 1, pieces_.size() - 1);
  }

  double operator()(double u) const {
    const std::size_t i = locate(u);
    return poly::horner(pieces_[i], u - center(i));
  }

  // Same function re-expressed on a finer partition. `breakpoints` must
  // contain every current breakpoint.
  PiecewisePolynomial refined(const std::vector<double>& breakpoints) const {
    std::vector<poly::Coeffs> pieces;
    pieces.reserve(breakpoints.size() - 1);
    for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i) {
      const double mid = 0.5 * (breakpoints[i] + breakpoints[i + 1]);
      const std::size_t src = locate(mid);
      pieces.push_back(poly::shift(pieces_[src], mid - center(src)));
    }
    return from_centered(breakpoints, std::move(pieces));
  }

  PiecewisePolynomial& operator*=(double s) {
    for (auto& c : pieces_)
      for (auto& v : c) v *= s;
    return *this;
  }

  friend PiecewisePolynomial operator*(double s, PiecewisePolynomial f) {
    f *= s;
    return f;
  }

  friend PiecewisePolynomial operator+(const PiecewisePolynomial& f,
                                       const PiecewisePolynomial& g) {
    return combine(f, g, 1.0);
  }

  friend PiecewisePolynomial operator-(const PiecewisePolynomial& f,
                                       const PiecewisePolynomial& g) {
    return combine(f, g, -1.0);
  }

  friend PiecewisePolynomial operator*(const PiecewisePolynomial& f,
                                       const PiecewisePolynomial& g) {
    const auto bp = merge_breakpoints(f.breakpoints_, g.breakpoints_);
    const auto fr = f.refined(bp);
    const auto gr = g.refined(bp);
    std::vector<poly::Coeffs> pieces;
    for (std::size_t i = 0; i + 1 < bp.size(); ++i)
      pieces.push_back(poly::multiply(fr.pieces_[i], gr.pieces_[i]));
    return from_centered(bp, std::move(pieces));
  }

  static std::vector<double> merge_breakpoints(const std::vector<double>& a,
                                               const std::vector<double>& b) {
    std::vector<double> out;
    out.reserve(a.size() + b.size());
    std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

 private:
  static PiecewisePolynomial combine(const PiecewisePolynomial& f,
                                     const PiecewisePolynomial& g,
                                     double sign) {
    const auto bp = merge_breakpoints(f.breakpoints_, g.breakpoints_);
    const auto fr = f.refined(bp);
    const auto gr = g.refined(bp);
    std::vector<poly::Coeffs> pieces;
    for (std::size_t i = 0; i + 1 < bp.size(); ++i)
      pieces.push_back(poly::add(fr.pieces_[i], gr.pieces_[i], sign));
    return from_centered(bp, std::move(pieces));
  }

  void validate() const {
    if (breakpoints_.size() < 2 || breakpoints_.front() != 0.0 ||
        breakpoints_.back() != 1.0)
      throw InvalidArgument("breakpoints must start at 0 and end at 1");
    for (std::size_t i = 0; i + 1 < breakpoints_.size(); ++i)
      if (!(breakpoints_[i] < breakpoints_[i + 1]))
        throw InvalidArgument("breakpoints must be strictly increasing");
    if (pieces_.size() != breakpoints_.size() - 1)
      throw InvalidArgument("piece count must equal breakpoint count - 1");
    for (const auto& c : pieces_)
      if (c.empty()) throw InvalidArgument("empty polynomial piece");
  }

  std::vector<double> breakpoints_;
  std::vector<poly::Coeffs> pieces_;
};

inline double eval(const PiecewisePolynomial& f, double u) { return f(u); }

// Exact integral over [0,1].
inline double integrate(const PiecewisePolynomial& f) {
  double acc = 0.0;
  const auto& bp = f.breakpoints();
  for (std::size_t i = 0; i < f.piece_count(); ++i)
    acc += poly::integrate_symmetric(f.centered_piece(i),
                                     0.5 * (bp[i + 1] - bp[i]));
  return acc;
}

// Exact L2 inner product on [0,1].
inline double inner_product(const PiecewisePolynomial& f,
                            const PiecewisePolynomial& g) {
  return integrate(f * g);
}

inline PiecewisePolynomial monomial(int power) {
  poly::Coeffs c(static_cast<std::size_t>(power) + 1, 0.0);
  c.back() = 1.0;
  return PiecewisePolynomial::from_global({0.0, 1.0}, {c});
}

// Exact value of the integral of f(x) x^j over [0,1].
inline double moment(const PiecewisePolynomial& f, int power) {
  return inner_product(f, monomial(power));
}

}  // namespace minvine

#endif  // MINVINE_PIECEWISE_POLYNOMIAL_HPP
