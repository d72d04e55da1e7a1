#ifndef MINVINE_BASIS_HPP
#define MINVINE_BASIS_HPP

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "minvine/error.hpp"
#include "minvine/piecewise_polynomial.hpp"

namespace minvine {

enum class BasisKind {
  ordinary_polynomial,
  orthonormal_polynomial,
  legendre_scaling,
  legendre_multiwavelet,
};

inline const char* to_string(BasisKind kind) {
  switch (kind) {
    case BasisKind::ordinary_polynomial: return "ordinary-polynomial";
    case BasisKind::orthonormal_polynomial: return "orthonormal-polynomial";
    case BasisKind::legendre_scaling: return "legendre-scaling";
    case BasisKind::legendre_multiwavelet: return "legendre-multiwavelet";
  }
  return "unknown";
}

inline BasisKind basis_kind_from_string(const std::string& s) {
  if (s == "ordinary-polynomial" || s == "ordinary")
    return BasisKind::ordinary_polynomial;
  if (s == "orthonormal-polynomial" || s == "orthonormal")
    return BasisKind::orthonormal_polynomial;
  if (s == "legendre-scaling" || s == "scaling")
    return BasisKind::legendre_scaling;
  if (s == "legendre-multiwavelet" || s == "multiwavelet")
    return BasisKind::legendre_multiwavelet;
  throw InvalidArgument("unknown basis kind '" + s + "'");
}

inline constexpr int kMaxPolynomialDegree = 12;
inline constexpr int kMaxWaveletOrder = 5;

struct NamedFunction {
  std::string name;
  PiecewisePolynomial function;
};

struct BasisFamily1D {
  BasisKind kind;
  int order;
  std::vector<PiecewisePolynomial> members;
  std::vector<std::string> names;

  std::size_t size() const { return members.size(); }
  NamedFunction member(std::size_t i) const { return {names.at(i), members.at(i)}; }
};

/// Two-scale coefficients of a Legendre multiresolution of order r. Row i
/// of `p` expresses the scaling function phi^i through phi^j(2x) (columns
/// 0..r) and phi^j(2x-1) (columns r+1..2r+1); `q` does the same for the
/// wavelets psi^i.
struct TwoScaleCoefficients {
  int order = 0;
  Eigen::MatrixXd p;
  Eigen::MatrixXd q;
};

namespace detail {

inline void check_degree(int degree, int cap, const char* what) {
  if (degree < 0 || degree > cap)
    throw InvalidArgument(std::string(what) + " must lie in [0, " +
                          std::to_string(cap) + "], got " +
                          std::to_string(degree));
}

// sqrt(2n+1) P_n(2x-1) for n = 0..max_degree via Bonnet's recurrence,
// in powers of (x - 1/2). P_n(y) with y = 2t.
inline std::vector<PiecewisePolynomial> legendre_orthonormal(int max_degree) {
  std::vector<poly::Coeffs> P;
  P.push_back({1.0});
  if (max_degree >= 1) P.push_back({0.0, 2.0});
  for (int n = 1; n < max_degree; ++n) {
    poly::Coeffs next(static_cast<std::size_t>(n) + 2, 0.0);
    const auto& pn = P[static_cast<std::size_t>(n)];
    const auto& pm = P[static_cast<std::size_t>(n) - 1];
    for (std::size_t k = 0; k < pn.size(); ++k)
      next[k + 1] += (2.0 * n + 1.0) * 2.0 * pn[k];
    for (std::size_t k = 0; k < pm.size(); ++k) next[k] -= n * pm[k];
    for (auto& c : next) c /= (n + 1.0);
    P.push_back(std::move(next));
  }
  std::vector<PiecewisePolynomial> out;
  for (int n = 0; n <= max_degree; ++n) {
    auto c = P[static_cast<std::size_t>(n)];
    const double norm = std::sqrt(2.0 * n + 1.0);
    for (auto& v : c) v *= norm;
    out.push_back(PiecewisePolynomial::from_centered({0.0, 1.0}, {c}));
  }
  return out;
}

// Level-1 basis of V_1 on [0,1]: phi^m(2x) on the left half for m = 0..r,
// then phi^m(2x-1) on the right half. Each has squared norm 1/2.
inline std::vector<PiecewisePolynomial> dilated_scaling(int order) {
  const auto phi = legendre_orthonormal(order);
  std::vector<PiecewisePolynomial> out;
  for (int side = 0; side < 2; ++side) {
    for (int m = 0; m <= order; ++m) {
      // phi^m(2x) around x = 1/4 is sum b_k (2t)^k, t = x - 1/4.
      auto c = phi[static_cast<std::size_t>(m)].centered_piece(0);
      double scale = 1.0;
      for (auto& v : c) {
        v *= scale;
        scale *= 2.0;
      }
      std::vector<poly::Coeffs> pieces{{0.0}, {0.0}};
      pieces[static_cast<std::size_t>(side)] = c;
      out.push_back(PiecewisePolynomial::from_centered({0.0, 0.5, 1.0}, pieces));
    }
  }
  return out;
}

inline PiecewisePolynomial combine_dilates(
    const std::vector<PiecewisePolynomial>& dilates,
    const Eigen::VectorXd& coords) {
  std::vector<poly::Coeffs> pieces{{0.0}, {0.0}};
  for (std::size_t m = 0; m < dilates.size(); ++m)
    for (std::size_t side = 0; side < 2; ++side)
      pieces[side] = poly::add(pieces[side], dilates[m].centered_piece(side),
                               coords(static_cast<Eigen::Index>(m)));
  return PiecewisePolynomial::from_centered({0.0, 0.5, 1.0}, std::move(pieces));
}

}  // namespace detail

/// Monomials x^0..x^max_degree (the ordinary polynomial family).
inline BasisFamily1D ordinary_polynomials(int max_degree) {
  detail::check_degree(max_degree, kMaxPolynomialDegree, "polynomial degree");
  BasisFamily1D fam{BasisKind::ordinary_polynomial, max_degree, {}, {}};
  for (int k = 0; k <= max_degree; ++k) {
    fam.members.push_back(monomial(k));
    fam.names.push_back("x^" + std::to_string(k));
  }
  return fam;
}

/// Orthonormal polynomials on [0,1] by modified Gram-Schmidt with exact
/// inner products. Starts from (x - 1/2)^n, which spans the same nested
/// spaces as x^n, and re-orthogonalizes once.
inline BasisFamily1D gram_schmidt_orthonormal(int max_degree) {
  detail::check_degree(max_degree, kMaxPolynomialDegree, "polynomial degree");
  BasisFamily1D fam{BasisKind::orthonormal_polynomial, max_degree, {}, {}};
  for (int n = 0; n <= max_degree; ++n) {
    poly::Coeffs c(static_cast<std::size_t>(n) + 1, 0.0);
    c.back() = 1.0;
    auto v = PiecewisePolynomial::from_centered({0.0, 1.0}, {c});
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& q : fam.members) v = v - inner_product(v, q) * q;
    v *= 1.0 / std::sqrt(inner_product(v, v));
    // Leading coefficient of (x-1/2)^n survives the projections, so the
    // sign is already positive; truncate the round-off tail above degree n.
    auto piece = v.centered_piece(0);
    piece.resize(static_cast<std::size_t>(n) + 1);
    fam.members.push_back(PiecewisePolynomial::from_centered({0.0, 1.0}, {piece}));
    fam.names.push_back("phi_" + std::to_string(n));
  }
  return fam;
}

/// Legendre scaling functions phi^0..phi^order (orthonormal on [0,1],
/// positive leading coefficient).
inline BasisFamily1D legendre_scaling(int order) {
  detail::check_degree(order, kMaxWaveletOrder, "scaling order");
  BasisFamily1D fam{BasisKind::legendre_scaling, order, {}, {}};
  fam.members = detail::legendre_orthonormal(order);
  for (int i = 0; i <= order; ++i) fam.names.push_back("phi^" + std::to_string(i));
  return fam;
}

/// Two-scale coefficients p of the scaling functions, p_{i,m} = 2<phi^i, e_m>.
inline Eigen::MatrixXd scaling_two_scale(int order) {
  detail::check_degree(order, kMaxWaveletOrder, "scaling order");
  const auto phi = detail::legendre_orthonormal(order);
  const auto dil = detail::dilated_scaling(order);
  Eigen::MatrixXd p(order + 1, 2 * (order + 1));
  for (int i = 0; i <= order; ++i)
    for (std::size_t m = 0; m < dil.size(); ++m)
      p(i, static_cast<Eigen::Index>(m)) =
          2.0 * inner_product(phi[static_cast<std::size_t>(i)], dil[m]);
  return p;
}

/// Legendre multiwavelets psi^0..psi^order with a breakpoint at 1/2.
///
/// psi^i lies in V_1 and is orthogonal to all polynomials of degree i+r
/// (equivalently to phi_0..phi_{i+r}), which leaves an (r+1-i)-dimensional
/// space. Solving from i = r downwards and adding orthogonality to the
/// wavelets already found pins each psi^i up to sign; the sign is fixed by
/// psi^i(1) > 0.
inline std::pair<BasisFamily1D, TwoScaleCoefficients> solve_multiwavelets(int order) {
  detail::check_degree(order, kMaxWaveletOrder, "multiwavelet order");
  const int r = order;
  const int dim = 2 * (r + 1);
  const auto dil = detail::dilated_scaling(r);
  const auto legendre = detail::legendre_orthonormal(2 * r);

  Eigen::MatrixXd proj(2 * r + 1, dim);
  for (int k = 0; k <= 2 * r; ++k)
    for (int m = 0; m < dim; ++m)
      proj(k, m) = inner_product(legendre[static_cast<std::size_t>(k)],
                                 dil[static_cast<std::size_t>(m)]);

  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(r + 1, dim);
  for (int i = r; i >= 0; --i) {
    const int n_moment = i + r + 1;
    const int n_prev = r - i;
    Eigen::MatrixXd rows(n_moment + n_prev, dim);
    rows.topRows(n_moment) = proj.topRows(n_moment);
    if (n_prev > 0) rows.bottomRows(n_prev) = q.bottomRows(n_prev);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(rows, Eigen::ComputeFullV);
    Eigen::VectorXd v = svd.matrixV().col(dim - 1);
    if ((rows * v).cwiseAbs().maxCoeff() > 1e-10)
      throw SolverFailure("multiwavelet condition system has no null vector");
    // <e_m, e_n> = delta_mn / 2, so unit norm needs |v| = sqrt(2).
    v *= std::sqrt(2.0) / v.norm();
    if (detail::combine_dilates(dil, v)(1.0) < 0.0) v = -v;
    q.row(i) = v.transpose();
  }

  BasisFamily1D fam{BasisKind::legendre_multiwavelet, r, {}, {}};
  for (int i = 0; i <= r; ++i) {
    fam.members.push_back(detail::combine_dilates(dil, q.row(i).transpose()));
    fam.names.push_back("psi^" + std::to_string(i));
  }

  for (int i = 0; i <= r; ++i) {
    const auto& psi = fam.members[static_cast<std::size_t>(i)];
    for (int j = 0; j <= i + r; ++j)
      if (std::abs(moment(psi, j)) > 1e-8)
        throw SolverFailure("multiwavelet psi^" + std::to_string(i) +
                            " misses vanishing moment " + std::to_string(j));
    for (int k = 0; k <= r; ++k) {
      const double g =
          inner_product(psi, fam.members[static_cast<std::size_t>(k)]);
      if (std::abs(g - (i == k ? 1.0 : 0.0)) > 1e-8)
        throw SolverFailure("multiwavelets are not orthonormal");
    }
  }

  return {std::move(fam), TwoScaleCoefficients{r, scaling_two_scale(r), q}};
}

/// Gram matrix of a family under exact integration.
inline Eigen::MatrixXd gram_matrix(const BasisFamily1D& fam) {
  const auto n = static_cast<Eigen::Index>(fam.size());
  Eigen::MatrixXd g(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j <= i; ++j)
      g(i, j) = g(j, i) = inner_product(fam.members[static_cast<std::size_t>(i)],
                                        fam.members[static_cast<std::size_t>(j)]);
  return g;
}

/// h(u,v) = left(u) * right(v).
struct TensorBasis2D {
  NamedFunction left;
  NamedFunction right;
  std::string label;

  double operator()(double u, double v) const {
    return left.function(u) * right.function(v);
  }
};

inline TensorBasis2D tensor(NamedFunction left, NamedFunction right) {
  std::string label = left.name + " x " + right.name;
  return {std::move(left), std::move(right), std::move(label)};
}

/// Resolves member names ("x^k", "phi_k", "phi^k", "psi^k") and tensor
/// labels ("phi_1 x phi_2") to functions.
class BasisLibrary {
 public:
  explicit BasisLibrary(int wavelet_order = kMaxWaveletOrder)
      : ordinary_(ordinary_polynomials(kMaxPolynomialDegree)),
        orthonormal_(gram_schmidt_orthonormal(kMaxPolynomialDegree)),
        scaling_(legendre_scaling(wavelet_order)),
        wavelets_(solve_multiwavelets(wavelet_order).first) {}

  int wavelet_order() const { return scaling_.order; }

  const BasisFamily1D& ordinary() const { return ordinary_; }
  const BasisFamily1D& orthonormal() const { return orthonormal_; }
  const BasisFamily1D& scaling() const { return scaling_; }
  const BasisFamily1D& wavelets() const { return wavelets_; }

  NamedFunction member(const std::string& name) const {
    for (const auto* fam : {&ordinary_, &orthonormal_, &scaling_, &wavelets_})
      for (std::size_t i = 0; i < fam->size(); ++i)
        if (fam->names[i] == name) return fam->member(i);
    throw InvalidArgument("unknown basis member '" + name + "'");
  }

  TensorBasis2D tensor(const std::string& label) const {
    const auto pos = label.find(" x ");
    if (pos == std::string::npos)
      throw InvalidArgument("tensor label must look like 'a x b': '" + label + "'");
    return minvine::tensor(member(label.substr(0, pos)), member(label.substr(pos + 3)));
  }

  /// Candidate tensors of a family up to total degree `total_degree`,
  /// excluding any tensor with a constant factor (its expectation is fixed
  /// by the uniform margins). For the multiwavelet family the pool mixes
  /// phi^i (degree i) and psi^i (degree i+1).
  std::vector<TensorBasis2D> candidate_pool(BasisKind kind, int total_degree) const {
    std::vector<std::vector<NamedFunction>> by_degree(
        static_cast<std::size_t>(std::max(total_degree, 0)) + 1);
    auto add = [&](const BasisFamily1D& fam, int shift) {
      for (std::size_t i = 0; i < fam.size(); ++i) {
        const int d = static_cast<int>(i) + shift;
        if (d >= 1 && d < total_degree) by_degree[static_cast<std::size_t>(d)].push_back(fam.member(i));
      }
    };
    switch (kind) {
      case BasisKind::ordinary_polynomial: add(ordinary_, 0); break;
      case BasisKind::orthonormal_polynomial: add(orthonormal_, 0); break;
      case BasisKind::legendre_scaling: add(scaling_, 0); break;
      case BasisKind::legendre_multiwavelet:
        add(scaling_, 0);
        add(wavelets_, 1);
        break;
    }
    std::vector<TensorBasis2D> pool;
    for (int s = 2; s <= total_degree; ++s)
      for (int a = 1; a < s; ++a)
        for (const auto& l : by_degree[static_cast<std::size_t>(a)])
          for (const auto& r : by_degree[static_cast<std::size_t>(s - a)])
            pool.push_back(minvine::tensor(l, r));
    return pool;
  }

 private:
  BasisFamily1D ordinary_;
  BasisFamily1D orthonormal_;
  BasisFamily1D scaling_;
  BasisFamily1D wavelets_;
};

}  // namespace minvine

#endif  // MINVINE_BASIS_HPP
