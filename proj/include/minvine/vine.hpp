#ifndef MINVINE_VINE_HPP
#define MINVINE_VINE_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <iterator>
#include <set>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "minvine/basis.hpp"
#include "minvine/copula_grid.hpp"
#include "minvine/error.hpp"
#include "minvine/minfo_fit.hpp"
#include "minvine/ranks.hpp"

namespace minvine {

/// Observations stored column-wise: columns[var][t].
using Columns = std::vector<std::vector<double>>;

/// Edge e(a,b | D). In trees T_2 and up, `a` is a conditioned variable of
/// the first parent and `b` of the second; the edge copula takes
/// (F(a|D), F(b|D)) as its (u, v) arguments.
struct VineEdge {
  std::size_t a = 0;
  std::size_t b = 0;
  std::vector<std::size_t> conditioning;  // ascending
  std::optional<std::array<std::size_t, 2>> parents;  // indices into the previous tree

  std::vector<std::size_t> complete_set() const {
    std::vector<std::size_t> s = conditioning;
    s.push_back(a);
    s.push_back(b);
    std::sort(s.begin(), s.end());
    return s;
  }
};

struct VineStructure {
  std::vector<std::string> labels;
  std::vector<std::vector<VineEdge>> trees;  // trees[0] is T_1

  std::size_t dimension() const { return labels.size(); }
  std::size_t edge_count() const {
    std::size_t n = 0;
    for (const auto& t : trees) n += t.size();
    return n;
  }

  std::string edge_label(const VineEdge& e) const {
    std::string s = labels.at(e.a) + "," + labels.at(e.b);
    if (!e.conditioning.empty()) {
      s += "|";
      for (std::size_t i = 0; i < e.conditioning.size(); ++i) {
        if (i) s += ",";
        s += labels.at(e.conditioning[i]);
      }
    }
    return s;
  }
};

/// D-vine on the given variable order: T_m holds (i, i+m | i+1..i+m-1).
inline VineStructure build_dvine(std::vector<std::string> order) {
  if (order.size() < 2) throw InvalidArgument("a vine needs at least two variables");
  if (std::set<std::string>(order.begin(), order.end()).size() != order.size())
    throw InvalidArgument("vine variable labels must be distinct");
  VineStructure s;
  s.labels = std::move(order);
  const std::size_t d = s.labels.size();
  for (std::size_t m = 1; m < d; ++m) {
    std::vector<VineEdge> tree;
    for (std::size_t i = 0; i + m < d; ++i) {
      VineEdge e;
      e.a = i;
      e.b = i + m;
      for (std::size_t c = i + 1; c < i + m; ++c) e.conditioning.push_back(c);
      if (m > 1) e.parents = std::array<std::size_t, 2>{i, i + 1};
      tree.push_back(std::move(e));
    }
    s.trees.push_back(std::move(tree));
  }
  return s;
}

struct VineViolation {
  std::string kind;  // "dimension", "edge count", "spanning tree", "proximity", "sets"
  std::string message;
};

namespace detail {

// Union-find connectivity: `edges` over `nodes` vertices forms a tree.
inline bool is_spanning_tree(std::size_t nodes,
                             const std::vector<std::array<std::size_t, 2>>& edges) {
  if (edges.size() + 1 != nodes) return false;
  std::vector<std::size_t> parent(nodes);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const auto& e : edges) {
    if (e[0] >= nodes || e[1] >= nodes) return false;
    const auto ra = find(e[0]), rb = find(e[1]);
    if (ra == rb) return false;
    parent[ra] = rb;
  }
  return true;
}

}  // namespace detail

/// First violation of the regular-vine conditions, or nullopt.
inline std::optional<VineViolation> validate_regular_vine(const VineStructure& s) {
  const std::size_t d = s.dimension();
  if (d < 2) return VineViolation{"dimension", "a vine needs at least two variables"};
  if (s.edge_count() != d * (d - 1) / 2 || s.trees.size() != d - 1)
    return VineViolation{"edge count", "expected " + std::to_string(d * (d - 1) / 2) +
                                           " edges in " + std::to_string(d - 1) +
                                           " trees, found " + std::to_string(s.edge_count())};
  for (std::size_t m = 0; m < s.trees.size(); ++m)
    if (s.trees[m].size() != d - 1 - m)
      return VineViolation{"edge count", "tree T_" + std::to_string(m + 1) + " must have " +
                                             std::to_string(d - 1 - m) + " edges"};

  std::vector<std::array<std::size_t, 2>> links;
  for (const auto& e : s.trees[0]) {
    if (e.a >= d || e.b >= d || e.a == e.b || !e.conditioning.empty() || e.parents)
      return VineViolation{"sets", "malformed first-tree edge"};
    links.push_back({e.a, e.b});
  }
  if (!detail::is_spanning_tree(d, links))
    return VineViolation{"spanning tree", "T_1 is not a spanning tree"};

  for (std::size_t m = 1; m < s.trees.size(); ++m) {
    const auto& prev = s.trees[m - 1];
    links.clear();
    for (const auto& e : s.trees[m]) {
      const std::string name = "edge " + s.edge_label(e) + " in T_" + std::to_string(m + 1);
      if (!e.parents) return VineViolation{"sets", name + " has no parent edges"};
      const auto [p, q] = *e.parents;
      if (p >= prev.size() || q >= prev.size() || p == q)
        return VineViolation{"sets", name + " has invalid parents"};
      const auto& ep = prev[p];
      const auto& eq = prev[q];
      bool share;
      if (m == 1) {
        share = ep.a == eq.a || ep.a == eq.b || ep.b == eq.a || ep.b == eq.b;
      } else {
        share = ep.parents->at(0) == eq.parents->at(0) || ep.parents->at(0) == eq.parents->at(1) ||
                ep.parents->at(1) == eq.parents->at(0) || ep.parents->at(1) == eq.parents->at(1);
      }
      if (!share)
        return VineViolation{"proximity", name + " joins edges that share no common node"};

      const auto cp = ep.complete_set();
      const auto cq = eq.complete_set();
      std::vector<std::size_t> uni, inter;
      std::set_union(cp.begin(), cp.end(), cq.begin(), cq.end(), std::back_inserter(uni));
      std::set_intersection(cp.begin(), cp.end(), cq.begin(), cq.end(), std::back_inserter(inter));
      const bool a_in_p = std::binary_search(cp.begin(), cp.end(), e.a) &&
                          !std::binary_search(cq.begin(), cq.end(), e.a);
      const bool b_in_q = std::binary_search(cq.begin(), cq.end(), e.b) &&
                          !std::binary_search(cp.begin(), cp.end(), e.b);
      if (e.complete_set() != uni || e.conditioning != inter || !a_in_p || !b_in_q)
        return VineViolation{"sets", name + " has conditioned/conditioning sets that do not "
                                            "follow from its parents"};
      links.push_back({p, q});
    }
    if (!detail::is_spanning_tree(prev.size(), links))
      return VineViolation{"spanning tree", "T_" + std::to_string(m + 1) + " is not a spanning tree"};
  }
  return std::nullopt;
}

inline bool is_dvine(const VineStructure& s) {
  const auto ref = build_dvine(s.labels);
  if (ref.trees.size() != s.trees.size()) return false;
  for (std::size_t m = 0; m < s.trees.size(); ++m) {
    if (ref.trees[m].size() != s.trees[m].size()) return false;
    for (std::size_t i = 0; i < s.trees[m].size(); ++i) {
      const auto& x = ref.trees[m][i];
      const auto& y = s.trees[m][i];
      if (x.a != y.a || x.b != y.b || x.conditioning != y.conditioning || x.parents != y.parents)
        return false;
    }
  }
  return true;
}

/// Cut points for one conditioning variable: B bins spanning [0,1].
struct BinPartition {
  std::vector<double> cuts;

  static BinPartition equal_width(int bins) {
    if (bins < 1) throw InvalidArgument("need at least one bin");
    BinPartition p;
    for (int i = 0; i <= bins; ++i) p.cuts.push_back(static_cast<double>(i) / bins);
    p.cuts.back() = 1.0;
    return p;
  }

  std::size_t bin_count() const { return cuts.size() - 1; }

  // Half-open bins, last one closed at 1.
  std::size_t bin_of(double x) const {
    const auto it = std::upper_bound(cuts.begin(), cuts.end(), x);
    const auto idx = static_cast<std::size_t>(it - cuts.begin());
    return std::min(idx == 0 ? 0 : idx - 1, bin_count() - 1);
  }

  void validate() const {
    if (cuts.size() < 2 || cuts.front() != 0.0 || cuts.back() != 1.0)
      throw InvalidArgument("bin cuts must span [0,1]");
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
      if (!(cuts[i] < cuts[i + 1])) throw InvalidArgument("bin cuts must be increasing");
  }
};

struct UnconditionalEdge {
  CopulaFit fit;
};

/// One copula per combination of conditioning-variable bins. The
/// combination index is mixed radix with the first conditioning variable
/// most significant.
struct BinnedEdge {
  std::vector<BinPartition> partitions;  // one per conditioning variable
  std::map<std::size_t, CopulaFit> fits;
  std::map<std::size_t, std::size_t> counts;  // observations per combination

  std::size_t combination_count() const {
    std::size_t n = 1;
    for (const auto& p : partitions) n *= p.bin_count();
    return n;
  }

  std::size_t combination_of(std::span<const double> conditioning_values) const {
    std::size_t idx = 0;
    for (std::size_t k = 0; k < partitions.size(); ++k)
      idx = idx * partitions[k].bin_count() + partitions[k].bin_of(conditioning_values[k]);
    return idx;
  }

  std::vector<std::size_t> bins_of_combination(std::size_t combo) const {
    std::vector<std::size_t> out(partitions.size());
    for (std::size_t k = partitions.size(); k-- > 0;) {
      out[k] = combo % partitions[k].bin_count();
      combo /= partitions[k].bin_count();
    }
    return out;
  }
};

using EdgeModel = std::variant<UnconditionalEdge, BinnedEdge>;

struct VineFitOptions {
  int k = 6;        // bases per copula
  int bins = 4;     // per conditioning variable
  bool rerank = true;  // re-rank pseudo-observations inside each bin
  std::size_t min_bin_count = 30;  // effective minimum is max(this, 5k)
};

struct VineModel {
  VineStructure structure;
  std::vector<std::vector<EdgeModel>> edge_models;  // parallel to structure.trees
  BasisKind basis_family_kind = BasisKind::orthonormal_polynomial;
  int wavelet_order = kMaxWaveletOrder;
  FitConfig config;
  VineFitOptions options;
  double total_log_likelihood = 0.0;
  std::vector<std::string> warnings;

  // Sum of every component fit's log-likelihood.
  double component_log_likelihood_sum() const {
    double acc = 0.0;
    for (const auto& tree : edge_models)
      for (const auto& m : tree) {
        if (const auto* u = std::get_if<UnconditionalEdge>(&m)) {
          acc += u->fit.log_likelihood;
        } else {
          for (const auto& [_, f] : std::get<BinnedEdge>(m).fits) acc += f.log_likelihood;
        }
      }
    return acc;
  }

  std::size_t component_count() const {
    std::size_t n = 0;
    for (const auto& tree : edge_models)
      for (const auto& m : tree)
        n += std::holds_alternative<UnconditionalEdge>(m) ? 1 : std::get<BinnedEdge>(m).fits.size();
    return n;
  }
};

/// Copula of an edge for an observation whose raw coordinates are `point`.
inline const DiscretizedCopula& edge_copula(const EdgeModel& model, const VineEdge& edge,
                                            std::span<const double> point) {
  if (const auto* u = std::get_if<UnconditionalEdge>(&model)) return u->fit.copula;
  const auto& b = std::get<BinnedEdge>(model);
  std::vector<double> cond;
  for (auto c : edge.conditioning) cond.push_back(point[c]);
  const auto combo = b.combination_of(cond);
  const auto it = b.fits.find(combo);
  if (it == b.fits.end()) throw UnfittedParent("no copula fitted for bin combination " + std::to_string(combo));
  return it->second.copula;
}

namespace detail {

// h-function of a fitted edge for one of its conditioned variables:
// F(var | D_e + other) from the edge inputs (u, v).
inline double h_function(const DiscretizedCopula& cop, const VineEdge& edge, std::size_t var,
                         double u, double v) {
  if (var == edge.a) return conditional_cdf_given_v(cop, u, v);
  return conditional_cdf(cop, v, u);
}

// (F(a|D), F(b|D)) for one edge of tree m >= 1, given the parents' inputs.
inline std::array<double, 2> child_inputs(const VineStructure& s,
                                          const std::vector<EdgeModel>& prev_models,
                                          std::size_t m, const VineEdge& e,
                                          const std::vector<std::array<double, 2>>& prev_inputs,
                                          std::span<const double> point) {
  const auto [p, q] = *e.parents;
  const auto& ep = s.trees[m - 1][p];
  const auto& eq = s.trees[m - 1][q];
  const auto& cp = edge_copula(prev_models[p], ep, point);
  const auto& cq = edge_copula(prev_models[q], eq, point);
  return {h_function(cp, ep, e.a, prev_inputs[p][0], prev_inputs[p][1]),
          h_function(cq, eq, e.b, prev_inputs[q][0], prev_inputs[q][1])};
}

inline std::vector<double> row_of(const Columns& data, std::size_t t) {
  std::vector<double> r(data.size());
  for (std::size_t j = 0; j < data.size(); ++j) r[j] = data[j][t];
  return r;
}

}  // namespace detail

/// Edge arguments (F(a|D), F(b|D)) for every observation, tree `tree`
/// (0-based) and edge `edge`. Trees below `tree` must already be fitted in
/// `models`.
inline PairSample conditional_pseudo_observations(const VineStructure& s,
                                                  const std::vector<std::vector<EdgeModel>>& models,
                                                  std::size_t tree, std::size_t edge,
                                                  const Columns& data) {
  if (models.size() < tree) throw UnfittedParent("parent tree has not been fitted");
  for (std::size_t m = 0; m < tree; ++m)
    if (models[m].size() != s.trees[m].size()) throw UnfittedParent("parent tree has not been fitted");
  const std::size_t n = data.empty() ? 0 : data[0].size();
  std::vector<double> us(n), vs(n);
  for (std::size_t t = 0; t < n; ++t) {
    const auto point = detail::row_of(data, t);
    std::vector<std::array<double, 2>> inputs;
    for (const auto& e : s.trees[0]) inputs.push_back({point[e.a], point[e.b]});
    for (std::size_t m = 1; m <= tree; ++m) {
      std::vector<std::array<double, 2>> next;
      const std::size_t upto = m == tree ? edge + 1 : s.trees[m].size();
      for (std::size_t i = 0; i < upto; ++i)
        next.push_back(detail::child_inputs(s, models[m - 1], m, s.trees[m][i], inputs, point));
      inputs = std::move(next);
    }
    us[t] = inputs[edge][0];
    vs[t] = inputs[edge][1];
  }
  return PairSample(std::move(us), std::move(vs));
}

/// Log of the vine density at a point of the unit cube: the sum over edges
/// of log c_e at the recursively transformed arguments (uniform margins).
inline double vine_log_density(const VineModel& model, std::span<const double> point) {
  const auto& s = model.structure;
  if (point.size() != s.dimension()) throw InvalidArgument("point dimension mismatch");
  double acc = 0.0;
  std::vector<std::array<double, 2>> inputs;
  for (std::size_t i = 0; i < s.trees[0].size(); ++i) {
    const auto& e = s.trees[0][i];
    inputs.push_back({point[e.a], point[e.b]});
    acc += log_density(edge_copula(model.edge_models[0][i], e, point), point[e.a], point[e.b]);
  }
  for (std::size_t m = 1; m < s.trees.size(); ++m) {
    std::vector<std::array<double, 2>> next;
    for (std::size_t i = 0; i < s.trees[m].size(); ++i) {
      const auto& e = s.trees[m][i];
      const auto in = detail::child_inputs(s, model.edge_models[m - 1], m, e, inputs, point);
      acc += log_density(edge_copula(model.edge_models[m][i], e, point), in[0], in[1]);
      next.push_back(in);
    }
    inputs = std::move(next);
  }
  return acc;
}

/// Fits every edge: T_1 on raw pairs, deeper trees per bin combination of
/// the conditioning variables on pseudo-observations pushed through the
/// fitted parent copulas.
inline VineModel fit_vine(const Columns& data, const VineStructure& structure,
                          const std::vector<TensorBasis2D>& candidates,
                          const VineFitOptions& options, const FitConfig& config,
                          BasisKind family = BasisKind::orthonormal_polynomial,
                          int wavelet_order = kMaxWaveletOrder) {
  if (auto v = validate_regular_vine(structure)) throw StructureError(v->kind + ": " + v->message);
  if (data.size() != structure.dimension()) throw InvalidArgument("data columns do not match the vine dimension");
  const std::size_t n = data[0].size();
  for (const auto& col : data) {
    if (col.size() != n) throw InvalidArgument("data columns differ in length");
    for (double x : col)
      if (!(x >= 0.0 && x <= 1.0)) throw DomainError("vine data must be pseudo-observations in [0,1]");
  }
  if (options.bins < 1) throw InvalidArgument("bins must be at least 1");

  VineModel model;
  model.structure = structure;
  model.basis_family_kind = family;
  model.wavelet_order = wavelet_order;
  model.config = config;
  model.config.lambda_init.clear();
  model.options = options;

  const std::size_t min_count =
      std::max<std::size_t>(options.min_bin_count, 5 * static_cast<std::size_t>(options.k));
  std::size_t flat_edge = 0;
  for (std::size_t m = 0; m < structure.trees.size(); ++m) {
    std::vector<EdgeModel> tree_models;
    for (std::size_t i = 0; i < structure.trees[m].size(); ++i, ++flat_edge) {
      const auto& e = structure.trees[m][i];
      const std::string name = structure.edge_label(e);
      if (m == 0) {
        PairSample sample(data[e.a], data[e.b]);
        auto sw = stepwise_select(candidates, sample, options.k, config);
        for (auto& w : sw.warnings) model.warnings.push_back(name + ": " + w);
        tree_models.push_back(UnconditionalEdge{std::move(sw.stages.back())});
        continue;
      }
      const auto pseudo = conditional_pseudo_observations(structure, model.edge_models, m, i, data);
      BinnedEdge binned;
      for (std::size_t c = 0; c < e.conditioning.size(); ++c)
        binned.partitions.push_back(BinPartition::equal_width(options.bins));
      std::vector<std::vector<std::size_t>> members(binned.combination_count());
      for (std::size_t t = 0; t < n; ++t) {
        std::vector<double> cond;
        for (auto c : e.conditioning) cond.push_back(data[c][t]);
        members[binned.combination_of(cond)].push_back(t);
      }
      for (std::size_t combo = 0; combo < members.size(); ++combo) {
        const auto& idx = members[combo];
        if (idx.size() < min_count)
          throw EmptyBin("edge " + name + ": bin combination " + std::to_string(combo) + " holds " +
                             std::to_string(idx.size()) + " observations, need " +
                             std::to_string(min_count) + " (reduce bins)",
                         flat_edge, combo, idx.size());
        std::vector<double> us, vs;
        for (auto t : idx) {
          us.push_back(pseudo.u[t]);
          vs.push_back(pseudo.v[t]);
        }
        if (options.rerank) {
          us = uniform_ranks(us);
          vs = uniform_ranks(vs);
        }
        PairSample sample(std::move(us), std::move(vs));
        auto sw = stepwise_select(candidates, sample, options.k, config);
        for (auto& w : sw.warnings)
          model.warnings.push_back(name + " bin " + std::to_string(combo) + ": " + w);
        binned.counts[combo] = idx.size();
        binned.fits.emplace(combo, std::move(sw.stages.back()));
      }
      tree_models.push_back(std::move(binned));
    }
    model.edge_models.push_back(std::move(tree_models));
  }
  model.total_log_likelihood = model.component_log_likelihood_sum();
  return model;
}

/// Sequential inverse-CDF sampling along the D-vine order. Rows are drawn
/// from a 64-bit Mersenne Twister seeded with `seed`.
inline Columns sample_vine(const VineModel& model, std::size_t count, std::uint64_t seed) {
  const auto& s = model.structure;
  if (!is_dvine(s)) throw UnsupportedStructure("sampling is only implemented for D-vines");
  if (count < 1) throw InvalidArgument("sample count must be at least 1");
  const std::size_t d = s.dimension();
  std::mt19937_64 rng(seed);
  auto uniform = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };

  Columns out(d, std::vector<double>(count));
  // fwd[i][k] = F(x_i | x_{i+1..k}), back[i] = F(x_k | x_{i..k-1}) for the current k
  std::vector<std::vector<double>> fwd(d, std::vector<double>(d));
  std::vector<double> back(d + 1);
  std::vector<double> x(d);
  for (std::size_t t = 0; t < count; ++t) {
    for (std::size_t k = 0; k < d; ++k) {
      back[0] = uniform();
      for (std::size_t i = 0; i < k; ++i) {
        const auto& e = s.trees[k - i - 1][i];
        const auto& cop = edge_copula(model.edge_models[k - i - 1][i], e, x);
        back[i + 1] = inverse_conditional_cdf(cop, back[i], fwd[i][k - 1]);
      }
      x[k] = back[k];
      fwd[k][k] = x[k];
      for (std::size_t i = 0; i < k; ++i) {
        const auto& e = s.trees[k - i - 1][i];
        const auto& cop = edge_copula(model.edge_models[k - i - 1][i], e, x);
        fwd[i][k] = conditional_cdf_given_v(cop, fwd[i][k - 1], back[i + 1]);
      }
    }
    for (std::size_t k = 0; k < d; ++k) out[k][t] = x[k];
  }
  return out;
}

}  // namespace minvine

#endif  // MINVINE_VINE_HPP
