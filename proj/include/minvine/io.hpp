#ifndef MINVINE_IO_HPP
#define MINVINE_IO_HPP

// JSON layouts for basis families, pair fits, vine models and replay
// fixtures. Polynomial coefficients are written in global powers of x.

#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "minvine/basis.hpp"
#include "minvine/error.hpp"
#include "minvine/minfo_fit.hpp"
#include "minvine/vine.hpp"

namespace minvine {

using Json = nlohmann::ordered_json;

namespace detail {

template <class T>
T require(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key))
    throw ParseError(std::string("missing JSON field '") + key + "'", 0, 0);
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad JSON field '") + key + "': " + e.what(), 0, 0);
  }
}

}  // namespace detail

inline Json to_json(const PiecewisePolynomial& f) {
  Json pieces = Json::array();
  for (const auto& c : f.global_pieces()) pieces.push_back(c);
  return Json{{"breakpoints", f.breakpoints()}, {"pieces", pieces}};
}

inline PiecewisePolynomial piecewise_from_json(const Json& j) {
  return PiecewisePolynomial::from_global(detail::require<std::vector<double>>(j, "breakpoints"),
                                          detail::require<std::vector<poly::Coeffs>>(j, "pieces"));
}

/// {kind, order, members:[{name, breakpoints, pieces}]}
inline Json to_json(const BasisFamily1D& fam) {
  Json members = Json::array();
  for (std::size_t i = 0; i < fam.size(); ++i) {
    Json m = to_json(fam.members[i]);
    m["name"] = fam.names[i];
    members.push_back(std::move(m));
  }
  return Json{{"kind", to_string(fam.kind)}, {"order", fam.order}, {"members", members}};
}

inline BasisFamily1D basis_family_from_json(const Json& j) {
  BasisFamily1D fam;
  fam.kind = basis_kind_from_string(detail::require<std::string>(j, "kind"));
  fam.order = detail::require<int>(j, "order");
  for (const auto& m : detail::require<Json>(j, "members")) {
    fam.members.push_back(piecewise_from_json(m));
    fam.names.push_back(m.value("name", std::string{}));
  }
  return fam;
}

/// {bases, alphas, lambdas, loglik, grid_n, residual, evals, dad_tol, dad_max_iter}
inline Json to_json(const CopulaFit& fit, const FitConfig& config) {
  Json bases = Json::array();
  for (const auto& c : fit.constraints) bases.push_back(c.basis.label);
  return Json{{"bases", bases},
              {"alphas", fit.targets()},
              {"lambdas", fit.lambdas},
              {"loglik", fit.log_likelihood},
              {"grid_n", fit.copula.n()},
              {"residual", fit.residual},
              {"evals", fit.evals_used},
              {"dad_tol", config.dad_tol},
              {"dad_max_iter", config.dad_max_iter}};
}

/// Rebuilds the fit, recomputing the discretized copula from the stored
/// multipliers (the projection is deterministic, so the density matches the
/// original bit for bit).
inline CopulaFit copula_fit_from_json(const Json& j, const BasisLibrary& library) {
  const auto labels = detail::require<std::vector<std::string>>(j, "bases");
  const auto alphas = detail::require<std::vector<double>>(j, "alphas");
  const auto lambdas = detail::require<std::vector<double>>(j, "lambdas");
  if (labels.size() != alphas.size() || labels.size() != lambdas.size())
    throw ParseError("fit JSON: bases, alphas and lambdas differ in length", 0, 0);
  FitConfig cfg;
  cfg.grid_n = detail::require<int>(j, "grid_n");
  cfg.dad_tol = j.value("dad_tol", kDefaultDadTol);
  cfg.dad_max_iter = j.value("dad_max_iter", kDefaultDadMaxIter);
  std::vector<MomentConstraint> constraints;
  std::vector<TensorBasis2D> bases;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    bases.push_back(library.tensor(labels[i]));
    constraints.push_back({bases.back(), alphas[i]});
  }
  auto copula = minimum_information_copula(lambdas, bases, cfg);
  return CopulaFit{std::move(constraints), lambdas, std::move(copula),
                   detail::require<double>(j, "loglik"), j.value("residual", 0.0),
                   j.value("evals", 0)};
}

inline Json fit_config_to_json(const FitConfig& c) {
  return Json{{"grid_n", c.grid_n},
              {"dad_tol", c.dad_tol},
              {"dad_max_iter", c.dad_max_iter},
              {"opt_tol", c.opt_tol},
              {"opt_max_evals", c.opt_max_evals}};
}

inline FitConfig fit_config_from_json(const Json& j) {
  FitConfig c;
  c.grid_n = j.value("grid_n", c.grid_n);
  c.dad_tol = j.value("dad_tol", c.dad_tol);
  c.dad_max_iter = j.value("dad_max_iter", c.dad_max_iter);
  c.opt_tol = j.value("opt_tol", c.opt_tol);
  c.opt_max_evals = j.value("opt_max_evals", c.opt_max_evals);
  return c;
}

inline Json to_json(const VineModel& model) {
  const auto& s = model.structure;
  Json edges = Json::array();
  for (std::size_t m = 0; m < s.trees.size(); ++m) {
    for (std::size_t i = 0; i < s.trees[m].size(); ++i) {
      const auto& e = s.trees[m][i];
      Json cond = Json::array();
      for (auto c : e.conditioning) cond.push_back(s.labels[c]);
      Json je{{"tree", m + 1},
              {"label", s.edge_label(e)},
              {"conditioned", {s.labels[e.a], s.labels[e.b]}},
              {"conditioning", cond},
              {"parents", e.parents ? Json(*e.parents) : Json(nullptr)}};
      const auto& em = model.edge_models[m][i];
      if (const auto* u = std::get_if<UnconditionalEdge>(&em)) {
        je["model"] = Json{{"type", "unconditional"}, {"fit", to_json(u->fit, model.config)}};
      } else {
        const auto& b = std::get<BinnedEdge>(em);
        Json cuts = Json::array();
        for (const auto& p : b.partitions) cuts.push_back(p.cuts);
        Json fits = Json::array();
        for (const auto& [combo, fit] : b.fits)
          fits.push_back(Json{{"bin", combo},
                              {"count", b.counts.count(combo) ? b.counts.at(combo) : 0},
                              {"fit", to_json(fit, model.config)}});
        je["model"] = Json{{"type", "binned"}, {"cuts", cuts}, {"fits", fits}};
      }
      edges.push_back(std::move(je));
    }
  }
  return Json{{"labels", s.labels},
              {"family", to_string(model.basis_family_kind)},
              {"wavelet_order", model.wavelet_order},
              {"config", fit_config_to_json(model.config)},
              {"k", model.options.k},
              {"bins", model.options.bins},
              {"rerank", model.options.rerank},
              {"min_bin_count", model.options.min_bin_count},
              {"edges", edges},
              {"total_loglik", model.total_log_likelihood},
              {"warnings", model.warnings}};
}

inline VineModel vine_model_from_json(const Json& j) {
  VineModel model;
  auto& s = model.structure;
  s.labels = detail::require<std::vector<std::string>>(j, "labels");
  model.basis_family_kind = basis_kind_from_string(detail::require<std::string>(j, "family"));
  model.wavelet_order = j.value("wavelet_order", kMaxWaveletOrder);
  model.config = fit_config_from_json(j.value("config", Json::object()));
  model.options.k = j.value("k", model.options.k);
  model.options.bins = j.value("bins", model.options.bins);
  model.options.rerank = j.value("rerank", model.options.rerank);
  model.options.min_bin_count = j.value("min_bin_count", model.options.min_bin_count);
  model.warnings = j.value("warnings", std::vector<std::string>{});
  const BasisLibrary library(model.wavelet_order);

  auto index_of = [&](const std::string& label) {
    for (std::size_t v = 0; v < s.labels.size(); ++v)
      if (s.labels[v] == label) return v;
    throw ParseError("vine JSON: unknown variable '" + label + "'", 0, 0);
  };
  for (const auto& je : detail::require<Json>(j, "edges")) {
    const auto tree = detail::require<std::size_t>(je, "tree");
    if (tree < 1 || tree > s.trees.size() + 1)
      throw ParseError("vine JSON: edges must be listed tree by tree", 0, 0);
    if (tree > s.trees.size()) {
      s.trees.emplace_back();
      model.edge_models.emplace_back();
    }
    VineEdge e;
    const auto cd = detail::require<std::vector<std::string>>(je, "conditioned");
    if (cd.size() != 2) throw ParseError("vine JSON: conditioned set must hold two labels", 0, 0);
    e.a = index_of(cd[0]);
    e.b = index_of(cd[1]);
    for (const auto& c : detail::require<std::vector<std::string>>(je, "conditioning"))
      e.conditioning.push_back(index_of(c));
    std::sort(e.conditioning.begin(), e.conditioning.end());
    if (!je.at("parents").is_null()) e.parents = je.at("parents").get<std::array<std::size_t, 2>>();
    s.trees.back().push_back(e);

    const auto& jm = detail::require<Json>(je, "model");
    const auto type = detail::require<std::string>(jm, "type");
    if (type == "unconditional") {
      model.edge_models.back().push_back(
          UnconditionalEdge{copula_fit_from_json(detail::require<Json>(jm, "fit"), library)});
    } else if (type == "binned") {
      BinnedEdge b;
      for (const auto& c : detail::require<std::vector<std::vector<double>>>(jm, "cuts")) {
        BinPartition p{c};
        p.validate();
        b.partitions.push_back(std::move(p));
      }
      for (const auto& jf : detail::require<Json>(jm, "fits")) {
        const auto combo = detail::require<std::size_t>(jf, "bin");
        b.counts[combo] = jf.value("count", std::size_t{0});
        b.fits.emplace(combo, copula_fit_from_json(detail::require<Json>(jf, "fit"), library));
      }
      model.edge_models.back().push_back(std::move(b));
    } else {
      throw ParseError("vine JSON: unknown edge model type '" + type + "'", 0, 0);
    }
  }
  if (auto v = validate_regular_vine(s)) throw StructureError(v->kind + ": " + v->message);
  model.total_log_likelihood = detail::require<double>(j, "total_loglik");
  return model;
}

/// Replay fixture: moment targets with the multipliers (and optionally the
/// log-likelihood and stepwise trace) a reference fit reported for them.
///
///   {"name": ..., "family": ..., "grid_n": 200,
///    "bases": ["phi_1 x phi_1", ...], "alphas": [...],
///    "expected_lambdas": [...], "lambda_tolerance": 0.02,
///    "expected_loglik": 60.66 | null,
///    "stages": [{"basis": ..., "loglik": ...}, ...]}
struct ReplayFixture {
  std::string name;
  BasisKind family = BasisKind::orthonormal_polynomial;
  int grid_n = 200;
  std::vector<std::string> bases;
  std::vector<double> alphas;
  std::vector<double> expected_lambdas;
  double lambda_tolerance = 0.02;
  std::optional<double> expected_loglik;
  std::vector<std::pair<std::string, double>> stages;
};

inline ReplayFixture replay_fixture_from_json(const Json& j) {
  ReplayFixture f;
  f.name = detail::require<std::string>(j, "name");
  f.family = basis_kind_from_string(j.value("family", std::string("orthonormal")));
  f.grid_n = j.value("grid_n", 200);
  f.bases = detail::require<std::vector<std::string>>(j, "bases");
  f.alphas = detail::require<std::vector<double>>(j, "alphas");
  f.expected_lambdas = detail::require<std::vector<double>>(j, "expected_lambdas");
  f.lambda_tolerance = j.value("lambda_tolerance", 0.02);
  if (j.contains("expected_loglik") && !j.at("expected_loglik").is_null())
    f.expected_loglik = j.at("expected_loglik").get<double>();
  for (const auto& st : j.value("stages", Json::array()))
    f.stages.emplace_back(detail::require<std::string>(st, "basis"), detail::require<double>(st, "loglik"));
  if (f.bases.size() != f.alphas.size() || f.bases.size() != f.expected_lambdas.size())
    throw ParseError("fixture '" + f.name + "': bases, alphas and lambdas differ in length", 0, 0);
  return f;
}

struct ReplayResult {
  CopulaFit fit;
  double max_lambda_error = 0.0;
  bool within_tolerance = false;
};

inline ReplayResult replay(const ReplayFixture& f, const BasisLibrary& library) {
  std::vector<MomentConstraint> cons;
  for (std::size_t i = 0; i < f.bases.size(); ++i) cons.push_back({library.tensor(f.bases[i]), f.alphas[i]});
  FitConfig cfg;
  cfg.grid_n = f.grid_n;
  ReplayResult r{solve_lambdas(std::move(cons), cfg), 0.0, false};
  for (std::size_t i = 0; i < f.expected_lambdas.size(); ++i)
    r.max_lambda_error = std::max(r.max_lambda_error, std::abs(r.fit.lambdas[i] - f.expected_lambdas[i]));
  r.within_tolerance = r.max_lambda_error <= f.lambda_tolerance;
  return r;
}

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'", 0, 0);
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("'" + path + "' is not valid JSON: " + e.what(), 0, e.byte);
  }
}

inline std::string dump(const Json& j) { return j.dump(2) + "\n"; }

}  // namespace minvine

#endif  // MINVINE_IO_HPP
