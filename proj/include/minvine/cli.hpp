#ifndef MINVINE_CLI_HPP
#define MINVINE_CLI_HPP

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "minvine/basis.hpp"
#include "minvine/copula_grid.hpp"
#include "minvine/dataset.hpp"
#include "minvine/error.hpp"
#include "minvine/io.hpp"
#include "minvine/minfo_fit.hpp"
#include "minvine/vine.hpp"

namespace minvine {

/// Everything a fitting run needs besides the data.
struct RunConfig {
  std::vector<std::string> order;  // vine order; empty means dataset column order
  BasisKind family = BasisKind::orthonormal_polynomial;
  int wavelet_order = kMaxWaveletOrder;
  int total_degree = 0;                   // 0: family default
  std::vector<std::string> pool_labels;   // explicit pool; overrides total_degree
  int k = 6;
  int bins = 4;
  bool rerank = true;
  std::size_t min_bin_count = 30;
  bool rank_transform = true;  // false: data must already be in [0,1]
  FitConfig fit;
  std::string out_dir = "out";
  std::uint64_t seed = 1;

  int effective_total_degree() const {
    if (total_degree > 0) return total_degree;
    return family == BasisKind::legendre_multiwavelet ? 4 : 6;
  }

  std::vector<TensorBasis2D> candidates(const BasisLibrary& library) const {
    if (!pool_labels.empty()) {
      std::vector<TensorBasis2D> out;
      for (const auto& l : pool_labels) out.push_back(library.tensor(l));
      return out;
    }
    return library.candidate_pool(family, effective_total_degree());
  }

  void validate() const {
    if (k < 1) throw ConfigError("k must be at least 1");
    if (bins < 1) throw ConfigError("bins must be at least 1");
    if (wavelet_order < 0 || wavelet_order > kMaxWaveletOrder)
      throw ConfigError("wavelet_order must lie in 0.." + std::to_string(kMaxWaveletOrder));
    if (total_degree < 0 || total_degree > kMaxPolynomialDegree)
      throw ConfigError("total_degree must lie in 0.." + std::to_string(kMaxPolynomialDegree));
    try {
      fit.validate();
    } catch (const Error& e) {
      throw ConfigError(e.what());
    }
  }
};

using InvalidConfig = ConfigError;

inline RunConfig run_config_from_json(const Json& j) {
  static const std::vector<std::string> known = {
      "order", "family", "wavelet_order", "total_degree", "pool", "k", "bins", "rerank",
      "min_bin_count", "rank_transform", "grid_n", "dad_tol", "dad_max_iter", "opt_tol",
      "opt_max_evals", "out", "seed"};
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, _] : j.items())
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw ConfigError("unknown config key '" + key + "'");
  RunConfig c;
  try {
    c.order = j.value("order", c.order);
    if (j.contains("family")) c.family = basis_kind_from_string(j.at("family").get<std::string>());
    c.wavelet_order = j.value("wavelet_order", c.wavelet_order);
    c.total_degree = j.value("total_degree", c.total_degree);
    c.pool_labels = j.value("pool", c.pool_labels);
    c.k = j.value("k", c.k);
    c.bins = j.value("bins", c.bins);
    c.rerank = j.value("rerank", c.rerank);
    c.min_bin_count = j.value("min_bin_count", c.min_bin_count);
    c.rank_transform = j.value("rank_transform", c.rank_transform);
    c.fit.grid_n = j.value("grid_n", c.fit.grid_n);
    c.fit.dad_tol = j.value("dad_tol", c.fit.dad_tol);
    c.fit.dad_max_iter = j.value("dad_max_iter", c.fit.dad_max_iter);
    c.fit.opt_tol = j.value("opt_tol", c.fit.opt_tol);
    c.fit.opt_max_evals = j.value("opt_max_evals", c.fit.opt_max_evals);
    c.out_dir = j.value("out", c.out_dir);
    c.seed = j.value("seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  return c;
}

inline Json to_json(const RunConfig& c) {
  Json j{{"order", c.order},
         {"family", to_string(c.family)},
         {"wavelet_order", c.wavelet_order},
         {"total_degree", c.total_degree},
         {"pool", c.pool_labels},
         {"k", c.k},
         {"bins", c.bins},
         {"rerank", c.rerank},
         {"min_bin_count", c.min_bin_count},
         {"rank_transform", c.rank_transform}};
  for (const auto& [key, v] : fit_config_to_json(c.fit).items()) j[key] = v;
  j["out"] = c.out_dir;
  j["seed"] = c.seed;
  return j;
}

namespace report {

inline std::string num(double x, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  return buf;
}

inline std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

inline std::string joined(const std::vector<double>& xs) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? ", " : "") + num(xs[i]);
  return s;
}

/// One row per stage: basis added, multipliers so far, log-likelihood.
inline std::string stage_trace(const StepwiseResult& sw) {
  std::ostringstream os;
  os << pad("Base", 32) << pad("Parameter values", 64) << "Log-likelihood\n";
  for (std::size_t s = 0; s < sw.stages.size(); ++s) {
    const auto& fit = sw.stages[s];
    const std::string added = fit.constraints.back().basis.label;
    os << pad(s == 0 ? added : "previous, " + added, 32) << pad(joined(fit.lambdas), 64)
       << num(fit.log_likelihood) << '\n';
  }
  return os.str();
}

inline std::string bin_interval(const VineStructure& s, const VineEdge& e, const BinnedEdge& b,
                                std::size_t combo) {
  const auto bins = b.bins_of_combination(combo);
  std::string out;
  for (std::size_t k = 0; k < bins.size(); ++k) {
    const auto& cuts = b.partitions[k].cuts;
    out += (k ? ", " : "") + num(cuts[bins[k]], 2) + "<" + s.labels[e.conditioning[k]] + "<" +
           num(cuts[bins[k] + 1], 2);
  }
  return out;
}

inline void fit_block(std::ostream& os, const std::string& interval, const CopulaFit& fit) {
  for (std::size_t i = 0; i < fit.constraints.size(); ++i) {
    os << pad(i == 0 ? interval : "", 28) << pad(fit.constraints[i].basis.label, 24)
       << pad(num(fit.constraints[i].target), 12);
    if (i == 0)
      os << pad(num(fit.lambdas[i]), 12) << num(fit.log_likelihood);
    else
      os << num(fit.lambdas[i]);
    os << '\n';
  }
}

/// Per edge (and per bin): bases, alpha, lambda and log-likelihood, then
/// the model total.
inline std::string vine_report(const VineModel& model) {
  const auto& s = model.structure;
  std::ostringstream os;
  os << "Vine over ";
  for (std::size_t i = 0; i < s.labels.size(); ++i) os << (i ? "-" : "") << s.labels[i];
  os << ", family " << to_string(model.basis_family_kind) << ", " << model.component_count()
     << " component fits\n";
  for (std::size_t m = 0; m < s.trees.size(); ++m) {
    for (std::size_t i = 0; i < s.trees[m].size(); ++i) {
      const auto& e = s.trees[m][i];
      os << "\nT" << m + 1 << " edge " << s.edge_label(e) << '\n';
      os << pad("Interval", 28) << pad("Bases", 24) << pad("alpha", 12) << pad("lambda", 12)
         << "Log-likelihood\n";
      const auto& em = model.edge_models[m][i];
      if (const auto* u = std::get_if<UnconditionalEdge>(&em)) {
        fit_block(os, "-", u->fit);
      } else {
        const auto& b = std::get<BinnedEdge>(em);
        for (const auto& [combo, fit] : b.fits) fit_block(os, bin_interval(s, e, b, combo), fit);
      }
    }
  }
  os << "\nTotal log-likelihood " << num(model.total_log_likelihood) << '\n';
  return os.str();
}

inline std::string comparison_table(const std::vector<std::pair<std::string, double>>& rows) {
  std::ostringstream os;
  os << pad("Type of copula", 56) << "Log-likelihood\n";
  for (const auto& [name, ll] : rows) os << pad(name, 56) << num(ll) << '\n';
  return os.str();
}

}  // namespace report

namespace detail {

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write '" + path.string() + "'", 0, 0);
  out << text;
}

inline std::string file_tag(std::string s) {
  for (auto& ch : s)
    if (!std::isalnum(static_cast<unsigned char>(ch))) ch = '_';
  return s;
}

inline std::string density_csv(const DiscretizedCopula& c) {
  std::ostringstream os;
  write_density_csv(os, c);
  return os.str();
}

inline std::string csv_text(const std::vector<std::string>& labels, const Columns& cols) {
  std::ostringstream os;
  write_csv(os, labels, cols);
  return os.str();
}

inline Dataset prepare_data(const RunConfig& cfg, const std::string& path) {
  auto raw = ingest_csv(path);
  return cfg.rank_transform ? rank_transform(raw) : as_pseudo_observations(std::move(raw));
}

inline Columns ordered_columns(const Dataset& ds, const std::vector<std::string>& order) {
  Columns out;
  for (const auto& l : order) out.push_back(ds.column(l));
  return out;
}

}  // namespace detail

/// Pair fit: stepwise selection on two columns. Writes the fit JSON, the
/// density grid and the stage trace; returns the stage trace.
inline std::string cmd_fit_pair(const RunConfig& cfg, const Dataset& data, const std::string& label_u,
                                const std::string& label_v) {
  cfg.validate();
  const BasisLibrary library(cfg.wavelet_order);
  const auto pool = cfg.candidates(library);
  if (static_cast<std::size_t>(cfg.k) > pool.size())
    throw ConfigError("k = " + std::to_string(cfg.k) + " exceeds the " + std::to_string(pool.size()) +
                      " candidate bases");
  const PairSample sample(data.column(label_u), data.column(label_v));
  const auto sw = stepwise_select(pool, sample, cfg.k, cfg.fit);
  const auto& fit = sw.stages.back();
  const std::filesystem::path dir(cfg.out_dir);
  const std::string tag = detail::file_tag(label_u) + "_" + detail::file_tag(label_v);
  Json j = to_json(fit, cfg.fit);
  j["family"] = to_string(cfg.family);
  j["wavelet_order"] = cfg.wavelet_order;
  detail::write_text(dir / ("fit_" + tag + ".json"), dump(j));
  detail::write_text(dir / ("density_" + tag + ".csv"), detail::density_csv(fit.copula));
  std::string trace = report::stage_trace(sw);
  for (const auto& w : sw.warnings) trace += "warning: " + w + "\n";
  detail::write_text(dir / ("trace_" + tag + ".txt"), trace);
  return trace;
}

inline VineModel fit_vine_with(const RunConfig& cfg, const Dataset& data) {
  cfg.validate();
  const auto order = cfg.order.empty() ? data.labels : cfg.order;
  for (const auto& l : order) data.index_of(l);
  const BasisLibrary library(cfg.wavelet_order);
  const auto pool = cfg.candidates(library);
  if (static_cast<std::size_t>(cfg.k) > pool.size())
    throw ConfigError("k = " + std::to_string(cfg.k) + " exceeds the " + std::to_string(pool.size()) +
                      " candidate bases");
  VineFitOptions opt;
  opt.k = cfg.k;
  opt.bins = cfg.bins;
  opt.rerank = cfg.rerank;
  opt.min_bin_count = cfg.min_bin_count;
  return fit_vine(detail::ordered_columns(data, order), build_dvine(order), pool, opt, cfg.fit,
                  cfg.family, cfg.wavelet_order);
}

/// D-vine fit over the configured order. Writes vine.json and the per-edge
/// report; returns the report.
inline std::string cmd_fit_vine(const RunConfig& cfg, const Dataset& data) {
  const auto model = fit_vine_with(cfg, data);
  const std::filesystem::path dir(cfg.out_dir);
  detail::write_text(dir / "vine.json", dump(to_json(model)));
  std::string text = report::vine_report(model);
  for (const auto& w : model.warnings) text += "warning: " + w + "\n";
  detail::write_text(dir / "vine_report.txt", text);
  return text;
}

inline std::string cmd_sample(const std::string& model_path, std::size_t count, std::uint64_t seed,
                              const std::string& out_dir) {
  const auto model = vine_model_from_json(read_json_file(model_path));
  const auto rows = sample_vine(model, count, seed);
  const auto text = detail::csv_text(model.structure.labels, rows);
  detail::write_text(std::filesystem::path(out_dir) / "samples.csv", text);
  return "wrote " + std::to_string(count) + " samples of " + std::to_string(model.structure.dimension()) +
         " variables\n";
}

/// Density grids of a pair fit or of every component of a vine model.
inline std::string cmd_export_density(const std::string& model_path, const std::string& out_dir) {
  const auto j = read_json_file(model_path);
  const std::filesystem::path dir(out_dir);
  std::ostringstream log;
  if (!j.contains("edges")) {
    const BasisLibrary library(j.value("wavelet_order", kMaxWaveletOrder));
    const auto fit = copula_fit_from_json(j, library);
    detail::write_text(dir / "density.csv", detail::density_csv(fit.copula));
    log << "density.csv\n";
    return log.str();
  }
  const auto model = vine_model_from_json(j);
  const auto& s = model.structure;
  for (std::size_t m = 0; m < s.trees.size(); ++m)
    for (std::size_t i = 0; i < s.trees[m].size(); ++i) {
      const auto tag = detail::file_tag(s.edge_label(s.trees[m][i]));
      const auto& em = model.edge_models[m][i];
      if (const auto* u = std::get_if<UnconditionalEdge>(&em)) {
        const auto name = "density_" + tag + ".csv";
        detail::write_text(dir / name, detail::density_csv(u->fit.copula));
        log << name << '\n';
      } else {
        for (const auto& [combo, fit] : std::get<BinnedEdge>(em).fits) {
          const auto name = "density_" + tag + "_bin" + std::to_string(combo) + ".csv";
          detail::write_text(dir / name, detail::density_csv(fit.copula));
          log << name << '\n';
        }
      }
    }
  return log.str();
}

/// Fits the same vine with ordinary, orthonormal and multiwavelet pools and
/// tabulates the total log-likelihoods.
inline std::string cmd_report_comparison(const RunConfig& cfg, const Dataset& data) {
  std::vector<std::pair<std::string, double>> rows;
  const std::vector<std::pair<BasisKind, std::string>> families = {
      {BasisKind::ordinary_polynomial, "Minimum information copula, ordinary polynomial"},
      {BasisKind::orthonormal_polynomial, "Minimum information copula, orthonormal polynomial"},
      {BasisKind::legendre_multiwavelet, "Minimum information copula, Legendre multiwavelets"}};
  for (const auto& [kind, name] : families) {
    RunConfig c = cfg;
    c.family = kind;
    c.total_degree = 0;
    c.pool_labels.clear();
    rows.emplace_back(name, fit_vine_with(c, data).total_log_likelihood);
  }
  const auto text = report::comparison_table(rows);
  detail::write_text(std::filesystem::path(cfg.out_dir) / "comparison.txt", text);
  return text;
}

inline std::string cmd_replay_fixture(const std::string& path) {
  const auto f = replay_fixture_from_json(read_json_file(path));
  const BasisLibrary library;
  const auto r = replay(f, library);
  std::ostringstream os;
  os << "fixture " << f.name << '\n';
  os << report::pad("Bases", 24) << report::pad("alpha", 12) << report::pad("lambda", 12) << "expected\n";
  for (std::size_t i = 0; i < f.bases.size(); ++i)
    os << report::pad(f.bases[i], 24) << report::pad(report::num(f.alphas[i]), 12)
       << report::pad(report::num(r.fit.lambdas[i]), 12) << report::num(f.expected_lambdas[i]) << '\n';
  os << "max |lambda - expected| = " << report::num(r.max_lambda_error, 6) << " (tolerance "
     << report::num(f.lambda_tolerance, 4) << "): " << (r.within_tolerance ? "within" : "outside") << '\n';
  return os.str();
}

enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitData = 3, kExitNumeric = 4 };

inline int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const InvalidArgument*>(&e) ||
      dynamic_cast<const StructureError*>(&e) || dynamic_cast<const UnsupportedStructure*>(&e))
    return kExitConfig;
  if (dynamic_cast<const ParseError*>(&e) || dynamic_cast<const EmptyDataset*>(&e) ||
      dynamic_cast<const DomainError*>(&e) || dynamic_cast<const EmptyBin*>(&e))
    return kExitData;
  if (dynamic_cast<const InfeasibleMoments*>(&e) || dynamic_cast<const FitFailure*>(&e) ||
      dynamic_cast<const ConvergenceFailure*>(&e) || dynamic_cast<const SolverFailure*>(&e) ||
      dynamic_cast<const NonFiniteError*>(&e))
    return kExitNumeric;
  return kExitData;
}

/// Entry point shared by the minvine executable and the tests. `args`
/// excludes the program name.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Minimum-information copulas and vines"};
  app.require_subcommand(1);

  std::string config_path, data_path, out_dir, bases, pair, model_path, fixture_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> bins, k, grid;
  std::size_t count = 0;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON run configuration");
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--seed", seed, "random seed");
    sub->add_option("--bases", bases, "basis family: ordinary, orthonormal, multiwavelet");
    sub->add_option("--bins", bins, "bins per conditioning variable");
    sub->add_option("--k", k, "bases per copula");
    sub->add_option("--grid", grid, "grid size n");
  };
  auto* ingest = app.add_subcommand("ingest", "rank-transform a CSV into pseudo-observations");
  common(ingest);
  ingest->add_option("--data", data_path, "CSV with a header row")->required();
  auto* synth = app.add_subcommand("synth", "write a synthetic 4-column dataset");
  common(synth);
  synth->add_option("--count", count, "rows")->default_val(1094);
  auto* fit_pair = app.add_subcommand("fit-pair", "fit one pair copula by stepwise selection");
  common(fit_pair);
  fit_pair->add_option("--data", data_path, "CSV data")->required();
  fit_pair->add_option("--pair", pair, "two column labels, e.g. T,M")->required();
  auto* fit_vine_cmd = app.add_subcommand("fit-vine", "fit a D-vine");
  common(fit_vine_cmd);
  fit_vine_cmd->add_option("--data", data_path, "CSV data")->required();
  auto* sample = app.add_subcommand("sample", "draw samples from a fitted vine");
  common(sample);
  sample->add_option("--model", model_path, "vine JSON")->required();
  sample->add_option("--count", count, "rows")->default_val(1000);
  auto* export_density = app.add_subcommand("export-density", "write density grids of a fit or vine");
  common(export_density);
  export_density->add_option("--model", model_path, "fit or vine JSON")->required();
  auto* report_cmd = app.add_subcommand("report", "per-edge report, family comparison, or fixture replay");
  common(report_cmd);
  report_cmd->add_option("--data", data_path, "CSV data (family comparison)");
  report_cmd->add_option("--model", model_path, "vine JSON (per-edge report)");
  report_cmd->add_option("--fixture", fixture_path, "replay fixture JSON");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e, out, err);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    RunConfig cfg;
    if (!config_path.empty()) {
      Json j;
      try {
        j = read_json_file(config_path);
      } catch (const ParseError& e) {
        throw ConfigError(e.what());
      }
      cfg = run_config_from_json(j);
    }
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (seed) cfg.seed = *seed;
    if (!bases.empty()) {
      try {
        cfg.family = basis_kind_from_string(bases);
      } catch (const InvalidArgument& e) {
        throw ConfigError(e.what());
      }
      cfg.pool_labels.clear();
    }
    if (bins) cfg.bins = *bins;
    if (k) cfg.k = *k;
    if (grid) cfg.fit.grid_n = *grid;
    cfg.validate();
    const std::filesystem::path dir(cfg.out_dir);

    if (ingest->parsed()) {
      const auto ds = rank_transform(ingest_csv(data_path));
      detail::write_text(dir / "pseudo.csv", detail::csv_text(ds.labels, ds.columns));
      out << "ingested " << ds.rows() << " rows x " << ds.cols() << " columns\n";
    } else if (synth->parsed()) {
      if (count < 1) throw ConfigError("count must be at least 1");
      const auto ds = synthetic_dataset(count, cfg.seed);
      detail::write_text(dir / "synthetic.csv", detail::csv_text(ds.labels, ds.columns));
      out << "wrote " << count << " synthetic rows\n";
    } else if (fit_pair->parsed()) {
      const auto comma = pair.find(',');
      if (comma == std::string::npos) throw ConfigError("--pair expects two labels, e.g. T,M");
      out << cmd_fit_pair(cfg, detail::prepare_data(cfg, data_path), pair.substr(0, comma),
                          pair.substr(comma + 1));
    } else if (fit_vine_cmd->parsed()) {
      out << cmd_fit_vine(cfg, detail::prepare_data(cfg, data_path));
    } else if (sample->parsed()) {
      if (count < 1) throw ConfigError("count must be at least 1");
      out << cmd_sample(model_path, count, cfg.seed, cfg.out_dir);
    } else if (export_density->parsed()) {
      out << cmd_export_density(model_path, cfg.out_dir);
    } else if (report_cmd->parsed()) {
      if (!fixture_path.empty()) {
        out << cmd_replay_fixture(fixture_path);
      } else if (!model_path.empty()) {
        out << report::vine_report(vine_model_from_json(read_json_file(model_path)));
      } else if (!data_path.empty()) {
        out << cmd_report_comparison(cfg, detail::prepare_data(cfg, data_path));
      } else {
        throw ConfigError("report needs --data, --model or --fixture");
      }
    }
    return kExitOk;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
}

}  // namespace minvine

#endif  // MINVINE_CLI_HPP
