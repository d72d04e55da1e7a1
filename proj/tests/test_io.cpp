#include <gtest/gtest.h>

#include <string>

#include "minvine/dataset.hpp"
#include "minvine/io.hpp"

using namespace minvine;

namespace {

const BasisLibrary& lib() {
  static const BasisLibrary l;
  return l;
}

FitConfig small_config() {
  FitConfig c;
  c.grid_n = 30;
  return c;
}

std::string fixture(const std::string& name) { return std::string(MINVINE_SOURCE_DIR) + "/fixtures/" + name; }

}  // namespace

TEST(Json, PiecewiseRoundTrip) {
  const auto& psi = lib().wavelets().members[2];
  const auto back = piecewise_from_json(to_json(psi));
  for (double x = 0.0; x <= 1.0; x += 0.01) EXPECT_NEAR(back(x), psi(x), 1e-9);
}

TEST(Json, BasisFamilyRoundTrip) {
  for (const auto* fam : {&lib().orthonormal(), &lib().scaling(), &lib().wavelets()}) {
    const auto j = to_json(*fam);
    const auto back = basis_family_from_json(j);
    EXPECT_EQ(back.kind, fam->kind);
    EXPECT_EQ(back.names, fam->names);
    ASSERT_EQ(back.size(), fam->size());
    for (std::size_t i = 0; i < fam->size(); ++i)
      // global x^k coefficients of the degree-12 members reach 1e6, so the
      // conversion costs a few digits
      for (double x : {0.0, 0.3, 0.5, 0.81, 1.0}) EXPECT_NEAR(back.members[i](x), fam->members[i](x), 1e-7);
  }
}

TEST(Json, CopulaFitRoundTrip) {
  const auto s = PairSample(uniform_ranks(std::vector<double>{1, 5, 2, 8, 3, 9, 4, 7, 6, 10, 12, 11}),
                            uniform_ranks(std::vector<double>{2, 4, 1, 7, 5, 8, 3, 9, 6, 12, 10, 11}));
  const std::vector<TensorBasis2D> b{lib().tensor("phi_1 x phi_1"), lib().tensor("psi^1 x phi^2")};
  const auto fit = solve_lambdas(empirical_constraints(s, b), small_config(), &s);
  const auto j = to_json(fit, small_config());
  EXPECT_EQ(j.at("bases")[1], "psi^1 x phi^2");
  const auto back = copula_fit_from_json(j, lib());
  EXPECT_EQ(back.lambdas, fit.lambdas);
  EXPECT_EQ(back.targets(), fit.targets());
  EXPECT_EQ(back.log_likelihood, fit.log_likelihood);
  EXPECT_EQ(back.copula.density(), fit.copula.density());
  EXPECT_EQ(dump(to_json(back, small_config())), dump(j));
}

TEST(Json, CopulaFitMissingField) {
  Json j = {{"bases", {"phi_1 x phi_1"}}, {"alphas", {0.1}}};
  EXPECT_THROW(copula_fit_from_json(j, lib()), ParseError);
  j["lambdas"] = {0.1, 0.2};
  j["grid_n"] = 10;
  j["loglik"] = 0.0;
  EXPECT_THROW(copula_fit_from_json(j, lib()), ParseError);
}

TEST(Json, FitConfigRoundTrip) {
  FitConfig c;
  c.grid_n = 77;
  c.opt_tol = 1e-9;
  c.opt_max_evals = 123;
  const auto back = fit_config_from_json(fit_config_to_json(c));
  EXPECT_EQ(back.grid_n, 77);
  EXPECT_EQ(back.opt_tol, 1e-9);
  EXPECT_EQ(back.opt_max_evals, 123);
  EXPECT_EQ(back.dad_tol, c.dad_tol);
}

TEST(Json, VineModelRoundTripIsByteIdentical) {
  auto ds = rank_transform(synthetic_dataset(800, 3));
  ds.columns.resize(3);
  VineFitOptions opt;
  opt.k = 2;
  opt.bins = 2;
  const auto pool = lib().candidate_pool(BasisKind::legendre_multiwavelet, 4);
  const auto model = fit_vine(ds.columns, build_dvine({"T", "M", "B"}), pool, opt, small_config(),
                              BasisKind::legendre_multiwavelet, lib().wavelet_order());
  const auto text = dump(to_json(model));
  const auto back = vine_model_from_json(Json::parse(text));
  EXPECT_EQ(dump(to_json(back)), text);
  EXPECT_EQ(back.total_log_likelihood, model.total_log_likelihood);
  const std::vector<double> p{0.2, 0.6, 0.9};
  EXPECT_EQ(vine_log_density(back, p), vine_log_density(model, p));
  EXPECT_EQ(sample_vine(back, 20, 4), sample_vine(model, 20, 4));
}

TEST(Json, VineModelRejectsBrokenStructure) {
  auto ds = rank_transform(synthetic_dataset(300, 1));
  ds.columns.resize(2);
  VineFitOptions opt;
  opt.k = 1;
  const auto model = fit_vine(ds.columns, build_dvine({"T", "M"}), lib().candidate_pool(BasisKind::orthonormal_polynomial, 3),
                              opt, small_config());
  auto j = to_json(model);
  j["labels"] = Json::array({"T"});
  EXPECT_THROW(vine_model_from_json(j), Error);
}

TEST(Fixtures, ParseAndReplayShape) {
  const auto f = replay_fixture_from_json(read_json_file(fixture("tm_orthonormal.json")));
  EXPECT_EQ(f.bases.size(), 6u);
  EXPECT_EQ(f.alphas.size(), 6u);
  EXPECT_EQ(f.stages.size(), 6u);
  ASSERT_TRUE(f.expected_loglik.has_value());
  EXPECT_EQ(*f.expected_loglik, 60.66);
  EXPECT_EQ(f.stages.back().first, "phi_4 x phi_1");
  for (const auto& b : f.bases) EXPECT_NO_THROW(lib().tensor(b));
  const auto g = replay_fixture_from_json(read_json_file(fixture("mb_orthonormal.json")));
  EXPECT_FALSE(g.expected_loglik.has_value());
  EXPECT_TRUE(g.stages.empty());
}

TEST(Fixtures, Errors) {
  EXPECT_THROW(read_json_file(fixture("does_not_exist.json")), ParseError);
  Json j = {{"name", "x"}, {"bases", {"phi_1 x phi_1"}}, {"alphas", {0.1, 0.2}}, {"expected_lambdas", {0.1}}};
  EXPECT_THROW(replay_fixture_from_json(j), ParseError);
}
