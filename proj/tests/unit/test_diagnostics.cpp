#include <cmath>

#include "doctest.h"

#include "airdelay/diagnostics.hpp"
#include "airdelay/synthlab.hpp"

using namespace airdelay;

namespace {

EstimationProblem panel_problem(std::uint64_t seed, std::vector<double> pi = {0.5, 0.5, 0.5}) {
  DgpConfig cfg;
  cfg.n_units = 60;
  cfg.n_periods = 10;
  cfg.pi = std::move(pi);
  cfg.rho = 0.5;
  cfg.gamma = {0.5};
  cfg.seed = seed;
  return apply_fixed_effects(generate_linear_panel(cfg).problem);
}

}  // namespace

TEST_CASE("tail probabilities") {
  CHECK(tail_probability(Distribution::chi2, 0.0, 4) == 1.0);
  CHECK(tail_probability(Distribution::chi2, 3.1132, 3) == doctest::Approx(0.3745).epsilon(0.0005 / 0.3745));
  CHECK(tail_probability(Distribution::chi2, 3.2199, 3) == doctest::Approx(0.3589).epsilon(0.0005 / 0.3589));
  CHECK(tail_probability(Distribution::chi2, 3.841458820694124, 1) == doctest::Approx(0.05).epsilon(1e-9));
  CHECK(tail_probability(Distribution::chi2, 2.0, 2) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
  CHECK(tail_probability(Distribution::F, 4.0, 1, 1e9) ==
        doctest::Approx(tail_probability(Distribution::chi2, 4.0, 1)).epsilon(1e-6));
  CHECK(tail_probability(Distribution::F, 1.0, 5, 5) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(normal_two_sided_p(1.959963984540054) == doctest::Approx(0.05).epsilon(1e-12));
  CHECK_THROWS(tail_probability(Distribution::chi2, 1.0, 0));
  CHECK_THROWS(tail_probability(Distribution::chi2, -1.0, 2));
  double prev = 1.0;
  for (double s = 0.5; s < 30; s += 0.5) {
    const double p = tail_probability(Distribution::chi2, s, 3);
    CHECK(p < prev);
    prev = p;
  }
}

TEST_CASE("Hansen J") {
  SUBCASE("exact identification gives zero") {
    const auto p = panel_problem(1, {0.8});
    const auto j = hansen_j(gmm_two_step(p), p);
    CHECK(std::abs(j.statistic) < 1e-8);
    CHECK(j.df == 0);
    CHECK(j.p_value == 1.0);
  }
  SUBCASE("invariant to reparameterising instruments") {
    auto p = panel_problem(2);
    const auto a = hansen_j(gmm_two_step(p), p);
    MatrixXd A(3, 3);
    A << 1, 0.5, 0, 0, 2, 0, -1, 0, 0.3;
    p.excluded = p.excluded * A;
    const auto b = hansen_j(gmm_two_step(p), p);
    CHECK(b.statistic == doctest::Approx(a.statistic).epsilon(1e-6));
    CHECK(a.df == 2);
  }
}

TEST_CASE("rank and weak-instrument statistics") {
  SUBCASE("one endogenous, one instrument: CD equals the first-stage F") {
    const auto p = panel_problem(3, {0.3});
    const MatrixXd Z = p.instruments();
    const VectorXd x = p.X.col(0);
    const MatrixXd ZtZi = (Z.transpose() * Z).inverse();
    const VectorXd g = ZtZi * Z.transpose() * x;
    const double s2 = (x - Z * g).squaredNorm() / static_cast<double>(p.n() - Z.cols());
    const auto last = Z.cols() - 1;
    const double f = g(last) * g(last) / (s2 * ZtZi(last, last));
    CHECK(weak_instrument_stats(p).cragg_donald.statistic == doctest::Approx(f).epsilon(1e-10));
    CHECK(std::isnan(weak_instrument_stats(p).cragg_donald.p_value));
  }
  SUBCASE("scaling an instrument changes nothing") {
    auto p = panel_problem(4);
    const double lm = underidentification_lm(p).statistic;
    const auto w = weak_instrument_stats(p);
    p.excluded.col(1) *= 1000.0;
    CHECK(underidentification_lm(p).statistic == doctest::Approx(lm).epsilon(1e-6));
    CHECK(weak_instrument_stats(p).kp_wald.statistic == doctest::Approx(w.kp_wald.statistic).epsilon(1e-6));
    CHECK(weak_instrument_stats(p).cragg_donald.statistic ==
          doctest::Approx(w.cragg_donald.statistic).epsilon(1e-6));
  }
  SUBCASE("degrees of freedom and order condition") {
    auto p = panel_problem(5);
    const auto lm = underidentification_lm(p);
    CHECK(lm.df == 3);
    CHECK(lm.p_value == doctest::Approx(tail_probability(Distribution::chi2, lm.statistic, 3)).epsilon(1e-10));
    p.excluded.resize(p.n(), 0);
    CHECK_THROWS(underidentification_lm(p));
  }
  SUBCASE("homoscedastic rank LM equals n times the squared canonical correlation") {
    const auto p = panel_problem(6, {0.2, 0.1});
    const MatrixXd W = p.exogenous();
    auto partial = [&](const MatrixXd& A) { return MatrixXd(A - W * W.colPivHouseholderQr().solve(A)); };
    const VectorXd x = partial(p.endogenous_block()).col(0);
    const MatrixXd Z = partial(p.excluded);
    const VectorXd fitted = Z * Z.colPivHouseholderQr().solve(x);
    const double r2 = fitted.squaredNorm() / x.squaredNorm();
    const double lm = kleibergen_paap_rk(p, RankVersion::lm, CovarianceKind::homoscedastic).statistic;
    CHECK(lm == doctest::Approx(static_cast<double>(p.n()) * r2).epsilon(0.05));
  }
}

TEST_CASE("Cumby-Huizinga") {
  const std::vector<long long> unit = {0, 0, 0, 0, 0, 1, 1, 1, 1, 1};
  const std::vector<long long> time = {0, 1, 2, 3, 4, 0, 1, 2, 3, 4};
  const auto zero = cumby_huizinga(VectorXd::Zero(10), unit, time, {1, 2});
  CHECK(zero.statistic == 0.0);
  CHECK(zero.p_value == 1.0);

  std::vector<std::string> warnings;
  VectorXd r(10);
  r << 1, -2, 0.5, 1.5, -1, 0.3, -0.7, 2, -1, 0.2;
  const auto t = cumby_huizinga(r, unit, time, {1, 2, 5, 7}, &warnings);
  CHECK(t.df == 2);
  CHECK_FALSE(warnings.empty());
  CHECK(t.p_value == doctest::Approx(tail_probability(Distribution::chi2, t.statistic, 2)).epsilon(1e-10));
}

TEST_CASE("heteroscedasticity tests") {
  const auto p = panel_problem(8);
  auto res = gmm_two_step(p);

  SUBCASE("constant residuals give zero for White/Koenker") {
    res.residuals.setConstant(0.7);
    const auto t = heteroscedasticity_test(res, p, HetVariant::white_koenker, AuxiliarySet::levels_squares_cross);
    CHECK(std::abs(t.statistic) < 1e-8);
  }
  SUBCASE("every variant is internally consistent") {
    for (auto v : {HetVariant::pagan_hall, HetVariant::white_koenker, HetVariant::breusch_pagan})
      for (auto a : {AuxiliarySet::levels, AuxiliarySet::levels_squares_cross, AuxiliarySet::fitted}) {
        const auto t = heteroscedasticity_test(res, p, v, a);
        CHECK(t.statistic >= 0.0);
        CHECK(t.df >= 1);
        CHECK(t.p_value == doctest::Approx(tail_probability(Distribution::chi2, t.statistic, t.df)).epsilon(1e-10));
      }
  }
}

TEST_CASE("run_diagnostics fills the IV block") {
  const auto p = panel_problem(9);
  auto res = gmm_two_step(p);
  DiagnosticsOptions opt;
  opt.autocorrelation_lags = {1, 2};
  opt.heteroscedasticity = {{HetVariant::pagan_hall, AuxiliarySet::levels}};
  run_diagnostics(res, p, opt);
  CHECK(res.diagnostics.kp_lm.has_value());
  CHECK(res.diagnostics.hansen_j.has_value());
  CHECK(res.diagnostics.weak_cd.has_value());
  CHECK(res.diagnostics.weak_kp.has_value());
  CHECK(res.diagnostics.extra.size() == 2);

  auto o = ols(p);
  run_diagnostics(o, p);
  CHECK_FALSE(o.diagnostics.hansen_j.has_value());
  CHECK_FALSE(o.diagnostics.kp_lm.has_value());
}
