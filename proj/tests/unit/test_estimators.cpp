#include <cmath>
#include <random>

#include "doctest.h"

#include "airdelay/estimators.hpp"
#include "airdelay/synthlab.hpp"

using namespace airdelay;

namespace {

EstimationProblem simple(const std::vector<double>& x, const std::vector<double>& y) {
  EstimationProblem p;
  const auto n = static_cast<Eigen::Index>(x.size());
  p.X.resize(n, 2);
  p.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    p.X(i, 0) = x[i];
    p.X(i, 1) = 1.0;
    p.y(i) = y[i];
    p.unit.push_back(0);
    p.time.push_back(i);
  }
  p.x_names = {"x", "const"};
  p.excluded.resize(n, 0);
  return p;
}

EstimationProblem iv_problem(int n, std::uint64_t seed, int n_instruments = 2) {
  auto rng = make_rng(seed);
  std::normal_distribution<double> N;
  EstimationProblem p;
  p.X.resize(n, 3);
  p.excluded.resize(n, n_instruments);
  p.y.resize(n);
  for (int i = 0; i < n; ++i) {
    double x = 0;
    for (int j = 0; j < n_instruments; ++j) {
      p.excluded(i, j) = N(rng);
      x += 0.7 * p.excluded(i, j);
    }
    const double v = N(rng), w = N(rng);
    x += v;
    p.X.row(i) << x, w, 1.0;
    p.y(i) = 2.0 * x + 0.5 * w + 1.0 + 0.5 * v + N(rng);
    p.unit.push_back(i / 10);
    p.time.push_back(i % 10);
  }
  p.x_names = {"x", "w", "const"};
  p.endogenous = {0};
  return p;
}

}  // namespace

TEST_CASE("OLS on small hand examples") {
  const auto three = ols(simple({0, 1, 2}, {1, 1.5, 2}));
  CHECK(three.coef(0) == doctest::Approx(0.5));
  CHECK(three.coef(1) == doctest::Approx(1.0));
  const auto line = ols(simple({1, 2, 3, 4}, {2, 4, 6, 8}));
  CHECK(line.coef(0) == doctest::Approx(2.0));
  CHECK(std::abs(line.coef(1)) < 1e-12);
  CHECK(line.fit.r2 == doctest::Approx(1.0));
}

TEST_CASE("rank deficiency names the offending columns") {
  auto p = simple({0, 1, 2, 3}, {1, 2, 2, 4});
  p.X.conservativeResize(Eigen::NoChange, 3);
  p.X.col(2) = p.X.col(0) * 2.0;
  p.x_names.push_back("x_twice");
  try {
    ols(p);
    FAIL("expected a rank error");
  } catch (const Error& e) {
    const std::string msg = e.what();
    CHECK(msg.find("x, x_twice") != std::string::npos);
    CHECK(msg.find("const") == std::string::npos);
  }
}

TEST_CASE("problem validation") {
  auto p = iv_problem(50, 1);
  p.endogenous = {7};
  CHECK_THROWS_AS(ols(p), Error);
  auto q = iv_problem(50, 1);
  q.excluded.resize(50, 0);
  CHECK_THROWS_AS(gmm_two_step(q), Error);  // order condition
  auto r = iv_problem(50, 1);
  r.unit.pop_back();
  CHECK_THROWS_AS(ols(r), Error);
}

TEST_CASE("Bartlett kernel and bandwidth rule") {
  const double expected[] = {1.0, 5.0 / 6, 4.0 / 6, 3.0 / 6, 2.0 / 6, 1.0 / 6, 0.0};
  for (int j = 0; j <= 6; ++j) CHECK(bartlett_weight(j, 5) == expected[j]);
  CHECK(bartlett_weight(0, 0) == 1.0);
  CHECK(bartlett_weight(1, 0) == 0.0);
  CHECK(bandwidth_rule(144) == 5);
  CHECK(bandwidth_rule(125) == 5);
  CHECK(bandwidth_rule(124) == 4);
  CHECK(bandwidth_rule(20) == 2);
  CHECK(bandwidth_rule(1) == 1);
  CHECK_THROWS(bartlett_weight(-1, 2));
}

TEST_CASE("HAC covariance") {
  SUBCASE("bandwidth zero is White") {
    auto p = iv_problem(200, 3);
    const VectorXd u = ols(p).residuals;
    const auto S = hac_moment_covariance(p.X, u, p.unit, p.time, 0).S;
    MatrixXd W = MatrixXd::Zero(3, 3);
    for (int i = 0; i < 200; ++i) W += u(i) * u(i) * p.X.row(i).transpose() * p.X.row(i);
    W /= 200;
    CHECK((S - W).cwiseAbs().maxCoeff() < 1e-10);
  }
  SUBCASE("two rows of one unit by hand") {
    MatrixXd m(2, 1);
    m << 1.0, 3.0;
    // Gamma0 = (1 + 9)/2 = 5, Gamma1 = (3*1)/2 = 1.5, w(1) at L = 1 is 1/2.
    const auto S = hac_covariance(m, {0, 0}, {0, 1}, 1).S;
    CHECK(S(0, 0) == doctest::Approx(5.0 + 0.5 * 2 * 1.5));
    // Lags never cross units.
    CHECK(hac_covariance(m, {0, 1}, {0, 1}, 1).S(0, 0) == doctest::Approx(5.0));
    // Row order does not matter.
    MatrixXd r(2, 1);
    r << 3.0, 1.0;
    CHECK(hac_covariance(r, {0, 0}, {1, 0}, 1).S(0, 0) == doctest::Approx(S(0, 0)));
  }
}

TEST_CASE("IV estimator relations") {
  const auto p = iv_problem(400, 5, 1);
  const auto g = gmm_two_step(p), t = two_stage_least_squares(p), l = liml(p);
  CHECK((g.coef - t.coef).cwiseAbs().maxCoeff() < 1e-8);
  CHECK((l.coef - t.coef).cwiseAbs().maxCoeff() < 1e-8);
  CHECK(l.kappa == doctest::Approx(1.0));

  const auto over = iv_problem(400, 6, 3);
  const auto lo = liml(over);
  CHECK(lo.kappa >= 1.0);
  CHECK(gmm_two_step(over).coef(0) == doctest::Approx(2.0).epsilon(0.1));
  CHECK(lo.coef(0) == doctest::Approx(2.0).epsilon(0.1));
  CHECK(estimate(Estimator::LIML, over).coef == lo.coef);
}

TEST_CASE("scaling a regressor rescales its coefficient only") {
  auto p = iv_problem(300, 7);
  const auto a = gmm_two_step(p);
  p.X.col(1) *= 10.0;
  const auto b = gmm_two_step(p);
  CHECK(b.coef(1) * 10.0 == doctest::Approx(a.coef(1)).epsilon(1e-9));
  CHECK(b.coef(0) == doctest::Approx(a.coef(0)).epsilon(1e-9));
  CHECK(b.se(1) * 10.0 == doctest::Approx(a.se(1)).epsilon(1e-9));
  CHECK(b.t_ratio(0) == doctest::Approx(a.t_ratio(0)).epsilon(1e-9));
}

TEST_CASE("fixed effects") {
  DgpConfig cfg;
  cfg.n_units = 50;
  cfg.n_periods = 6;
  cfg.rho = 0.4;
  cfg.gamma = {0.3};
  cfg.unit_effect_sd = 2.0;
  cfg.time_effect_sd = 1.0;
  cfg.fe = FixedEffectsSpec::two_way();
  cfg.seed = 17;
  const auto base = generate_linear_panel(cfg).problem;

  SUBCASE("within plus dummies equals full dummies") {
    auto lsdv = base;
    lsdv.fe.implementation = FeImplementation::full_dummies;
    for (auto e : {Estimator::OLS, Estimator::GMM2S, Estimator::LIML}) {
      const auto a = estimate(e, apply_fixed_effects(base));
      const auto b = estimate(e, apply_fixed_effects(lsdv));
      for (const char* name : {"x", "w1"}) CHECK(a.coef(a.index_of(name)) == doctest::Approx(b.coef(b.index_of(name))).epsilon(1e-10));
    }
    const auto a = ols(apply_fixed_effects(base));
    const auto b = ols(apply_fixed_effects(lsdv));
    CHECK(a.se(a.index_of("x")) == doctest::Approx(b.se(b.index_of("x"))).epsilon(1e-8));
    CHECK(a.residuals.isApprox(b.residuals, 1e-9));
  }
  SUBCASE("unit shifts leave slopes unchanged") {
    auto shifted = base;
    for (Eigen::Index i = 0; i < shifted.n(); ++i) shifted.y(i) += 3.0 * static_cast<double>(shifted.unit[i] % 7) - 5.0;
    const auto a = gmm_two_step(apply_fixed_effects(base));
    const auto b = gmm_two_step(apply_fixed_effects(shifted));
    CHECK(std::abs(a.coef(0) - b.coef(0)) < 1e-8);
  }
  SUBCASE("bookkeeping") {
    const auto p = apply_fixed_effects(base);
    CHECK(p.absorbed == 50);
    CHECK(p.X.cols() == 2 + 5);
    CHECK(p.is_fe_column(2));
    CHECK_FALSE(p.is_fe_column(1));
    CHECK(apply_fixed_effects(p).X.cols() == p.X.cols());
  }
  SUBCASE("unit effects only") {
    auto u = base;
    u.fe.time_effects = false;
    const auto p = apply_fixed_effects(u);
    CHECK(p.X.cols() == 2);
  }
}
