#pragma once

#include <string>
#include <vector>

#include "airdelay/distributions.hpp"
#include "airdelay/estimators.hpp"

namespace airdelay {

/// Hansen's J = n g' S^-1 g with g = Z'u/n at the second-step coefficients. df = L - K.
TestResult hansen_j(const EstimationResult& gmm, const MatrixXd& Z, const MatrixXd& S);
TestResult hansen_j(const EstimationResult& gmm, const EstimationProblem& problem);

/// Kleibergen-Paap rank statistic for H0: rank(Pi) = K_endog - 1, Pi the first-stage coefficients of the
/// excluded instruments after partialling out the exogenous regressors.
struct RankTest {
  double statistic = 0.0;
  int df = 0;
};

enum class RankVersion { lm, wald };

/// `covariance` picks the robust (HAC) or homoscedastic first-stage covariance. The homoscedastic LM
/// form is the Anderson canonical-correlation statistic.
RankTest kleibergen_paap_rk(const EstimationProblem& problem, RankVersion version,
                            CovarianceKind covariance = CovarianceKind::hac);

/// Underidentification LM test, chi2(L_excl - K_endog + 1).
TestResult underidentification_lm(const EstimationProblem& problem);

struct WeakInstrumentStats {
  TestResult cragg_donald;  // Wald F form, no p-value
  TestResult kp_wald;       // robust analogue, no p-value
};

WeakInstrumentStats weak_instrument_stats(const EstimationProblem& problem);

/// Cumby-Huizinga style test of zero residual autocorrelation at the given lags, computed within units.
/// Lags at or beyond the shortest unit length are dropped (reported through `warnings`).
TestResult cumby_huizinga(const VectorXd& residuals, const std::vector<long long>& unit,
                          const std::vector<long long>& time, std::vector<int> lags,
                          std::vector<std::string>* warnings = nullptr);

enum class HetVariant { pagan_hall, white_koenker, breusch_pagan };
enum class AuxiliarySet { levels, levels_squares_cross, fitted };

std::string to_string(HetVariant v);
std::string to_string(AuxiliarySet a);

/// Heteroscedasticity tests on the residuals of `result`. The auxiliary variables are built from the
/// instrument set (which equals X for OLS), excluding fixed-effect dummies and constants.
TestResult heteroscedasticity_test(const EstimationResult& result, const EstimationProblem& problem,
                                   HetVariant variant, AuxiliarySet aux, std::vector<std::string>* warnings = nullptr);

struct DiagnosticsOptions {
  std::vector<int> autocorrelation_lags;  // empty: skip
  std::vector<std::pair<HetVariant, AuxiliarySet>> heteroscedasticity;
};

/// Fills result.diagnostics: KP LM, weak-instrument F statistics and (2SGMM) Hansen J for IV fits, plus
/// any requested residual tests.
void run_diagnostics(EstimationResult& result, const EstimationProblem& problem, const DiagnosticsOptions& options = {});

}  // namespace airdelay
