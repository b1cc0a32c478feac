#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "airdelay/distributions.hpp"

namespace airdelay {

using Eigen::MatrixXd;
using Eigen::VectorXd;

enum class FeImplementation { within_plus_time_dummies, full_dummies };

struct FixedEffectsSpec {
  bool unit_effects = false;  // city-pair
  bool time_effects = false;  // month
  FeImplementation implementation = FeImplementation::within_plus_time_dummies;

  bool any() const { return unit_effects || time_effects; }
  static FixedEffectsSpec two_way() { return {true, true, FeImplementation::within_plus_time_dummies}; }
};

enum class Estimator { OLS, GMM2S, LIML };
std::string to_string(Estimator e);

/// How moment covariances are estimated. `hac` is Newey-West within units; `homoscedastic`
/// is the classical sigma^2 form, used for reduction checks and comparisons.
enum class CovarianceKind { hac, homoscedastic };

/// y = X b + u with instruments [exogenous columns of X | excluded instruments].
struct EstimationProblem {
  std::string y_name = "y";
  VectorXd y;
  MatrixXd X;
  std::vector<std::string> x_names;
  std::vector<int> endogenous;  // column indices of X
  MatrixXd excluded;            // excluded instruments, n x L_excl (may have zero columns)
  std::vector<std::string> excluded_names;
  std::vector<long long> unit;  // panel unit per row
  std::vector<long long> time;  // period per row (consecutive integers, e.g. month index)

  FixedEffectsSpec fe;
  std::optional<int> hac_bandwidth;  // nullopt: floor(T^(1/3)), T = longest unit
  bool small_sample = true;          // scale covariances by n / (n - K - absorbed)
  CovarianceKind covariance = CovarianceKind::hac;

  // Filled by apply_fixed_effects.
  bool fe_applied = false;
  int absorbed = 0;                     // parameters swept out by the within transform
  std::vector<bool> fe_column;          // X columns generated as fixed-effect dummies
  std::vector<std::size_t> singleton_rows;

  Eigen::Index n() const { return y.size(); }
  Eigen::Index k() const { return X.cols(); }
  Eigen::Index l() const { return k() - static_cast<Eigen::Index>(endogenous.size()) + excluded.cols(); }
  int overid_df() const { return static_cast<int>(excluded.cols()) - static_cast<int>(endogenous.size()); }

  std::vector<int> exogenous_columns() const;
  MatrixXd exogenous() const;
  MatrixXd endogenous_block() const;
  /// Full instrument matrix Z = [X_exog | excluded].
  MatrixXd instruments() const;
  std::vector<std::string> instrument_names() const;
  bool is_fe_column(Eigen::Index j) const { return j < static_cast<Eigen::Index>(fe_column.size()) && fe_column[j]; }

  /// Shape and index checks; throws on inconsistency.
  void validate() const;
};

struct FitBlock {
  double r2 = 0.0;
  double adj_r2 = 0.0;
  double rmse = 0.0;
  double rss = 0.0;
  double tss = 0.0;
  double f_stat = 0.0;
  int f_df1 = 0;
  double f_df2 = 0.0;
  double f_p = 1.0;
};

struct Diagnostics {
  std::optional<TestResult> kp_lm;       // underidentification
  std::optional<TestResult> hansen_j;
  std::optional<TestResult> weak_cd;     // Cragg-Donald Wald F
  std::optional<TestResult> weak_kp;     // Kleibergen-Paap rk Wald F
  std::vector<TestResult> extra;         // autocorrelation, heteroscedasticity, ...
};

struct EstimationResult {
  Estimator estimator = Estimator::OLS;
  std::string y_name;
  std::vector<std::string> names;
  std::vector<bool> fe_column;
  VectorXd coef;
  VectorXd se;
  MatrixXd cov;
  VectorXd residuals;
  VectorXd step1_coef;  // 2SLS step of 2SGMM
  MatrixXd moment_cov;  // S used as the second-step weight (2SGMM)
  double kappa = 1.0;   // LIML
  Eigen::Index n = 0, k = 0, l = 0;
  int overid_df = 0;
  int absorbed = 0;
  int bandwidth = 0;
  FixedEffectsSpec fe;
  CovarianceKind covariance = CovarianceKind::hac;
  FitBlock fit;
  Diagnostics diagnostics;
  std::vector<std::string> warnings;

  double t_ratio(Eigen::Index j) const { return coef(j) / se(j); }
  double p_value(Eigen::Index j) const { return normal_two_sided_p(t_ratio(j)); }
  /// Index of a named coefficient; throws when absent.
  Eigen::Index index_of(const std::string& name) const;
};

/// Sweeps out unit effects by within-unit demeaning and appends month dummies (all but one),
/// or appends explicit unit and month dummies in full-dummies mode.
EstimationProblem apply_fixed_effects(const EstimationProblem& problem);

/// Bartlett kernel weight 1 - j/(L+1) for j <= L, 0 beyond.
double bartlett_weight(int lag, int bandwidth);

/// floor(T^(1/3)).
int bandwidth_rule(long long longest_unit_length);
int resolve_bandwidth(const EstimationProblem& problem);

struct MomentCovariance {
  MatrixXd S;
  double asymmetry = 0.0;        // max |S - S'| before symmetrisation
  double min_eigenvalue = 0.0;   // before flooring
  bool floored = false;
  std::vector<std::string> warnings;
};

/// Newey-West covariance of the rows of `moments` (n x m): Gamma_0 + sum_j w(j)(Gamma_j + Gamma_j'),
/// lags taken within units only, every Gamma divided by n. Rows may come in any order.
MomentCovariance hac_covariance(const MatrixXd& moments, const std::vector<long long>& unit,
                                const std::vector<long long>& time, int bandwidth);

/// HAC covariance of the moment contributions z_i u_i.
MomentCovariance hac_moment_covariance(const MatrixXd& Z, const VectorXd& residuals,
                                       const std::vector<long long>& unit, const std::vector<long long>& time,
                                       int bandwidth);

/// The estimators expect apply_fixed_effects to have run already when fe is requested (they call it
/// themselves otherwise).
EstimationResult ols(const EstimationProblem& problem);
EstimationResult two_stage_least_squares(const EstimationProblem& problem);
EstimationResult gmm_two_step(const EstimationProblem& problem);
EstimationResult liml(const EstimationProblem& problem);
EstimationResult estimate(Estimator which, const EstimationProblem& problem);

FitBlock fit_statistics(const EstimationResult& result, const EstimationProblem& problem);

namespace linalg {

/// Throws naming the dependent columns when A lacks full column rank.
void require_full_column_rank(const MatrixXd& A, const std::vector<std::string>& names, const std::string& where);
/// M_B A: residuals of regressing each column of A on B.
MatrixXd residualize(const MatrixXd& A, const MatrixXd& B);
/// Inverse of a symmetric PSD matrix after flooring eigenvalues at 1e-12 * trace / dim.
MatrixXd floored_inverse(const MatrixXd& S);
/// Symmetric square root of a symmetric PSD matrix.
MatrixXd sqrtm_sym(const MatrixXd& S);

}  // namespace linalg

}  // namespace airdelay
