#include "airdelay/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include <unsupported/Eigen/KroneckerProduct>

#include "airdelay/common.hpp"

namespace airdelay {

namespace {

EstimationProblem prepared(const EstimationProblem& problem) {
  return problem.fe_applied ? problem : apply_fixed_effects(problem);
}

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

TestResult hansen_j(const EstimationResult& gmm, const MatrixXd& Z, const MatrixXd& S) {
  if (gmm.overid_df < 0) throw Error("hansen_j", "negative overidentification degrees of freedom");
  const double n = static_cast<double>(gmm.residuals.size());
  const VectorXd g = Z.transpose() * gmm.residuals / n;
  const double J = n * g.dot(linalg::floored_inverse(S) * g);
  if (J < -1e-8) throw Error("hansen_j", "negative J statistic " + format_double(J) + "; moment scaling is inconsistent");
  const double stat = std::max(J, 0.0);
  if (gmm.overid_df == 0) {
    TestResult t{"Hansen J", stat, Distribution::chi2, 0.0, 0.0, 1.0};
    return t;
  }
  return make_test("Hansen J", stat, Distribution::chi2, gmm.overid_df);
}

TestResult hansen_j(const EstimationResult& gmm, const EstimationProblem& problem) {
  if (gmm.moment_cov.size() == 0) throw Error("hansen_j", "result carries no second-step moment covariance");
  return hansen_j(gmm, prepared(problem).instruments(), gmm.moment_cov);
}

namespace {

struct FirstStage {
  MatrixXd Y;  // endogenous regressors, exogenous regressors partialled out
  MatrixXd Z;  // excluded instruments, same partialling
  double df = 0.0;  // n - L - absorbed
};

FirstStage first_stage(const EstimationProblem& problem, const std::string& where) {
  const auto p = prepared(problem);
  const auto k = static_cast<Eigen::Index>(p.endogenous.size());
  if (k == 0) throw Error(where, "no endogenous regressors");
  if (p.excluded.cols() < k) throw Error(where, "order condition fails (fewer excluded instruments than endogenous)");
  FirstStage fs;
  const MatrixXd exog = p.exogenous();
  fs.Y = linalg::residualize(p.endogenous_block(), exog);
  fs.Z = linalg::residualize(p.excluded, exog);
  linalg::require_full_column_rank(fs.Z, p.excluded_names, where);
  fs.df = static_cast<double>(p.n()) - static_cast<double>(p.l()) - p.absorbed;
  if (fs.df <= 0.0) throw Error(where, "no first-stage residual degrees of freedom");
  return fs;
}

/// Upper triangular R with R'R = A.
MatrixXd upper_cholesky(const MatrixXd& A, const std::string& where) {
  Eigen::LLT<MatrixXd> llt(A);
  if (llt.info() != Eigen::Success) throw Error(where, "matrix is not positive definite");
  return llt.matrixU();
}

}  // namespace

RankTest kleibergen_paap_rk(const EstimationProblem& problem, RankVersion version, CovarianceKind covariance) {
  const std::string where = "kleibergen_paap";
  const auto p = prepared(problem);
  const auto fs = first_stage(p, where);
  const auto n_rows = fs.Y.rows();
  const double n = static_cast<double>(n_rows);
  const auto k = fs.Y.cols();
  const auto l = fs.Z.cols();
  const auto q = k - 1;

  const MatrixXd ZZ = fs.Z.transpose() * fs.Z;
  const MatrixXd Pi = ZZ.ldlt().solve(fs.Z.transpose() * fs.Y);  // l x k
  // LM evaluates the covariance with the regressors themselves as errors; Wald uses first-stage residuals.
  const MatrixXd E = version == RankVersion::lm ? fs.Y : MatrixXd(fs.Y - fs.Z * Pi);
  const MatrixXd Q = ZZ / n;
  const MatrixXd See = E.transpose() * E / n;

  const MatrixXd G = upper_cholesky(Q, where);  // G'G = Q
  const MatrixXd Ry = upper_cholesky(See, where);
  const MatrixXd Ft = Ry.triangularView<Eigen::Upper>().solve(MatrixXd::Identity(k, k));  // F' = Ry^-1
  const MatrixXd F = Ft.transpose();
  const MatrixXd Theta = G * Pi * Ft;  // l x k

  Eigen::JacobiSVD<MatrixXd> svd(Theta, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const MatrixXd& U = svd.matrixU();
  const MatrixXd& V = svd.matrixV();
  const MatrixXd U22 = U.block(q, q, l - q, l - q);
  const MatrixXd V22 = V.block(q, q, k - q, k - q);
  const MatrixXd A = U.rightCols(l - q) * U22.inverse() * linalg::sqrtm_sym(U22 * U22.transpose());
  const MatrixXd B =
      linalg::sqrtm_sym(V22 * V22.transpose()) * V22.transpose().inverse() * V.rightCols(k - q).transpose();
  const MatrixXd Lam = A.transpose() * Theta * B.transpose();  // (l-q) x (k-q)
  const VectorXd lambda = Eigen::Map<const VectorXd>(Lam.data(), Lam.size());

  // Covariance of vec(Pi): (I_k (x) Q^-1) S_h (I_k (x) Q^-1) / n, h_i = e_i (x) z_i.
  const auto m = k * l;
  MatrixXd Sh;
  if (covariance == CovarianceKind::hac) {
    MatrixXd H(n_rows, m);
    for (Eigen::Index j = 0; j < k; ++j) H.middleCols(j * l, l) = fs.Z.array().colwise() * E.col(j).array();
    Sh = hac_covariance(H, p.unit, p.time, resolve_bandwidth(p)).S;
  } else {
    Sh = Eigen::kroneckerProduct(See, Q);
  }
  const MatrixXd Qinv = Q.ldlt().solve(MatrixXd::Identity(l, l));
  const MatrixXd IQ = Eigen::kroneckerProduct(MatrixXd::Identity(k, k), Qinv);
  const MatrixXd Vpi = IQ * Sh * IQ.transpose() / n;

  const MatrixXd Kt = Eigen::kroneckerProduct(B, A.transpose()) * Eigen::kroneckerProduct(F, G);
  MatrixXd Omega = Kt * Vpi * Kt.transpose();
  Omega = 0.5 * (Omega + Omega.transpose());

  RankTest rt;
  rt.statistic = lambda.dot(Omega.ldlt().solve(lambda));
  rt.df = static_cast<int>((l - q) * (k - q));
  return rt;
}

TestResult underidentification_lm(const EstimationProblem& problem) {
  const auto p = prepared(problem);
  const auto rt = kleibergen_paap_rk(p, RankVersion::lm, p.covariance);
  return make_test("KP rk LM", rt.statistic, Distribution::chi2, rt.df);
}

WeakInstrumentStats weak_instrument_stats(const EstimationProblem& problem) {
  const auto p = prepared(problem);
  const auto fs = first_stage(p, "weak_instrument_stats");
  const double l2 = static_cast<double>(fs.Z.cols());
  const double n = static_cast<double>(fs.Y.rows());

  const MatrixXd Yhat = fs.Z * fs.Z.colPivHouseholderQr().solve(fs.Y);
  const MatrixXd explained = fs.Y.transpose() * Yhat / l2;  // Y'P Y / L2
  const MatrixXd resid = fs.Y - Yhat;
  const MatrixXd noise = resid.transpose() * resid / fs.df;  // Y'M Y / (n - L)
  Eigen::GeneralizedSelfAdjointEigenSolver<MatrixXd> ges(0.5 * (explained + explained.transpose()),
                                                          0.5 * (noise + noise.transpose()));
  if (ges.info() != Eigen::Success) throw Error("weak_instrument_stats", "first-stage residual matrix is singular");

  WeakInstrumentStats out;
  out.cragg_donald = {"Cragg-Donald Wald F", ges.eigenvalues().minCoeff(), Distribution::F, l2, fs.df, kNaN};
  const auto rkw = kleibergen_paap_rk(p, RankVersion::wald, p.covariance);
  out.kp_wald = {"KP rk Wald F", rkw.statistic * fs.df / (n * l2), Distribution::F, l2, fs.df, kNaN};
  return out;
}

TestResult cumby_huizinga(const VectorXd& residuals, const std::vector<long long>& unit,
                          const std::vector<long long>& time, std::vector<int> lags, std::vector<std::string>* warnings) {
  const auto n_rows = residuals.size();
  if (static_cast<Eigen::Index>(unit.size()) != n_rows || static_cast<Eigen::Index>(time.size()) != n_rows)
    throw Error("cumby_huizinga", "index maps must cover every row");
  if (lags.empty()) throw Error("cumby_huizinga", "empty lag set");
  std::sort(lags.begin(), lags.end());
  lags.erase(std::unique(lags.begin(), lags.end()), lags.end());

  std::map<long long, std::map<long long, Eigen::Index>> rows;  // unit -> time -> row
  for (Eigen::Index i = 0; i < n_rows; ++i) rows[unit[static_cast<std::size_t>(i)]][time[static_cast<std::size_t>(i)]] = i;
  long long shortest = std::numeric_limits<long long>::max();
  for (const auto& [u, r] : rows) shortest = std::min<long long>(shortest, static_cast<long long>(r.size()));

  std::vector<int> kept;
  for (int j : lags) {
    if (j < 1) throw Error("cumby_huizinga", "lags must be positive");
    if (j >= shortest) {
      if (warnings) warnings->push_back("autocorrelation lag " + std::to_string(j) + " dropped: shortest unit has " +
                                        std::to_string(shortest) + " periods");
      continue;
    }
    kept.push_back(j);
  }
  if (kept.empty()) throw Error("cumby_huizinga", "every requested lag exceeds the shortest unit length");

  // m_ij = u_i u_(i-j) within the unit, 0 when the lagged period is absent
  MatrixXd M = MatrixXd::Zero(n_rows, static_cast<Eigen::Index>(kept.size()));
  for (const auto& [u, byt] : rows) {
    for (const auto& [t, i] : byt) {
      for (std::size_t c = 0; c < kept.size(); ++c) {
        auto it = byt.find(t - kept[c]);
        if (it != byt.end()) M(i, static_cast<Eigen::Index>(c)) = residuals(i) * residuals(it->second);
      }
    }
  }
  const double n = static_cast<double>(n_rows);
  const VectorXd mbar = M.colwise().sum().transpose() / n;
  const MatrixXd Vm = M.transpose() * M / n;
  double stat = 0.0;
  if (Vm.trace() > 0.0) stat = n * mbar.dot(linalg::floored_inverse(Vm) * mbar);
  return make_test("Cumby-Huizinga", std::max(stat, 0.0), Distribution::chi2, static_cast<double>(kept.size()));
}

std::string to_string(HetVariant v) {
  switch (v) {
    case HetVariant::pagan_hall: return "pagan_hall";
    case HetVariant::white_koenker: return "white_koenker";
    case HetVariant::breusch_pagan: return "breusch_pagan";
  }
  return "";
}

std::string to_string(AuxiliarySet a) {
  switch (a) {
    case AuxiliarySet::levels: return "levels";
    case AuxiliarySet::levels_squares_cross: return "levels_squares_cross";
    case AuxiliarySet::fitted: return "fitted";
  }
  return "";
}

namespace {

/// Auxiliary variables without the constant; dependent columns removed.
MatrixXd auxiliary_matrix(const EstimationResult& result, const EstimationProblem& p, AuxiliarySet aux,
                          std::vector<std::string>* warnings) {
  const auto n = p.n();
  MatrixXd base;
  if (aux == AuxiliarySet::fitted) {
    if (p.endogenous.empty()) {
      base = p.y - result.residuals;
    } else {
      // With endogenous regressors use X-hat b, a function of the instruments only.
      const MatrixXd Z = p.instruments();
      const MatrixXd Xhat = Z * Z.colPivHouseholderQr().solve(p.X);
      base = Xhat * result.coef;
    }
  } else {
    const MatrixXd Z = p.instruments();
    const auto exo = p.exogenous_columns();
    std::vector<Eigen::Index> keep;
    for (Eigen::Index j = 0; j < Z.cols(); ++j) {
      const bool is_fe = j < static_cast<Eigen::Index>(exo.size()) && p.is_fe_column(exo[static_cast<std::size_t>(j)]);
      const bool constant = Z.col(j).maxCoeff() == Z.col(j).minCoeff();
      if (!is_fe && !constant) keep.push_back(j);
    }
    base.resize(n, static_cast<Eigen::Index>(keep.size()));
    for (std::size_t c = 0; c < keep.size(); ++c) base.col(static_cast<Eigen::Index>(c)) = Z.col(keep[c]);
    if (aux == AuxiliarySet::levels_squares_cross) {
      const auto b = base.cols();
      MatrixXd ext(n, b + b * (b + 1) / 2);
      ext.leftCols(b) = base;
      Eigen::Index c = b;
      for (Eigen::Index i = 0; i < b; ++i)
        for (Eigen::Index j = i; j < b; ++j) ext.col(c++) = base.col(i).cwiseProduct(base.col(j));
      base = std::move(ext);
    }
  }
  // Drop columns that are dependent given a constant.
  MatrixXd withc(n, base.cols() + 1);
  withc << VectorXd::Ones(n), base;
  Eigen::ColPivHouseholderQR<MatrixXd> qr(withc);
  qr.setThreshold(1e-10);
  if (qr.rank() == withc.cols()) return base;
  std::vector<Eigen::Index> cols;
  const auto& perm = qr.colsPermutation().indices();
  for (Eigen::Index i = 0; i < qr.rank(); ++i)
    if (perm(i) != 0) cols.push_back(perm(i) - 1);
  std::sort(cols.begin(), cols.end());
  if (warnings)
    warnings->push_back("heteroscedasticity test: dropped " + std::to_string(base.cols() - static_cast<Eigen::Index>(cols.size())) +
                        " linearly dependent auxiliary columns");
  MatrixXd out(n, static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) out.col(static_cast<Eigen::Index>(c)) = base.col(cols[c]);
  return out;
}

/// Centered explained sum of squares and R^2 of v on [1, aux].
std::pair<double, double> auxiliary_fit(const VectorXd& v, const MatrixXd& aux) {
  const auto n = v.size();
  MatrixXd W(n, aux.cols() + 1);
  W << VectorXd::Ones(n), aux;
  const VectorXd fitted = W * W.colPivHouseholderQr().solve(v);
  const double mean = v.mean();
  const double tss = (v.array() - mean).square().sum();
  const double ess = (fitted.array() - mean).square().sum();
  // A dependent variable that is constant up to rounding has nothing to explain.
  if (!(tss > 1e-14 * v.squaredNorm())) return {0.0, 0.0};
  return {ess, ess / tss};
}

}  // namespace

TestResult heteroscedasticity_test(const EstimationResult& result, const EstimationProblem& problem,
                                   HetVariant variant, AuxiliarySet aux, std::vector<std::string>* warnings) {
  const auto p = prepared(problem);
  if (result.residuals.size() != p.n()) throw Error("heteroscedasticity_test", "residuals do not match the problem");
  const MatrixXd psi = auxiliary_matrix(result, p, aux, warnings);
  const auto dof = static_cast<double>(psi.cols());
  const std::string name = to_string(variant) + "(" + to_string(aux) + ")";
  if (psi.cols() == 0) throw Error("heteroscedasticity_test", "no usable auxiliary variables");

  const double n = static_cast<double>(p.n());
  const VectorXd& u = result.residuals;
  const VectorXd u2 = u.array().square();
  const double sigma2 = u2.mean();

  switch (variant) {
    case HetVariant::white_koenker: {
      const auto [ess, r2] = auxiliary_fit(u2, psi);
      return make_test(name, n * r2, Distribution::chi2, dof);
    }
    case HetVariant::breusch_pagan: {
      if (sigma2 <= 0.0) return make_test(name, 0.0, Distribution::chi2, dof);
      const auto [ess, r2] = auxiliary_fit(u2 / sigma2, psi);
      return make_test(name, ess / 2.0, Distribution::chi2, dof);
    }
    case HetVariant::pagan_hall: {
      // n D' B^-1 D with D = mean of (psi_i - psibar)(u_i^2 - sigma^2); B accounts for third and fourth
      // residual moments and for the estimated coefficients through xhat = P_Z x.
      const MatrixXd Z = p.instruments();
      const MatrixXd Xhat = Z * Z.colPivHouseholderQr().solve(p.X);
      const MatrixXd pc = psi.rowwise() - psi.colwise().mean();
      const VectorXd D = pc.transpose() * (u2.array() - sigma2).matrix() / n;
      const double mu3 = u.array().cube().mean();
      const double mu4 = u2.array().square().mean();
      const MatrixXd Spp = pc.transpose() * pc / n;
      const MatrixXd Q = Xhat.transpose() * Xhat / n;
      const MatrixXd C = pc.transpose() * (p.X.array().colwise() * u.array()).matrix() / n;
      const MatrixXd Spx = pc.transpose() * Xhat / n;
      const auto Qldlt = Q.ldlt();
      const MatrixXd B2 = -2.0 * mu3 * Spx * Qldlt.solve(C.transpose());
      MatrixXd B = (mu4 - sigma2 * sigma2) * Spp + B2 + B2.transpose() + 4.0 * sigma2 * C * Qldlt.solve(C.transpose());
      B = 0.5 * (B + B.transpose());
      double stat = 0.0;
      if (B.trace() > 0.0) stat = n * D.dot(linalg::floored_inverse(B) * D);
      return make_test(name, std::max(stat, 0.0), Distribution::chi2, dof);
    }
  }
  throw Error("heteroscedasticity_test", "unknown variant");
}

void run_diagnostics(EstimationResult& result, const EstimationProblem& problem, const DiagnosticsOptions& options) {
  const auto p = prepared(problem);
  if (result.estimator != Estimator::OLS && !p.endogenous.empty()) {
    result.diagnostics.kp_lm = underidentification_lm(p);
    const auto weak = weak_instrument_stats(p);
    result.diagnostics.weak_cd = weak.cragg_donald;
    result.diagnostics.weak_kp = weak.kp_wald;
    if (result.estimator == Estimator::GMM2S && result.moment_cov.size() > 0)
      result.diagnostics.hansen_j = hansen_j(result, p);
  }
  if (!options.autocorrelation_lags.empty())
    result.diagnostics.extra.push_back(
        cumby_huizinga(result.residuals, p.unit, p.time, options.autocorrelation_lags, &result.warnings));
  for (const auto& [variant, aux] : options.heteroscedasticity)
    result.diagnostics.extra.push_back(heteroscedasticity_test(result, p, variant, aux, &result.warnings));
}

}  // namespace airdelay
