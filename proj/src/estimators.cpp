#include "airdelay/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "airdelay/common.hpp"

namespace airdelay {

std::string to_string(Estimator e) {
  switch (e) {
    case Estimator::OLS: return "OLS";
    case Estimator::GMM2S: return "2SGMM";
    case Estimator::LIML: return "LIML";
  }
  return "OLS";
}

Eigen::Index EstimationResult::index_of(const std::string& name) const {
  auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw Error("estimation_result", "no coefficient named " + name);
  return it - names.begin();
}

// ---- problem accessors -----------------------------------------------------

std::vector<int> EstimationProblem::exogenous_columns() const {
  std::vector<int> cols;
  for (int j = 0; j < static_cast<int>(X.cols()); ++j)
    if (std::find(endogenous.begin(), endogenous.end(), j) == endogenous.end()) cols.push_back(j);
  return cols;
}

MatrixXd EstimationProblem::exogenous() const {
  const auto cols = exogenous_columns();
  MatrixXd out(X.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < cols.size(); ++i) out.col(static_cast<Eigen::Index>(i)) = X.col(cols[i]);
  return out;
}

MatrixXd EstimationProblem::endogenous_block() const {
  MatrixXd out(X.rows(), static_cast<Eigen::Index>(endogenous.size()));
  for (std::size_t i = 0; i < endogenous.size(); ++i) out.col(static_cast<Eigen::Index>(i)) = X.col(endogenous[i]);
  return out;
}

MatrixXd EstimationProblem::instruments() const {
  MatrixXd exog = exogenous();
  MatrixXd Z(X.rows(), exog.cols() + excluded.cols());
  Z << exog, excluded;
  return Z;
}

std::vector<std::string> EstimationProblem::instrument_names() const {
  std::vector<std::string> out;
  for (int j : exogenous_columns()) out.push_back(j < static_cast<int>(x_names.size()) ? x_names[j] : "x" + std::to_string(j));
  for (Eigen::Index j = 0; j < excluded.cols(); ++j)
    out.push_back(j < static_cast<Eigen::Index>(excluded_names.size()) ? excluded_names[j] : "z" + std::to_string(j));
  return out;
}

void EstimationProblem::validate() const {
  const auto n_rows = y.size();
  if (n_rows == 0) throw Error("estimation_problem", "no observations");
  if (X.rows() != n_rows) throw Error("estimation_problem", "X rows do not match y");
  if (excluded.cols() > 0 && excluded.rows() != n_rows)
    throw Error("estimation_problem", "instrument rows do not match y");
  if (static_cast<Eigen::Index>(unit.size()) != n_rows || static_cast<Eigen::Index>(time.size()) != n_rows)
    throw Error("estimation_problem", "unit/time index maps must cover every row");
  if (!x_names.empty() && static_cast<Eigen::Index>(x_names.size()) != X.cols())
    throw Error("estimation_problem", "x_names size does not match X");
  for (int j : endogenous)
    if (j < 0 || j >= X.cols()) throw Error("estimation_problem", "endogenous index out of range");
  if (!y.allFinite() || !X.allFinite() || (excluded.size() > 0 && !excluded.allFinite()))
    throw Error("estimation_problem", "missing or non-finite values; drop incomplete rows first");
  if (excluded.cols() < static_cast<Eigen::Index>(endogenous.size()))
    throw Error("estimation_problem", "order condition fails: fewer excluded instruments than endogenous regressors");
}

// ---- linear algebra helpers -------------------------------------------------

namespace linalg {

void require_full_column_rank(const MatrixXd& A, const std::vector<std::string>& names, const std::string& where) {
  if (A.cols() == 0) return;
  Eigen::ColPivHouseholderQR<MatrixXd> qr(A);
  qr.setThreshold(1e-10);
  const auto rank = qr.rank();
  if (rank == A.cols()) return;
  // Name every column that carries weight in some null-space direction of the column-scaled matrix.
  const VectorXd norms = A.colwise().norm();
  MatrixXd scaled = A;
  for (Eigen::Index j = 0; j < A.cols(); ++j)
    if (norms(j) > 0.0) scaled.col(j) /= norms(j);
  Eigen::JacobiSVD<MatrixXd> svd(scaled, Eigen::ComputeFullV);
  const VectorXd sv = svd.singularValues();
  const double tol = 1e-10 * std::max(1.0, sv(0));
  std::vector<bool> involved(static_cast<std::size_t>(A.cols()), false);
  for (Eigen::Index k = 0; k < A.cols(); ++k) {
    if (k < sv.size() && sv(k) > tol) continue;
    for (Eigen::Index j = 0; j < A.cols(); ++j)
      if (std::abs(svd.matrixV()(j, k)) > 1e-6) involved[static_cast<std::size_t>(j)] = true;
  }
  std::string dependent;
  for (Eigen::Index j = 0; j < A.cols(); ++j) {
    if (!involved[static_cast<std::size_t>(j)]) continue;
    if (!dependent.empty()) dependent += ", ";
    dependent += j < static_cast<Eigen::Index>(names.size()) ? names[j] : "column " + std::to_string(j);
  }
  throw Error(where, "matrix is rank deficient (rank " + std::to_string(rank) + " of " + std::to_string(A.cols()) +
                         "); linearly dependent columns: " + dependent);
}

MatrixXd residualize(const MatrixXd& A, const MatrixXd& B) {
  if (B.cols() == 0) return A;
  Eigen::ColPivHouseholderQR<MatrixXd> qr(B);
  return A - B * qr.solve(A);
}

MatrixXd floored_inverse(const MatrixXd& S) {
  const double tr = S.trace();
  if (!(tr > 0.0) || !std::isfinite(tr)) throw Error("floored_inverse", "matrix has zero or non-finite trace");
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(S);
  VectorXd ev = es.eigenvalues();
  const double floor = 1e-12 * tr / static_cast<double>(S.rows());
  for (Eigen::Index i = 0; i < ev.size(); ++i) ev(i) = 1.0 / std::max(ev(i), floor);
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

MatrixXd sqrtm_sym(const MatrixXd& S) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(S);
  VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace linalg

// ---- fixed effects ---------------------------------------------------------

namespace {

template <typename T>
std::vector<T> sorted_levels(const std::vector<T>& v) {
  std::vector<T> lv(v);
  std::sort(lv.begin(), lv.end());
  lv.erase(std::unique(lv.begin(), lv.end()), lv.end());
  return lv;
}

void append_dummies(EstimationProblem& p, const std::vector<long long>& index, const std::vector<long long>& levels,
                    std::size_t skip_first, const std::string& prefix) {
  const auto extra = static_cast<Eigen::Index>(levels.size() - skip_first);
  if (extra <= 0) return;
  const auto k0 = p.X.cols();
  MatrixXd X(p.X.rows(), k0 + extra);
  X.leftCols(k0) = p.X;
  X.rightCols(extra).setZero();
  std::map<long long, Eigen::Index> col;
  for (std::size_t i = skip_first; i < levels.size(); ++i) col[levels[i]] = k0 + static_cast<Eigen::Index>(i - skip_first);
  for (Eigen::Index r = 0; r < X.rows(); ++r) {
    auto it = col.find(index[static_cast<std::size_t>(r)]);
    if (it != col.end()) X(r, it->second) = 1.0;
  }
  p.X = std::move(X);
  if (p.x_names.empty())
    for (Eigen::Index j = 0; j < k0; ++j) p.x_names.push_back("x" + std::to_string(j));
  p.fe_column.resize(static_cast<std::size_t>(k0), false);
  for (std::size_t i = skip_first; i < levels.size(); ++i) {
    p.x_names.push_back(prefix + std::to_string(levels[i]));
    p.fe_column.push_back(true);
  }
}

}  // namespace

EstimationProblem apply_fixed_effects(const EstimationProblem& problem) {
  problem.validate();
  if (problem.fe_applied) return problem;
  EstimationProblem p = problem;
  p.fe_applied = true;
  p.absorbed = 0;
  if (p.x_names.empty())
    for (Eigen::Index j = 0; j < p.X.cols(); ++j) p.x_names.push_back("x" + std::to_string(j));
  p.fe_column.assign(static_cast<std::size_t>(p.X.cols()), false);
  if (!p.fe.any()) return p;

  const auto units = sorted_levels(p.unit);
  const auto times = sorted_levels(p.time);
  const std::size_t drop_time = p.fe.unit_effects ? 1 : 0;

  if (p.fe.implementation == FeImplementation::full_dummies) {
    if (p.fe.unit_effects) append_dummies(p, p.unit, units, 0, "unit:");
    if (p.fe.time_effects) append_dummies(p, p.time, times, drop_time, "time:");
    return p;
  }

  if (p.fe.time_effects) append_dummies(p, p.time, times, drop_time, "time:");
  if (!p.fe.unit_effects) return p;

  // Within transform: subtract unit means from y, X (dummies included) and excluded instruments.
  std::map<long long, std::vector<Eigen::Index>> rows_of;
  for (Eigen::Index r = 0; r < p.y.size(); ++r) rows_of[p.unit[static_cast<std::size_t>(r)]].push_back(r);
  auto demean = [&](auto& M) {
    for (const auto& [u, rows] : rows_of) {
      Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(M.cols());
      for (auto r : rows) mean += M.row(r);
      mean /= static_cast<double>(rows.size());
      for (auto r : rows) M.row(r) -= mean;
    }
  };
  MatrixXd ycol = p.y;
  demean(ycol);
  p.y = ycol.col(0);
  demean(p.X);
  if (p.excluded.cols() > 0) demean(p.excluded);
  for (const auto& [u, rows] : rows_of) {
    if (rows.size() == 1) {
      p.singleton_rows.push_back(static_cast<std::size_t>(rows.front()));
      // demeaning leaves exact zeros up to rounding; make it exact
      p.y(rows.front()) = 0.0;
      p.X.row(rows.front()).setZero();
      if (p.excluded.cols() > 0) p.excluded.row(rows.front()).setZero();
    }
  }
  std::sort(p.singleton_rows.begin(), p.singleton_rows.end());
  p.absorbed = static_cast<int>(units.size());
  return p;
}

// ---- HAC --------------------------------------------------------------------

double bartlett_weight(int lag, int bandwidth) {
  if (lag < 0 || bandwidth < 0) throw Error("bartlett_weight", "lag and bandwidth must be non-negative");
  if (lag > bandwidth) return 0.0;
  return static_cast<double>(bandwidth + 1 - lag) / static_cast<double>(bandwidth + 1);
}

int bandwidth_rule(long long longest_unit_length) {
  if (longest_unit_length <= 0) return 0;
  // guard cube roots of perfect cubes against rounding just below the integer
  return static_cast<int>(std::floor(std::cbrt(static_cast<double>(longest_unit_length)) + 1e-9));
}

int resolve_bandwidth(const EstimationProblem& problem) {
  if (problem.hac_bandwidth) {
    if (*problem.hac_bandwidth < 0) throw Error("hac", "bandwidth must be non-negative");
    return *problem.hac_bandwidth;
  }
  std::map<long long, long long> len;
  for (auto u : problem.unit) ++len[u];
  long long longest = 0;
  for (const auto& [u, n] : len) longest = std::max(longest, n);
  return bandwidth_rule(longest);
}

MomentCovariance hac_covariance(const MatrixXd& moments, const std::vector<long long>& unit,
                                const std::vector<long long>& time, int bandwidth) {
  const auto n = moments.rows();
  const auto m = moments.cols();
  if (static_cast<Eigen::Index>(unit.size()) != n || static_cast<Eigen::Index>(time.size()) != n)
    throw Error("hac", "index maps must cover every row");
  if (bandwidth < 0) throw Error("hac", "bandwidth must be non-negative");
  MomentCovariance out;
  out.S = MatrixXd::Zero(m, m);
  if (n == 0) return out;

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    const auto ua = unit[static_cast<std::size_t>(a)], ub = unit[static_cast<std::size_t>(b)];
    return ua != ub ? ua < ub : time[static_cast<std::size_t>(a)] < time[static_cast<std::size_t>(b)];
  });
  MatrixXd H(n, m);
  for (Eigen::Index i = 0; i < n; ++i) H.row(i) = moments.row(order[static_cast<std::size_t>(i)]);
  auto t_of = [&](Eigen::Index i) { return time[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])]; };
  auto u_of = [&](Eigen::Index i) { return unit[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])]; };

  MatrixXd S = H.transpose() * H;

  if (bandwidth > 0) {
    long long shortest = n;
    // pairs (current, lagged) of sorted rows, bucketed by lag
    std::vector<std::vector<std::pair<Eigen::Index, Eigen::Index>>> pairs(static_cast<std::size_t>(bandwidth) + 1);
    Eigen::Index start = 0;
    while (start < n) {
      Eigen::Index end = start;
      while (end < n && u_of(end) == u_of(start)) ++end;
      shortest = std::min<long long>(shortest, end - start);
      for (Eigen::Index i = start; i < end; ++i) {
        for (Eigen::Index p = i - 1; p >= start; --p) {
          const long long lag = t_of(i) - t_of(p);
          if (lag > bandwidth) break;
          if (lag >= 1) pairs[static_cast<std::size_t>(lag)].emplace_back(i, p);
        }
      }
      start = end;
    }
    if (bandwidth >= shortest)
      out.warnings.push_back("bandwidth " + std::to_string(bandwidth) + " >= shortest unit length " +
                             std::to_string(shortest) + "; lags truncated within short units");
    for (int j = 1; j <= bandwidth; ++j) {
      const auto& pj = pairs[static_cast<std::size_t>(j)];
      if (pj.empty()) continue;
      MatrixXd A(static_cast<Eigen::Index>(pj.size()), m), B(static_cast<Eigen::Index>(pj.size()), m);
      for (std::size_t r = 0; r < pj.size(); ++r) {
        A.row(static_cast<Eigen::Index>(r)) = H.row(pj[r].first);
        B.row(static_cast<Eigen::Index>(r)) = H.row(pj[r].second);
      }
      const MatrixXd G = A.transpose() * B;
      S += bartlett_weight(j, bandwidth) * (G + G.transpose());
    }
  }
  S /= static_cast<double>(n);

  out.asymmetry = (S - S.transpose()).cwiseAbs().maxCoeff();
  S = 0.5 * (S + S.transpose());
  if (m > 0) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(S);
    out.min_eigenvalue = es.eigenvalues().minCoeff();
    const double floor = 1e-12 * S.trace() / static_cast<double>(m);
    if (out.min_eigenvalue < floor && S.trace() > 0.0) {
      VectorXd ev = es.eigenvalues().cwiseMax(floor);
      S = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
      S = 0.5 * (S + S.transpose());
      out.floored = true;
    }
  }
  out.S = std::move(S);
  return out;
}

MomentCovariance hac_moment_covariance(const MatrixXd& Z, const VectorXd& residuals,
                                       const std::vector<long long>& unit, const std::vector<long long>& time,
                                       int bandwidth) {
  if (Z.rows() != residuals.size()) throw Error("hac", "instrument rows do not match residuals");
  const MatrixXd H = Z.array().colwise() * residuals.array();
  return hac_covariance(H, unit, time, bandwidth);
}

// ---- estimators -------------------------------------------------------------

namespace {

EstimationProblem prepared(const EstimationProblem& problem) {
  return problem.fe_applied ? problem : apply_fixed_effects(problem);
}

double residual_df(const EstimationProblem& p) {
  return static_cast<double>(p.n()) - static_cast<double>(p.k()) - static_cast<double>(p.absorbed);
}

EstimationResult base_result(Estimator e, const EstimationProblem& p) {
  EstimationResult r;
  r.estimator = e;
  r.y_name = p.y_name;
  r.names = p.x_names;
  r.fe_column = p.fe_column;
  r.n = p.n();
  r.k = p.k();
  r.l = p.l();
  r.overid_df = p.overid_df();
  r.absorbed = p.absorbed;
  r.bandwidth = resolve_bandwidth(p);
  r.fe = p.fe;
  r.covariance = p.covariance;
  if (residual_df(p) <= 0.0) throw Error(to_string(e), "no residual degrees of freedom");
  return r;
}

/// Sandwich bread^-1 (n S) bread^-T for moments h_i = a_i u_i, or sigma^2 bread^-1 when homoscedastic.
MatrixXd sandwich(const EstimationProblem& p, EstimationResult& r, const MatrixXd& A, const MatrixXd& bread) {
  const double n = static_cast<double>(p.n());
  const MatrixXd bread_inv = bread.ldlt().solve(MatrixXd::Identity(bread.rows(), bread.cols()));
  MatrixXd V;
  if (p.covariance == CovarianceKind::hac) {
    auto mc = hac_moment_covariance(A, r.residuals, p.unit, p.time, r.bandwidth);
    r.warnings.insert(r.warnings.end(), mc.warnings.begin(), mc.warnings.end());
    V = bread_inv * (n * mc.S) * bread_inv.transpose();
  } else {
    const double sigma2 = r.residuals.squaredNorm() / n;
    V = sigma2 * bread_inv;
  }
  if (p.small_sample) V *= n / residual_df(p);
  return 0.5 * (V + V.transpose());
}

void finish(EstimationResult& r, const EstimationProblem& p) {
  r.se = r.cov.diagonal().cwiseMax(0.0).cwiseSqrt();
  r.fit = fit_statistics(r, p);
}

struct IvSetup {
  MatrixXd Z;
  Eigen::ColPivHouseholderQR<MatrixXd> zqr;
  MatrixXd Xhat;  // P_Z X
};

IvSetup iv_setup(const EstimationProblem& p, const std::string& where) {
  if (p.l() < p.k()) throw Error(where, "order condition fails (L < K)");
  IvSetup s;
  s.Z = p.instruments();
  linalg::require_full_column_rank(p.X, p.x_names, where);
  linalg::require_full_column_rank(s.Z, p.instrument_names(), where);
  s.zqr.compute(s.Z);
  s.Xhat = s.Z * s.zqr.solve(p.X);
  return s;
}

}  // namespace

EstimationResult ols(const EstimationProblem& problem) {
  const auto p = prepared(problem);
  linalg::require_full_column_rank(p.X, p.x_names, "ols");
  EstimationResult r = base_result(Estimator::OLS, p);
  r.coef = p.X.colPivHouseholderQr().solve(p.y);
  r.residuals = p.y - p.X * r.coef;
  r.cov = sandwich(p, r, p.X, p.X.transpose() * p.X);
  finish(r, p);
  return r;
}

EstimationResult two_stage_least_squares(const EstimationProblem& problem) {
  const auto p = prepared(problem);
  const auto s = iv_setup(p, "2sls");
  EstimationResult r = base_result(Estimator::GMM2S, p);
  r.coef = s.Xhat.colPivHouseholderQr().solve(p.y);
  r.residuals = p.y - p.X * r.coef;
  r.cov = sandwich(p, r, s.Xhat, s.Xhat.transpose() * s.Xhat);
  finish(r, p);
  return r;
}

EstimationResult gmm_two_step(const EstimationProblem& problem) {
  const auto p = prepared(problem);
  const auto s = iv_setup(p, "2sgmm");
  EstimationResult r = base_result(Estimator::GMM2S, p);
  const double n = static_cast<double>(p.n());

  r.step1_coef = s.Xhat.colPivHouseholderQr().solve(p.y);
  const VectorXd u1 = p.y - p.X * r.step1_coef;

  MatrixXd S;
  if (p.covariance == CovarianceKind::hac) {
    auto mc = hac_moment_covariance(s.Z, u1, p.unit, p.time, r.bandwidth);
    r.warnings.insert(r.warnings.end(), mc.warnings.begin(), mc.warnings.end());
    if (mc.floored) r.warnings.push_back("moment covariance was eigenvalue-floored before inversion");
    S = std::move(mc.S);
  } else {
    S = (u1.squaredNorm() / n) * (s.Z.transpose() * s.Z) / n;
  }
  if (!(S.trace() > 0.0) || !S.allFinite())
    throw Error("2sgmm", "moment covariance is numerically singular; reduce the bandwidth or the instrument set");
  const MatrixXd W = linalg::floored_inverse(S);
  const MatrixXd XZ = p.X.transpose() * s.Z;
  const MatrixXd A = XZ * W * XZ.transpose();
  const auto ldlt = A.ldlt();
  r.coef = ldlt.solve(XZ * W * (s.Z.transpose() * p.y));
  r.residuals = p.y - p.X * r.coef;
  MatrixXd V = n * ldlt.solve(MatrixXd::Identity(A.rows(), A.cols()));
  if (p.small_sample) V *= n / residual_df(p);
  r.cov = 0.5 * (V + V.transpose());
  r.moment_cov = std::move(S);
  finish(r, p);
  return r;
}

EstimationResult liml(const EstimationProblem& problem) {
  const auto p = prepared(problem);
  const auto s = iv_setup(p, "liml");
  EstimationResult r = base_result(Estimator::LIML, p);

  MatrixXd Yt(p.n(), 1 + static_cast<Eigen::Index>(p.endogenous.size()));
  Yt << p.y, p.endogenous_block();
  const MatrixXd Yfull = linalg::residualize(Yt, s.Z);
  const MatrixXd Yexog = linalg::residualize(Yt, p.exogenous());
  const MatrixXd A = Yt.transpose() * Yexog;
  const MatrixXd B = Yt.transpose() * Yfull;
  Eigen::GeneralizedSelfAdjointEigenSolver<MatrixXd> ges(0.5 * (A + A.transpose()), 0.5 * (B + B.transpose()));
  if (ges.info() != Eigen::Success) throw Error("liml", "eigenvalue problem failed; residual moment matrix not positive definite");
  r.kappa = ges.eigenvalues().minCoeff();
  if (r.kappa < 1.0 - 1e-9) throw Error("liml", "kappa " + format_double(r.kappa) + " below its lower bound of 1");

  const MatrixXd MX = linalg::residualize(p.X, s.Z);
  const MatrixXd Xk = p.X - r.kappa * MX;  // (I - kappa M_Z) X
  const MatrixXd bread = Xk.transpose() * p.X;
  r.coef = bread.ldlt().solve(Xk.transpose() * p.y);
  r.residuals = p.y - p.X * r.coef;
  r.cov = sandwich(p, r, Xk, 0.5 * (bread + bread.transpose()));
  finish(r, p);
  return r;
}

EstimationResult estimate(Estimator which, const EstimationProblem& problem) {
  switch (which) {
    case Estimator::OLS: return ols(problem);
    case Estimator::GMM2S: return gmm_two_step(problem);
    case Estimator::LIML: return liml(problem);
  }
  throw Error("estimate", "unknown estimator");
}

FitBlock fit_statistics(const EstimationResult& result, const EstimationProblem& problem) {
  const auto& p = problem;
  const double n = static_cast<double>(p.n());
  const double df = residual_df(p);
  if (df <= 0.0) throw Error("fit_statistics", "non-positive residual degrees of freedom");

  std::vector<Eigen::Index> slopes;
  bool has_constant = false;
  for (Eigen::Index j = 0; j < p.k(); ++j) {
    if (p.is_fe_column(j)) continue;
    const auto col = p.X.col(j);
    if (col.size() > 0 && col.maxCoeff() == col.minCoeff() && col(0) != 0.0) {
      has_constant = true;
      continue;
    }
    slopes.push_back(j);
  }
  const bool centered = has_constant || p.fe.any();

  FitBlock f;
  f.rss = result.residuals.squaredNorm();
  f.tss = centered ? (p.y.array() - p.y.mean()).square().sum() : p.y.squaredNorm();
  f.r2 = f.tss > 0.0 ? 1.0 - f.rss / f.tss : (f.rss == 0.0 ? 1.0 : 0.0);
  const double df_total = p.absorbed > 0 ? n - p.absorbed : (centered ? n - 1.0 : n);
  f.adj_r2 = f.tss > 0.0 ? 1.0 - (f.rss / df) / (f.tss / df_total) : f.r2;
  f.rmse = std::sqrt(f.rss / df);

  f.f_df1 = static_cast<int>(slopes.size());
  f.f_df2 = df;
  if (slopes.empty()) {
    f.f_stat = std::nan("");
    f.f_p = std::nan("");
    return f;
  }
  VectorXd b(f.f_df1);
  MatrixXd V(f.f_df1, f.f_df1);
  for (int a = 0; a < f.f_df1; ++a) {
    b(a) = result.coef(slopes[a]);
    for (int c = 0; c < f.f_df1; ++c) V(a, c) = result.cov(slopes[a], slopes[c]);
  }
  if (f.rss == 0.0 || V.isZero(0.0)) {
    f.f_stat = b.isZero(0.0) ? 0.0 : std::numeric_limits<double>::infinity();
  } else {
    f.f_stat = b.dot(V.ldlt().solve(b)) / f.f_df1;
  }
  f.f_p = tail_probability(Distribution::F, f.f_stat, f.f_df1, f.f_df2);
  return f;
}

}  // namespace airdelay
