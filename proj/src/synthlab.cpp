#include "airdelay/synthlab.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <istream>
#include <mutex>
#include <thread>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace airdelay {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t substream_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64(splitmix64(master) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

std::mt19937_64 make_rng(std::uint64_t master, std::uint64_t index) {
  return std::mt19937_64(substream_seed(master, index));
}

void DgpConfig::validate() const {
  const std::string where = "DgpConfig";
  if (n_units < 2) throw Error(where + ".n_units", "need at least 2 units");
  if (n_periods < 2) throw Error(where + ".n_periods", "need at least 2 periods");
  if (pi.empty()) throw Error(where + ".pi", "need at least one excluded instrument");
  if (!(rho > -1.0 && rho < 1.0)) throw Error(where + ".rho", "must lie in (-1, 1)");
  if (!(phi > -1.0 && phi < 1.0)) throw Error(where + ".phi", "must lie in (-1, 1)");
  if (!(sigma_u > 0.0)) throw Error(where + ".sigma_u", "must be positive");
  if (unit_effect_sd < 0.0 || time_effect_sd < 0.0) throw Error(where, "effect standard deviations must be >= 0");
  if (!(invalid_instrument > -1.0 && invalid_instrument < 1.0))
    throw Error(where + ".invalid_instrument", "must lie in (-1, 1)");
  if (!(w_loading > -1.0 && w_loading < 1.0)) throw Error(where + ".w_loading", "must lie in (-1, 1)");
  if (hac_bandwidth && *hac_bandwidth < 0) throw Error(where + ".hac_bandwidth", "must be >= 0");
}

DgpTruth dgp_truth(const DgpConfig& c) {
  DgpTruth t;
  t.beta = c.beta;
  // u_t = phi u_{t-1} + sqrt(1 - phi^2) e_t keeps var(u) = sigma_u^2 and scales the innovation's
  // correlation with v (first periods excepted). An invalid z_1 loads on u.
  const double corr_uv = c.rho * std::sqrt(1.0 - c.phi * c.phi);
  const double pi1 = c.pi.front();
  double var_x = 1.0;
  for (double p : c.pi) var_x += p * p;
  var_x += 2.0 * pi1 * c.invalid_instrument * corr_uv;
  t.cov_xu = c.sigma_u * (corr_uv + pi1 * c.invalid_instrument);
  t.var_x = var_x;
  t.ols_plim = c.beta + t.cov_xu / t.var_x;
  return t;
}

SyntheticPanel generate_linear_panel(const DgpConfig& c) {
  c.validate();
  const int N = c.n_units;
  const int T = c.n_periods;
  const Eigen::Index n = static_cast<Eigen::Index>(N) * T;
  const auto m = static_cast<Eigen::Index>(c.pi.size());
  const auto g = static_cast<Eigen::Index>(c.gamma.size());

  auto rng = make_rng(c.seed, 0);
  std::normal_distribution<double> normal(0.0, 1.0);

  std::vector<double> time_effect(static_cast<std::size_t>(T));
  for (auto& b : time_effect) b = c.time_effect_sd * normal(rng);

  SyntheticPanel out;
  out.truth = dgp_truth(c);
  out.u.resize(n);
  out.v.resize(n);
  VectorXd x(n), y(n);
  MatrixXd Z(n, m), W(n, g);
  std::vector<long long> unit(static_cast<std::size_t>(n)), time(static_cast<std::size_t>(n));

  const double innov = std::sqrt(1.0 - c.phi * c.phi);
  const double rho_c = std::sqrt(1.0 - c.rho * c.rho);
  const double inv_c = std::sqrt(1.0 - c.invalid_instrument * c.invalid_instrument);
  const double w_c = std::sqrt(1.0 - c.w_loading * c.w_loading);
  double var_x = 1.0;
  for (double p : c.pi) var_x += p * p;

  Eigen::Index r = 0;
  for (int i = 0; i < N; ++i) {
    const double a = c.unit_effect_sd * normal(rng);
    double u_prev = 0.0;
    for (int t = 0; t < T; ++t, ++r) {
      const double v = normal(rng);
      const double eps = c.rho * v + rho_c * normal(rng);
      const double u_std = t == 0 ? eps : c.phi * u_prev + innov * eps;
      u_prev = u_std;
      double xi = v;
      for (Eigen::Index j = 0; j < m; ++j) {
        double z = normal(rng);
        if (j == 0 && c.invalid_instrument != 0.0) z = c.invalid_instrument * u_std + inv_c * z;
        Z(r, j) = z;
        xi += c.pi[static_cast<std::size_t>(j)] * z;
      }
      double u = c.sigma_u * u_std;
      if (c.heteroscedastic) u *= std::sqrt((1.0 + xi * xi) / (1.0 + var_x));
      double yi = c.beta * xi + a + time_effect[static_cast<std::size_t>(t)] + u;
      for (Eigen::Index j = 0; j < g; ++j) {
        W(r, j) = c.w_loading * Z(r, 0) + w_c * normal(rng);
        yi += c.gamma[static_cast<std::size_t>(j)] * W(r, j);
      }
      x(r) = xi;
      y(r) = yi;
      out.u(r) = u;
      out.v(r) = v;
      unit[static_cast<std::size_t>(r)] = i;
      time[static_cast<std::size_t>(r)] = t;
    }
  }

  auto& p = out.problem;
  p.y_name = "y";
  p.y = y;
  const bool constant = !c.fe.any();
  p.X.resize(n, 1 + g + (constant ? 1 : 0));
  p.X.col(0) = x;
  p.x_names = {"x"};
  for (Eigen::Index j = 0; j < g; ++j) {
    p.X.col(1 + j) = W.col(j);
    p.x_names.push_back("w" + std::to_string(j + 1));
  }
  if (constant) {
    p.X.col(p.X.cols() - 1).setOnes();
    p.x_names.push_back("const");
  }
  p.endogenous = {0};
  p.excluded = Z;
  for (Eigen::Index j = 0; j < m; ++j) p.excluded_names.push_back("z" + std::to_string(j + 1));
  p.unit = std::move(unit);
  p.time = std::move(time);
  p.fe = c.fe;
  p.hac_bandwidth = c.hac_bandwidth;
  return out;
}

DgpConfig standard_scenario() {
  DgpConfig c;
  c.n_units = 100;
  c.n_periods = 20;
  c.beta = 1.0;
  c.pi = {1.0};
  c.rho = 0.8;
  c.sigma_u = 1.0;
  c.unit_effect_sd = 1.0;
  c.time_effect_sd = 0.5;
  c.fe = FixedEffectsSpec::two_way();
  return c;
}

DgpConfig sign_flip_scenario() {
  DgpConfig c;
  c.n_units = 250;
  c.n_periods = 20;
  c.beta = 0.8;
  c.pi = {1.0};
  c.rho = -0.8;
  c.sigma_u = 2.5;
  return c;
}

namespace {

std::vector<double> parse_list(const std::string& s, const std::string& where) {
  std::vector<double> out;
  for (const auto& part : split(s, ',')) {
    const auto item = trim(part);
    if (!item.empty()) out.push_back(parse_double(item, where));
  }
  return out;
}

}  // namespace

DgpConfig parse_dgp_config(std::istream& in, DgpConfig c) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw Error("dgp", e.message() + " at line " + std::to_string(e.line()));
  }
  for (const auto& [key, node] : tree) {
    if (!node.empty()) throw Error("dgp." + key, "sections are not supported in a DGP file");
    const std::string value = node.data();
    const std::string where = "dgp." + key;
    if (key == "n_units") c.n_units = static_cast<int>(parse_int(value, where));
    else if (key == "n_periods") c.n_periods = static_cast<int>(parse_int(value, where));
    else if (key == "beta") c.beta = parse_double(value, where);
    else if (key == "pi") c.pi = parse_list(value, where);
    else if (key == "gamma") c.gamma = parse_list(value, where);
    else if (key == "rho") c.rho = parse_double(value, where);
    else if (key == "sigma_u") c.sigma_u = parse_double(value, where);
    else if (key == "phi") c.phi = parse_double(value, where);
    else if (key == "heteroscedastic") c.heteroscedastic = parse_int(value, where) != 0;
    else if (key == "unit_effect_sd") c.unit_effect_sd = parse_double(value, where);
    else if (key == "time_effect_sd") c.time_effect_sd = parse_double(value, where);
    else if (key == "w_loading") c.w_loading = parse_double(value, where);
    else if (key == "invalid_instrument") c.invalid_instrument = parse_double(value, where);
    else if (key == "seed") c.seed = static_cast<std::uint64_t>(parse_int(value, where));
    else if (key == "hac_bandwidth") c.hac_bandwidth = static_cast<int>(parse_int(value, where));
    else if (key == "fixed_effects") {
      if (value == "none") c.fe = {};
      else if (value == "unit") c.fe = {true, false, FeImplementation::within_plus_time_dummies};
      else if (value == "time") c.fe = {false, true, FeImplementation::within_plus_time_dummies};
      else if (value == "two_way") c.fe = FixedEffectsSpec::two_way();
      else throw Error(where, "expected none, unit, time or two_way, got '" + value + "'");
    } else {
      throw Error(where, "unknown key");
    }
  }
  c.validate();
  return c;
}

namespace detail {

void parallel_for(int count, int threads, const std::function<void(int)>& body) {
  if (threads <= 1 || count <= 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (int i = next++; i < count; i = next++) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  const int workers = std::min(threads, count);
  pool.reserve(static_cast<std::size_t>(workers));
  for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace detail

double compensated_mean(const std::vector<double>& values) {
  if (values.empty()) throw Error("compensated_mean", "no values");
  double sum = 0.0, comp = 0.0;
  for (double v : values) {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v)) comp += (sum - t) + v;
    else comp += (v - t) + sum;
    sum = t;
  }
  return (sum + comp) / static_cast<double>(values.size());
}

std::vector<double> oracle_ols(const VectorXd& y, const MatrixXd& X) {
  const auto n = X.rows();
  const auto k = static_cast<std::size_t>(X.cols());
  if (y.size() != n) throw Error("oracle_ols", "row mismatch");
  // Augmented normal equations [X'X | X'y].
  std::vector<std::vector<long double>> a(k, std::vector<long double>(k + 1, 0.0L));
  for (Eigen::Index r = 0; r < n; ++r) {
    for (std::size_t i = 0; i < k; ++i) {
      const long double xi = X(r, static_cast<Eigen::Index>(i));
      for (std::size_t j = 0; j < k; ++j) a[i][j] += xi * X(r, static_cast<Eigen::Index>(j));
      a[i][k] += xi * y(r);
    }
  }
  for (std::size_t col = 0; col < k; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < k; ++r)
      if (std::fabs(a[r][col]) > std::fabs(a[piv][col])) piv = r;
    if (std::fabs(a[piv][col]) < 1e-300L) throw Error("oracle_ols", "singular normal equations");
    std::swap(a[col], a[piv]);
    for (std::size_t r = col + 1; r < k; ++r) {
      const long double f = a[r][col] / a[col][col];
      for (std::size_t j = col; j <= k; ++j) a[r][j] -= f * a[col][j];
    }
  }
  std::vector<long double> b(k);
  for (std::size_t i = k; i-- > 0;) {
    long double s = a[i][k];
    for (std::size_t j = i + 1; j < k; ++j) s -= a[i][j] * b[j];
    b[i] = s / a[i][i];
  }
  return std::vector<double>(b.begin(), b.end());
}

}  // namespace airdelay
