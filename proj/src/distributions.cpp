#include "airdelay/distributions.hpp"

#include <cmath>

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "airdelay/common.hpp"

namespace airdelay {

double tail_probability(Distribution dist, double statistic, double df, double df2) {
  if (!(df >= 1.0)) throw Error("tail_probability", "degrees of freedom must be >= 1");
  if (std::isnan(statistic)) return statistic;
  if (statistic < -1e-8) throw Error("tail_probability", "negative statistic " + std::to_string(statistic));
  if (statistic <= 0.0) return 1.0;
  if (std::isinf(statistic)) return 0.0;
  switch (dist) {
    case Distribution::chi2:
      return boost::math::gamma_q(df / 2.0, statistic / 2.0);
    case Distribution::F: {
      if (!(df2 > 0.0)) throw Error("tail_probability", "F denominator degrees of freedom must be positive");
      // P(F > f) = I_{d2/(d2 + d1 f)}(d2/2, d1/2)
      const double x = df2 / (df2 + df * statistic);
      return boost::math::ibeta(df2 / 2.0, df / 2.0, x);
    }
  }
  return 1.0;
}

double normal_two_sided_p(double t_ratio) {
  if (std::isnan(t_ratio)) return t_ratio;
  return boost::math::erfc(std::abs(t_ratio) / std::sqrt(2.0));
}

TestResult make_test(std::string name, double statistic, Distribution dist, double df, double df2) {
  TestResult t;
  t.name = std::move(name);
  t.statistic = statistic;
  t.distribution = dist;
  t.df = df;
  t.df2 = df2;
  t.p_value = tail_probability(dist, statistic, df, df2);
  return t;
}

}  // namespace airdelay
