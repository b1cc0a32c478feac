#pragma once

#include <string>

namespace airdelay {

enum class Distribution { chi2, F };

/// Upper-tail probability P(X > statistic). `df2` is only read for F.
double tail_probability(Distribution dist, double statistic, double df, double df2 = 0.0);

/// Two-sided normal p-value for a t-ratio.
double normal_two_sided_p(double t_ratio);

struct TestResult {
  std::string name;
  double statistic = 0.0;
  Distribution distribution = Distribution::chi2;
  double df = 0.0;
  double df2 = 0.0;
  double p_value = 1.0;  // NaN when the statistic carries no reference distribution
};

/// Builds a TestResult whose p-value is the upper tail of `statistic`.
TestResult make_test(std::string name, double statistic, Distribution dist, double df, double df2 = 0.0);

}  // namespace airdelay
