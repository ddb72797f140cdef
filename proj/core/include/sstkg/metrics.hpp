#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <vector>

namespace sstkg {

struct EvalPair {
  double real_value = 0.0;
  double predicted_value = 0.0;
};

/// Fraction of pairs with predicted strictly inside (real(1-n%), real(1+n%)).
/// Pairs with real == 0 are left out of the denominator; all-zero input throws.
double acc_at_n(std::span<const EvalPair> pairs, double n_percent);
std::size_t count_zero_real(std::span<const EvalPair> pairs);

/// x -> lo + (hi - lo)(x - min)/(max - min).
std::vector<double> normalize_range(std::span<const double> values, double lo = 0.0, double hi = 20.0);

/// Normalises real and predicted values together, pooling min/max over both.
std::vector<EvalPair> normalize_pairs(std::span<const EvalPair> pairs, double lo = 0.0, double hi = 20.0);

/// sqrt(sum (o - p)^2 / sum o^2)
double rms(std::span<const EvalPair> pairs);
/// sqrt(sum (o - p)^2 / N)
double rsd(std::span<const EvalPair> pairs);

struct MetricsReport {
  std::map<int, double> acc_at;
  double rms = 0.0;
  double rsd = 0.0;
  std::size_t pair_count = 0;
  std::size_t excluded_zero_real = 0;
  bool normalized = true;
};

/// ACC@n on raw values; RMS/RSD on (0, 20)-normalised values unless raw.
MetricsReport evaluate(std::span<const EvalPair> pairs, std::span<const int> acc_levels = {},
                       bool raw_metrics = false);

/// Regularized incomplete beta I_x(a, b) by continued fraction.
double incomplete_beta(double a, double b, double x);

/// P(T > t) for Student's t with df degrees of freedom.
double student_t_upper_tail(double t, double df);

enum class TestDirection { a_greater, a_less, two_sided };

struct TTestResult {
  double t = 0.0;
  double p_value = 0.5;
  double df = 0.0;
  double mean_difference = 0.0;
  /// Differences had zero variance; p follows the sign convention instead of the t distribution.
  bool zero_variance = false;
  bool reject(double alpha = 0.05) const { return p_value < alpha; }
};

/// Paired Student t on a - b.
TTestResult paired_ttest(std::span<const double> a, std::span<const double> b, TestDirection direction);

}  // namespace sstkg
