#include "sstkg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sstkg/error.hpp"

namespace sstkg {

double acc_at_n(std::span<const EvalPair> pairs, double n_percent) {
  if (!(n_percent > 0.0)) throw ValidationError("ACC@n needs n > 0");
  const double f = n_percent / 100.0;
  std::size_t counted = 0;
  std::size_t accurate = 0;
  for (const EvalPair& pair : pairs) {
    if (pair.real_value == 0.0) continue;
    ++counted;
    const double lo = pair.real_value * (1.0 - f);
    const double hi = pair.real_value * (1.0 + f);
    if (pair.predicted_value > lo && pair.predicted_value < hi) ++accurate;
  }
  if (counted == 0) throw ValidationError("ACC@n undefined: every real value is zero");
  return static_cast<double>(accurate) / static_cast<double>(counted);
}

std::size_t count_zero_real(std::span<const EvalPair> pairs) {
  return static_cast<std::size_t>(
      std::count_if(pairs.begin(), pairs.end(), [](const EvalPair& p) { return p.real_value == 0.0; }));
}

std::vector<double> normalize_range(std::span<const double> values, double lo, double hi) {
  if (values.empty()) throw ValidationError("degenerate normalization: no values");
  const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
  const double min = *mn;
  const double span = *mx - min;
  if (!(span > 0.0)) throw ValidationError("degenerate normalization: constant values");
  std::vector<double> out;
  out.reserve(values.size());
  for (double v : values) out.push_back(lo + (hi - lo) * (v - min) / span);
  return out;
}

std::vector<EvalPair> normalize_pairs(std::span<const EvalPair> pairs, double lo, double hi) {
  std::vector<double> pool;
  pool.reserve(2 * pairs.size());
  for (const EvalPair& p : pairs) pool.push_back(p.real_value);
  for (const EvalPair& p : pairs) pool.push_back(p.predicted_value);
  const std::vector<double> scaled = normalize_range(pool, lo, hi);
  std::vector<EvalPair> out(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) out[i] = {scaled[i], scaled[pairs.size() + i]};
  return out;
}

double rms(std::span<const EvalPair> pairs) {
  double err = 0.0;
  double energy = 0.0;
  for (const EvalPair& p : pairs) {
    const double d = p.real_value - p.predicted_value;
    err += d * d;
    energy += p.real_value * p.real_value;
  }
  if (!(energy > 0.0)) throw ValidationError("RMS undefined: all observations are zero");
  return std::sqrt(err / energy);
}

double rsd(std::span<const EvalPair> pairs) {
  if (pairs.empty()) throw ValidationError("RSD needs at least one pair");
  double err = 0.0;
  for (const EvalPair& p : pairs) {
    const double d = p.real_value - p.predicted_value;
    err += d * d;
  }
  return std::sqrt(err / static_cast<double>(pairs.size()));
}

MetricsReport evaluate(std::span<const EvalPair> pairs, std::span<const int> acc_levels, bool raw_metrics) {
  if (pairs.empty()) throw ValidationError("no evaluation pairs");
  static constexpr int kDefaultLevels[] = {10, 15};
  if (acc_levels.empty()) acc_levels = kDefaultLevels;
  MetricsReport report;
  for (int n : acc_levels) report.acc_at[n] = acc_at_n(pairs, n);
  report.pair_count = pairs.size();
  report.excluded_zero_real = count_zero_real(pairs);
  report.normalized = !raw_metrics;
  if (raw_metrics) {
    report.rms = rms(pairs);
    report.rsd = rsd(pairs);
  } else {
    const std::vector<EvalPair> scaled = normalize_pairs(pairs);
    report.rms = rms(scaled);
    report.rsd = rsd(scaled);
  }
  return report;
}

namespace {

// Continued fraction for the incomplete beta function (modified Lentz).
double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIterations = 10000;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIterations; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) return h;
  }
  throw Error("incomplete beta continued fraction did not converge");
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw ValidationError("incomplete beta needs a, b > 0");
  if (std::isnan(x)) throw ValidationError("incomplete beta argument is NaN");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double log_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_upper_tail(double t, double df) {
  if (!(df > 0.0)) throw ValidationError("Student t needs df > 0");
  if (std::isnan(t)) throw ValidationError("t statistic is NaN");
  if (t == 0.0) return 0.5;
  if (std::isinf(t)) return t > 0.0 ? 0.0 : 1.0;
  const double tail = 0.5 * incomplete_beta(0.5 * df, 0.5, df / (df + t * t));
  return t > 0.0 ? tail : 1.0 - tail;
}

TTestResult paired_ttest(std::span<const double> a, std::span<const double> b, TestDirection direction) {
  if (a.size() != b.size()) throw ValidationError("paired t-test needs equal-length samples");
  if (a.size() < 2) throw ValidationError("paired t-test needs at least two pairs");
  const std::size_t n = a.size();
  std::vector<double> diff(n);
  for (std::size_t i = 0; i < n; ++i) diff[i] = a[i] - b[i];
  double mean = 0.0;
  for (double d : diff) mean += d;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double d : diff) ss += (d - mean) * (d - mean);
  const double var = ss / static_cast<double>(n - 1);

  TTestResult out;
  out.df = static_cast<double>(n - 1);
  out.mean_difference = mean;
  if (var == 0.0) {
    out.zero_variance = true;
    if (mean == 0.0) {
      out.t = 0.0;
      out.p_value = direction == TestDirection::two_sided ? 1.0 : 0.5;
      return out;
    }
    out.t = mean > 0.0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
  } else {
    out.t = mean / std::sqrt(var / static_cast<double>(n));
  }
  switch (direction) {
    case TestDirection::a_greater:
      out.p_value = student_t_upper_tail(out.t, out.df);
      break;
    case TestDirection::a_less:
      out.p_value = student_t_upper_tail(-out.t, out.df);
      break;
    case TestDirection::two_sided:
      out.p_value = std::min(1.0, 2.0 * student_t_upper_tail(std::abs(out.t), out.df));
      break;
  }
  return out;
}

}  // namespace sstkg
