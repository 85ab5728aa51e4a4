#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "drl/error.hpp"

namespace drl::stats {

struct UnivariateSummary {
  std::size_t n = 0;
  double mean = 0.0;
  double median = 0.0;
  double stddev = 0.0;
  std::optional<double> skewness;  // absent when stddev == 0
  std::optional<double> kurtosis;
};

inline double mean(std::span<const double> x) {
  if (x.empty()) throw ContractError("mean of empty data");
  // constant data: the summed mean can be off by an ulp (ten 0.6s)
  if (std::all_of(x.begin(), x.end(), [&](double v) { return v == x[0]; })) return x[0];
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

inline double median(std::span<const double> x) {
  if (x.empty()) throw ContractError("median of empty data");
  std::vector<double> s(x.begin(), x.end());
  std::sort(s.begin(), s.end());
  const std::size_t n = s.size();
  return n % 2 ? s[n / 2] : 0.5 * (s[n / 2 - 1] + s[n / 2]);
}

/// Sample standard deviation (n-1 denominator).
inline double stddev(std::span<const double> x) {
  if (x.size() < 2) throw ContractError("stddev needs at least two values");
  const double m = mean(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(x.size() - 1));
}

inline UnivariateSummary univariate(std::span<const double> x) {
  if (x.size() < 2) throw ContractError("univariate summary needs n >= 2");
  UnivariateSummary out;
  out.n = x.size();
  out.mean = mean(x);
  out.median = median(x);
  out.stddev = stddev(x);
  if (out.stddev > 0.0) {
    const double n = static_cast<double>(x.size());
    double m3 = 0.0, m4 = 0.0;
    for (double v : x) {
      const double z = (v - out.mean) / out.stddev;
      m3 += z * z * z;
      m4 += z * z * z * z;
    }
    out.skewness = m3 / n;
    out.kurtosis = m4 / n;
  }
  return out;
}

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

inline double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI); }

/// Acklam's rational approximation followed by one Halley step.
inline double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw ContractError("normal quantile needs 0 < p < 1");
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                 1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                 6.680131188771972e+01,  -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                 -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                 3.754408661907416e+00};
  constexpr double lo = 0.02425, hi = 1 - lo;
  double x;
  if (p < lo) {
    const double q = std::sqrt(-2 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  } else if (p <= hi) {
    const double q = p - 0.5, r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
  } else {
    const double q = std::sqrt(-2 * std::log(1 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  }
  const double e = normal_cdf(x) - p;
  const double u = e / normal_pdf(x);
  return x - u / (1 + x * u / 2);
}

struct HistogramBin {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t count = 0;
};

/// Equal-width bins over [min, max]; the last bin is closed on the right.
inline std::vector<HistogramBin> histogram(std::span<const double> x, std::size_t bins) {
  if (x.empty()) throw ContractError("histogram of empty data");
  if (bins == 0) throw ContractError("histogram needs at least one bin");
  auto [mn, mx] = std::minmax_element(x.begin(), x.end());
  double lo = *mn, hi = *mx;
  if (lo == hi) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double width = (hi - lo) / static_cast<double>(bins);
  std::vector<HistogramBin> out(bins);
  for (std::size_t i = 0; i < bins; ++i) {
    out[i].lo = lo + width * static_cast<double>(i);
    out[i].hi = i + 1 == bins ? hi : lo + width * static_cast<double>(i + 1);
  }
  for (double v : x) {
    auto i = static_cast<std::size_t>((v - lo) / width);
    out[std::min(i, bins - 1)].count++;
  }
  return out;
}

struct QQPoint {
  double theoretical = 0.0;
  double sample = 0.0;
};

/// Standard-normal quantiles at (i-0.5)/n against sorted standardized data.
inline std::vector<QQPoint> qq_points(std::span<const double> x) {
  if (x.size() < 2) throw ContractError("Q-Q plot needs n >= 2");
  const double m = mean(x), s = stddev(x);
  std::vector<double> sorted(x.begin(), x.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<QQPoint> out(sorted.size());
  const double n = static_cast<double>(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    out[i].theoretical = normal_quantile((static_cast<double>(i) + 0.5) / n);
    out[i].sample = s > 0 ? (sorted[i] - m) / s : 0.0;
  }
  return out;
}

struct WilcoxonResult {
  double p_value = 1.0;
  bool h = false;
  double statistic = 0.0;  // min(W+, W-)
  double w_plus = 0.0;
  double w_minus = 0.0;
  std::size_t n_effective = 0;
  std::vector<double> ranks;  // midranks of |d| for the nonzero differences, in input order
  std::string method;         // "exact", "approximate" or "none"
  double z = 0.0;             // normal statistic when approximate
};

/// Midranks (1-based) of the values.
inline std::vector<double> midranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[order[k]] = rank;
    i = j + 1;
  }
  return r;
}

inline constexpr std::size_t kWilcoxonExactLimit = 25;

enum class WilcoxonMethod { Auto, Exact, Approximate };

/// Paired two-sided signed-rank test. Zero differences are dropped, ties get
/// midranks; exact null distribution up to 25 pairs, else normal approximation
/// with tie correction and continuity correction. h = (p <= 0.05).
inline WilcoxonResult wilcoxon_signed_rank(std::span<const double> x, std::span<const double> y,
                                           WilcoxonMethod method = WilcoxonMethod::Auto) {
  if (x.size() != y.size()) throw ContractError("wilcoxon: samples must be paired (equal length)");
  if (x.empty()) throw ContractError("wilcoxon: empty samples");
  std::vector<double> d;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i] - y[i] != 0.0) d.push_back(x[i] - y[i]);
  WilcoxonResult out;
  out.n_effective = d.size();
  if (d.empty()) {
    out.method = "none";
    return out;
  }
  std::vector<double> mag(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) mag[i] = std::abs(d[i]);
  out.ranks = midranks(mag);
  for (std::size_t i = 0; i < d.size(); ++i) (d[i] > 0 ? out.w_plus : out.w_minus) += out.ranks[i];
  out.statistic = std::min(out.w_plus, out.w_minus);
  const std::size_t n = d.size();

  const bool exact = method == WilcoxonMethod::Exact || (method == WilcoxonMethod::Auto && n <= kWilcoxonExactLimit);
  if (exact) {
    // Doubled ranks are integers; count sign assignments by positive-rank sum.
    std::vector<long> r2(n);
    long total = 0;
    for (std::size_t i = 0; i < n; ++i) total += r2[i] = std::lround(2 * out.ranks[i]);
    std::vector<double> ways(static_cast<std::size_t>(total) + 1, 0.0);
    ways[0] = 1.0;
    long reach = 0;
    for (long r : r2) {
      for (long s = reach; s >= 0; --s)
        if (ways[s] != 0.0) ways[s + r] += ways[s];
      reach += r;
    }
    const long w = std::lround(2 * out.statistic);
    double tail = 0.0;
    for (long s = 0; s <= w; ++s) tail += ways[s];
    out.p_value = std::min(1.0, 2.0 * tail / std::ldexp(1.0, static_cast<int>(n)));
    out.method = "exact";
  } else {
    const double nn = static_cast<double>(n);
    std::vector<double> sorted = mag;
    std::sort(sorted.begin(), sorted.end());
    double tie = 0.0;
    for (std::size_t i = 0; i < n;) {
      std::size_t j = i;
      while (j + 1 < n && sorted[j + 1] == sorted[i]) ++j;
      const double t = static_cast<double>(j - i + 1);
      tie += t * (t + 1) * (t - 1) / 2;
      i = j + 1;
    }
    const double centre = nn * (nn + 1) / 4;
    const double sd = std::sqrt((nn * (nn + 1) * (2 * nn + 1) - tie) / 24);
    const double diff = out.w_plus - centre;
    const double cc = diff > 0 ? 0.5 : (diff < 0 ? -0.5 : 0.0);
    out.z = sd > 0 ? (diff - cc) / sd : 0.0;
    out.p_value = std::min(1.0, 2.0 * normal_cdf(-std::abs(out.z)));
    out.method = "approximate";
  }
  out.h = out.p_value <= 0.05;
  return out;
}

}  // namespace drl::stats
