#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace tubesim::stats {

struct StatsError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Phi^{-1}(0.995): two-sided 99% normal quantile
inline constexpr double k_z99 = 2.5758293035489004;

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
  bool covers(double p) const { return lo <= p && p <= hi; }
};

// Wilson score interval for a binomial proportion.
inline Interval wilson(long long successes, long long n, double z = k_z99) {
  if (n <= 0) throw StatsError("wilson: need n > 0");
  if (successes < 0 || successes > n) throw StatsError("wilson: successes out of range");
  double nn = static_cast<double>(n);
  double phat = static_cast<double>(successes) / nn;
  double z2 = z * z;
  double denom = 1.0 + z2 / nn;
  double center = (phat + z2 / (2.0 * nn)) / denom;
  double half = z / denom * std::sqrt(phat * (1.0 - phat) / nn + z2 / (4.0 * nn * nn));
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

struct Summary {
  double mean = 0.0;
  double se = 0.0;  // sample standard deviation / sqrt(n)
  double sd = 0.0;
  long long n = 0;
};

inline Summary summarize(const std::vector<double>& xs) {
  Summary s;
  s.n = static_cast<long long>(xs.size());
  if (s.n == 0) return s;
  s.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(s.n);
  if (s.n > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(s.n - 1));
    s.se = s.sd / std::sqrt(static_cast<double>(s.n));
  }
  return s;
}

// Kolmogorov limit law K(x) = 1 - 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 x^2).
inline double kolmogorov_cdf(double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 4.0) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    double term = std::exp(-2.0 * k * k * x * x);
    sum += (k % 2 == 1) ? term : -term;
    if (term < 1e-16) break;
  }
  return std::max(0.0, 1.0 - 2.0 * sum);
}

// c with K(c) = 1 - alpha; the finite-n critical value is c / sqrt(n).
inline double kolmogorov_critical(double alpha, long long n) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw StatsError("kolmogorov_critical: alpha in (0,1)");
  if (n <= 0) throw StatsError("kolmogorov_critical: need n > 0");
  double lo = 0.1, hi = 4.0;
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    (kolmogorov_cdf(mid) < 1.0 - alpha ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi) / std::sqrt(static_cast<double>(n));
}

struct KsResult {
  double d = 0.0;       // sup-norm distance D_n
  double p = 1.0;       // asymptotic p-value 1 - K(sqrt(n) D_n)
  long long n = 0;
};

// One-sample KS of xs / theoretical_mean against the unit exponential.
inline KsResult ks_exponential(std::vector<double> xs, double theoretical_mean) {
  if (xs.empty()) throw StatsError("ks_exponential: empty sample");
  if (!(theoretical_mean > 0.0)) throw StatsError("ks_exponential: mean must be positive");
  for (double& x : xs) x /= theoretical_mean;
  std::sort(xs.begin(), xs.end());
  auto n = static_cast<double>(xs.size());
  double d = 0.0;
  for (size_t i = 0; i < xs.size(); ++i) {
    double f = 1.0 - std::exp(-xs[i]);
    d = std::max(d, std::max(f - static_cast<double>(i) / n,
                             static_cast<double>(i + 1) / n - f));
  }
  KsResult r;
  r.d = d;
  r.n = static_cast<long long>(xs.size());
  r.p = 1.0 - kolmogorov_cdf(std::sqrt(n) * d);
  return r;
}

namespace detail {

// Regularized lower incomplete gamma P(a, x): series for x < a + 1,
// Lentz continued fraction for the complement otherwise.
inline double gamma_p(double a, double x) {
  if (!(a > 0.0) || x < 0.0) throw StatsError("gamma_p: domain");
  if (x == 0.0) return 0.0;
  double lg = std::lgamma(a);
  if (x < a + 1.0) {
    double ap = a, sum = 1.0 / a, del = sum;
    for (int it = 0; it < 500; ++it) {
      ap += 1.0;
      del *= x / ap;
      sum += del;
      if (std::fabs(del) < std::fabs(sum) * 1e-16) break;
    }
    return sum * std::exp(-x + a * std::log(x) - lg);
  }
  double tiny = 1e-300;
  double b = x + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, h = d;
  for (int i = 1; i <= 500; ++i) {
    double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-16) break;
  }
  double q = std::exp(-x + a * std::log(x) - lg) * h;
  return 1.0 - q;
}

}  // namespace detail

inline double chi_square_cdf(double x, int dof) {
  if (dof <= 0) throw StatsError("chi_square_cdf: dof must be positive");
  if (x <= 0.0) return 0.0;
  return detail::gamma_p(0.5 * dof, 0.5 * x);
}

struct GofResult {
  double stat = 0.0;
  int dof = 0;
  double p = 1.0;
};

// Pearson goodness of fit of observed counts against cell probabilities.
inline GofResult chi_square_gof(const std::vector<long long>& observed,
                                const std::vector<double>& probs) {
  if (observed.size() != probs.size() || observed.empty())
    throw StatsError("chi_square_gof: size mismatch");
  long long n = std::accumulate(observed.begin(), observed.end(), 0LL);
  if (n <= 0) throw StatsError("chi_square_gof: empty sample");
  GofResult r;
  for (size_t i = 0; i < observed.size(); ++i) {
    double e = static_cast<double>(n) * probs[i];
    if (!(e > 0.0)) throw StatsError("chi_square_gof: zero expected count");
    double diff = static_cast<double>(observed[i]) - e;
    r.stat += diff * diff / e;
  }
  r.dof = static_cast<int>(observed.size()) - 1;
  r.p = 1.0 - chi_square_cdf(r.stat, r.dof);
  return r;
}

struct IndependenceResult {
  double stat = 0.0;
  int dof = 0;
  double p = 1.0;
  int rows = 0;
  int cols = 0;  // time columns left after merging
};

// Chi-square independence test of exit edge against exit-time quartile.
// Adjacent time columns merge until every expected count reaches 5.
inline IndependenceResult independence_edge_time(const std::vector<int>& edges,
                                                 const std::vector<double>& times) {
  if (edges.size() != times.size() || edges.empty())
    throw StatsError("independence_edge_time: size mismatch");
  std::vector<int> labels(edges);
  std::sort(labels.begin(), labels.end());
  labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
  auto row_of = [&](int e) {
    return static_cast<int>(std::lower_bound(labels.begin(), labels.end(), e) - labels.begin());
  };
  int nrow = static_cast<int>(labels.size());
  if (nrow < 2) throw StatsError("independence_edge_time: need at least two exit edges");

  std::vector<double> sorted(times);
  std::sort(sorted.begin(), sorted.end());
  size_t n = sorted.size();
  std::array<double, 3> cut{sorted[n / 4], sorted[n / 2], sorted[3 * n / 4]};
  auto col_of = [&](double t) {
    int c = 0;
    while (c < 3 && t > cut[static_cast<size_t>(c)]) ++c;
    return c;
  };

  std::vector<std::vector<double>> table(static_cast<size_t>(nrow), std::vector<double>(4, 0.0));
  for (size_t i = 0; i < edges.size(); ++i)
    table[static_cast<size_t>(row_of(edges[i]))][static_cast<size_t>(col_of(times[i]))] += 1.0;

  // merge the column with the smallest expected count into its neighbor
  auto expected_ok = [&](int& bad_col) {
    std::vector<double> rowsum(table.size(), 0.0), colsum(table[0].size(), 0.0);
    double total = 0.0;
    for (size_t i = 0; i < table.size(); ++i)
      for (size_t j = 0; j < table[i].size(); ++j) {
        rowsum[i] += table[i][j];
        colsum[j] += table[i][j];
        total += table[i][j];
      }
    double worst = 1e300;
    bad_col = -1;
    for (size_t i = 0; i < table.size(); ++i)
      for (size_t j = 0; j < table[i].size(); ++j) {
        double e = rowsum[i] * colsum[j] / total;
        if (e < worst) {
          worst = e;
          bad_col = static_cast<int>(j);
        }
      }
    return worst >= 5.0;
  };
  int bad = -1;
  while (table[0].size() > 1 && !expected_ok(bad)) {
    size_t j = static_cast<size_t>(bad);
    size_t into = (j + 1 < table[0].size()) ? j + 1 : j - 1;
    for (auto& row : table) {
      row[into] += row[j];
      row.erase(row.begin() + static_cast<std::ptrdiff_t>(j));
    }
  }
  if (table[0].size() < 2)
    throw StatsError("independence_edge_time: sample too small for a 2-column table");

  IndependenceResult r;
  r.rows = nrow;
  r.cols = static_cast<int>(table[0].size());
  std::vector<double> rowsum(table.size(), 0.0), colsum(table[0].size(), 0.0);
  double total = 0.0;
  for (size_t i = 0; i < table.size(); ++i)
    for (size_t j = 0; j < table[i].size(); ++j) {
      rowsum[i] += table[i][j];
      colsum[j] += table[i][j];
      total += table[i][j];
    }
  for (size_t i = 0; i < table.size(); ++i)
    for (size_t j = 0; j < table[i].size(); ++j) {
      double e = rowsum[i] * colsum[j] / total;
      double diff = table[i][j] - e;
      r.stat += diff * diff / e;
    }
  r.dof = (r.rows - 1) * (r.cols - 1);
  r.p = 1.0 - chi_square_cdf(r.stat, r.dof);
  return r;
}

}  // namespace tubesim::stats
