#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "tubesim/rng.hpp"
#include "tubesim/stats.hpp"

namespace st = tubesim::stats;
using tubesim::RngStream;

TEST_CASE("wilson interval brackets the point estimate and stays in [0,1]") {
  auto ci = st::wilson(50, 100);
  CHECK(ci.lo < 0.5);
  CHECK(ci.hi > 0.5);
  CHECK(ci.covers(0.5));

  auto lo = st::wilson(0, 40);
  CHECK(lo.lo == 0.0);
  CHECK(lo.hi > 0.0);
  auto hi = st::wilson(40, 40);
  CHECK(hi.hi == Catch::Approx(1.0).margin(1e-12));

  // closed form at z = 1 for p-hat = 0.5, n = 100: center 0.5, half = z/(n+z^2) * sqrt(...)
  auto one = st::wilson(50, 100, 1.0);
  double half = (1.0 / 1.01) * std::sqrt(0.25 / 100 + 1.0 / 40000);
  CHECK(one.lo == Catch::Approx(0.5 / 1.01 + 0.005 / 1.01 - half).margin(1e-12));
  CHECK_THROWS_AS(st::wilson(5, 0), st::StatsError);
  CHECK_THROWS_AS(st::wilson(7, 5), st::StatsError);
}

TEST_CASE("wilson 99% coverage is at least nominal-ish over many replicates") {
  RngStream rng(88, 0);
  const int reps = 10000, n = 200;
  const double p = 0.3;
  int covered = 0;
  for (int rep = 0; rep < reps; ++rep) {
    long long k = 0;
    for (int i = 0; i < n; ++i) k += rng.uniform() < p ? 1 : 0;
    covered += st::wilson(k, n).covers(p) ? 1 : 0;
  }
  CHECK(static_cast<double>(covered) / reps >= 0.985);
}

TEST_CASE("kolmogorov limit law matches pinned quantiles") {
  CHECK(st::kolmogorov_cdf(1.6276) == Catch::Approx(0.99).margin(2e-4));
  CHECK(st::kolmogorov_cdf(1.3581) == Catch::Approx(0.95).margin(2e-4));
  CHECK(st::kolmogorov_cdf(0.0) == 0.0);
  CHECK(st::kolmogorov_cdf(5.0) == 1.0);
  CHECK(st::kolmogorov_critical(0.01, 2000) == Catch::Approx(1.6276 / std::sqrt(2000.0)).margin(1e-4));
}

TEST_CASE("ks statistic equals the brute-force double loop") {
  RngStream rng(5, 1);
  std::vector<double> xs;
  for (int i = 0; i < 500; ++i) xs.push_back(rng.exponential(0.5));
  auto res = st::ks_exponential(xs, 2.0);

  // brute force: evaluate both one-sided gaps at every sample point
  std::vector<double> ys(xs);
  for (double& y : ys) y /= 2.0;
  std::sort(ys.begin(), ys.end());
  double d = 0.0;
  for (size_t i = 0; i < ys.size(); ++i) {
    double f = 1.0 - std::exp(-ys[i]);
    double below = 0, at_or_below = 0;
    for (double y : ys) {
      if (y < ys[i]) ++below;
      if (y <= ys[i]) ++at_or_below;
    }
    d = std::max(d, std::abs(f - below / static_cast<double>(ys.size())));
    d = std::max(d, std::abs(f - at_or_below / static_cast<double>(ys.size())));
  }
  CHECK(res.d == Catch::Approx(d).margin(1e-12));
}

TEST_CASE("ks test is calibrated and detects a scale error") {
  RngStream rng(6, 2);
  const int reps = 400, n = 300;
  int false_rejects = 0, true_rejects = 0;
  for (int rep = 0; rep < reps; ++rep) {
    std::vector<double> xs;
    for (int i = 0; i < n; ++i) xs.push_back(rng.exponential(1.0));
    double crit = st::kolmogorov_critical(0.01, n);
    if (st::ks_exponential(xs, 1.0).d > crit) ++false_rejects;
    if (st::ks_exponential(xs, 1.5).d > crit) ++true_rejects;
  }
  CHECK(false_rejects <= 12);            // ~4 expected at the 1% level
  CHECK(true_rejects >= reps * 9 / 10);  // gross scale error: near-certain rejection
}

TEST_CASE("chi-square cdf agrees with closed forms") {
  for (double x : {0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 30.0}) {
    CHECK(st::chi_square_cdf(x, 2) == Catch::Approx(1.0 - std::exp(-x / 2)).margin(1e-10));
    CHECK(st::chi_square_cdf(x, 4) ==
          Catch::Approx(1.0 - std::exp(-x / 2) * (1.0 + x / 2)).margin(1e-10));
    CHECK(st::chi_square_cdf(x, 1) == Catch::Approx(std::erf(std::sqrt(x / 2))).margin(1e-10));
  }
  CHECK(st::chi_square_cdf(0.0, 3) == 0.0);
  CHECK_THROWS_AS(st::chi_square_cdf(1.0, 0), st::StatsError);
}

TEST_CASE("goodness of fit flags skewed shell counts") {
  std::vector<long long> even{100, 100, 100, 100};
  auto ok = st::chi_square_gof(even, {0.25, 0.25, 0.25, 0.25});
  CHECK(ok.stat == Catch::Approx(0.0));
  CHECK(ok.p == Catch::Approx(1.0));
  CHECK(ok.dof == 3);

  std::vector<long long> bad{200, 100, 50, 50};
  auto reject = st::chi_square_gof(bad, {0.25, 0.25, 0.25, 0.25});
  CHECK(reject.p < 1e-6);
}

TEST_CASE("independence test calibration and power") {
  RngStream rng(12, 0);
  const int reps = 200, n = 600;
  int false_rejects = 0, true_rejects = 0;
  for (int rep = 0; rep < reps; ++rep) {
    std::vector<int> edges;
    std::vector<double> t_indep, t_coupled;
    for (int i = 0; i < n; ++i) {
      double u = rng.uniform();
      int e = u < 0.3 ? 0 : (u < 0.7 ? 1 : 2);
      edges.push_back(e);
      double tau = rng.exponential(1.0);
      t_indep.push_back(tau);
      t_coupled.push_back(e == 0 ? 2.0 * tau : tau);  // doubled on one edge
    }
    if (st::independence_edge_time(edges, t_indep).p < 0.01) ++false_rejects;
    if (st::independence_edge_time(edges, t_coupled).p < 0.001) ++true_rejects;
  }
  CHECK(false_rejects <= 8);
  CHECK(true_rejects >= reps * 9 / 10);
}

TEST_CASE("independence merges sparse quartile columns") {
  // nearly all times tie at 0, so quartile cuts degenerate and columns merge
  std::vector<int> edges;
  std::vector<double> times;
  RngStream rng(14, 0);
  for (int i = 0; i < 200; ++i) {
    edges.push_back(i % 2);
    times.push_back(i < 190 ? 0.0 : rng.exponential(1.0));
  }
  auto res = st::independence_edge_time(edges, times);
  CHECK(res.cols >= 2);
  CHECK(res.cols < 4);
  CHECK(res.dof == (res.rows - 1) * (res.cols - 1));

  CHECK_THROWS_AS(st::independence_edge_time({0, 0, 0}, {1.0, 2.0, 3.0}), st::StatsError);
}

TEST_CASE("summary reports sample mean and standard error") {
  auto s = st::summarize({1.0, 2.0, 3.0, 4.0});
  CHECK(s.mean == Catch::Approx(2.5));
  CHECK(s.sd == Catch::Approx(std::sqrt(5.0 / 3.0)));
  CHECK(s.se == Catch::Approx(std::sqrt(5.0 / 3.0) / 2.0));
  CHECK(s.n == 4);
}
