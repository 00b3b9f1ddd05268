#include <catch2/catch_amalgamated.hpp>

#include <atomic>
#include <cstdlib>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "helpers.hpp"
#include "tubesim/observable.hpp"
#include "tubesim/parallel.hpp"

using tubesim::GraphPoint;
using tubesim::Observable;
using tubesim::ObservableError;

TEST_CASE("constant observable is constant everywhere") {
  auto g = testutil::star3();
  auto F = Observable::constant(g.vertex_count(), 2.5);
  CHECK(F.eval(g, GraphPoint::at(0)) == 2.5);
  CHECK(F.eval(g, GraphPoint::at(3)) == 2.5);
  CHECK(F.eval(g, GraphPoint::on_edge(1, 0.7)) == Catch::Approx(2.5).margin(1e-15));
}

TEST_CASE("bump observable interpolates linearly from its vertex") {
  auto g = testutil::path3(1.0, 2.0);  // edges 0-1 (len 1), 1-2 (len 2)
  auto F = Observable::bump(g.vertex_count(), 1);
  CHECK(F.at_vertex(0) == 0.0);
  CHECK(F.at_vertex(1) == 1.0);
  CHECK(F.eval(g, GraphPoint::at(1)) == 1.0);
  // arc runs from the lower-indexed endpoint of each edge
  CHECK(F.eval(g, GraphPoint::on_edge(0, 0.25)) == Catch::Approx(0.25).margin(1e-15));
  CHECK(F.eval(g, GraphPoint::on_edge(1, 0.5)) == Catch::Approx(0.75).margin(1e-15));
  CHECK(F.eval(g, GraphPoint::on_edge(1, 2.0)) == Catch::Approx(0.0).margin(1e-15));
}

TEST_CASE("coordinate observable reproduces the embedding on straight edges") {
  auto g = testutil::dumbbell(2.0);
  auto Fx = Observable::coordinate(g, 0);
  auto Fy = Observable::coordinate(g, 1);
  CHECK(Fx.at_vertex(1) == 2.0);
  CHECK(Fx.eval(g, GraphPoint::on_edge(0, 0.5)) == Catch::Approx(0.5).margin(1e-15));
  CHECK(Fy.eval(g, GraphPoint::on_edge(0, 0.5)) == Catch::Approx(0.0).margin(1e-15));
}

TEST_CASE("observable eval is linear in the vertex values") {
  auto g = testutil::star3();
  std::vector<double> a{1.0, -2.0, 0.5, 3.0}, b{0.0, 1.0, 2.0, -1.0};
  std::vector<double> sum(a.size());
  for (size_t i = 0; i < a.size(); ++i) sum[i] = a[i] + 2.0 * b[i];
  Observable Fa(a), Fb(b), Fsum(sum);
  GraphPoint p = GraphPoint::on_edge(2, 1.9);
  CHECK(Fsum.eval(g, p) == Catch::Approx(Fa.eval(g, p) + 2.0 * Fb.eval(g, p)).margin(1e-12));
}

TEST_CASE("observable constructors reject bad input") {
  auto g = testutil::dumbbell();
  CHECK_THROWS_AS(Observable(std::vector<double>{}), ObservableError);
  CHECK_THROWS_AS(Observable::bump(2, 2), ObservableError);
  CHECK_THROWS_AS(Observable::bump(2, -1), ObservableError);
  CHECK_THROWS_AS(Observable::coordinate(g, 2), ObservableError);
  auto F = Observable::constant(3, 1.0);  // three vertices, graph has two
  CHECK_THROWS_AS(F.eval(g, GraphPoint::at(0)), ObservableError);
}

TEST_CASE("indexed parallel loop fills every slot once for any worker count") {
  const long long n = 997;
  std::vector<double> expected(static_cast<size_t>(n));
  for (long long i = 0; i < n; ++i) expected[static_cast<size_t>(i)] = 3.0 * i + 1.0;
  for (int workers : {1, 2, 5, 16}) {
    std::vector<double> got(static_cast<size_t>(n), -1.0);
    std::atomic<long long> calls{0};
    tubesim::parallel_for_indexed(n, workers, [&](long long i) {
      got[static_cast<size_t>(i)] = 3.0 * i + 1.0;
      calls.fetch_add(1);
    });
    CHECK(calls.load() == n);
    CHECK(got == expected);
  }
}

TEST_CASE("parallel loop propagates the first exception") {
  CHECK_THROWS_AS(tubesim::parallel_for_indexed(
                      100, 4,
                      [&](long long i) {
                        if (i == 37) throw std::runtime_error("boom");
                      }),
                  std::runtime_error);
}

TEST_CASE("worker resolution prefers explicit, then the environment") {
  CHECK(tubesim::resolve_workers(7) == 7);
  setenv("TUBESIM_WORKERS", "3", 1);
  CHECK(tubesim::resolve_workers(0) == 3);
  CHECK(tubesim::resolve_workers(2) == 2);
  setenv("TUBESIM_WORKERS", "junk", 1);
  CHECK(tubesim::resolve_workers(0) >= 1);  // falls through to hardware
  unsetenv("TUBESIM_WORKERS");
  CHECK(tubesim::resolve_workers(0) >= 1);
}
