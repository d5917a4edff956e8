// Timing harness comparing the parallel kernels against their serial
// reference implementations. The two paths must agree bit for bit (the
// test suite enforces that); this target just reports the speed ratio.

#include <chrono>
#include <cstdio>
#include <random>
#include <vector>

#include "osclab/geometry.hpp"
#include "osclab/kernels.hpp"
#include "osclab/measure.hpp"

using namespace osclab;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

template <class F>
double time_best_of(int repeats, F&& body) {
  double best = 1e300;
  for (int r = 0; r < repeats; ++r) {
    const auto start = Clock::now();
    body();
    best = std::min(best, seconds_since(start));
  }
  return best;
}

void report(const char* name, double serial, double parallel) {
  std::printf("%-14s serial %8.4fs  parallel %8.4fs  speedup %5.2fx\n", name,
              serial, parallel, serial / parallel);
}

}  // namespace

int main() {
  std::printf("threads available: %d\n", max_threads());

  std::mt19937_64 gen(1234);
  std::uniform_real_distribution<double> coord(-1.0, 1.0);
  std::uniform_real_distribution<double> mass(0.5, 1.5);

  const std::size_t n = 1500;
  std::vector<double> coords(n * 2), weights(n);
  for (double& c : coords) c = coord(gen);
  for (double& w : weights) w = mass(gen);
  const DiscreteMeasure mu =
      DiscreteMeasure::create(2, std::move(coords), std::move(weights));

  std::vector<double> f(n);
  for (double& v : f) v = coord(gen);

  const auto kernel = [&](std::size_t i, std::size_t j) {
    const double d2 = KdTree::dist2(mu.point(i), mu.point(j), 2);
    return (mu.point(i)[0] - mu.point(j)[0]) / d2;
  };

  std::vector<double> a(n * n), y(n);
  report("fill_matrix",
         time_best_of(3, [&] { kernels::serial::fill_matrix(n, kernel, a.data()); }),
         time_best_of(3, [&] { kernels::fill_matrix(n, kernel, a.data()); }));
  report("apply_rows",
         time_best_of(5, [&] { kernels::serial::apply_rows(a.data(), f.data(), y.data(), n); }),
         time_best_of(5, [&] { kernels::apply_rows(a.data(), f.data(), y.data(), n); }));
  report("apply_cols",
         time_best_of(5, [&] { kernels::serial::apply_cols(a.data(), f.data(), y.data(), n); }),
         time_best_of(5, [&] { kernels::apply_cols(a.data(), f.data(), y.data(), n); }));
  report("holder_scan",
         time_best_of(3, [&] { kernels::serial::holder_scan(mu, f.data(), 0.5); }),
         time_best_of(3, [&] { kernels::holder_scan(mu, f.data(), 0.5); }));

  const BallFamily family = enumerate_ball_family(mu, DyadicFamily{});
  std::vector<kernels::BallStat> stats(family.balls.size());
  report("ball_sweep",
         time_best_of(3, [&] {
           kernels::serial::ball_sweep(mu, family.balls, f.data(), 2.0,
                                       stats.data());
         }),
         time_best_of(3, [&] {
           kernels::ball_sweep(mu, family.balls, f.data(), 2.0, stats.data());
         }));
  return 0;
}
