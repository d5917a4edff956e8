#include "osclab/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace osclab::kernels {

namespace {

void apply_row(const double* row, const double* f, double* y, std::size_t n,
               std::size_t i) {
  Accumulator acc;
  for (std::size_t j = 0; j < n; ++j) acc.add(row[j] * f[j]);
  y[i] = acc.value();
}

void apply_col(const double* a, const double* f, double* y, std::size_t n,
               std::size_t j) {
  Accumulator acc;
  for (std::size_t i = 0; i < n; ++i) acc.add(a[i * n + j] * f[i]);
  y[j] = acc.value();
}

struct PairBest {
  double value = -1.0;
  std::uint32_t i = 0;
  std::uint32_t j = 0;
  bool found = false;

  void update(double v, std::uint32_t a, std::uint32_t b) {
    if (!found || v > value || (v == value && (a < i || (a == i && b < j)))) {
      value = v;
      i = a;
      j = b;
      found = true;
    }
  }

  void merge(const PairBest& o) {
    if (o.found) update(o.value, o.i, o.j);
  }
};

PairBest holder_row(const DiscreteMeasure& mu, const double* f, double alpha,
                    std::size_t i) {
  PairBest best;
  const std::size_t n = mu.size();
  for (std::size_t j = i + 1; j < n; ++j) {
    const double q = std::fabs(f[i] - f[j]) / std::pow(mu.distance(i, j), alpha);
    best.update(q, static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j));
  }
  return best;
}

}  // namespace

namespace detail {

double centered_mean(const DiscreteMeasure& mu, const double* f,
                     std::span<const std::uint32_t> members,
                     std::uint32_t center, double mass) {
  const double fc = f[center];
  Accumulator dev;
  for (std::uint32_t m : members) dev.add(mu.weight(m) * (f[m] - fc));
  return fc + dev.value() / mass;
}

void ball_stat_one(const DiscreteMeasure& mu, const Ball& ball, const double* f,
                   double rho, std::vector<std::uint32_t>& scratch,
                   BallStat& out) {
  const double* center = mu.point(ball.center);
  mu.members_at(center, ball.radius, scratch);
  Accumulator mass;
  for (std::uint32_t m : scratch) mass.add(mu.weight(m));
  out.mass = mass.value();
  if (f != nullptr) {
    const double mean = centered_mean(mu, f, scratch, ball.center, out.mass);
    Accumulator abs_dev, sq_dev;
    double max_dev = 0.0;
    for (std::uint32_t m : scratch) {
      const double d = f[m] - mean;
      abs_dev.add(mu.weight(m) * std::fabs(d));
      sq_dev.add(mu.weight(m) * d * d);
      max_dev = std::max(max_dev, std::fabs(d));
    }
    out.mean = mean;
    out.abs_dev = abs_dev.value();
    out.sq_dev = sq_dev.value();
    out.max_dev = max_dev;
  }
  if (rho > 0.0) {
    mu.members_at(center, rho * ball.radius, scratch);
    Accumulator mass_rho;
    for (std::uint32_t m : scratch) mass_rho.add(mu.weight(m));
    out.mass_rho = mass_rho.value();
  }
}

}  // namespace detail

void apply_rows(const double* a, const double* f, double* y, std::size_t n) {
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) {
    apply_row(a + static_cast<std::size_t>(i) * n, f, y, n,
              static_cast<std::size_t>(i));
  }
}

void apply_cols(const double* a, const double* f, double* y, std::size_t n) {
#pragma omp parallel for schedule(static)
  for (std::int64_t j = 0; j < static_cast<std::int64_t>(n); ++j) {
    apply_col(a, f, y, n, static_cast<std::size_t>(j));
  }
}

HolderMax holder_scan(const DiscreteMeasure& mu, const double* f, double alpha) {
  if (mu.size() < 2) throw ValidationError("holder_scan: need at least two atoms");
  PairBest best;
#pragma omp parallel
  {
    PairBest local;
#pragma omp for schedule(dynamic, 16)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(mu.size()) - 1; ++i) {
      local.merge(holder_row(mu, f, alpha, static_cast<std::size_t>(i)));
    }
#pragma omp critical
    best.merge(local);
  }
  return {best.value, best.i, best.j, best.found};
}

void ball_sweep(const DiscreteMeasure& mu, std::span<const Ball> balls,
                const double* f, double rho, BallStat* stats) {
#pragma omp parallel
  {
    std::vector<std::uint32_t> scratch;
#pragma omp for schedule(dynamic, 16)
    for (std::int64_t b = 0; b < static_cast<std::int64_t>(balls.size()); ++b) {
      stats[b] = BallStat{};
      detail::ball_stat_one(mu, balls[static_cast<std::size_t>(b)], f, rho,
                            scratch, stats[b]);
    }
  }
}

namespace serial {

void apply_rows(const double* a, const double* f, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) apply_row(a + i * n, f, y, n, i);
}

void apply_cols(const double* a, const double* f, double* y, std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) apply_col(a, f, y, n, j);
}

HolderMax holder_scan(const DiscreteMeasure& mu, const double* f, double alpha) {
  if (mu.size() < 2) throw ValidationError("holder_scan: need at least two atoms");
  PairBest best;
  for (std::size_t i = 0; i + 1 < mu.size(); ++i) {
    best.merge(holder_row(mu, f, alpha, i));
  }
  return {best.value, best.i, best.j, best.found};
}

void ball_sweep(const DiscreteMeasure& mu, std::span<const Ball> balls,
                const double* f, double rho, BallStat* stats) {
  std::vector<std::uint32_t> scratch;
  for (std::size_t b = 0; b < balls.size(); ++b) {
    stats[b] = BallStat{};
    detail::ball_stat_one(mu, balls[b], f, rho, scratch, stats[b]);
  }
}

}  // namespace serial

}  // namespace osclab::kernels
