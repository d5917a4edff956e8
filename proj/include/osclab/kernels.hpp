#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "osclab/common.hpp"
#include "osclab/measure.hpp"

namespace osclab::kernels {

/// Per-ball sweep output. mean uses the centered form
/// f(center) + sum w_i (f_i - f(center)) / mass, so constant functions give
/// exactly zero deviations. abs_dev and sq_dev are mass-weighted sums of
/// |f - mean| and (f - mean)^2; max_dev is the plain maximum of |f - mean|.
struct BallStat {
  double mass = 0.0;
  double mass_rho = 0.0;
  double mean = 0.0;
  double abs_dev = 0.0;
  double sq_dev = 0.0;
  double max_dev = 0.0;
};

struct HolderMax {
  double value = 0.0;
  std::uint32_t i = 0;
  std::uint32_t j = 0;
  bool found = false;
};

/// y_i = sum_{j} a[i*n + j] * f_j, compensated, ascending j per row.
void apply_rows(const double* a, const double* f, double* y, std::size_t n);

/// y_j = sum_{i} a[i*n + j] * f_i, compensated, ascending i per column.
void apply_cols(const double* a, const double* f, double* y, std::size_t n);

/// Largest |f_i - f_j| / dist(i, j)^alpha over unordered pairs, lowest (i, j)
/// on ties. Requires at least two atoms.
HolderMax holder_scan(const DiscreteMeasure& mu, const double* f, double alpha);

/// Fills stats[k] for balls[k]. f may be null (masses only); rho <= 0 skips
/// the dilated mass.
void ball_sweep(const DiscreteMeasure& mu, std::span<const Ball> balls,
                const double* f, double rho, BallStat* stats);

namespace detail {

template <class K>
void fill_matrix_range(std::size_t n, K& k, double* a, std::size_t row_begin,
                       std::size_t row_end) {
  for (std::size_t i = row_begin; i < row_end; ++i) {
    double* row = a + i * n;
    for (std::size_t j = 0; j < n; ++j) {
      row[j] = i == j ? 0.0 : k(i, j);
    }
  }
}

void ball_stat_one(const DiscreteMeasure& mu, const Ball& ball, const double* f,
                   double rho, std::vector<std::uint32_t>& scratch,
                   BallStat& out);

/// The one centered-mean implementation shared by every layer.
double centered_mean(const DiscreteMeasure& mu, const double* f,
                     std::span<const std::uint32_t> members,
                     std::uint32_t center, double mass);

}  // namespace detail

/// a[i*n + j] = k(i, j) for i != j, zero on the diagonal (the discrete
/// principal value drops the singular atom). k must not throw.
template <class K>
void fill_matrix(std::size_t n, K&& k, double* a) {
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) {
    detail::fill_matrix_range(n, k, a, static_cast<std::size_t>(i),
                              static_cast<std::size_t>(i) + 1);
  }
}

namespace serial {

void apply_rows(const double* a, const double* f, double* y, std::size_t n);
void apply_cols(const double* a, const double* f, double* y, std::size_t n);
HolderMax holder_scan(const DiscreteMeasure& mu, const double* f, double alpha);
void ball_sweep(const DiscreteMeasure& mu, std::span<const Ball> balls,
                const double* f, double rho, BallStat* stats);

template <class K>
void fill_matrix(std::size_t n, K&& k, double* a) {
  detail::fill_matrix_range(n, k, a, 0, n);
}

}  // namespace serial

}  // namespace osclab::kernels
