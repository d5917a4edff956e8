#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "osclab/geometry.hpp"
#include "osclab/measure.hpp"

namespace osclab {

/// Function sampled on the support, values[i] at atom i.
struct SampledFunction {
  std::vector<double> values;
};

/// Built-in profiles: "linear" (first coordinate), "coord:k" (k-th
/// coordinate, 1-based), "power:q" (first coordinate to the q-th power),
/// "radial" (euclidean norm), "harmonic:k" / "harmonic:k:sin"
/// (cos/sin of k times the polar angle, dim >= 2), "random:seed"
/// (uniform [0,1), reproducible), "const:c".
SampledFunction make_profile(const DiscreteMeasure& mu, const std::string& spec);

void validate_function(const DiscreteMeasure& mu, const SampledFunction& f);

/// Mass-weighted mean over a ball, in the centered form
/// f(center) + sum w_i (f_i - f(center)) / mass. Exact for constants.
double ball_mean(const DiscreteMeasure& mu, const SampledFunction& f,
                 const Ball& ball);

struct HolderResult {
  double value = 0.0;
  std::uint32_t i = 0;  // witness pair, lowest indices on ties
  std::uint32_t j = 0;
};

/// Pointwise Holder quotient sup |f(x) - f(y)| / |x - y|^alpha over all
/// pairs. Requires at least two atoms and alpha in (0, 1].
HolderResult c2_seminorm(const DiscreteMeasure& mu, const SampledFunction& f,
                         double alpha);

enum class MeanPower { p1, p2, pinf };

MeanPower parse_mean_power(const std::string& text);
std::string mean_power_name(MeanPower p);

/// One oscillation-style seminorm: a per-ball part and a nested-pair part.
/// value = max(osc, pair). Witnesses are family indices, -1 when the
/// corresponding scan had nothing to visit.
struct OscillationResult {
  double osc = 0.0;
  std::int64_t osc_ball = -1;
  double pair = 0.0;
  std::int64_t pair_inner = -1;
  std::int64_t pair_outer = -1;
  double value = 0.0;
};

/// Mean oscillation with the dilated-ball normalizer: per ball,
/// (1 / mass(rho B)) sum_B w |f - m_B| / r^alpha, plus the pair part
/// |m_B - m_U| / r_B^alpha over nested pairs with r_U <= rho r_B.
OscillationResult oscillation_condition_i(const FamilyIndex& family,
                                          const SampledFunction& f,
                                          double alpha, double rho = 2.0);

/// L^p mean oscillation against the ball's own mass, same pair part.
OscillationResult oscillation_condition_iii(const FamilyIndex& family,
                                            const SampledFunction& f,
                                            double alpha, MeanPower p,
                                            double rho = 2.0);

struct RbmoResult {
  double value = 0.0;
  double osc = 0.0;  // max over balls of (1 / mass(rho B)) sum_B w |f - m_B|
  std::int64_t osc_ball = -1;
  double pair = 0.0;  // max over all nested pairs of |m_B - m_U| / K(B, U)
  std::int64_t pair_inner = -1;
  std::int64_t pair_outer = -1;
  double k_at_witness = 0.0;
};

/// Endpoint alpha = 0 norm. The pair part runs over every containment pair
/// in the family (no radius cap) and divides by the comparability
/// coefficient K(B, U) computed with growth exponent n.
RbmoResult rbmo_norm(const FamilyIndex& family, const SampledFunction& f,
                     double n, double rho = 2.0);

struct ChainCheck {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  bool ok = false;
};

struct LipschitzReport {
  double alpha = 0.0;
  double rho = 0.0;
  OscillationResult cond_i;
  std::array<OscillationResult, 3> cond_iii;  // p = 1, 2, inf
  HolderResult c2;
  std::vector<ChainCheck> chain;
  bool chain_ok = false;
};

/// Runs all three conditions plus the Holder scan and cross-checks the
/// comparison inequalities (relative slack 1e-9). A failed inequality is
/// reported in `chain` with chain_ok = false rather than clamped.
LipschitzReport full_report(const FamilyIndex& family, const SampledFunction& f,
                            double alpha, double rho = 2.0);

}  // namespace osclab
