#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "osclab/common.hpp"
#include "osclab/measure.hpp"

namespace osclab {

/// All centers crossed with every distinct pairwise distance.
struct ExhaustiveFamily {};

/// All centers crossed with radii resolution * 2^k, up to and including the
/// first radius >= diameter. A single-atom measure gets the one radius 1.0.
struct DyadicFamily {};

/// Deterministic subsample of the exhaustive family.
struct SampledFamily {
  std::size_t count = 0;
  std::uint64_t seed = 0;
};

using FamilyStrategy = std::variant<ExhaustiveFamily, DyadicFamily, SampledFamily>;

FamilyStrategy parse_family(const std::string& text);
std::string family_name(const FamilyStrategy& strategy);

struct BallFamily {
  std::vector<Ball> balls;  // canonical order: center-major for exhaustive
  std::string descriptor;
  double r_min = 0.0;
  double r_max = 0.0;
};

BallFamily enumerate_ball_family(const DiscreteMeasure& mu,
                                 const FamilyStrategy& strategy);

/// Containment predicate used everywhere: U swallows B when
/// dist2(c_B, c_U) <= (r_U - r_B)^2 with r_U >= r_B. Equivalent to
/// |c_B - c_U| + r_B <= r_U up to the shared rounding convention.
struct BallPair {
  std::uint32_t inner = 0;  // indices into the family
  std::uint32_t outer = 0;
};

/// Family view with radius groups and a center lookup, for pair scans.
class FamilyIndex {
 public:
  FamilyIndex(const DiscreteMeasure& mu, BallFamily family);

  const DiscreteMeasure& measure() const { return *mu_; }
  const std::vector<Ball>& balls() const { return family_.balls; }
  const Ball& ball(std::size_t i) const { return family_.balls[i]; }
  std::size_t size() const { return family_.balls.size(); }
  const std::string& descriptor() const { return family_.descriptor; }
  const BallFamily& family() const { return family_; }

  /// Visits every family ball U containing ball b with r_U <= cap, ascending
  /// by (radius, center). Skips b itself. cap = +inf for no cap.
  template <class Visitor>
  void for_each_outer(std::uint32_t b, double cap,
                      std::vector<std::uint32_t>& scratch, Visitor&& visit) const {
    const Ball& inner = family_.balls[b];
    const double* c = mu_->point(inner.center);
    const std::size_t groups = radii_.size();
    for (std::size_t g = first_group_at_least(inner.radius); g < groups; ++g) {
      if (radii_[g] > cap) break;
      mu_->members_at(c, radii_[g] - inner.radius, scratch);
      for (std::uint32_t center : scratch) {
        const std::int32_t u = ball_at_[g * mu_->size() + center];
        if (u >= 0 && static_cast<std::uint32_t>(u) != b) {
          visit(static_cast<std::uint32_t>(u));
        }
      }
    }
  }

  /// Nested pairs with r_U <= rho * r_B, materialized once per rho and
  /// ordered by (inner, outer radius, outer center).
  const std::vector<BallPair>& pairs(double rho) const;

 private:
  std::size_t first_group_at_least(double r) const;

  const DiscreteMeasure* mu_;
  BallFamily family_;
  std::vector<double> radii_;          // distinct, ascending
  std::vector<std::int32_t> ball_at_;  // [group * n + center] -> ball or -1
  mutable double cached_rho_ = -1.0;
  mutable std::vector<BallPair> cached_pairs_;
};

/// nested_pairs(mu, family, rho): every ordered pair (B, U) from the family
/// with U containing B and r_U <= rho * r_B. Requires rho > 1.
std::vector<BallPair> nested_pairs(const DiscreteMeasure& mu,
                                   const BallFamily& family, double rho);

/// The shared containment predicate (see BallPair).
bool ball_contains(const DiscreteMeasure& mu, const Ball& inner,
                   const Ball& outer);

struct DoublingEntry {
  double radius = 0.0;
  double mass = 0.0;
  double mass_doubled = 0.0;
  double ratio = 0.0;  // mass_doubled / mass
  bool doubling = false;
};

struct DoublingReport {
  std::uint32_t center = 0;
  double beta = 0.0;
  std::vector<DoublingEntry> entries;  // radii r0, r0/2, ..., descending
  std::vector<double> doubling_radii;  // subset that passed
  double exhausted_at = 0.0;           // smallest radius scanned
};

/// Halving scan for beta-doubling radii: a radius r passes when
/// mass(B(c, 2r)) <= beta * mass(B(c, r)). Preconditions: beta > 1, r0 > 0,
/// max_halvings >= 0.
DoublingReport doubling_search(const DiscreteMeasure& mu, std::uint32_t center,
                               double beta, double r0, int max_halvings);

/// Comparability coefficient between nested balls B inside U:
/// 1 + sum_{j=1..N} mass(2^j B) / (2^j r_B)^n, where N is the first k >= 0
/// with 2^k r_B >= r_U. Equals 1 when U = B.
double k_constant(const DiscreteMeasure& mu, const Ball& inner,
                  const Ball& outer, double n);

/// Per-ball prefix table so uncapped pair scans can read K(B, U) in O(1).
class KConstantCache {
 public:
  KConstantCache(const DiscreteMeasure& mu, std::span<const Ball> balls,
                 double n, double r_max);
  /// K for inner ball index b against an outer radius.
  double value(std::uint32_t b, double outer_radius) const;

 private:
  std::span<const Ball> balls_;
  std::vector<std::size_t> offset_;
  std::vector<double> prefix_;  // prefix[offset[b] + m] = 1 + sum of first m terms
};

inline constexpr double kNoRadiusCap = std::numeric_limits<double>::infinity();

}  // namespace osclab
