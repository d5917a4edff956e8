#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "osclab/common.hpp"
#include "osclab/kdtree.hpp"

namespace osclab {

/// Closed ball centered at a support point.
struct Ball {
  std::uint32_t center = 0;  // index into the support
  double radius = 0.0;       // > 0
};

/// Finite weighted point cloud in R^d with strictly positive weights and
/// pairwise distinct points. Immutable after construction.
///
/// Summation contract: every mass or integral over a set of atoms is a
/// compensated (Neumaier) sum taken in ascending atom index order. Ball
/// membership is always the predicate dist2(x, c) <= r*r with dist2 summing
/// squared coordinate differences in coordinate order. All higher layers
/// reuse these two conventions, which is what makes reports reproducible
/// bit for bit across thread counts.
class DiscreteMeasure {
 public:
  static DiscreteMeasure create(int dim, std::vector<double> coords,
                                std::vector<double> weights);

  int dim() const { return dim_; }
  std::size_t size() const { return weights_.size(); }
  const double* point(std::size_t i) const { return coords_.data() + i * dim_; }
  double weight(std::size_t i) const { return weights_[i]; }
  const std::vector<double>& coords() const { return coords_; }
  const std::vector<double>& weights() const { return weights_; }

  double distance(std::size_t i, std::size_t j) const;
  double dist2_to(std::size_t i, const double* c) const {
    return KdTree::dist2(point(i), c, dim_);
  }

  /// Smallest pairwise distance; 1.0 by convention for a single atom.
  double resolution() const { return resolution_; }
  /// Largest pairwise distance; 0.0 for a single atom.
  double diameter() const { return diameter_; }
  double total_mass() const { return total_mass_; }

  /// Support indices inside the closed ball, ascending. Identical to a
  /// linear scan with the membership predicate above.
  void neighbors_within(std::size_t center, double radius,
                        std::vector<std::uint32_t>& out) const;
  std::vector<std::uint32_t> neighbors_within(std::size_t center,
                                              double radius) const;

  /// Same query for an arbitrary center given by coordinates. This is the
  /// hook for off-support experiments; everything in the report pipeline
  /// stays support-centered.
  void members_at(const double* center, double radius,
                  std::vector<std::uint32_t>& out) const;

  double mass_in_ball(const Ball& b) const;
  double mass_at(const double* center, double radius) const;

  /// Compensated ascending-order sum of weights over an index list.
  double mass_of(std::span<const std::uint32_t> members) const;

 private:
  DiscreteMeasure() = default;

  int dim_ = 0;
  std::vector<double> coords_;
  std::vector<double> weights_;
  KdTree tree_;
  double resolution_ = 1.0;
  double diameter_ = 0.0;
  double total_mass_ = 0.0;
};

struct GrowthReport {
  double n = 0.0;             // growth exponent tested
  double best_constant = 0.0; // max over the family of mass / r^n
  Ball witness;               // ball attaining the maximum (lowest family index on ties)
  double r_min = 0.0;
  double r_max = 0.0;
  std::size_t balls_scanned = 0;
};

/// Scans a ball family for the smallest C with mass(B) <= C * r^n.
/// Preconditions: 0 < n, family nonempty, every radius >= resolution.
GrowthReport growth_report(const DiscreteMeasure& mu, double n,
                           std::span<const Ball> family);

/// Least-squares slope of log mass against log radius over dyadic radii
/// from every center. Diagnostic only.
double estimate_growth_dimension(const DiscreteMeasure& mu, double r_min,
                                 double r_max);

// Generators. Each is deterministic given its parameters.

/// Uniform grid on a cube: per_side points per axis, spacing side/(per_side-1),
/// corner at `origin` in every coordinate. Weights are uniform; `total_mass`
/// <= 0 selects unit density (weight = spacing^dim) instead.
DiscreteMeasure make_grid(int dim, int per_side, double side,
                          double total_mass = 1.0, double origin = 0.0);

/// n equispaced points on the circle of radius r in R^2, weights 1/n.
DiscreteMeasure make_circle(std::size_t n, double radius);

/// Corner quarters Cantor dust in the plane at the given level: 4^level
/// points with weight 4^-level, cell size 3 * 4^-level.
DiscreteMeasure make_cantor_dust(int level);

/// One-dimensional Cantor set endpoints at the given level with contraction
/// ratio lambda in (0, 1/2]: 2^level points with weight 2^-level.
DiscreteMeasure make_cantor_1d(int level, double lambda);

/// Geometric accumulation toward the origin: atoms at 2^-j for j = 0..k-1
/// with weight 2^(-j*gamma), plus the limit atom at 0 with weight 4^-k.
/// Doubling at intermediate scales but not at the accumulation point.
DiscreteMeasure make_geometric_accumulation(int k, double gamma);

/// Parses a generator descriptor such as "grid:d=1,per_side=101,side=1" or
/// "circle:n=128,r=1". Throws ValidationError with the offending field.
DiscreteMeasure parse_generator(const std::string& spec);

}  // namespace osclab
