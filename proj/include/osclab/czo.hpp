#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "osclab/geometry.hpp"
#include "osclab/lipschitz.hpp"
#include "osclab/measure.hpp"

namespace osclab {

/// A kernel evaluator plus its declared profile: growth exponent n,
/// regularity exponent epsilon, and the two constants the check operations
/// verify. Catalog kernels carry derived constants; table kernels carry
/// whatever the caller claims.
class Kernel {
 public:
  /// 1/(x - y) on the line. Size constant 1 (exact), smoothness 2.
  static Kernel cauchy();

  /// Conjugate-function kernel on the circle of the given radius:
  /// cot((theta_x - theta_y)/2) / (2 R). Size constant 1 (the product with
  /// the chord length is |cos| of the half angle); the smoothness constant
  /// 2.5 covers the worst admissible triple with margin.
  static Kernel circle_conjugate(double radius);

  /// (x_c - y_c) / |x - y|^{n+1}, component c (1-based). Size constant 1,
  /// smoothness (n + 2) * 2^{n+1}.
  static Kernel riesz(int component, double n);

  /// 1/(x - y)^2 declared with n = 1: a counterexample kernel whose true
  /// size profile is quadratic, so the size check must fail on any measure
  /// with small gaps.
  static Kernel inverse_square();

  /// Dense table of kernel values aligned with a fixed measure size.
  static Kernel table(std::vector<double> values, std::size_t atoms, double n,
                      double epsilon, double size_constant,
                      double smoothness_constant, std::string name);

  double eval(const DiscreteMeasure& mu, std::size_t i, std::size_t j) const;
  void validate_for(const DiscreteMeasure& mu) const;

  /// True for the antisymmetric catalog kernels (K(x,y) = -K(y,x)).
  bool odd() const;

  const std::string& name() const { return name_; }
  double n() const { return n_; }
  double epsilon() const { return epsilon_; }
  double size_constant() const { return size_constant_; }
  double smoothness_constant() const { return smoothness_constant_; }

  void override_profile(double n, double epsilon);

 private:
  enum class Type { cauchy, conjugate, riesz, inverse_square, table };

  Kernel(Type type, std::string name, double n, double epsilon, double size_c,
         double smooth_c)
      : type_(type), name_(std::move(name)), n_(n), epsilon_(epsilon),
        size_constant_(size_c), smoothness_constant_(smooth_c) {}

  Type type_;
  std::string name_;
  double n_ = 1.0;
  double epsilon_ = 1.0;
  double size_constant_ = 1.0;
  double smoothness_constant_ = 1.0;
  int component_ = 1;      // riesz
  double radius_ = 1.0;    // conjugate
  std::shared_ptr<const std::vector<double>> values_;  // table
  std::size_t atoms_ = 0;  // table
};

struct SizeCheck {
  double worst_ratio = 0.0;  // max |K(x,y)| |x-y|^n over the sample
  bool pass = false;         // worst_ratio <= size_constant * (1 + 1e-12)
  std::uint32_t i = 0;
  std::uint32_t j = 0;
  std::size_t samples = 0;
};

struct RegularityCheck {
  double worst_ratio = 0.0;  // max |K(x,y)-K(x',y)| |x-y|^{n+eps} / |x-x'|^eps
  bool pass = false;
  std::uint32_t i = 0;   // x
  std::uint32_t ip = 0;  // x'
  std::uint32_t j = 0;   // y
  std::size_t samples = 0;
};

/// Exhaustive over ordered pairs i != j. Throws KernelDefect naming the
/// first pair where the evaluator goes non-finite.
SizeCheck kernel_size_check(const Kernel& kernel, const DiscreteMeasure& mu);
SizeCheck kernel_size_check(const Kernel& kernel, const DiscreteMeasure& mu,
                            std::span<const std::pair<std::uint32_t, std::uint32_t>> pairs);

/// Exhaustive over triples (x, x', y) with |x-y| >= 2|x-x'|; the explicit
/// overload validates the separation constraint on every triple.
RegularityCheck kernel_regularity_check(const Kernel& kernel,
                                        const DiscreteMeasure& mu);
RegularityCheck kernel_regularity_check(
    const Kernel& kernel, const DiscreteMeasure& mu,
    std::span<const std::array<std::uint32_t, 3>> triples);

/// Dense discrete operator: entry(i, j) = K(x_i, x_j) w_j with zero
/// diagonal (the discrete principal value). Immutable after construction;
/// construction validates that every off-diagonal entry is finite.
class CzOperator {
 public:
  CzOperator(const DiscreteMeasure& mu, Kernel kernel);

  const DiscreteMeasure& measure() const { return *mu_; }
  const Kernel& kernel() const { return kernel_; }
  double entry(std::size_t i, std::size_t j) const {
    return matrix_[i * mu_->size() + j];
  }
  const double* matrix() const { return matrix_.data(); }

  /// (Tf)_i = sum_{j != i} K(x_i, x_j) f_j w_j.
  SampledFunction apply(const SampledFunction& f) const;

  struct LocalValues {
    std::vector<std::uint32_t> members;  // supp in the ball, ascending
    std::vector<double> values;
  };

  /// T_ball f on the support points inside the ball: the 2B-local sum plus
  /// the recentered tail sum_{z outside 2B} (K(x,z) - K(x_B,z)) f(z) w_z.
  LocalValues apply_tb(const SampledFunction& f, const Ball& ball) const;

  /// Spectral norm of D^{1/2} K D^{1/2} on l2, the L2(mu) operator norm.
  /// Power iteration, relative tolerance tol, hard iteration cap.
  double norm_l2(double tol = 1e-6, std::size_t max_iter = 10000,
                 std::size_t* iterations = nullptr,
                 bool* converged = nullptr) const;

 private:
  friend struct TbEvaluator;
  const DiscreteMeasure* mu_;
  Kernel kernel_;
  std::vector<double> matrix_;
};

struct TbGap {
  double deviation = 0.0;  // max_i |g_i - mean(g)| over the inner ball
  double scale = 0.0;      // max_i of the L1 mass of all summands feeding g_i
};

/// g = T_inner f - T_outer f on supp within inner; near-constancy is the
/// consistency property of the truncated operators. Requires inner inside
/// outer under the shared containment predicate.
TbGap tb_consistency(const CzOperator& op, const SampledFunction& f,
                     const Ball& inner, const Ball& outer);

struct TbSweep {
  double worst_deviation = 0.0;
  double worst_scale = 0.0;
  double worst_rel = 0.0;  // max over pairs of deviation / scale
  BallPair worst_pair;
  std::size_t pairs = 0;
};

/// tb_consistency over every containment pair of the family (no radius
/// cap), using per-ball caches so the sweep stays near-linear.
TbSweep tb_consistency_sweep(const CzOperator& op, const SampledFunction& f,
                             const FamilyIndex& family);

struct T1Result {
  double value = 0.0;  // pointwise Holder seminorm of the representative
  SampledFunction representative;
  LipschitzReport report;
  std::size_t rungs = 0;  // dyadic balls used by the stitching
};

/// Builds a representative of T(1) by stitching T_B(1) over increasing
/// dyadic balls about the first support point, matching constants on
/// overlaps, then reports its alpha-seminorms. The operator annihilates
/// constants exactly when this value is 0. Requires alpha in (0, epsilon).
T1Result t1_norm(const CzOperator& op, double alpha, const FamilyIndex& family,
                 double rho = 2.0);

struct TbDecomposition {
  std::uint32_t inner = 0;
  std::uint32_t outer = 0;
  double a_inner = 0.0;    // average of T_U(f - m_{2U} f) over the inner ball
  double a_outer = 0.0;
  double a1 = 0.0;         // 2B-local part
  double a2 = 0.0;         // 2U minus 2B shell, exactly 0 on diagonal pairs
  double a3 = 0.0;         // recentered tail
  double avg_total = 0.0;  // averaged |T_U (f - m_{2U} f)|, <= a1 + a2 + a3
  double osc_part = 0.0;
  double pair_part = 0.0;
};

struct BoundednessRow {
  std::string function;
  bool skipped = false;  // constant input: ratio undefined
  double lip_f = 0.0;    // pointwise Holder seminorm of f
  double lip_tf = 0.0;   // oscillation estimator for Tf with per-pair constants
  double ratio = 0.0;
  TbDecomposition worst;
  std::size_t triangle_violations = 0;
};

struct BoundednessTable {
  std::vector<BoundednessRow> rows;
  double op_norm = 0.0;
  std::size_t op_norm_iterations = 0;
  bool op_norm_converged = false;
};

/// For each test function: recenter against each outer ball, push it
/// through the truncated operators, and take the oscillation-with-
/// constants estimator of Tf over all nested pairs (including diagonal
/// pairs B = U). Requires alpha in (0, epsilon).
BoundednessTable boundedness_experiment(
    const CzOperator& op, double alpha,
    std::span<const std::pair<std::string, SampledFunction>> functions,
    const FamilyIndex& family, double rho = 2.0);

struct TailResult {
  double value = 0.0;        // sum over atoms outside 2U of w / dist^{n+eps-alpha}
  double bound_ratio = 0.0;  // value / r^{alpha-eps}
  std::size_t atoms_outside = 0;
};

/// Requires alpha < epsilon and n > 0. Returns (0, 0) when 2U swallows the
/// support.
TailResult tail_integral_check(const DiscreteMeasure& mu, const Ball& outer,
                               double n, double epsilon, double alpha);

}  // namespace osclab
