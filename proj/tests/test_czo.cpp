#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "osclab/czo.hpp"

using namespace osclab;

namespace {

FamilyIndex exhaustive(const DiscreteMeasure& mu) {
  return FamilyIndex(mu, enumerate_ball_family(mu, ExhaustiveFamily{}));
}

Kernel zero_table(std::size_t n) {
  return Kernel::table(std::vector<double>(n * n, 0.0), n, 1.0, 1.0, 1.0, 1.0,
                       "zero");
}

}  // namespace

TEST_CASE("catalog kernels are exactly antisymmetric") {
  const DiscreteMeasure line = make_grid(1, 9, 1.0);
  const Kernel cauchy = Kernel::cauchy();
  const DiscreteMeasure ring = make_circle(10, 1.5);
  const Kernel conj = Kernel::circle_conjugate(1.5);
  const DiscreteMeasure dust = make_cantor_dust(1);
  const Kernel riesz = Kernel::riesz(2, 1.0);
  for (std::size_t i = 0; i < 9; ++i) {
    for (std::size_t j = 0; j < 9; ++j) {
      if (i == j) continue;
      CHECK(cauchy.eval(line, i, j) == -cauchy.eval(line, j, i));
      if (i < 4 && j < 4) {
        CHECK(riesz.eval(dust, i, j) == -riesz.eval(dust, j, i));
      }
      CHECK(conj.eval(ring, i, j) == -conj.eval(ring, j, i));
    }
  }
  CHECK(cauchy.odd());
  CHECK(!Kernel::inverse_square().odd());
}

TEST_CASE("kernels validate their measure shape") {
  const DiscreteMeasure plane = make_cantor_dust(1);
  CHECK_THROWS_AS(CzOperator(plane, Kernel::cauchy()), ValidationError);
  const DiscreteMeasure line = make_grid(1, 4, 1.0);
  CHECK_THROWS_AS(CzOperator(line, Kernel::circle_conjugate(1.0)),
                  ValidationError);
  CHECK_THROWS_AS(CzOperator(line, Kernel::riesz(2, 1.0)), ValidationError);
  CHECK_THROWS_AS(CzOperator(line, zero_table(9)), ValidationError);
  CHECK_THROWS_AS(Kernel::table({1.0}, 1, 1.0, 2.0, 1.0, 1.0, "bad-eps"),
                  ValidationError);
}

TEST_CASE("operator matrix carries weights and a zero diagonal") {
  const DiscreteMeasure mu = DiscreteMeasure::create(
      1, {0.0, 0.5, 2.0}, {0.25, 0.5, 0.25});
  const CzOperator op(mu, Kernel::cauchy());
  CHECK(op.entry(0, 0) == 0.0);
  CHECK(op.entry(1, 1) == 0.0);
  CHECK(op.entry(0, 1) == doctest::Approx(-1.0));   // 1/(0-0.5) * 0.5
  CHECK(op.entry(1, 0) == doctest::Approx(0.5));    // 1/(0.5-0) * 0.25
  CHECK(op.entry(2, 0) == doctest::Approx(0.125));  // 1/2 * 0.25
}

TEST_CASE("construction rejects non-finite table entries naming the pair") {
  std::vector<double> values(9, 0.5);
  values[0 * 3 + 2] = std::numeric_limits<double>::infinity();
  const Kernel bad = Kernel::table(values, 3, 1.0, 1.0, 1.0, 1.0, "broken");
  const DiscreteMeasure mu = make_grid(1, 3, 1.0);
  CHECK_THROWS_WITH_AS(CzOperator(mu, bad),
                       "kernel 'broken' non-finite at pair (0, 2)",
                       KernelDefect);
  CHECK_THROWS_AS(kernel_size_check(bad, mu), KernelDefect);
}

TEST_CASE("application matches the naive reference") {
  const DiscreteMeasure mu = make_grid(1, 33, 1.0);
  const CzOperator op(mu, Kernel::cauchy());
  const SampledFunction f = make_profile(mu, "power:2");
  const SampledFunction got = op.apply(f);
  std::vector<double> want(mu.size());
  oracle::apply(op.matrix(), f.values.data(), want.data(), mu.size());
  for (std::size_t i = 0; i < mu.size(); ++i) {
    CHECK(got.values[i] == doctest::Approx(want[i]).epsilon(1e-11));
  }
}

TEST_CASE("weighted antisymmetry of the bilinear form") {
  const DiscreteMeasure mu = make_circle(63, 1.0);
  const CzOperator op(mu, Kernel::circle_conjugate(1.0));
  const SampledFunction f = make_profile(mu, "harmonic:2");
  const SampledFunction g = make_profile(mu, "harmonic:5:sin");
  const SampledFunction tf = op.apply(f);
  const SampledFunction tg = op.apply(g);
  double lhs = 0.0, rhs = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    lhs += mu.weight(i) * g.values[i] * tf.values[i];
    rhs -= mu.weight(i) * f.values[i] * tg.values[i];
    scale += mu.weight(i) * (std::fabs(g.values[i] * tf.values[i]) +
                             std::fabs(f.values[i] * tg.values[i]));
  }
  CHECK(std::fabs(lhs - rhs) <= 1e-9 * scale);
}

TEST_CASE("rotating the circle by one step permutes the matrix entries") {
  const std::size_t n = 63;  // odd: no antipodal pairs
  const DiscreteMeasure mu = make_circle(n, 1.0);
  const CzOperator op(mu, Kernel::circle_conjugate(1.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double a = op.entry(i, j);
      const double b = op.entry((i + 1) % n, (j + 1) % n);
      CHECK(a == doctest::Approx(b).epsilon(1e-12));
    }
  }
}

TEST_CASE("scaling the kernel scales the operator exactly") {
  const DiscreteMeasure mu = make_grid(1, 16, 1.0);
  std::vector<double> values(16 * 16);
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> entry(-1.0, 1.0);
  for (double& v : values) v = entry(gen);
  std::vector<double> doubled = values;
  for (double& v : doubled) v *= 2.0;
  const CzOperator one(mu, Kernel::table(values, 16, 1.0, 1.0, 8.0, 8.0, "t"));
  const CzOperator two(mu, Kernel::table(doubled, 16, 1.0, 1.0, 16.0, 16.0, "t2"));
  const SampledFunction f = make_profile(mu, "random:6");
  const SampledFunction a = one.apply(f);
  const SampledFunction b = two.apply(f);
  for (std::size_t i = 0; i < mu.size(); ++i) {
    CHECK(2.0 * a.values[i] == b.values[i]);
  }
}

TEST_CASE("the zero kernel gives a zero operator everywhere") {
  const DiscreteMeasure mu = make_grid(1, 12, 1.0);
  const CzOperator op(mu, zero_table(12));
  const SampledFunction f = make_profile(mu, "random:9");
  for (double v : op.apply(f).values) CHECK(v == 0.0);
  std::size_t iters = 0;
  bool converged = false;
  CHECK(op.norm_l2(1e-6, 100, &iters, &converged) == 0.0);
  CHECK(converged);
  const T1Result t1 = t1_norm(op, 0.5, exhaustive(mu));
  CHECK(t1.value == 0.0);
  CHECK(kernel_size_check(op.kernel(), mu).pass);
}

TEST_CASE("size bound is tight for the line kernel and fails for its square") {
  const DiscreteMeasure mu = make_grid(1, 33, 1.0);
  const SizeCheck good = kernel_size_check(Kernel::cauchy(), mu);
  CHECK(good.pass);
  CHECK(good.worst_ratio == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(good.samples == 33 * 32);

  // Spacing 1/32: |K(x,y)| |x-y| = 1/|x-y| peaks at adjacent atoms.
  const SizeCheck bad = kernel_size_check(Kernel::inverse_square(), mu);
  CHECK(!bad.pass);
  CHECK(bad.worst_ratio == doctest::Approx(32.0).epsilon(1e-12));
  CHECK(bad.i == 0);
  CHECK(bad.j == 1);
}

TEST_CASE("size check over explicit pairs") {
  const DiscreteMeasure mu = make_grid(1, 9, 1.0);
  const std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs = {
      {0, 8}, {3, 4}};
  const SizeCheck check = kernel_size_check(Kernel::cauchy(), mu, pairs);
  CHECK(check.samples == 2);
  CHECK(check.pass);
  const std::vector<std::pair<std::uint32_t, std::uint32_t>> diag = {{2, 2}};
  CHECK_THROWS_AS(kernel_size_check(Kernel::cauchy(), mu, diag),
                  ValidationError);
}

TEST_CASE("regularity bound attains two on a uniform line") {
  const DiscreteMeasure mu = make_grid(1, 33, 1.0);
  const RegularityCheck check = kernel_regularity_check(Kernel::cauchy(), mu);
  CHECK(check.pass);
  CHECK(check.worst_ratio == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(mu.distance(check.i, check.j) >= 2.0 * mu.distance(check.i, check.ip));
  CHECK(check.samples > 0);
}

TEST_CASE("regularity over explicit triples validates separation") {
  const DiscreteMeasure mu = make_grid(1, 9, 1.0);
  const std::vector<std::array<std::uint32_t, 3>> good = {{0, 1, 4}};
  CHECK(kernel_regularity_check(Kernel::cauchy(), mu, good).samples == 1);
  const std::vector<std::array<std::uint32_t, 3>> close = {{0, 3, 4}};
  CHECK_THROWS_AS(kernel_regularity_check(Kernel::cauchy(), mu, close),
                  ValidationError);
}

TEST_CASE("planar kernels pass their declared bounds") {
  const DiscreteMeasure dust = make_cantor_dust(2);
  const Kernel riesz = Kernel::riesz(1, 1.0);
  CHECK(kernel_size_check(riesz, dust).pass);
  const RegularityCheck rd = kernel_regularity_check(riesz, dust);
  CHECK(rd.pass);
  CHECK(rd.worst_ratio <= 12.0);

  const DiscreteMeasure ring = make_circle(64, 2.0);
  const Kernel conj = Kernel::circle_conjugate(2.0);
  const SizeCheck sc = kernel_size_check(conj, ring);
  CHECK(sc.pass);
  CHECK(sc.worst_ratio <= 1.0 + 1e-12);
  const RegularityCheck rc = kernel_regularity_check(conj, ring);
  CHECK(rc.pass);
  CHECK(rc.worst_ratio >= 1.0);
  CHECK(rc.worst_ratio <= 2.2);  // the supremum over admissible triples is 2
}

TEST_CASE("truncated application splits the full sum when the ball covers it") {
  const DiscreteMeasure mu = make_grid(1, 33, 1.0);
  const CzOperator op(mu, Kernel::cauchy());
  const SampledFunction f = make_profile(mu, "random:17");
  const CzOperator::LocalValues tb = op.apply_tb(f, Ball{16, 2.0});
  REQUIRE(tb.members.size() == mu.size());
  const SampledFunction full = op.apply(f);
  for (std::size_t k = 0; k < tb.members.size(); ++k) {
    CHECK(tb.values[k] ==
          doctest::Approx(full.values[tb.members[k]]).epsilon(1e-12));
  }
}

TEST_CASE("truncated application matches the direct formula") {
  struct Case {
    DiscreteMeasure mu;
    Kernel kernel;
    Ball ball;
  };
  Case cases[] = {
      {make_grid(1, 33, 1.0), Kernel::cauchy(), Ball{10, 0.2}},
      {make_circle(32, 1.0), Kernel::circle_conjugate(1.0), Ball{5, 0.7}},
      {make_cantor_dust(2), Kernel::riesz(1, 1.0), Ball{3, 0.2}},
  };
  for (const Case& c : cases) {
    const CzOperator op(c.mu, c.kernel);
    const SampledFunction f = make_profile(c.mu, "random:23");
    const CzOperator::LocalValues tb = op.apply_tb(f, c.ball);
    CHECK(tb.members == c.mu.neighbors_within(c.ball.center, c.ball.radius));
    for (std::size_t k = 0; k < tb.members.size(); ++k) {
      const double want = oracle::tb_at(c.mu, c.kernel, f.values.data(), c.ball,
                                        tb.members[k]);
      CHECK(tb.values[k] == doctest::Approx(want).epsilon(1e-10));
    }
  }
}

TEST_CASE("a singleton ball sees zero at its own center") {
  const DiscreteMeasure mu = make_grid(1, 33, 1.0);
  const CzOperator op(mu, Kernel::cauchy());
  const SampledFunction f = make_profile(mu, "random:29");
  const double tiny = 0.25 * mu.resolution();
  const CzOperator::LocalValues tb = op.apply_tb(f, Ball{7, tiny});
  REQUIRE(tb.members == std::vector<std::uint32_t>{7});
  CHECK(tb.values[0] == 0.0);
}

TEST_CASE("nested truncations differ by a near-constant") {
  const DiscreteMeasure mu = make_grid(1, 65, 1.0);
  const CzOperator op(mu, Kernel::cauchy());
  const SampledFunction f = make_profile(mu, "power:2");
  const TbGap gap = tb_consistency(op, f, Ball{32, 0.1}, Ball{32, 0.4});
  CHECK(gap.scale > 0.0);
  CHECK(gap.deviation <= 1e-9 * gap.scale);
  CHECK_THROWS_AS(tb_consistency(op, f, Ball{32, 0.4}, Ball{0, 0.4}),
                  ValidationError);
}

TEST_CASE("the consistency sweep covers every containment pair") {
  const DiscreteMeasure mu = make_grid(1, 30, 1.0);
  const CzOperator op(mu, Kernel::cauchy());
  const SampledFunction f = make_profile(mu, "random:31");
  const FamilyIndex family = exhaustive(mu);
  const TbSweep sweep = tb_consistency_sweep(op, f, family);
  CHECK(sweep.pairs ==
        oracle::nested_pairs(mu, family.family().balls, -1.0).size());
  CHECK(sweep.worst_rel <= 1e-9);
  CHECK(sweep.worst_scale > 0.0);

  const int before = max_threads();
  set_num_threads(4);
  const TbSweep again = tb_consistency_sweep(op, f, family);
  set_num_threads(before);
  CHECK(again.worst_deviation == sweep.worst_deviation);
  CHECK(again.worst_scale == sweep.worst_scale);
  CHECK(again.worst_pair.inner == sweep.worst_pair.inner);
  CHECK(again.worst_pair.outer == sweep.worst_pair.outer);
}

TEST_CASE("power iteration recovers a hand-computed operator norm") {
  const DiscreteMeasure mu =
      DiscreteMeasure::create(1, {0.0, 1.0}, {0.5, 0.5});
  const CzOperator op(mu, Kernel::cauchy());
  std::size_t iterations = 0;
  bool converged = false;
  const double norm = op.norm_l2(1e-9, 100, &iterations, &converged);
  // The weighted matrix has entries +-1/2, so the norm is exactly 1/2.
  CHECK(norm == doctest::Approx(0.5).epsilon(1e-8));
  CHECK(converged);
  CHECK(iterations >= 2);
}

TEST_CASE("annihilation of constants distinguishes the two line kernels") {
  const DiscreteMeasure ring = make_circle(64, 1.0);
  const CzOperator conj(ring, Kernel::circle_conjugate(1.0));
  const T1Result symmetric = t1_norm(conj, 0.5, exhaustive(ring));
  CHECK(symmetric.value <= 1e-12);
  CHECK(symmetric.rungs >= 1);
  CHECK(symmetric.representative.values.size() == ring.size());

  const DiscreteMeasure line = make_grid(1, 33, 1.0);
  const CzOperator cauchy(line, Kernel::cauchy());
  const T1Result lopsided = t1_norm(cauchy, 0.5, exhaustive(line));
  CHECK(lopsided.value > 0.1);

  CHECK_THROWS_AS(t1_norm(cauchy, 1.0, exhaustive(line)), ValidationError);
  CHECK_THROWS_AS(t1_norm(cauchy, -0.1, exhaustive(line)), ValidationError);
}

TEST_CASE("a single atom has a trivial stitched representative") {
  const DiscreteMeasure mu = DiscreteMeasure::create(1, {0.7}, {1.0});
  const CzOperator op(mu, zero_table(1));
  const T1Result t1 = t1_norm(op, 0.5, exhaustive(mu));
  CHECK(t1.value == 0.0);
  CHECK(t1.rungs == 1);
  CHECK(t1.representative.values == std::vector<double>{0.0});
}

TEST_CASE("oscillation growth experiment on a short line") {
  const DiscreteMeasure mu = make_grid(1, 5, 1.0);
  const CzOperator op(mu, Kernel::cauchy());
  const FamilyIndex family = exhaustive(mu);
  const std::vector<std::pair<std::string, SampledFunction>> functions = {
      {"linear", make_profile(mu, "linear")},
      {"const:2", make_profile(mu, "const:2")},
      {"random:3", make_profile(mu, "random:3")},
  };
  const BoundednessTable table =
      boundedness_experiment(op, 0.5, functions, family);
  REQUIRE(table.rows.size() == 3);
  CHECK(table.op_norm > 0.0);
  CHECK(!table.rows[0].skipped);
  CHECK(table.rows[1].skipped);  // constants carry no seminorm
  CHECK(table.rows[1].lip_f == 0.0);
  for (const BoundednessRow& row : table.rows) {
    if (row.skipped) continue;
    CHECK(row.lip_f > 0.0);
    CHECK(row.lip_tf > 0.0);
    CHECK(row.ratio == doctest::Approx(row.lip_tf / row.lip_f));
    CHECK(row.triangle_violations == 0);
    CHECK(row.worst.avg_total <=
          (row.worst.a1 + row.worst.a2 + row.worst.a3) * (1.0 + 1e-9) + 1e-300);
    CHECK(row.worst.osc_part <= row.lip_tf);
    CHECK(row.worst.pair_part <= row.lip_tf);
  }
}

TEST_CASE("tail sums track the closed form on a unit-density line") {
  const DiscreteMeasure mu = parse_generator(
      "grid:d=1,per_side=401,side=4,origin=-2,density=1");
  REQUIRE(mu.point(200)[0] == doctest::Approx(0.0));
  const TailResult tail = tail_integral_check(mu, Ball{200, 0.25}, 1.0, 1.0, 0.5);
  CHECK(tail.atoms_outside == 300);
  const double want = oracle::tail_closed_form(2.0, 0.25, 1.0, 0.5);
  CHECK(tail.value == doctest::Approx(want).epsilon(0.05));
  CHECK(tail.bound_ratio == doctest::Approx(tail.value * std::sqrt(0.25)));

  const TailResult swallowed =
      tail_integral_check(mu, Ball{200, 5.0}, 1.0, 1.0, 0.5);
  CHECK(swallowed.value == 0.0);
  CHECK(swallowed.bound_ratio == 0.0);
  CHECK(swallowed.atoms_outside == 0);

  CHECK_THROWS_AS(tail_integral_check(mu, Ball{200, 0.25}, 1.0, 0.5, 0.5),
                  ValidationError);
}

TEST_CASE("operators reject oversized measures") {
  const DiscreteMeasure mu = make_grid(1, 4097, 1.0);
  CHECK_THROWS_AS(CzOperator(mu, Kernel::cauchy()), ValidationError);
}
