// Acceptance gate: nine end-to-end scenarios, one per command-line argument.
// Each prints exactly one line "ACCEPTANCE <k> <name>: PASS|FAIL (...)" and
// exits 0 or 1. Tolerances and wall-clock budgets are pinned here; the
// scenario fails rather than loosening them.

#include <sys/wait.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "osclab/czo.hpp"
#include "osclab/geometry.hpp"
#include "osclab/lipschitz.hpp"
#include "osclab/measure.hpp"
#include "oracles.hpp"

using namespace osclab;

namespace {

using Clock = std::chrono::steady_clock;

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

struct Gate {
  bool ok = true;
  std::vector<std::string> notes;
  std::vector<std::string> failures;

  void require(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      if (failures.size() < 6) failures.push_back(what);
    }
  }
  void note(const std::string& text) { notes.push_back(text); }
};

// 1. On three measures, for 100 seeded random functions each (alpha cycling
// through 0.3 / 0.5 / 1.0), every seminorm comparison in the chain must hold
// with 1e-9 relative slack and the pair parts must be bitwise shared.
void seminorm_chains(Gate& g) {
  const double alphas[3] = {0.3, 0.5, 1.0};
  const struct {
    const char* name;
    DiscreteMeasure mu;
  } cases[] = {
      {"grid101", make_grid(1, 101, 1.0)},
      {"circle128", make_circle(128, 1.0)},
      {"dust3", make_cantor_dust(3)},
  };
  int reports = 0;
  for (const auto& c : cases) {
    const FamilyIndex family(c.mu,
                             enumerate_ball_family(c.mu, ExhaustiveFamily{}));
    for (int seed = 1; seed <= 100; ++seed) {
      const double alpha = alphas[(seed - 1) % 3];
      const SampledFunction f =
          make_profile(c.mu, "random:" + std::to_string(seed));
      const LipschitzReport rep = full_report(family, f, alpha);
      ++reports;
      const std::string tag = std::string(c.name) + " seed " +
                              std::to_string(seed) + " alpha " + num(alpha);
      g.require(rep.chain_ok, tag + ": a chain inequality failed");
      const double c2 = rep.c2.value;
      for (int p = 0; p < 3; ++p) {
        g.require(approx_le(rep.cond_i.osc, rep.cond_iii[p].osc),
                  tag + ": dilated-normalizer osc above the p-osc");
        g.require(rep.cond_i.pair == rep.cond_iii[p].pair,
                  tag + ": pair parts are not identical");
        g.require(approx_le(rep.cond_iii[p].osc, std::pow(2.0, alpha) * c2),
                  tag + ": osc above 2^alpha * pointwise seminorm");
      }
      g.require(approx_le(rep.cond_i.pair, std::pow(4.0, alpha) * c2),
                tag + ": pair above 4^alpha * pointwise seminorm");
      g.require(approx_le(rep.cond_iii[0].osc, rep.cond_iii[1].osc),
                tag + ": p=1 osc above p=2 osc");
      g.require(approx_le(rep.cond_iii[1].osc, rep.cond_iii[2].osc),
                tag + ": p=2 osc above p=inf osc");
    }
  }
  g.note(std::to_string(reports) + " reports across 3 measures");
}

// 2. The gap between the pointwise seminorm and the oscillation seminorms
// must stay within a fixed factor as a grid is refined.
void refinement_stability(Gate& g) {
  double lo = 1e300, hi = 0.0;
  for (int n : {200, 400, 800}) {
    const DiscreteMeasure mu = make_grid(1, n, 1.0);
    const FamilyIndex family(mu, enumerate_ball_family(mu, DyadicFamily{}));
    const SampledFunction f = make_profile(mu, "power:1.5");
    const LipschitzReport rep = full_report(family, f, 0.5);
    const double base = std::max(rep.cond_i.osc, rep.cond_i.pair);
    g.require(base > 0.0,
              "grid " + std::to_string(n) + ": degenerate oscillation");
    const double ratio = rep.c2.value / base;
    lo = std::min(lo, ratio);
    hi = std::max(hi, ratio);
    g.note("N=" + std::to_string(n) + " ratio " + num(ratio));
  }
  g.require(hi < 2.0 * lo, "ratio spread " + num(hi / lo) + " reaches x2");
}

double brute_mass(const DiscreteMeasure& mu, std::uint32_t center, double r) {
  return oracle::ball_mass(mu, mu.point(center), r);
}

// 3. On the unit grid every dyadic radius in [4h, 1/4] is 4-doubling at
// every center; the accumulating measure has a failing radius at its
// accumulation atom. All flags are re-derived from brute-force masses.
void doubling_scan(Gate& g) {
  const DiscreteMeasure grid = make_grid(1, 101, 1.0);
  for (std::uint32_t c = 0; c < grid.size(); ++c) {
    const DoublingReport rep = doubling_search(grid, c, 4.0, 0.25, 2);
    g.require(rep.entries.size() == 3, "grid: expected radii 1/4, 1/8, 1/16");
    for (const DoublingEntry& e : rep.entries) {
      const double m1 = brute_mass(grid, c, e.radius);
      const double m2 = brute_mass(grid, c, 2.0 * e.radius);
      const std::string where =
          "grid center " + std::to_string(c) + " r " + num(e.radius);
      g.require(std::fabs(e.mass - m1) <= 1e-12 * m1, where + ": mass");
      g.require(std::fabs(e.mass_doubled - m2) <= 1e-12 * m2,
                where + ": doubled mass");
      g.require(e.doubling == (m2 <= 4.0 * m1), where + ": flag vs brute force");
      g.require(e.doubling, where + ": not 4-doubling");
    }
  }
  const DiscreteMeasure acc = make_geometric_accumulation(12, 0.5);
  const DoublingReport rep = doubling_search(acc, 0, 2.5, 1.0, 14);
  std::size_t failing = 0;
  for (const DoublingEntry& e : rep.entries) {
    const double m1 = brute_mass(acc, 0, e.radius);
    const double m2 = brute_mass(acc, 0, 2.0 * e.radius);
    g.require(e.doubling == (m2 <= 2.5 * m1),
              "accumulation r " + num(e.radius) + ": flag vs brute force");
    if (!e.doubling) ++failing;
  }
  g.require(failing >= 1, "every accumulation radius was 2.5-doubling");
  g.note("101 grid centers clean, accumulation failures " +
         std::to_string(failing) + "/" + std::to_string(rep.entries.size()));
}

// 4. Exhaustive kernel bound checks on a 50-point grid, plus the deliberate
// counterexample that must fail the size bound.
void kernel_bounds(Gate& g) {
  const DiscreteMeasure grid = make_grid(1, 50, 1.0);
  const SizeCheck size = kernel_size_check(Kernel::cauchy(), grid);
  g.require(std::fabs(size.worst_ratio - 1.0) <= 1e-12,
            "cauchy size ratio " + num(size.worst_ratio) + " is not 1");
  g.require(size.pass, "cauchy size check failed");
  const RegularityCheck reg = kernel_regularity_check(Kernel::cauchy(), grid);
  g.require(reg.samples > 0, "no admissible triples sampled");
  g.require(reg.pass && reg.worst_ratio <= 2.0 * (1.0 + 1e-12),
            "cauchy regularity ratio " + num(reg.worst_ratio) + " above 2");
  const SizeCheck bad = kernel_size_check(Kernel::inverse_square(), grid);
  g.require(!bad.pass, "inverse-square size check unexpectedly passed");
  g.note("size " + num(size.worst_ratio) + ", regularity " +
         num(reg.worst_ratio) + " over " + std::to_string(reg.samples) +
         " triples, counterexample worst " + num(bad.worst_ratio));
}

// 5. The truncated operator changes by at most a constant between any two
// nested balls: deviation <= 1e-9 * scale over every containment pair.
void truncation_consistency(Gate& g) {
  struct Case {
    const char* name;
    DiscreteMeasure mu;
    Kernel kernel;
  };
  const Case cases[] = {
      {"line5+cauchy", make_grid(1, 5, 1.0), Kernel::cauchy()},
      {"circle64+conjugate", make_circle(64, 1.0),
       Kernel::circle_conjugate(1.0)},
      {"dust3+riesz", make_cantor_dust(3), Kernel::riesz(1, 1.0)},
  };
  for (const Case& c : cases) {
    const CzOperator op(c.mu, c.kernel);
    const FamilyIndex family(c.mu,
                             enumerate_ball_family(c.mu, ExhaustiveFamily{}));
    const SampledFunction f = make_profile(c.mu, "random:5");
    const TbSweep sweep = tb_consistency_sweep(op, f, family);
    g.require(sweep.pairs > 0, std::string(c.name) + ": no nested pairs");
    g.require(sweep.worst_rel <= 1e-9,
              std::string(c.name) + ": relative gap " + num(sweep.worst_rel));
    g.note(std::string(c.name) + " rel " + num(sweep.worst_rel) + " over " +
           std::to_string(sweep.pairs) + " pairs");
  }
}

// 6. The conjugate kernel on the uniform circle annihilates constants and
// its Lipschitz-to-Lipschitz ratios stabilize with N; the truncated Cauchy
// kernel on a grid endpoint does not annihilate constants.
void t1_dichotomy(Gate& g) {
  const int sizes[3] = {128, 256, 512};
  const char* fnames[3] = {"harmonic:1", "harmonic:2", "harmonic:3:sin"};
  std::array<std::array<double, 3>, 3> ratios{};
  double circle_t1 = 0.0;
  for (int k = 0; k < 3; ++k) {
    const DiscreteMeasure mu = make_circle(sizes[k], 1.0);
    const CzOperator op(mu, Kernel::circle_conjugate(1.0));
    const FamilyIndex family(mu, enumerate_ball_family(mu, DyadicFamily{}));
    const T1Result t1 = t1_norm(op, 0.5, family);
    circle_t1 = std::max(circle_t1, t1.value);
    g.require(t1.value <= 1e-12, "circle N=" + std::to_string(sizes[k]) +
                                     ": constant image seminorm " +
                                     num(t1.value));
    std::vector<std::pair<std::string, SampledFunction>> fs;
    for (const char* fn : fnames) fs.emplace_back(fn, make_profile(mu, fn));
    const BoundednessTable table = boundedness_experiment(op, 0.5, fs, family);
    g.require(table.rows.size() == 3, "unexpected row count");
    for (int i = 0; i < 3; ++i) {
      g.require(!table.rows[i].skipped && table.rows[i].ratio > 0.0,
                std::string(fnames[i]) + ": degenerate ratio");
      ratios[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] =
          table.rows[i].ratio;
    }
  }
  for (int i = 0; i < 3; ++i) {
    const auto& row = ratios[static_cast<std::size_t>(i)];
    const double lo = *std::min_element(row.begin(), row.end());
    const double hi = *std::max_element(row.begin(), row.end());
    g.require(hi < 2.0 * lo, std::string(fnames[i]) + ": ratio spread " +
                                 num(hi / lo) + " reaches x2");
    g.note(std::string(fnames[i]) + " spread " + num(hi / lo));
  }
  double grid_t1 = 1e300;
  for (int n : sizes) {
    const DiscreteMeasure mu = make_grid(1, n, 1.0);
    const CzOperator op(mu, Kernel::cauchy());
    const FamilyIndex family(mu, enumerate_ball_family(mu, DyadicFamily{}));
    const T1Result t1 = t1_norm(op, 0.5, family);
    g.require(t1.value > 0.1, "grid N=" + std::to_string(n) +
                                  ": constant image seminorm " + num(t1.value) +
                                  " not above 0.1");
    grid_t1 = std::min(grid_t1, t1.value);
  }
  g.note("circle t1 max " + num(circle_t1) + ", grid t1 min " + num(grid_t1));
}

// 7. The recentered tail sum matches its closed form on a long unit-density
// grid and its scale-normalized value stays uniformly bounded on the dust.
void tail_decay(Gate& g) {
  const DiscreteMeasure line = make_grid(1, 1601, 16.0, 0.0, -8.0);
  const std::uint32_t center = 800;
  g.require(std::fabs(line.point(center)[0]) < 1e-9,
            "grid center atom is not at the origin");
  for (double r : {0.25, 0.5, 1.0}) {
    const TailResult tail =
        tail_integral_check(line, Ball{center, r}, 1.0, 1.0, 0.5);
    const double closed =
        2.0 * (std::pow(2.0 * r, -0.5) - std::pow(8.0, -0.5)) / 0.5;
    g.require(std::fabs(tail.value - closed) <= 0.05 * closed,
              "r " + num(r) + ": tail " + num(tail.value) +
                  " vs closed form " + num(closed));
    g.note("r=" + num(r) + " tail " + num(tail.value) + " ~ " + num(closed));
  }
  // On the dust, take the worst ball of every rung. The normalized tail
  // must stay under a fixed ceiling on the whole ladder, and must be
  // two-sided comparable (< x2 spread) on rungs at least two doublings
  // below the diameter. On the top rungs the complement of the doubled
  // ball degenerates to a single truncated shell and the normalized value
  // genuinely dips, so no lower bound is asserted there.
  const DiscreteMeasure dust = make_cantor_dust(5);
  const double diam = dust.diameter();
  double lo = 1e300, hi = 0.0, sup = 0.0;
  std::size_t rungs = 0;
  for (double r = dust.resolution();; r *= 2.0) {
    double rung_max = 0.0;
    for (std::uint32_t c = 0; c < dust.size(); ++c) {
      const TailResult t = tail_integral_check(dust, Ball{c, r}, 1.0, 1.0, 0.5);
      rung_max = std::max(rung_max, t.bound_ratio);
    }
    sup = std::max(sup, rung_max);
    if (rung_max > 0.0 && 2.0 * r <= diam / 4.0) {
      lo = std::min(lo, rung_max);
      hi = std::max(hi, rung_max);
      ++rungs;
    }
    if (r >= diam) break;
  }
  g.require(sup <= 1.5, "dust normalized tail reached " + num(sup));
  g.require(rungs >= 5, "dust ladder kept only " + std::to_string(rungs) +
                            " scaling-regime rungs");
  g.require(hi < 2.0 * lo, "dust normalized tail spread " + num(hi / lo) +
                               " reaches x2 in the scaling regime");
  g.note("dust ceiling " + num(sup) + ", spread " + num(hi / lo) + " over " +
         std::to_string(rungs) + " rungs");
}

// 8. Endpoint norm: exactly zero on constants, at most twice the sup norm,
// and equal to the brute-force oracle on the 5-point line.
void rbmo_endpoint(Gate& g) {
  const DiscreteMeasure line = make_grid(1, 5, 1.0);
  const FamilyIndex family(line,
                           enumerate_ball_family(line, ExhaustiveFamily{}));
  const RbmoResult zero = rbmo_norm(family, make_profile(line, "const:3"), 1.0);
  g.require(zero.value == 0.0,
            "constant input has endpoint norm " + num(zero.value));

  std::vector<std::string> specs = {"linear", "power:2"};
  for (int s = 1; s <= 10; ++s) specs.push_back("random:" + std::to_string(s));
  for (const std::string& spec : specs) {
    const SampledFunction f = make_profile(line, spec);
    const RbmoResult got = rbmo_norm(family, f, 1.0);
    double sup = 0.0;
    for (double v : f.values) sup = std::max(sup, std::fabs(v));
    g.require(got.value <= 2.0 * sup * (1.0 + 1e-12),
              spec + ": value " + num(got.value) + " above twice the sup " +
                  num(sup));
    const oracle::OscParts want =
        oracle::rbmo(line, family.balls(), f.values.data(), 1.0, 2.0);
    const double want_value = std::max(want.osc, want.pair);
    g.require(std::fabs(got.value - want_value) <=
                  1e-12 * std::max(1.0, want_value),
              spec + ": oracle gives " + num(want_value) + ", got " +
                  num(got.value));
  }

  const DiscreteMeasure acc = make_geometric_accumulation(10, 0.5);
  const FamilyIndex afam(acc, enumerate_ball_family(acc, ExhaustiveFamily{}));
  for (int s = 1; s <= 5; ++s) {
    const SampledFunction f = make_profile(acc, "random:" + std::to_string(s));
    const RbmoResult got = rbmo_norm(afam, f, 1.0);
    double sup = 0.0;
    for (double v : f.values) sup = std::max(sup, std::fabs(v));
    g.require(got.value <= 2.0 * sup * (1.0 + 1e-12),
              "accumulation random:" + std::to_string(s) + ": value " +
                  num(got.value) + " above twice the sup");
  }
  g.note("12 line cases against the oracle, 5 accumulation sup bounds");
}

// 9. Every shipped fixture config replays byte-identically against its
// committed golden report, including under a different thread count.
void replay_determinism(Gate& g) {
  const std::string dir = OSCLAB_FIXTURE_DIR;
  const char* names[] = {"growth_line", "rbmo_accum", "t1_circle"};
  for (const char* name : names) {
    const std::string cfg = dir + "/" + name + ".cfg";
    const std::string golden = dir + "/" + name + ".golden.json";
    for (const char* extra : {"", " --threads 4"}) {
      const std::string cmd = std::string(OSCLAB_CLI_PATH) + " replay " + cfg +
                              " --check " + golden + extra +
                              " > /dev/null 2>&1";
      const int rc = std::system(cmd.c_str());
      const int code = (rc != -1 && WIFEXITED(rc)) ? WEXITSTATUS(rc) : -1;
      g.require(code == 0, std::string(name) + extra + ": replay exited " +
                               std::to_string(code));
    }
  }
  g.note("3 fixtures, direct and 4-thread replays");
}

struct Criterion {
  const char* name;
  void (*run)(Gate&);
  double budget_seconds;  // 0 = no pinned budget
};

std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (const std::string& p : parts) {
    if (!out.empty()) out += "; ";
    out += p;
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  const Criterion criteria[] = {
      {"seminorm-chains", seminorm_chains, 60.0},
      {"refinement-stability", refinement_stability, 0.0},
      {"doubling-scan", doubling_scan, 5.0},
      {"kernel-bounds", kernel_bounds, 10.0},
      {"truncation-consistency", truncation_consistency, 30.0},
      {"t1-dichotomy", t1_dichotomy, 120.0},
      {"tail-decay", tail_decay, 10.0},
      {"rbmo-endpoint", rbmo_endpoint, 5.0},
      {"replay-determinism", replay_determinism, 0.0},
  };
  if (argc != 2) {
    std::fprintf(stderr, "usage: %s <criterion 1..9>\n", argv[0]);
    return 2;
  }
  const int k = std::atoi(argv[1]);
  if (k < 1 || k > 9) {
    std::fprintf(stderr, "criterion must be 1..9, got '%s'\n", argv[1]);
    return 2;
  }
  const Criterion& crit = criteria[k - 1];

  Gate gate;
  const auto start = Clock::now();
  try {
    crit.run(gate);
  } catch (const std::exception& e) {
    gate.require(false, std::string("exception: ") + e.what());
  }
  const double elapsed =
      std::chrono::duration<double>(Clock::now() - start).count();
  if (crit.budget_seconds > 0.0) {
    gate.require(elapsed <= crit.budget_seconds,
                 "runtime " + num(elapsed) + "s over the " +
                     num(crit.budget_seconds) + "s budget");
  }

  std::string detail = gate.ok ? join(gate.notes) : join(gate.failures);
  if (!detail.empty()) detail += "; ";
  detail += "time " + num(elapsed) + "s";
  std::printf("ACCEPTANCE %d %s: %s (%s)\n", k, crit.name,
              gate.ok ? "PASS" : "FAIL", detail.c_str());
  return gate.ok ? 0 : 1;
}
