#include "osclab/lipschitz.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "osclab/kernels.hpp"

namespace osclab {

namespace {

void check(bool ok, const std::string& msg) {
  if (!ok) throw ValidationError(msg);
}

void check_alpha(double alpha) {
  check(alpha > 0.0 && alpha <= 1.0, "alpha must be in (0, 1]");
}

struct PosBest {
  double value = 0.0;
  std::int64_t pos = -1;

  void update(double v, std::int64_t p) {
    if (pos < 0 || v > value || (v == value && p < pos)) {
      value = v;
      pos = p;
    }
  }

  void merge(const PosBest& o) {
    if (o.pos >= 0) update(o.value, o.pos);
  }
};

/// Deterministic parallel argmax over positions 0..count-1; ties go to the
/// lowest position regardless of scheduling.
template <class Q>
PosBest scan_positions(std::size_t count, Q&& quotient) {
  PosBest best;
#pragma omp parallel
  {
    PosBest local;
#pragma omp for schedule(static)
    for (std::int64_t p = 0; p < static_cast<std::int64_t>(count); ++p) {
      local.update(quotient(static_cast<std::size_t>(p)), p);
    }
#pragma omp critical
    best.merge(local);
  }
  return best;
}

struct SweepData {
  std::vector<kernels::BallStat> stats;
  std::vector<double> r_alpha;  // radius^alpha per ball
};

SweepData sweep(const FamilyIndex& family, const SampledFunction& f,
                double alpha, double rho) {
  SweepData data;
  data.stats.resize(family.size());
  kernels::ball_sweep(family.measure(), family.balls(), f.values.data(), rho,
                      data.stats.data());
  data.r_alpha.resize(family.size());
  for (std::size_t b = 0; b < family.size(); ++b) {
    data.r_alpha[b] = std::pow(family.ball(b).radius, alpha);
  }
  return data;
}

void fill_pair_part(const FamilyIndex& family, const SweepData& data, double rho,
                    OscillationResult& out) {
  const auto& pairs = family.pairs(rho);
  if (pairs.empty()) return;
  const PosBest best = scan_positions(pairs.size(), [&](std::size_t p) {
    const BallPair& pr = pairs[p];
    return std::fabs(data.stats[pr.inner].mean - data.stats[pr.outer].mean) /
           data.r_alpha[pr.inner];
  });
  out.pair = best.value;
  out.pair_inner = pairs[static_cast<std::size_t>(best.pos)].inner;
  out.pair_outer = pairs[static_cast<std::size_t>(best.pos)].outer;
}

OscillationResult osc_part(const FamilyIndex& family, const SweepData& data,
                           double (*osc_of)(const kernels::BallStat&, double)) {
  OscillationResult out;
  MaxLoc best;
  for (std::size_t b = 0; b < family.size(); ++b) {
    best.update(osc_of(data.stats[b], data.r_alpha[b]),
                static_cast<std::int64_t>(b));
  }
  out.osc = best.value;
  out.osc_ball = best.index;
  return out;
}

OscillationResult assemble(const FamilyIndex& family, const SweepData& data,
                           double rho,
                           double (*osc_of)(const kernels::BallStat&, double)) {
  OscillationResult out = osc_part(family, data, osc_of);
  fill_pair_part(family, data, rho, out);
  out.value = std::max(out.osc, out.pair);
  return out;
}

void check_family_inputs(const FamilyIndex& family, const SampledFunction& f,
                         double rho) {
  check(family.size() > 0, "oscillation: family must be nonempty");
  check(rho > 1.0, "oscillation: rho must be > 1");
  validate_function(family.measure(), f);
}

double osc_i(const kernels::BallStat& s, double ra) {
  return s.abs_dev / s.mass_rho / ra;
}
double osc_p1(const kernels::BallStat& s, double ra) {
  return s.abs_dev / s.mass / ra;
}
double osc_p2(const kernels::BallStat& s, double ra) {
  return std::sqrt(s.sq_dev / s.mass) / ra;
}
double osc_pinf(const kernels::BallStat& s, double ra) {
  return s.max_dev / ra;
}

double (*osc_fn(MeanPower p))(const kernels::BallStat&, double) {
  switch (p) {
    case MeanPower::p1: return osc_p1;
    case MeanPower::p2: return osc_p2;
    default: return osc_pinf;
  }
}

}  // namespace

SampledFunction make_profile(const DiscreteMeasure& mu, const std::string& spec) {
  const std::size_t n = mu.size();
  SampledFunction f;
  f.values.resize(n);

  auto arg_after = [&](std::size_t prefix) {
    return spec.substr(prefix);
  };
  auto parse_num = [&](const std::string& text) {
    try {
      std::size_t used = 0;
      const double v = std::stod(text, &used);
      check(used == text.size(), "profile: bad number '" + text + "'");
      return v;
    } catch (const ValidationError&) {
      throw;
    } catch (const std::exception&) {
      throw ValidationError("profile: bad number '" + text + "'");
    }
  };

  if (spec == "linear") {
    for (std::size_t i = 0; i < n; ++i) f.values[i] = mu.point(i)[0];
  } else if (spec.rfind("coord:", 0) == 0) {
    const int k = static_cast<int>(parse_num(arg_after(6)));
    check(k >= 1 && k <= mu.dim(), "profile: coord index out of range");
    for (std::size_t i = 0; i < n; ++i) f.values[i] = mu.point(i)[k - 1];
  } else if (spec.rfind("power:", 0) == 0) {
    const double q = parse_num(arg_after(6));
    for (std::size_t i = 0; i < n; ++i) {
      f.values[i] = std::pow(mu.point(i)[0], q);
      check(std::isfinite(f.values[i]),
            "profile: power produced a non-finite value");
    }
  } else if (spec == "radial") {
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (int k = 0; k < mu.dim(); ++k) s += mu.point(i)[k] * mu.point(i)[k];
      f.values[i] = std::sqrt(s);
    }
  } else if (spec.rfind("harmonic:", 0) == 0) {
    check(mu.dim() >= 2, "profile: harmonic needs dim >= 2");
    std::string rest = arg_after(9);
    bool use_sin = false;
    if (rest.size() >= 4 && rest.substr(rest.size() - 4) == ":sin") {
      use_sin = true;
      rest = rest.substr(0, rest.size() - 4);
    } else if (rest.size() >= 4 && rest.substr(rest.size() - 4) == ":cos") {
      rest = rest.substr(0, rest.size() - 4);
    }
    const double k = parse_num(rest);
    for (std::size_t i = 0; i < n; ++i) {
      const double theta = std::atan2(mu.point(i)[1], mu.point(i)[0]);
      f.values[i] = use_sin ? std::sin(k * theta) : std::cos(k * theta);
    }
  } else if (spec.rfind("random:", 0) == 0) {
    const auto seed = static_cast<std::uint64_t>(parse_num(arg_after(7)));
    std::mt19937_64 gen(seed);
    for (std::size_t i = 0; i < n; ++i) {
      f.values[i] = static_cast<double>(gen() >> 11) * 0x1.0p-53;
    }
  } else if (spec.rfind("const:", 0) == 0) {
    const double c = parse_num(arg_after(6));
    std::fill(f.values.begin(), f.values.end(), c);
  } else {
    throw ValidationError("profile: unknown spec '" + spec + "'");
  }
  return f;
}

void validate_function(const DiscreteMeasure& mu, const SampledFunction& f) {
  check(f.values.size() == mu.size(),
        "function: values must align with the support");
  for (double v : f.values) {
    check(std::isfinite(v), "function: values must be finite");
  }
}

double ball_mean(const DiscreteMeasure& mu, const SampledFunction& f,
                 const Ball& ball) {
  validate_function(mu, f);
  check(ball.radius > 0.0, "ball_mean: radius must be > 0");
  if (ball.center >= mu.size()) throw std::out_of_range("ball_mean: center index");
  const std::vector<std::uint32_t> members =
      mu.neighbors_within(ball.center, ball.radius);
  const double mass = mu.mass_of(members);
  return kernels::detail::centered_mean(mu, f.values.data(), members,
                                        ball.center, mass);
}

HolderResult c2_seminorm(const DiscreteMeasure& mu, const SampledFunction& f,
                         double alpha) {
  check_alpha(alpha);
  validate_function(mu, f);
  check(mu.size() >= 2, "c2_seminorm: need at least two atoms");
  const kernels::HolderMax m = kernels::holder_scan(mu, f.values.data(), alpha);
  return {m.value, m.i, m.j};
}

MeanPower parse_mean_power(const std::string& text) {
  if (text == "1") return MeanPower::p1;
  if (text == "2") return MeanPower::p2;
  if (text == "inf") return MeanPower::pinf;
  throw ValidationError("p must be one of 1, 2, inf");
}

std::string mean_power_name(MeanPower p) {
  switch (p) {
    case MeanPower::p1: return "1";
    case MeanPower::p2: return "2";
    default: return "inf";
  }
}

OscillationResult oscillation_condition_i(const FamilyIndex& family,
                                          const SampledFunction& f,
                                          double alpha, double rho) {
  check_alpha(alpha);
  check_family_inputs(family, f, rho);
  const SweepData data = sweep(family, f, alpha, rho);
  return assemble(family, data, rho, osc_i);
}

OscillationResult oscillation_condition_iii(const FamilyIndex& family,
                                            const SampledFunction& f,
                                            double alpha, MeanPower p,
                                            double rho) {
  check_alpha(alpha);
  check_family_inputs(family, f, rho);
  const SweepData data = sweep(family, f, alpha, rho);
  return assemble(family, data, rho, osc_fn(p));
}

RbmoResult rbmo_norm(const FamilyIndex& family, const SampledFunction& f,
                     double n, double rho) {
  check(n > 0.0, "rbmo_norm: n must be > 0");
  check_family_inputs(family, f, rho);
  const DiscreteMeasure& mu = family.measure();

  RbmoResult out;
  const SweepData data = sweep(family, f, 0.0, rho);  // alpha unused: r^0 = 1
  MaxLoc osc;
  for (std::size_t b = 0; b < family.size(); ++b) {
    osc.update(data.stats[b].abs_dev / data.stats[b].mass_rho,
               static_cast<std::int64_t>(b));
  }
  out.osc = osc.value;
  out.osc_ball = osc.index;

  const KConstantCache kcache(mu, family.balls(), n, family.family().r_max);

  struct TripleBest {
    double value = 0.0;
    std::int64_t b = -1, u = -1;
    void update(double v, std::int64_t bb, std::int64_t uu) {
      if (b < 0 || v > value || (v == value && (bb < b || (bb == b && uu < u)))) {
        value = v;
        b = bb;
        u = uu;
      }
    }
  };
  TripleBest best;
#pragma omp parallel
  {
    TripleBest local;
    std::vector<std::uint32_t> scratch;
#pragma omp for schedule(dynamic, 16)
    for (std::int64_t b = 0; b < static_cast<std::int64_t>(family.size()); ++b) {
      const std::uint32_t bb = static_cast<std::uint32_t>(b);
      family.for_each_outer(bb, kNoRadiusCap, scratch, [&](std::uint32_t u) {
        const double q = std::fabs(data.stats[bb].mean - data.stats[u].mean) /
                         kcache.value(bb, family.ball(u).radius);
        local.update(q, b, static_cast<std::int64_t>(u));
      });
    }
#pragma omp critical
    {
      if (local.b >= 0) best.update(local.value, local.b, local.u);
    }
  }
  if (best.b >= 0) {
    out.pair = best.value;
    out.pair_inner = best.b;
    out.pair_outer = best.u;
    out.k_at_witness = kcache.value(static_cast<std::uint32_t>(best.b),
                                    family.ball(static_cast<std::size_t>(best.u)).radius);
  }
  out.value = std::max(out.osc, out.pair);
  return out;
}

LipschitzReport full_report(const FamilyIndex& family, const SampledFunction& f,
                            double alpha, double rho) {
  check_alpha(alpha);
  check_family_inputs(family, f, rho);
  check(family.measure().size() >= 2, "full_report: need at least two atoms");

  LipschitzReport rep;
  rep.alpha = alpha;
  rep.rho = rho;

  const SweepData data = sweep(family, f, alpha, rho);
  // The nested-pair part does not depend on the mean power, so scan the
  // pair list once and share the result across all four flavors.
  OscillationResult shared;
  fill_pair_part(family, data, rho, shared);
  auto with_shared_pair =
      [&](double (*osc_of)(const kernels::BallStat&, double)) {
        OscillationResult out = osc_part(family, data, osc_of);
        out.pair = shared.pair;
        out.pair_inner = shared.pair_inner;
        out.pair_outer = shared.pair_outer;
        out.value = std::max(out.osc, out.pair);
        return out;
      };
  rep.cond_i = with_shared_pair(osc_i);
  rep.cond_iii[0] = with_shared_pair(osc_p1);
  rep.cond_iii[1] = with_shared_pair(osc_p2);
  rep.cond_iii[2] = with_shared_pair(osc_pinf);
  rep.c2 = c2_seminorm(family.measure(), f, alpha);

  const double two_alpha = std::pow(2.0, alpha);
  const double two_rho_alpha = std::pow(2.0 * rho, alpha);
  auto add = [&](const std::string& name, double lhs, double rhs, bool exact) {
    const bool ok = exact ? lhs == rhs : approx_le(lhs, rhs);
    rep.chain.push_back({name, lhs, rhs, ok});
  };
  add("cond_i<=cond_iii_p1", rep.cond_i.value, rep.cond_iii[0].value, false);
  add("cond_i<=cond_iii_p2", rep.cond_i.value, rep.cond_iii[1].value, false);
  add("cond_i<=cond_iii_pinf", rep.cond_i.value, rep.cond_iii[2].value, false);
  add("pair_part_shared", rep.cond_i.pair, rep.cond_iii[0].pair, true);
  add("osc_p1<=osc_p2", rep.cond_iii[0].osc, rep.cond_iii[1].osc, false);
  add("osc_p2<=osc_pinf", rep.cond_iii[1].osc, rep.cond_iii[2].osc, false);
  add("osc_p1<=2^alpha*c2", rep.cond_iii[0].osc, two_alpha * rep.c2.value, false);
  add("osc_p2<=2^alpha*c2", rep.cond_iii[1].osc, two_alpha * rep.c2.value, false);
  add("osc_pinf<=2^alpha*c2", rep.cond_iii[2].osc, two_alpha * rep.c2.value, false);
  add("pair<=(2rho)^alpha*c2", rep.cond_i.pair, two_rho_alpha * rep.c2.value, false);

  rep.chain_ok = true;
  for (const ChainCheck& c : rep.chain) rep.chain_ok = rep.chain_ok && c.ok;
  return rep;
}

}  // namespace osclab
