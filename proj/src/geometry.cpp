#include "osclab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace osclab {

namespace {

void check(bool ok, const std::string& msg) {
  if (!ok) throw ValidationError(msg);
}

constexpr std::size_t kMaxFamilyBalls = 20'000'000;
constexpr std::size_t kMaxLookupCells = 40'000'000;
// Runaway brake for quadratic families: 150M pairs is a ~1.2 GB list,
// comfortably above the largest exhaustive family the suite scans
// (a 128-atom circle needs ~83M) while still catching accidental
// all-pairs blowups on large random clouds.
constexpr std::size_t kMaxPairs = 150'000'000;

std::vector<double> distinct_distances(const DiscreteMeasure& mu) {
  const std::size_t n = mu.size();
  check(n <= 8192, "family: exhaustive enumeration capped at 8192 atoms");
  std::vector<double> d;
  d.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      d.push_back(mu.distance(i, j));
    }
  }
  std::sort(d.begin(), d.end());
  d.erase(std::unique(d.begin(), d.end()), d.end());
  return d;
}

std::vector<Ball> cross(const DiscreteMeasure& mu, const std::vector<double>& radii) {
  check(mu.size() * radii.size() <= kMaxFamilyBalls, "family: too many balls");
  std::vector<Ball> balls;
  balls.reserve(mu.size() * radii.size());
  for (std::uint32_t c = 0; c < mu.size(); ++c) {
    for (double r : radii) balls.push_back({c, r});
  }
  return balls;
}

/// Uniform draw from [0, bound) by rejection; avoids the unspecified
/// std::uniform_int_distribution algorithm so seeds replay identically
/// across standard libraries.
std::uint64_t bounded_rand(std::mt19937_64& gen, std::uint64_t bound) {
  const std::uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    const std::uint64_t v = gen();
    if (v >= threshold) return v % bound;
  }
}

void set_range(BallFamily& family) {
  if (family.balls.empty()) return;
  family.r_min = family.balls[0].radius;
  family.r_max = family.balls[0].radius;
  for (const Ball& b : family.balls) {
    family.r_min = std::min(family.r_min, b.radius);
    family.r_max = std::max(family.r_max, b.radius);
  }
}

}  // namespace

FamilyStrategy parse_family(const std::string& text) {
  if (text == "exhaustive") return ExhaustiveFamily{};
  if (text == "dyadic") return DyadicFamily{};
  if (text.rfind("sampled:", 0) == 0) {
    SampledFamily s;
    bool have_count = false;
    std::size_t pos = 8;
    while (pos < text.size()) {
      std::size_t next = text.find(',', pos);
      if (next == std::string::npos) next = text.size();
      const std::string item = text.substr(pos, next - pos);
      pos = next + 1;
      const std::size_t eq = item.find('=');
      check(eq != std::string::npos, "family: expected key=value in '" + item + "'");
      const std::string key = item.substr(0, eq);
      const std::string val = item.substr(eq + 1);
      try {
        if (key == "m") {
          s.count = std::stoull(val);
          have_count = true;
        } else if (key == "seed") {
          s.seed = std::stoull(val);
        } else {
          throw ValidationError("family: unknown field '" + key + "'");
        }
      } catch (const ValidationError&) {
        throw;
      } catch (const std::exception&) {
        throw ValidationError("family: bad number for '" + key + "'");
      }
    }
    check(have_count, "family: sampled needs m=<count>");
    return s;
  }
  throw ValidationError("family: unknown strategy '" + text + "'");
}

std::string family_name(const FamilyStrategy& strategy) {
  if (std::holds_alternative<ExhaustiveFamily>(strategy)) return "exhaustive";
  if (std::holds_alternative<DyadicFamily>(strategy)) return "dyadic";
  const auto& s = std::get<SampledFamily>(strategy);
  return "sampled:m=" + std::to_string(s.count) + ",seed=" + std::to_string(s.seed);
}

BallFamily enumerate_ball_family(const DiscreteMeasure& mu,
                                 const FamilyStrategy& strategy) {
  BallFamily family;
  family.descriptor = family_name(strategy);
  if (std::holds_alternative<ExhaustiveFamily>(strategy)) {
    if (mu.size() > 1) family.balls = cross(mu, distinct_distances(mu));
  } else if (std::holds_alternative<DyadicFamily>(strategy)) {
    std::vector<double> radii;
    double r = mu.resolution();
    radii.push_back(r);
    while (r < mu.diameter()) {
      r *= 2.0;
      radii.push_back(r);
    }
    family.balls = cross(mu, radii);
  } else {
    const auto& s = std::get<SampledFamily>(strategy);
    check(s.count > 0, "family: sampled count must be > 0");
    BallFamily full = enumerate_ball_family(mu, ExhaustiveFamily{});
    if (s.count >= full.balls.size()) {
      family.balls = std::move(full.balls);
    } else {
      std::mt19937_64 gen(s.seed);
      std::vector<std::uint64_t> idx(full.balls.size());
      for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
      for (std::size_t i = 0; i < s.count; ++i) {
        const std::uint64_t j = i + bounded_rand(gen, idx.size() - i);
        std::swap(idx[i], idx[j]);
      }
      idx.resize(s.count);
      std::sort(idx.begin(), idx.end());
      family.balls.reserve(s.count);
      for (std::uint64_t i : idx) family.balls.push_back(full.balls[i]);
    }
  }
  set_range(family);
  return family;
}

FamilyIndex::FamilyIndex(const DiscreteMeasure& mu, BallFamily family)
    : mu_(&mu), family_(std::move(family)) {
  radii_.reserve(family_.balls.size());
  for (const Ball& b : family_.balls) {
    check(b.center < mu.size(), "family: ball center out of range");
    check(b.radius > 0.0 && std::isfinite(b.radius), "family: radius must be > 0");
    radii_.push_back(b.radius);
  }
  std::sort(radii_.begin(), radii_.end());
  radii_.erase(std::unique(radii_.begin(), radii_.end()), radii_.end());
  const std::size_t cells = radii_.size() * mu.size();
  check(cells <= kMaxLookupCells, "family: radius/center table too large");
  ball_at_.assign(cells, -1);
  for (std::size_t i = 0; i < family_.balls.size(); ++i) {
    const Ball& b = family_.balls[i];
    const std::size_t g = first_group_at_least(b.radius);
    std::int32_t& slot = ball_at_[g * mu.size() + b.center];
    check(slot < 0, "family: duplicate ball");
    slot = static_cast<std::int32_t>(i);
  }
}

std::size_t FamilyIndex::first_group_at_least(double r) const {
  return static_cast<std::size_t>(
      std::lower_bound(radii_.begin(), radii_.end(), r) - radii_.begin());
}

const std::vector<BallPair>& FamilyIndex::pairs(double rho) const {
  check(rho > 1.0, "nested_pairs: rho must be > 1");
  if (cached_rho_ == rho) return cached_pairs_;
  cached_pairs_.clear();
  std::vector<std::uint32_t> scratch;
  for (std::uint32_t b = 0; b < family_.balls.size(); ++b) {
    const double cap = rho * family_.balls[b].radius;
    for_each_outer(b, cap, scratch, [&](std::uint32_t u) {
      check(cached_pairs_.size() < kMaxPairs, "nested_pairs: too many pairs");
      cached_pairs_.push_back({b, u});
    });
  }
  cached_rho_ = rho;
  return cached_pairs_;
}

std::vector<BallPair> nested_pairs(const DiscreteMeasure& mu,
                                   const BallFamily& family, double rho) {
  check(rho > 1.0, "nested_pairs: rho must be > 1");
  FamilyIndex index(mu, family);
  return index.pairs(rho);
}

DoublingReport doubling_search(const DiscreteMeasure& mu, std::uint32_t center,
                               double beta, double r0, int max_halvings) {
  if (center >= mu.size()) throw std::out_of_range("doubling_search: center index");
  check(beta > 1.0 && std::isfinite(beta), "doubling_search: beta must be > 1");
  check(r0 > 0.0 && std::isfinite(r0), "doubling_search: r0 must be > 0");
  check(max_halvings >= 0, "doubling_search: max_halvings must be >= 0");

  DoublingReport rep;
  rep.center = center;
  rep.beta = beta;
  const double* c = mu.point(center);
  for (int k = 0; k <= max_halvings; ++k) {
    DoublingEntry e;
    e.radius = std::ldexp(r0, -k);
    e.mass = mu.mass_at(c, e.radius);
    e.mass_doubled = mu.mass_at(c, 2.0 * e.radius);
    e.ratio = e.mass_doubled / e.mass;
    e.doubling = e.mass_doubled <= beta * e.mass;
    if (e.doubling) rep.doubling_radii.push_back(e.radius);
    rep.entries.push_back(e);
  }
  rep.exhausted_at = std::ldexp(r0, -max_halvings);
  return rep;
}

bool ball_contains(const DiscreteMeasure& mu, const Ball& inner,
                   const Ball& outer) {
  if (outer.radius < inner.radius) return false;
  const double slack = outer.radius - inner.radius;
  return mu.dist2_to(inner.center, mu.point(outer.center)) <= slack * slack;
}

namespace {

int doubling_steps(double r_inner, double r_outer) {
  int n = 0;
  double r = r_inner;
  while (r < r_outer) {
    r *= 2.0;
    ++n;
  }
  return n;
}

}  // namespace

double k_constant(const DiscreteMeasure& mu, const Ball& inner,
                  const Ball& outer, double n) {
  check(n > 0.0, "k_constant: n must be > 0");
  check(inner.radius > 0.0 && outer.radius > 0.0, "k_constant: radii must be > 0");
  check(inner.center < mu.size() && outer.center < mu.size(),
        "k_constant: center out of range");
  check(ball_contains(mu, inner, outer), "k_constant: outer ball must contain inner");

  // Plain ascending sum, matching the KConstantCache rows bit for bit.
  const int steps = doubling_steps(inner.radius, outer.radius);
  const double* c = mu.point(inner.center);
  double k = 1.0;
  for (int j = 1; j <= steps; ++j) {
    const double r = std::ldexp(inner.radius, j);
    k += mu.mass_at(c, r) / std::pow(r, n);
  }
  return k;
}

KConstantCache::KConstantCache(const DiscreteMeasure& mu,
                               std::span<const Ball> balls, double n,
                               double r_max)
    : balls_(balls) {
  check(n > 0.0, "k_constant: n must be > 0");
  check(r_max > 0.0 && std::isfinite(r_max),
        "k_constant cache: r_max must be finite and > 0");
  offset_.resize(balls.size() + 1);
  offset_[0] = 0;
  for (std::size_t b = 0; b < balls.size(); ++b) {
    offset_[b + 1] = offset_[b] +
                     static_cast<std::size_t>(doubling_steps(balls[b].radius, r_max)) + 1;
  }
  prefix_.resize(offset_.back());
#pragma omp parallel for schedule(dynamic, 16)
  for (std::int64_t b = 0; b < static_cast<std::int64_t>(balls.size()); ++b) {
    const Ball& ball = balls[static_cast<std::size_t>(b)];
    double* row = prefix_.data() + offset_[static_cast<std::size_t>(b)];
    const std::size_t len = offset_[static_cast<std::size_t>(b) + 1] -
                            offset_[static_cast<std::size_t>(b)];
    row[0] = 1.0;
    for (std::size_t j = 1; j < len; ++j) {
      const double r = std::ldexp(ball.radius, static_cast<int>(j));
      row[j] = row[j - 1] + mu.mass_at(mu.point(ball.center), r) / std::pow(r, n);
    }
  }
}

double KConstantCache::value(std::uint32_t b, double outer_radius) const {
  const std::size_t steps =
      static_cast<std::size_t>(doubling_steps(balls_[b].radius, outer_radius));
  const std::size_t len = offset_[b + 1] - offset_[b];
  return prefix_[offset_[b] + std::min(steps, len - 1)];
}

}  // namespace osclab
