#include "osclab/measure.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace osclab {

namespace {

constexpr std::size_t kMaxAtoms = 200000;

void check(bool ok, const std::string& msg) {
  if (!ok) throw ValidationError(msg);
}

}  // namespace

DiscreteMeasure DiscreteMeasure::create(int dim, std::vector<double> coords,
                                        std::vector<double> weights) {
  check(dim >= 1 && dim <= 16, "measure: dim must be in [1, 16]");
  check(!weights.empty(), "measure: at least one atom required");
  check(weights.size() <= kMaxAtoms, "measure: too many atoms");
  check(coords.size() == weights.size() * static_cast<std::size_t>(dim),
        "measure: coords size must equal atoms * dim");
  for (double c : coords) {
    check(std::isfinite(c), "measure: coordinates must be finite");
  }
  Accumulator total;
  for (double w : weights) {
    check(std::isfinite(w) && w > 0.0, "measure: weights must be positive and finite");
    total.add(w);
  }

  DiscreteMeasure mu;
  mu.dim_ = dim;
  mu.coords_ = std::move(coords);
  mu.weights_ = std::move(weights);
  mu.total_mass_ = total.value();

  const std::size_t n = mu.weights_.size();
  if (n > 1) {
    double res = std::numeric_limits<double>::infinity();
    double diam = 0.0;
#pragma omp parallel
    {
      double lres = std::numeric_limits<double>::infinity();
      double ldiam = 0.0;
#pragma omp for schedule(static)
      for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) {
        const double* pi = mu.coords_.data() + static_cast<std::size_t>(i) * dim;
        for (std::size_t j = static_cast<std::size_t>(i) + 1; j < n; ++j) {
          const double d2 = KdTree::dist2(pi, mu.coords_.data() + j * dim, dim);
          lres = std::min(lres, d2);
          ldiam = std::max(ldiam, d2);
        }
      }
#pragma omp critical
      {
        res = std::min(res, lres);
        diam = std::max(diam, ldiam);
      }
    }
    check(res > 0.0, "measure: points must be pairwise distinct");
    mu.resolution_ = std::sqrt(res);
    mu.diameter_ = std::sqrt(diam);
  }
  mu.tree_ = KdTree(mu.coords_.data(), n, dim);
  return mu;
}

double DiscreteMeasure::distance(std::size_t i, std::size_t j) const {
  return std::sqrt(KdTree::dist2(point(i), point(j), dim_));
}

void DiscreteMeasure::neighbors_within(std::size_t center, double radius,
                                       std::vector<std::uint32_t>& out) const {
  if (center >= size()) throw std::out_of_range("neighbors_within: center index");
  check(radius >= 0.0 && std::isfinite(radius), "neighbors_within: radius must be >= 0");
  tree_.query_ball(point(center), radius, out);
}

std::vector<std::uint32_t> DiscreteMeasure::neighbors_within(std::size_t center,
                                                             double radius) const {
  std::vector<std::uint32_t> out;
  neighbors_within(center, radius, out);
  return out;
}

void DiscreteMeasure::members_at(const double* center, double radius,
                                 std::vector<std::uint32_t>& out) const {
  check(radius >= 0.0 && std::isfinite(radius), "members_at: radius must be >= 0");
  tree_.query_ball(center, radius, out);
}

double DiscreteMeasure::mass_of(std::span<const std::uint32_t> members) const {
  Accumulator acc;
  for (std::uint32_t i : members) acc.add(weights_[i]);
  return acc.value();
}

double DiscreteMeasure::mass_in_ball(const Ball& b) const {
  if (b.center >= size()) throw std::out_of_range("mass_in_ball: center index");
  check(b.radius > 0.0 && std::isfinite(b.radius), "mass_in_ball: radius must be > 0");
  std::vector<std::uint32_t> members;
  tree_.query_ball(point(b.center), b.radius, members);
  return mass_of(members);
}

double DiscreteMeasure::mass_at(const double* center, double radius) const {
  check(radius > 0.0 && std::isfinite(radius), "mass_at: radius must be > 0");
  std::vector<std::uint32_t> members;
  tree_.query_ball(center, radius, members);
  return mass_of(members);
}

GrowthReport growth_report(const DiscreteMeasure& mu, double n,
                           std::span<const Ball> family) {
  check(n > 0.0 && n <= mu.dim(), "growth_report: n must be in (0, dim]");
  check(!family.empty(), "growth_report: family must be nonempty");

  GrowthReport rep;
  rep.n = n;
  rep.balls_scanned = family.size();
  rep.r_min = family[0].radius;
  rep.r_max = family[0].radius;
  for (const Ball& ball : family) {
    check(ball.center < mu.size(), "growth_report: ball center out of range");
    check(ball.radius >= mu.resolution(),
          "growth_report: every radius must be >= resolution");
    rep.r_min = std::min(rep.r_min, ball.radius);
    rep.r_max = std::max(rep.r_max, ball.radius);
  }

  const std::size_t count = family.size();
  std::vector<double> ratio(count);
#pragma omp parallel
  {
    std::vector<std::uint32_t> members;
#pragma omp for schedule(dynamic, 64)
    for (std::int64_t b = 0; b < static_cast<std::int64_t>(count); ++b) {
      const Ball& ball = family[static_cast<std::size_t>(b)];
      mu.members_at(mu.point(ball.center), ball.radius, members);
      ratio[static_cast<std::size_t>(b)] =
          mu.mass_of(members) / std::pow(ball.radius, n);
    }
  }

  MaxLoc best;
  for (std::size_t b = 0; b < count; ++b) {
    best.update(ratio[b], static_cast<std::int64_t>(b));
  }
  rep.best_constant = best.value;
  rep.witness = family[static_cast<std::size_t>(best.index)];
  return rep;
}

double estimate_growth_dimension(const DiscreteMeasure& mu, double r_min,
                                 double r_max) {
  check(r_min > 0.0 && r_max > r_min, "estimate_growth_dimension: need 0 < r_min < r_max");
  Accumulator sx, sy, sxx, sxy;
  std::size_t count = 0;
  std::vector<std::uint32_t> members;
  for (std::size_t c = 0; c < mu.size(); ++c) {
    for (double r = r_min; r <= r_max; r *= 2.0) {
      mu.members_at(mu.point(c), r, members);
      const double m = mu.mass_of(members);
      const double lx = std::log(r);
      const double ly = std::log(m);
      sx.add(lx);
      sy.add(ly);
      sxx.add(lx * lx);
      sxy.add(lx * ly);
      ++count;
    }
  }
  check(count >= 2, "estimate_growth_dimension: not enough samples");
  const double k = static_cast<double>(count);
  const double var = sxx.value() - sx.value() * sx.value() / k;
  check(var > 0.0, "estimate_growth_dimension: degenerate radius range");
  return (sxy.value() - sx.value() * sy.value() / k) / var;
}

DiscreteMeasure make_grid(int dim, int per_side, double side, double total_mass,
                          double origin) {
  check(dim >= 1 && dim <= 3, "grid: d must be in [1, 3]");
  check(per_side >= 1, "grid: per_side must be >= 1");
  check(side > 0.0, "grid: side must be > 0");
  std::size_t n = 1;
  for (int k = 0; k < dim; ++k) {
    n *= static_cast<std::size_t>(per_side);
    check(n <= kMaxAtoms, "grid: too many points");
  }
  const double h = per_side > 1 ? side / (per_side - 1) : 0.0;
  double w;
  if (total_mass > 0.0) {
    w = total_mass / static_cast<double>(n);
  } else {
    check(per_side > 1, "grid: unit density needs per_side >= 2");
    w = std::pow(h, dim);
  }
  std::vector<double> coords(n * dim);
  std::vector<double> weights(n, w);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t rest = i;
    for (int k = 0; k < dim; ++k) {
      const std::size_t idx = rest % per_side;
      rest /= per_side;
      coords[i * dim + k] = origin + static_cast<double>(idx) * h;
    }
  }
  return DiscreteMeasure::create(dim, std::move(coords), std::move(weights));
}

DiscreteMeasure make_circle(std::size_t n, double radius) {
  check(n >= 1 && n <= kMaxAtoms, "circle: n out of range");
  check(radius > 0.0, "circle: r must be > 0");
  std::vector<double> coords(n * 2);
  std::vector<double> weights(n, 1.0 / static_cast<double>(n));
  for (std::size_t k = 0; k < n; ++k) {
    const double theta = 2.0 * M_PI * static_cast<double>(k) / static_cast<double>(n);
    coords[k * 2] = radius * std::cos(theta);
    coords[k * 2 + 1] = radius * std::sin(theta);
  }
  return DiscreteMeasure::create(2, std::move(coords), std::move(weights));
}

DiscreteMeasure make_cantor_dust(int level) {
  check(level >= 0 && level <= 7, "dust: level must be in [0, 7]");
  const std::size_t n = std::size_t{1} << (2 * level);
  const double w = std::ldexp(1.0, -2 * level);
  std::vector<double> coords(n * 2, 0.0);
  std::vector<double> weights(n, w);
  for (std::size_t i = 0; i < n; ++i) {
    double x = 0.0, y = 0.0;
    for (int p = 1; p <= level; ++p) {
      const unsigned digit = (i >> (2 * (level - p))) & 3u;
      const double cell = std::ldexp(3.0, -2 * p);  // 3 * 4^-p, exact
      if (digit & 1u) x += cell;
      if (digit & 2u) y += cell;
    }
    coords[i * 2] = x;
    coords[i * 2 + 1] = y;
  }
  return DiscreteMeasure::create(2, std::move(coords), std::move(weights));
}

DiscreteMeasure make_cantor_1d(int level, double lambda) {
  check(level >= 0 && level <= 14, "cantor: level must be in [0, 14]");
  check(lambda > 0.0 && lambda <= 0.5, "cantor: lambda must be in (0, 1/2]");
  const std::size_t n = std::size_t{1} << level;
  std::vector<double> coords(n);
  std::vector<double> weights(n, std::ldexp(1.0, -level));
  for (std::size_t i = 0; i < n; ++i) {
    double x = 0.0;
    double scale = 1.0 - lambda;
    for (int p = 1; p <= level; ++p) {
      if ((i >> (level - p)) & 1u) x += scale;
      scale *= lambda;
    }
    coords[i] = x;
  }
  return DiscreteMeasure::create(1, std::move(coords), std::move(weights));
}

DiscreteMeasure make_geometric_accumulation(int k, double gamma) {
  check(k >= 1 && k <= 48, "accum: k must be in [1, 48]");
  check(gamma > 0.0, "accum: gamma must be > 0");
  const std::size_t n = static_cast<std::size_t>(k) + 1;
  std::vector<double> coords(n);
  std::vector<double> weights(n);
  coords[0] = 0.0;
  weights[0] = std::ldexp(1.0, -2 * k);
  for (int j = k - 1; j >= 0; --j) {
    const std::size_t i = static_cast<std::size_t>(k - j);
    coords[i] = std::ldexp(1.0, -j);
    weights[i] = std::exp2(-static_cast<double>(j) * gamma);
  }
  return DiscreteMeasure::create(1, std::move(coords), std::move(weights));
}

namespace {

std::map<std::string, std::string> parse_kv(const std::string& body,
                                            const std::string& who) {
  std::map<std::string, std::string> kv;
  std::size_t pos = 0;
  while (pos < body.size()) {
    std::size_t next = body.find(',', pos);
    if (next == std::string::npos) next = body.size();
    const std::string item = body.substr(pos, next - pos);
    pos = next + 1;
    if (item.empty()) continue;
    const std::size_t eq = item.find('=');
    check(eq != std::string::npos, who + ": expected key=value, got '" + item + "'");
    kv[item.substr(0, eq)] = item.substr(eq + 1);
  }
  return kv;
}

double want_num(const std::map<std::string, std::string>& kv,
                const std::string& key, const std::string& who,
                double fallback, bool required = false) {
  auto it = kv.find(key);
  if (it == kv.end()) {
    check(!required, who + ": missing required field '" + key + "'");
    return fallback;
  }
  try {
    std::size_t used = 0;
    const double v = std::stod(it->second, &used);
    check(used == it->second.size(), who + ": bad number for '" + key + "'");
    return v;
  } catch (const ValidationError&) {
    throw;
  } catch (const std::exception&) {
    throw ValidationError(who + ": bad number for '" + key + "'");
  }
}

void reject_unknown(const std::map<std::string, std::string>& kv,
                    std::initializer_list<const char*> known,
                    const std::string& who) {
  for (const auto& [key, value] : kv) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    check(ok, who + ": unknown field '" + key + "'");
  }
}

}  // namespace

DiscreteMeasure parse_generator(const std::string& spec) {
  const std::size_t colon = spec.find(':');
  const std::string name = spec.substr(0, colon);
  const std::string body = colon == std::string::npos ? "" : spec.substr(colon + 1);
  const auto kv = parse_kv(body, name);

  if (name == "grid") {
    reject_unknown(kv, {"d", "per_side", "side", "mass", "density", "origin"}, name);
    check(!(kv.count("mass") && kv.count("density")),
          "grid: give either mass or density, not both");
    const int d = static_cast<int>(want_num(kv, "d", name, 1));
    const int per_side = static_cast<int>(want_num(kv, "per_side", name, 0, true));
    const double side = want_num(kv, "side", name, 1.0);
    const double origin = want_num(kv, "origin", name, 0.0);
    double mass = want_num(kv, "mass", name, 1.0);
    if (kv.count("density")) {
      const double density = want_num(kv, "density", name, 1.0);
      check(density > 0.0, "grid: density must be > 0");
      check(per_side > 1, "grid: unit density needs per_side >= 2");
      DiscreteMeasure base = make_grid(d, per_side, side, -1.0, origin);
      if (density == 1.0) return base;
      std::vector<double> w = base.weights();
      for (double& x : w) x *= density;
      return DiscreteMeasure::create(d, base.coords(), std::move(w));
    }
    check(mass > 0.0, "grid: mass must be > 0");
    return make_grid(d, per_side, side, mass, origin);
  }
  if (name == "circle") {
    reject_unknown(kv, {"n", "r"}, name);
    const auto n = static_cast<std::size_t>(want_num(kv, "n", name, 0, true));
    return make_circle(n, want_num(kv, "r", name, 1.0));
  }
  if (name == "dust") {
    reject_unknown(kv, {"level"}, name);
    return make_cantor_dust(static_cast<int>(want_num(kv, "level", name, 0, true)));
  }
  if (name == "cantor") {
    reject_unknown(kv, {"level", "lambda"}, name);
    return make_cantor_1d(static_cast<int>(want_num(kv, "level", name, 0, true)),
                          want_num(kv, "lambda", name, 1.0 / 3.0));
  }
  if (name == "accum") {
    reject_unknown(kv, {"k", "gamma"}, name);
    return make_geometric_accumulation(
        static_cast<int>(want_num(kv, "k", name, 0, true)),
        want_num(kv, "gamma", name, 0.5));
  }
  throw ValidationError("unknown generator '" + name + "'");
}

}  // namespace osclab
