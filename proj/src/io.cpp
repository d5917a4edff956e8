#include "osclab/io.hpp"

#include <cctype>
#include <fstream>
#include <iostream>
#include <sstream>

namespace osclab {

namespace {

void check(bool ok, const std::string& msg) {
  if (!ok) throw ValidationError(msg);
}

bool has_suffix(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  check(in.good(), "cannot open '" + path + "' for reading");
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  check(out.good(), "cannot open '" + path + "' for writing");
  return out;
}

/// Strips comments and surrounding whitespace; empty result means skip.
std::string clean_line(std::string line) {
  const std::size_t hash = line.find('#');
  if (hash != std::string::npos) line.erase(hash);
  std::size_t b = 0, e = line.size();
  while (b < e && std::isspace(static_cast<unsigned char>(line[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(line[e - 1]))) --e;
  return line.substr(b, e - b);
}

double parse_double(const std::string& text, const std::string& what) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    throw ValidationError("expected a number for " + what + ", got '" + text + "'");
  }
  check(used == text.size(), "trailing junk in " + what + ": '" + text + "'");
  return v;
}

std::size_t parse_index(const std::string& text, const std::string& what) {
  const double v = parse_double(text, what);
  check(v >= 0.0 && v == static_cast<double>(static_cast<std::size_t>(v)),
        what + " must be a nonnegative integer");
  return static_cast<std::size_t>(v);
}

/// "name:k=v,k=v" -> (name, {k: v}); bare "name" gives an empty map.
std::pair<std::string, std::vector<std::pair<std::string, std::string>>>
split_spec(const std::string& spec) {
  const std::size_t colon = spec.find(':');
  std::pair<std::string, std::vector<std::pair<std::string, std::string>>> out;
  out.first = spec.substr(0, colon);
  if (colon == std::string::npos) return out;
  std::string rest = spec.substr(colon + 1);
  std::stringstream ss(rest);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const std::size_t eq = item.find('=');
    check(eq != std::string::npos, "expected key=value in spec '" + spec + "'");
    out.second.emplace_back(item.substr(0, eq), item.substr(eq + 1));
  }
  return out;
}

const std::string* find_key(
    const std::vector<std::pair<std::string, std::string>>& kv,
    const std::string& key) {
  for (const auto& [k, v] : kv) {
    if (k == key) return &v;
  }
  return nullptr;
}

void reject_unknown(const std::vector<std::pair<std::string, std::string>>& kv,
                    std::initializer_list<const char*> allowed,
                    const std::string& what) {
  for (const auto& [k, v] : kv) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || k == a;
    check(ok, "unknown key '" + k + "' in " + what);
  }
}

DiscreteMeasure load_measure_text(const std::string& path) {
  std::ifstream in = open_in(path);
  std::string line;
  int dim = -1;
  std::vector<double> coords, weights;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string body = clean_line(line);
    if (body.empty()) continue;
    if (dim < 0) {
      check(body.rfind("dim=", 0) == 0,
            path + ": first line must be dim=<d>, got '" + body + "'");
      dim = static_cast<int>(parse_index(body.substr(4), "dim"));
      continue;
    }
    std::stringstream ss(body);
    std::vector<double> row;
    std::string tok;
    while (ss >> tok) row.push_back(parse_double(tok, path + " line " + std::to_string(lineno)));
    check(row.size() == static_cast<std::size_t>(dim) + 1,
          path + " line " + std::to_string(lineno) + ": expected " +
              std::to_string(dim) + " coordinates plus a weight");
    coords.insert(coords.end(), row.begin(), row.end() - 1);
    weights.push_back(row.back());
  }
  check(dim > 0, path + ": missing dim header");
  return DiscreteMeasure::create(dim, std::move(coords), std::move(weights));
}

DiscreteMeasure load_measure_json(const std::string& path) {
  std::ifstream in = open_in(path);
  Json j;
  try {
    j = Json::parse(in);
  } catch (const std::exception& e) {
    throw ValidationError(path + ": " + e.what());
  }
  check(j.contains("dim") && j.contains("points") && j.contains("weights"),
        path + ": need dim, points, weights");
  const int dim = j.at("dim").get<int>();
  std::vector<double> coords, weights;
  for (const auto& p : j.at("points")) {
    check(p.is_array() && static_cast<int>(p.size()) == dim,
          path + ": each point must list dim coordinates");
    for (const auto& c : p) coords.push_back(c.get<double>());
  }
  for (const auto& w : j.at("weights")) weights.push_back(w.get<double>());
  return DiscreteMeasure::create(dim, std::move(coords), std::move(weights));
}

}  // namespace

DiscreteMeasure load_measure_file(const std::string& path) {
  return has_suffix(path, ".json") ? load_measure_json(path)
                                   : load_measure_text(path);
}

void save_measure_file(const DiscreteMeasure& mu, const std::string& path) {
  std::ofstream out = open_out(path);
  if (has_suffix(path, ".json")) {
    Json j;
    j["dim"] = mu.dim();
    Json points = Json::array();
    for (std::size_t i = 0; i < mu.size(); ++i) {
      Json p = Json::array();
      for (int k = 0; k < mu.dim(); ++k) p.push_back(mu.point(i)[k]);
      points.push_back(std::move(p));
    }
    j["points"] = std::move(points);
    Json weights = Json::array();
    for (std::size_t i = 0; i < mu.size(); ++i) weights.push_back(mu.weight(i));
    j["weights"] = std::move(weights);
    out << j.dump(2) << "\n";
  } else {
    out << "dim=" << mu.dim() << "\n";
    for (std::size_t i = 0; i < mu.size(); ++i) {
      for (int k = 0; k < mu.dim(); ++k) {
        out << format_double(mu.point(i)[k]) << " ";
      }
      out << format_double(mu.weight(i)) << "\n";
    }
  }
  check(out.good(), "write to '" + path + "' failed");
}

DiscreteMeasure resolve_measure(const std::string& spec) {
  static const char* kGenerators[] = {"grid", "circle", "dust", "cantor", "accum"};
  const std::string head = spec.substr(0, spec.find(':'));
  for (const char* g : kGenerators) {
    if (head == g) return parse_generator(spec);
  }
  return load_measure_file(spec);
}

SampledFunction load_function_file(const std::string& path,
                                   const DiscreteMeasure& mu) {
  std::ifstream in = open_in(path);
  SampledFunction f;
  std::string line;
  while (std::getline(in, line)) {
    const std::string body = clean_line(line);
    if (body.empty()) continue;
    f.values.push_back(parse_double(body, path));
  }
  check(f.values.size() == mu.size(),
        path + ": " + std::to_string(f.values.size()) + " values for " +
            std::to_string(mu.size()) + " atoms");
  validate_function(mu, f);
  return f;
}

void save_function_file(const SampledFunction& f, const std::string& path) {
  std::ofstream out = open_out(path);
  for (double v : f.values) out << format_double(v) << "\n";
  check(out.good(), "write to '" + path + "' failed");
}

SampledFunction resolve_function(const std::string& spec,
                                 const DiscreteMeasure& mu) {
  if (!spec.empty() && spec[0] == '@') {
    return load_function_file(spec.substr(1), mu);
  }
  return make_profile(mu, spec);
}

Kernel parse_kernel(const std::string& spec, const DiscreteMeasure& mu) {
  auto [name, kv] = split_spec(spec);
  if (name == "cauchy") {
    reject_unknown(kv, {}, "kernel 'cauchy'");
    return Kernel::cauchy();
  }
  if (name == "conjugate") {
    reject_unknown(kv, {"r"}, "kernel 'conjugate'");
    double r = 1.0;
    if (const std::string* v = find_key(kv, "r")) r = parse_double(*v, "r");
    return Kernel::circle_conjugate(r);
  }
  if (name == "riesz") {
    reject_unknown(kv, {"i", "n"}, "kernel 'riesz'");
    int component = 1;
    double n = 1.0;
    if (const std::string* v = find_key(kv, "i")) {
      component = static_cast<int>(parse_index(*v, "i"));
    }
    if (const std::string* v = find_key(kv, "n")) n = parse_double(*v, "n");
    return Kernel::riesz(component, n);
  }
  if (name == "inverse_square") {
    reject_unknown(kv, {}, "kernel 'inverse_square'");
    return Kernel::inverse_square();
  }
  if (name == "table") {
    reject_unknown(kv, {"file"}, "kernel 'table'");
    const std::string* file = find_key(kv, "file");
    check(file != nullptr, "kernel 'table' needs file=<path>");
    std::ifstream in = open_in(*file);
    Json j;
    try {
      j = Json::parse(in);
    } catch (const std::exception& e) {
      throw ValidationError(*file + ": " + e.what());
    }
    for (const char* key :
         {"name", "n", "epsilon", "size_constant", "smoothness_constant", "values"}) {
      check(j.contains(key), *file + ": missing '" + std::string(key) + "'");
    }
    std::vector<double> values;
    for (const auto& v : j.at("values")) values.push_back(v.get<double>());
    return Kernel::table(std::move(values), mu.size(), j.at("n").get<double>(),
                         j.at("epsilon").get<double>(),
                         j.at("size_constant").get<double>(),
                         j.at("smoothness_constant").get<double>(),
                         j.at("name").get<std::string>());
  }
  throw ValidationError("unknown kernel '" + name +
                        "' (cauchy, conjugate, riesz, inverse_square, table)");
}

Json measure_json(const DiscreteMeasure& mu, const std::string& spec) {
  Json j;
  j["op"] = "gen";
  j["measure"] = spec;
  j["dim"] = mu.dim();
  j["atoms"] = mu.size();
  j["total_mass"] = mu.total_mass();
  j["resolution"] = mu.resolution();
  j["diameter"] = mu.diameter();
  return j;
}

Json growth_json(const GrowthReport& report) {
  Json j;
  j["op"] = "growth";
  j["n"] = report.n;
  j["best_constant"] = report.best_constant;
  j["witness_center"] = report.witness.center;
  j["witness_radius"] = report.witness.radius;
  j["r_min"] = report.r_min;
  j["r_max"] = report.r_max;
  j["balls_scanned"] = report.balls_scanned;
  return j;
}

Json doubling_json(const DoublingReport& report) {
  Json j;
  j["op"] = "doubling";
  j["center"] = report.center;
  j["beta"] = report.beta;
  j["doubling_radii"] = report.doubling_radii;
  j["exhausted_at"] = report.exhausted_at;
  Json rows = Json::array();
  for (const DoublingEntry& e : report.entries) {
    Json r;
    r["radius"] = e.radius;
    r["mass"] = e.mass;
    r["mass_doubled"] = e.mass_doubled;
    r["ratio"] = e.ratio;
    r["doubling"] = e.doubling;
    rows.push_back(std::move(r));
  }
  j["rows"] = std::move(rows);
  return j;
}

namespace {

Json oscillation_json(const OscillationResult& r) {
  Json j;
  j["osc"] = r.osc;
  j["osc_ball"] = r.osc_ball;
  j["pair"] = r.pair;
  j["pair_inner"] = r.pair_inner;
  j["pair_outer"] = r.pair_outer;
  j["value"] = r.value;
  return j;
}

}  // namespace

Json lipschitz_json(const LipschitzReport& report) {
  Json j;
  j["op"] = "lip";
  j["alpha"] = report.alpha;
  j["rho"] = report.rho;
  j["cond_i"] = oscillation_json(report.cond_i);
  j["cond_iii_p1"] = oscillation_json(report.cond_iii[0]);
  j["cond_iii_p2"] = oscillation_json(report.cond_iii[1]);
  j["cond_iii_pinf"] = oscillation_json(report.cond_iii[2]);
  j["c2"] = report.c2.value;
  j["c2_witness"] = Json::array({report.c2.i, report.c2.j});
  j["chain_ok"] = report.chain_ok;
  Json rows = Json::array();
  for (const ChainCheck& c : report.chain) {
    Json r;
    r["name"] = c.name;
    r["lhs"] = c.lhs;
    r["rhs"] = c.rhs;
    r["ok"] = c.ok;
    rows.push_back(std::move(r));
  }
  j["rows"] = std::move(rows);
  return j;
}

Json rbmo_json(const RbmoResult& result) {
  Json j;
  j["op"] = "rbmo";
  j["value"] = result.value;
  j["osc"] = result.osc;
  j["osc_ball"] = result.osc_ball;
  j["pair"] = result.pair;
  j["pair_inner"] = result.pair_inner;
  j["pair_outer"] = result.pair_outer;
  j["k_at_witness"] = result.k_at_witness;
  return j;
}

Json kernel_check_json(const Kernel& kernel, const SizeCheck& size,
                       const RegularityCheck& regularity) {
  Json j;
  j["op"] = "kernel-check";
  j["kernel"] = kernel.name();
  j["n"] = kernel.n();
  j["epsilon"] = kernel.epsilon();
  j["pass"] = size.pass && regularity.pass;
  Json rows = Json::array();
  Json s;
  s["check"] = "size";
  s["worst_ratio"] = size.worst_ratio;
  s["constant"] = kernel.size_constant();
  s["pass"] = size.pass;
  s["witness"] = Json::array({size.i, size.j});
  s["samples"] = size.samples;
  rows.push_back(std::move(s));
  Json r;
  r["check"] = "regularity";
  r["worst_ratio"] = regularity.worst_ratio;
  r["constant"] = kernel.smoothness_constant();
  r["pass"] = regularity.pass;
  r["witness"] = Json::array({regularity.i, regularity.ip, regularity.j});
  r["samples"] = regularity.samples;
  rows.push_back(std::move(r));
  j["rows"] = std::move(rows);
  return j;
}

Json t1_json(const T1Result& result) {
  Json j;
  j["op"] = "t1";
  j["value"] = result.value;
  j["rungs"] = result.rungs;
  j["alpha"] = result.report.alpha;
  j["cond_i_value"] = result.report.cond_i.value;
  j["chain_ok"] = result.report.chain_ok;
  return j;
}

Json tb_sweep_json(const TbSweep& sweep) {
  Json j;
  j["op"] = "tb-sweep";
  j["pairs"] = sweep.pairs;
  j["worst_deviation"] = sweep.worst_deviation;
  j["worst_scale"] = sweep.worst_scale;
  j["worst_rel"] = sweep.worst_rel;
  j["worst_pair"] = Json::array({sweep.worst_pair.inner, sweep.worst_pair.outer});
  return j;
}

Json bound_json(const BoundednessTable& table) {
  Json j;
  j["op"] = "bound";
  j["op_norm"] = table.op_norm;
  j["op_norm_iterations"] = table.op_norm_iterations;
  j["op_norm_converged"] = table.op_norm_converged;
  Json rows = Json::array();
  for (const BoundednessRow& row : table.rows) {
    Json r;
    r["function"] = row.function;
    r["skipped"] = row.skipped;
    r["lip_f"] = row.lip_f;
    r["lip_tf"] = row.lip_tf;
    r["ratio"] = row.ratio;
    r["triangle_violations"] = row.triangle_violations;
    r["worst_inner"] = row.worst.inner;
    r["worst_outer"] = row.worst.outer;
    r["worst_a1"] = row.worst.a1;
    r["worst_a2"] = row.worst.a2;
    r["worst_a3"] = row.worst.a3;
    r["worst_avg_total"] = row.worst.avg_total;
    r["worst_osc_part"] = row.worst.osc_part;
    r["worst_pair_part"] = row.worst.pair_part;
    rows.push_back(std::move(r));
  }
  j["rows"] = std::move(rows);
  return j;
}

Json tail_json(const TailResult& result) {
  Json j;
  j["op"] = "tail";
  j["value"] = result.value;
  j["bound_ratio"] = result.bound_ratio;
  j["atoms_outside"] = result.atoms_outside;
  return j;
}

namespace {

std::string csv_cell(const Json& v) {
  if (v.is_number_float()) return format_double(v.get<double>());
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_array()) {
    std::string s;
    for (const auto& item : v) {
      if (!s.empty()) s += ';';
      s += csv_cell(item);
    }
    return s;
  }
  return v.dump();
}

void csv_row(std::string& out, const Json& obj,
             const std::vector<std::string>& keys) {
  for (std::size_t k = 0; k < keys.size(); ++k) {
    if (k > 0) out += ',';
    out += csv_cell(obj.at(keys[k]));
  }
  out += '\n';
}

}  // namespace

std::string render_csv(const Json& report) {
  std::string out;
  const bool tabular = report.contains("rows") && report.at("rows").is_array() &&
                       !report.at("rows").empty();
  if (tabular) {
    std::vector<std::string> keys;
    for (const auto& [k, v] : report.at("rows").front().items()) keys.push_back(k);
    for (std::size_t k = 0; k < keys.size(); ++k) {
      if (k > 0) out += ',';
      out += keys[k];
    }
    out += '\n';
    for (const auto& row : report.at("rows")) csv_row(out, row, keys);
    return out;
  }
  std::vector<std::string> keys;
  for (const auto& [k, v] : report.items()) {
    if (!v.is_object() && !(v.is_array() && k == "rows")) keys.push_back(k);
  }
  for (std::size_t k = 0; k < keys.size(); ++k) {
    if (k > 0) out += ',';
    out += keys[k];
  }
  out += '\n';
  csv_row(out, report, keys);
  return out;
}

void write_report(const Json& report, bool csv, const std::string& path) {
  const std::string body = csv ? render_csv(report) : report.dump(2) + "\n";
  if (path.empty()) {
    std::cout << body;
    std::cout.flush();
  } else {
    std::ofstream out = open_out(path);
    out << body;
    check(out.good(), "write to '" + path + "' failed");
  }
}

}  // namespace osclab
