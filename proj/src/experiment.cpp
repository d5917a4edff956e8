#include "osclab/experiment.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "osclab/czo.hpp"
#include "osclab/io.hpp"

namespace osclab {

namespace {

void check(bool ok, const std::string& msg) {
  if (!ok) throw ValidationError(msg);
}

double to_double(const std::string& text, const std::string& key) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    throw ValidationError("config: bad number for " + key + ": '" + text + "'");
  }
  check(used == text.size(), "config: trailing junk in " + key);
  return v;
}

bool to_bool(const std::string& text, const std::string& key) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw ValidationError("config: bad boolean for " + key + ": '" + text + "'");
}

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

SampledFunction single_function(const ExperimentConfig& config,
                                const DiscreteMeasure& mu) {
  check(config.functions.size() == 1,
        "op '" + config.op + "' needs exactly one function=");
  return resolve_function(config.functions.front(), mu);
}

FamilyIndex make_family(const ExperimentConfig& config,
                        const DiscreteMeasure& mu) {
  return FamilyIndex(mu, enumerate_ball_family(mu, parse_family(config.family)));
}

Kernel make_kernel(const ExperimentConfig& config, const DiscreteMeasure& mu) {
  check(!config.kernel.empty(), "op '" + config.op + "' needs kernel=");
  Kernel kernel = parse_kernel(config.kernel, mu);
  if (config.n > 0.0 || config.epsilon > 0.0) {
    kernel.override_profile(config.n > 0.0 ? config.n : kernel.n(),
                            config.epsilon > 0.0 ? config.epsilon
                                                 : kernel.epsilon());
  }
  return kernel;
}

void add_context(Json& j, const ExperimentConfig& config) {
  j["measure"] = config.measure;
  j["family"] = config.family;
}

}  // namespace

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  check(in.good(), "cannot open config '" + path + "'");
  ExperimentConfig config;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const std::size_t eq = body.find('=');
    check(eq != std::string::npos, path + " line " + std::to_string(lineno) +
                                       ": expected key=value");
    const std::string key = trim(body.substr(0, eq));
    const std::string value = trim(body.substr(eq + 1));
    if (key == "op") config.op = value;
    else if (key == "measure") config.measure = value;
    else if (key == "family") config.family = value;
    else if (key == "kernel") config.kernel = value;
    else if (key == "function") config.functions.push_back(value);
    else if (key == "alpha") config.alpha = to_double(value, key);
    else if (key == "rho") config.rho = to_double(value, key);
    else if (key == "n") config.n = to_double(value, key);
    else if (key == "epsilon") config.epsilon = to_double(value, key);
    else if (key == "beta") config.beta = to_double(value, key);
    else if (key == "r0") config.r0 = to_double(value, key);
    else if (key == "r") config.r = to_double(value, key);
    else if (key == "center") config.center = static_cast<std::size_t>(to_double(value, key));
    else if (key == "max_halvings") config.max_halvings = static_cast<int>(to_double(value, key));
    else if (key == "threads") config.threads = static_cast<int>(to_double(value, key));
    else if (key == "csv") config.csv = to_bool(value, key);
    else throw ValidationError(path + " line " + std::to_string(lineno) +
                               ": unknown key '" + key + "'");
  }
  check(!config.op.empty(), path + ": missing op=");
  return config;
}

RunResult run(const ExperimentConfig& config) {
  if (config.threads > 0) set_num_threads(config.threads);
  check(!config.measure.empty(), "config needs measure=");
  const DiscreteMeasure mu = resolve_measure(config.measure);

  Json report;
  int exit_code = 0;
  if (config.op == "gen") {
    report = measure_json(mu, config.measure);
  } else if (config.op == "growth") {
    const double n = config.n > 0.0 ? config.n : 1.0;
    const BallFamily family =
        enumerate_ball_family(mu, parse_family(config.family));
    report = growth_json(growth_report(mu, n, family.balls));
    add_context(report, config);
  } else if (config.op == "doubling") {
    const double r0 = config.r0 > 0.0 ? config.r0 : mu.diameter();
    report = doubling_json(doubling_search(
        mu, static_cast<std::uint32_t>(config.center), config.beta, r0,
        config.max_halvings));
    report["measure"] = config.measure;
  } else if (config.op == "lip") {
    const FamilyIndex family = make_family(config, mu);
    const SampledFunction f = single_function(config, mu);
    const LipschitzReport lip = full_report(family, f, config.alpha, config.rho);
    report = lipschitz_json(lip);
    report["function"] = config.functions.front();
    add_context(report, config);
    exit_code = lip.chain_ok ? 0 : 1;
  } else if (config.op == "rbmo") {
    const FamilyIndex family = make_family(config, mu);
    const SampledFunction f = single_function(config, mu);
    const double n = config.n > 0.0 ? config.n : 1.0;
    report = rbmo_json(rbmo_norm(family, f, n, config.rho));
    report["function"] = config.functions.front();
    add_context(report, config);
  } else if (config.op == "kernel-check") {
    const Kernel kernel = make_kernel(config, mu);
    const SizeCheck size = kernel_size_check(kernel, mu);
    const RegularityCheck regularity = kernel_regularity_check(kernel, mu);
    report = kernel_check_json(kernel, size, regularity);
    report["measure"] = config.measure;
    exit_code = (size.pass && regularity.pass) ? 0 : 1;
  } else if (config.op == "t1") {
    const Kernel kernel = make_kernel(config, mu);
    const CzOperator op(mu, kernel);
    const FamilyIndex family = make_family(config, mu);
    report = t1_json(t1_norm(op, config.alpha, family, config.rho));
    report["kernel"] = kernel.name();
    add_context(report, config);
  } else if (config.op == "bound") {
    const Kernel kernel = make_kernel(config, mu);
    const CzOperator op(mu, kernel);
    const FamilyIndex family = make_family(config, mu);
    check(!config.functions.empty(), "op 'bound' needs at least one function=");
    std::vector<std::pair<std::string, SampledFunction>> functions;
    for (const std::string& spec : config.functions) {
      functions.emplace_back(spec, resolve_function(spec, mu));
    }
    const BoundednessTable table =
        boundedness_experiment(op, config.alpha, functions, family, config.rho);
    report = bound_json(table);
    report["kernel"] = kernel.name();
    add_context(report, config);
    for (const BoundednessRow& row : table.rows) {
      if (row.triangle_violations > 0) exit_code = 1;
    }
  } else if (config.op == "tb-sweep") {
    const Kernel kernel = make_kernel(config, mu);
    const CzOperator op(mu, kernel);
    const FamilyIndex family = make_family(config, mu);
    const SampledFunction f = single_function(config, mu);
    const TbSweep sweep = tb_consistency_sweep(op, f, family);
    report = tb_sweep_json(sweep);
    report["kernel"] = kernel.name();
    add_context(report, config);
    exit_code = sweep.worst_deviation <= 1e-9 * sweep.worst_scale ? 0 : 1;
  } else if (config.op == "tail") {
    check(config.r > 0.0, "op 'tail' needs r=");
    const double n = config.n > 0.0 ? config.n : 1.0;
    const double eps = config.epsilon > 0.0 ? config.epsilon : 1.0;
    report = tail_json(tail_integral_check(
        mu, Ball{static_cast<std::uint32_t>(config.center), config.r}, n, eps,
        config.alpha));
    report["measure"] = config.measure;
  } else {
    throw ValidationError("unknown op '" + config.op + "'");
  }

  RunResult result;
  result.exit_code = exit_code;
  result.output = config.csv ? render_csv(report) : report.dump(2) + "\n";
  return result;
}

}  // namespace osclab
