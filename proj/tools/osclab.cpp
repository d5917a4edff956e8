#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "osclab/experiment.hpp"
#include "osclab/io.hpp"

namespace {

void emit(const std::string& body, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << body;
    std::cout.flush();
    return;
  }
  std::ofstream out(out_path);
  if (!out.good()) {
    throw osclab::ValidationError("cannot open '" + out_path + "' for writing");
  }
  out << body;
  if (!out.good()) {
    throw osclab::ValidationError("write to '" + out_path + "' failed");
  }
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in.good()) {
    throw osclab::ValidationError("cannot open '" + path + "'");
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "osclab: oscillation seminorms, doubling diagnostics, and discrete "
      "singular integrals on weighted point clouds"};
  app.require_subcommand(1);

  osclab::ExperimentConfig config;
  std::string out_path;
  std::string save_path;
  std::string replay_path;
  std::string golden_path;

  const auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--threads", config.threads, "worker threads (0 = default)");
    cmd->add_flag("--csv", config.csv, "render the report as a flat table");
    cmd->add_option("--out", out_path, "write the report to this file");
  };
  const auto add_measure = [&](CLI::App* cmd) {
    cmd->add_option("measure", config.measure,
                    "generator spec (grid:..., circle:..., dust:..., "
                    "cantor:..., accum:...) or a measure file")
        ->required();
  };
  const auto add_family = [&](CLI::App* cmd) {
    cmd->add_option("--family", config.family,
                    "ball family: exhaustive, dyadic, or sampled:m=,seed=");
  };
  const auto add_kernel = [&](CLI::App* cmd) {
    cmd->add_option("--kernel", config.kernel,
                    "cauchy | conjugate[:r=] | riesz[:i=,n=] | inverse_square "
                    "| table:file=")
        ->required();
  };

  CLI::App* gen = app.add_subcommand("gen", "materialize a measure and summarize it");
  add_measure(gen);
  gen->add_option("--save", save_path, "also write the measure to this file");
  add_common(gen);

  CLI::App* growth =
      app.add_subcommand("growth", "smallest C with mass(B) <= C r^n over a family");
  add_measure(growth);
  growth->add_option("--n", config.n, "growth exponent (default 1)");
  add_family(growth);
  add_common(growth);

  CLI::App* doubling =
      app.add_subcommand("doubling", "halving scan for beta-doubling radii");
  add_measure(doubling);
  doubling->add_option("--center", config.center, "atom index of the center");
  doubling->add_option("--beta", config.beta, "doubling threshold (default 2)");
  doubling->add_option("--r0", config.r0, "start radius (default: diameter)");
  doubling->add_option("--max-halvings", config.max_halvings,
                       "how far to halve (default 40)");
  add_common(doubling);

  CLI::App* lip = app.add_subcommand(
      "lip", "oscillation seminorms of a function with cross-checks");
  add_measure(lip);
  lip->add_option("function", config.functions, "profile spec or @file")
      ->required()
      ->expected(1);
  lip->add_option("--alpha", config.alpha, "Holder exponent in (0, 1]");
  lip->add_option("--rho", config.rho, "dilation factor (default 2)");
  add_family(lip);
  add_common(lip);

  CLI::App* rbmo = app.add_subcommand(
      "rbmo", "endpoint oscillation norm with comparability coefficients");
  add_measure(rbmo);
  rbmo->add_option("function", config.functions, "profile spec or @file")
      ->required()
      ->expected(1);
  rbmo->add_option("--n", config.n, "growth exponent (default 1)");
  rbmo->add_option("--rho", config.rho, "dilation factor (default 2)");
  add_family(rbmo);
  add_common(rbmo);

  CLI::App* kernel_check = app.add_subcommand(
      "kernel-check", "size and regularity bounds for a kernel on a measure");
  add_measure(kernel_check);
  add_kernel(kernel_check);
  kernel_check->add_option("--n", config.n, "override the growth exponent");
  kernel_check->add_option("--eps", config.epsilon,
                           "override the regularity exponent");
  add_common(kernel_check);

  CLI::App* t1 = app.add_subcommand(
      "t1", "seminorm of a stitched representative of T(1)");
  add_measure(t1);
  add_kernel(t1);
  t1->add_option("--alpha", config.alpha, "Holder exponent in (0, epsilon)");
  t1->add_option("--rho", config.rho, "dilation factor (default 2)");
  add_family(t1);
  add_common(t1);

  CLI::App* bound = app.add_subcommand(
      "bound", "oscillation growth of Tf against the seminorm of f");
  add_measure(bound);
  bound->add_option("functions", config.functions, "profile specs or @files")
      ->required()
      ->expected(-1);
  add_kernel(bound);
  bound->add_option("--alpha", config.alpha, "Holder exponent in (0, epsilon)");
  bound->add_option("--rho", config.rho, "dilation factor (default 2)");
  add_family(bound);
  add_common(bound);

  CLI::App* tb_sweep = app.add_subcommand(
      "tb-sweep", "consistency of truncated operators across nested balls");
  add_measure(tb_sweep);
  tb_sweep->add_option("function", config.functions, "profile spec or @file")
      ->required()
      ->expected(1);
  add_kernel(tb_sweep);
  add_family(tb_sweep);
  add_common(tb_sweep);

  CLI::App* tail = app.add_subcommand(
      "tail", "tail sum outside a doubled ball against its closed-form bound");
  add_measure(tail);
  tail->add_option("--center", config.center, "atom index of the center");
  tail->add_option("--r", config.r, "outer ball radius")->required();
  tail->add_option("--n", config.n, "growth exponent (default 1)");
  tail->add_option("--eps", config.epsilon, "regularity exponent (default 1)");
  tail->add_option("--alpha", config.alpha, "Holder exponent, alpha < eps");
  add_common(tail);

  CLI::App* replay =
      app.add_subcommand("replay", "run a config file; optionally compare output");
  replay->add_option("config", replay_path, "key=value config file")->required();
  replay->add_option("--check", golden_path,
                     "compare the output byte-for-byte against this file");
  replay->add_option("--out", out_path, "write the output to this file");
  replay->add_option("--threads", config.threads,
                     "override the config's thread count");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // keep --help at 0; usage errors are 2
  }

  try {
    CLI::App* chosen = app.get_subcommands().front();
    osclab::RunResult result;
    if (chosen == replay) {
      osclab::ExperimentConfig loaded = osclab::load_config(replay_path);
      if (config.threads > 0) loaded.threads = config.threads;
      result = osclab::run(loaded);
    } else {
      config.op = chosen->get_name();
      result = osclab::run(config);
      if (chosen == gen && !save_path.empty()) {
        osclab::save_measure_file(osclab::resolve_measure(config.measure),
                                  save_path);
      }
    }
    emit(result.output, out_path);
    if (chosen == replay && !golden_path.empty()) {
      const std::string want = slurp(golden_path);
      if (want != result.output) {
        std::cerr << "replay mismatch against '" << golden_path << "' ("
                  << result.output.size() << " vs " << want.size()
                  << " bytes)\n";
        return 1;
      }
    }
    return result.exit_code;
  } catch (const osclab::KernelDefect& e) {
    std::cerr << "kernel defect: " << e.what() << "\n";
    return 1;
  } catch (const osclab::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
