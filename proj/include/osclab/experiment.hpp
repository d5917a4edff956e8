#pragma once

#include <string>
#include <vector>

namespace osclab {

/// One experiment, fully determined by these fields; replaying the same
/// config yields byte-identical output regardless of thread count.
struct ExperimentConfig {
  std::string op;  // gen growth doubling lip rbmo kernel-check t1 bound tail tb-sweep
  std::string measure;                 // generator spec or file path
  std::string family = "exhaustive";   // ball family spec
  std::string kernel;                  // kernel spec
  std::vector<std::string> functions;  // profile specs or @files
  double alpha = 0.5;
  double rho = 2.0;
  double n = 0.0;        // growth exponent; 0 = default (1, or kernel profile)
  double epsilon = 0.0;  // 0 = kernel default
  double beta = 2.0;     // doubling threshold
  double r0 = 0.0;       // doubling start radius; 0 = diameter
  double r = 0.0;        // tail outer radius
  std::size_t center = 0;
  int max_halvings = 40;
  int threads = 0;  // 0 = leave runtime default
  bool csv = false;
};

/// key=value lines, '#' comments; `function=` may repeat. Unknown keys are
/// rejected.
ExperimentConfig load_config(const std::string& path);

struct RunResult {
  int exit_code = 0;  // 0 pass, 1 check failure
  std::string output;
};

/// Dispatches one experiment and renders its report. Bad parameters throw
/// ValidationError (exit code 2 at the CLI); a kernel defect throws
/// KernelDefect (exit code 1).
RunResult run(const ExperimentConfig& config);

}  // namespace osclab
