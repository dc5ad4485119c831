#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sirfp::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kDataError = 2,
  kInfeasible = 3,
};

/// Entry point behind the `sirfp` executable. `args` excludes the program
/// name. Results go to files or `out`; diagnostics go to `err`.
///
///   accumulate  fold SIRF feature dumps into per-layer SIRM edge graphs
///   solve       prune one SIRM graph (greedy or exact) into a mask document
///   prune       allocate keep counts from importance traces + topology
///   simulate    run the progressive pipeline on a synthetic network description
///   report      pretty-print a run report
int run(std::vector<std::string> args, std::ostream& out, std::ostream& err);

}  // namespace sirfp::cli
