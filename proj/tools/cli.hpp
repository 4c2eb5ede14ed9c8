#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "optrec/kernel_check.hpp"

namespace optrec::cli {

enum ExitCode : int { kOk = 0, kInputError = 1, kNotConverged = 2 };

struct Hooks {
  /// Evaluator checked by validate-kernel.
  OperatorPairEvaluator evaluator = apply_operators;
};

/// Runs the command line given as args (args[0] is the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, const Hooks& hooks = {});

}  // namespace optrec::cli
