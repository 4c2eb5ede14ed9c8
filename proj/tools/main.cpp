#include <iostream>

#include "cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  optrec::cli::Hooks hooks;
#ifdef OPTREC_CORRUPT_DERIVATIVE_FOR_TESTING
  // Negative control for validate-kernel: a wrong bi-Laplacian.
  hooks.evaluator = [](const optrec::KernelSpec& spec, const optrec::OperatorTag& l,
                       const optrec::OperatorTag& r, const optrec::Point& x, const optrec::Point& y) {
    const double v = optrec::apply_operators(spec, l, r, x, y);
    const bool both = l.kind() == optrec::OperatorKind::NegLaplacian &&
                      r.kind() == optrec::OperatorKind::NegLaplacian;
    return both ? 1.01 * v : v;
  };
#endif
  return optrec::cli::run(args, std::cout, std::cerr, hooks);
}
