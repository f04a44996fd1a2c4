#pragma once

#include <iosfwd>

namespace fslab {

enum ExitCode { kExitOk = 0, kExitUsage = 2, kExitSolver = 3, kExitCheck = 4 };

// fslab <profile|march|rates|check|sweep> --config PATH [--out DIR] [--seed N] [--quiet]
int cli_main(int argc, const char *const *argv, std::ostream &out, std::ostream &err);

} // namespace fslab
