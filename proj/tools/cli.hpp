#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace gridhop {

enum ExitCode : int {
    kExitOk = 0,
    kExitMismatch = 1,
    kExitUsage = 2,
    kExitRuntime = 3,
    kExitIo = 4,
};

/// args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gridhop
