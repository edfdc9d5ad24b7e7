#pragma once

#include <iosfwd>

namespace bpghunt {

enum ExitCode : int {
    kExitOk = 0,
    kExitAlarms = 1,
    kExitConfig = 2,
    kExitTemplate = 3,
    kExitIngest = 4,
    kExitReputation = 5,
    kExitMissingInputs = 6,
};

const char* version_string();

/// Entry point of the bpghunt tool; returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace bpghunt
