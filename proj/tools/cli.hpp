#pragma once

#include <ostream>

namespace dsa::cli {

enum ExitCode {
    kOk = 0,
    kInvalid = 1,
    kConfigOrIo = 2,
    kBasecaseInsecure = 3,
    kEmptyWindow = 4,
    kDegenerate = 5,
    kInsecure = 10,
};

/// Entry point of the `dsa` tool; returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace dsa::cli
