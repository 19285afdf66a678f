#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace dlegion::cli {

enum ExitCode : int {
    kOk = 0,
    kInternal = 1,
    kInputError = 2,
    kDataMismatch = 3,
    kFunctionalFailure = 4,
};

/// Environment variable naming the directory searched for config files given
/// by bare name.
inline constexpr const char* kConfigDirEnv = "DLEGION_CONFIG_DIR";

/// Runs one command line (without the program name). Reports and tables go to
/// `out`, diagnostics and status lines to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dlegion::cli
