#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace dlegion {

/// Raised when a configuration violates one or more invariants. Carries one
/// diagnostic per violated invariant.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(std::vector<std::string> diagnostics);

    const std::vector<std::string>& diagnostics() const noexcept { return diagnostics_; }

private:
    std::vector<std::string> diagnostics_;
};

/// A data file (zero-tile book, report) whose shape does not match what the
/// workload expects.
class ShapeMismatch : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Psum working set exceeds a bank.
class PsumOverflow : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A file could not be opened, read or written.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InconsistentEvents : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace dlegion
