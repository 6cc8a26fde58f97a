#pragma once

#include <stdexcept>
#include <string>

namespace svhom {

// Exit codes used by the CLI: 0 pass, 1 verdict failure, 2 usage/config, 3 numerical.
enum class ExitCode : int { ok = 0, verdict_failure = 1, config_error = 2, numerical_failure = 3 };

// Bad configuration, unknown families/keys, malformed input files.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Violated operation preconditions (caller contract).
struct PreconditionError : std::runtime_error {
    explicit PreconditionError(const std::string& msg) : std::runtime_error(msg) {}
};

// Solver breakdowns: non-convergence, instability, non-finite states, degenerate models.
struct NumericalError : std::runtime_error {
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw PreconditionError(msg);
}

}  // namespace svhom
