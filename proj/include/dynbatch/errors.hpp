#pragma once

#include <stdexcept>
#include <string>

namespace dynbatch {

// Error taxonomy mirrors the CLI exit codes: validation errors are caller
// mistakes (bad config, infeasible parameters), numerical errors are solver
// breakdowns (non-convergence, singular systems), io errors are file trouble.

struct validation_error : std::runtime_error {
    explicit validation_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct numerical_error : std::runtime_error {
    explicit numerical_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct io_error : std::runtime_error {
    explicit io_error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace dynbatch
