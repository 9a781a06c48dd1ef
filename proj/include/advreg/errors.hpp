#pragma once

#include <stdexcept>
#include <string>

namespace advreg {

// Invalid user-supplied configuration (bad flag values, infeasible counts).
struct ConfigError : std::invalid_argument {
  explicit ConfigError(const std::string& msg) : std::invalid_argument(msg) {}
};

// Tensor shape disagreements between operands.
struct ShapeError : std::invalid_argument {
  explicit ShapeError(const std::string& msg) : std::invalid_argument(msg) {}
};

// Out-of-range labels, malformed sample records and similar bad inputs.
struct InputError : std::invalid_argument {
  explicit InputError(const std::string& msg) : std::invalid_argument(msg) {}
};

// API misuse that violates a documented contract (non-scalar loss node, ...).
struct ContractError : std::logic_error {
  explicit ContractError(const std::string& msg) : std::logic_error(msg) {}
};

// Filesystem and serialization failures, including corrupt or mismatched files.
struct IoError : std::runtime_error {
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace advreg
