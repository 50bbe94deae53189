#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace gifkit {

/// Cell index into a StateSpace. Torus cells are flattened row-major.
using cell_t = std::int32_t;

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

/// Tolerance for probability normalization and marginal identities.
inline constexpr double kProbTol = 1e-12;

/// Tolerance for solver residuals (LP feasibility, coupling match).
inline constexpr double kSolverTol = 1e-9;

// ----------------------------------------------------------------------------
// Error taxonomy. Every operation throws one of these on contract violation;
// the CLI maps them to exit codes (config/usage -> 2, check failure -> 1).
// ----------------------------------------------------------------------------

struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Wrong grid mode for the operation (e.g. shift on a window grid).
struct mode_error : error {
    using error::error;
};

/// A stated precondition does not hold (bad index, zero-mass event, ...).
struct precondition_error : error {
    using error::error;
};

/// Malformed configuration or serialized input.
struct config_error : error {
    using error::error;
};

}  // namespace gifkit
