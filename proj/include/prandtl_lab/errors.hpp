// Error taxonomy shared by all modules.
#pragma once

#include <stdexcept>
#include <string>

namespace plab {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad sizes, non-finite parameters, malformed schedules.
struct ConfigError : Error {
    using Error::Error;
};
// Array lengths or grids that do not line up.
struct ShapeError : Error {
    using Error::Error;
};
// Argument outside the mathematical domain of an operation.
struct DomainError : Error {
    using Error::Error;
};
// Input violating a documented precondition.
struct PreconditionError : Error {
    using Error::Error;
};
// Nonlinear or linear solve that failed to converge.
struct SolverError : Error {
    using Error::Error;
};
// Requested tolerance not reachable at the given resolution.
struct ResolutionError : Error {
    using Error::Error;
};
// Evaluation outside the sampled range.
struct ExtrapolationError : Error {
    using Error::Error;
};
// Monotone inversion impossible.
struct InversionError : Error {
    using Error::Error;
};
// A state that the theory forbids showed up.
struct IntegrityError : Error {
    using Error::Error;
};
struct IoError : Error {
    using Error::Error;
};

}  // namespace plab
