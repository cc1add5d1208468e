#pragma once

#include <stdexcept>
#include <string>

namespace fastslow {

/// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Input outside the mathematical domain (non-finite state, pole, bad parameter).
struct DomainError : Error {
    using Error::Error;
};

/// An iterative solve ran out of iterations or stalled.
struct ConvergenceError : Error {
    using Error::Error;
};

/// A root/bracket/feature search found nothing in the given range.
struct NotFoundError : Error {
    using Error::Error;
};

/// A solve converged, but to a solution of a different kind than requested.
struct KindMismatchError : Error {
    using Error::Error;
};

/// Malformed run configuration (unknown key, unparsable value, missing file).
struct ConfigError : Error {
    using Error::Error;
};

/// Too few samples, peaks or intervals for the requested analysis.
struct InsufficientDataError : Error {
    using Error::Error;
};

} // namespace fastslow
