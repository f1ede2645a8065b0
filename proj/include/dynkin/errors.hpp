#pragma once

#include <stdexcept>
#include <string>

namespace dynkin {

// Every failure the library reports derives from Error so the CLI can map
// families of failures to exit codes.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ValidationError : Error { using Error::Error; };
struct ClassificationConflict : Error { using Error::Error; };
struct KinkEvaluation : Error { using Error::Error; };
struct NotAKink : Error { using Error::Error; };
struct OrderingViolation : Error { using Error::Error; };
struct ObstacleCrossing : Error { using Error::Error; };
struct HypothesisViolated : Error { using Error::Error; };
struct DegenerateInterval : Error { using Error::Error; };
struct PreconditionFailure : Error { using Error::Error; };

struct NonConvergence : Error {
    NonConvergence(const std::string& what, double residual)
        : Error(what), max_residual(residual) {}
    double max_residual;
};

struct NonContraction : NonConvergence { using NonConvergence::NonConvergence; };

struct CalibrationFailure : Error {
    CalibrationFailure(const std::string& what, double x)
        : Error(what), point(x) {}
    double point;
};

}  // namespace dynkin
