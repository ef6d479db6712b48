#pragma once

#include <stdexcept>
#include <string>

namespace nlbs {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Parameter/argument validation failures.
struct InvalidParameter : Error { using Error::Error; };

// A model denominator entered the guard band; the evaluation left the
// model's validity region.
struct DegenerateDenominator : Error { using Error::Error; };

// Operation not defined for the requested kind/family combination.
struct Unsupported : Error { using Error::Error; };

struct NonPositivePrice : Error { using Error::Error; };
struct OutOfDomain : Error { using Error::Error; };

// c = 0 collapses the cubic to the constant-slope solutions.
struct ZeroC : Error { using Error::Error; };
// b = omega*rho = 0 makes the reduced equation linear; the nonlinear
// families are undefined there.
struct ZeroB : Error { using Error::Error; };

struct SingularAction : Error { using Error::Error; };

struct SingularY : Error { using Error::Error; };
struct NegativeRadicand : Error { using Error::Error; };
struct SingularEncounter : Error { using Error::Error; };
struct PoleOnPath : Error { using Error::Error; };

struct NewtonDivergence : Error { using Error::Error; };
struct DenominatorBreach : Error { using Error::Error; };

}  // namespace nlbs
