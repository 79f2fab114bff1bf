#pragma once

#include <stdexcept>
#include <string>

namespace misfit {

/// Base class for all misfit-lab errors.
struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// core
struct SeparationViolation : Error { using Error::Error; };
struct OutOfRange : Error { using Error::Error; };
struct InvalidParams : Error { using Error::Error; };

// halfline_energy
struct DegenerateSegment : Error { using Error::Error; };
struct BudgetExceeded : Error { using Error::Error; };
struct TooShort : Error { using Error::Error; };

// interval_opt
struct Infeasible : Error { using Error::Error; };
struct NoConvergence : Error { using Error::Error; };
struct SlopeTooSteep : Error { using Error::Error; };

// circle_model
struct CutoffTooLarge : Error { using Error::Error; };
struct CoincidentPoints : Error { using Error::Error; };
struct OnBoundary : Error { using Error::Error; };
struct BadK : Error { using Error::Error; };
struct CutoffViolation : Error { using Error::Error; };

// cli_harness
struct BadManifest : Error { using Error::Error; };
struct UnknownKind : Error { using Error::Error; };

} // namespace misfit
