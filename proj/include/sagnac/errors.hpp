#pragma once

#include <stdexcept>

namespace sagnac {

// Adaptive integration could not reach the requested accuracy.
struct IntegrationFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A 1-d search window does not bracket an interior extremum.
struct NoBracket : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A momentum-kick direction was not normalized.
struct NonUnitDirection : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Lookup of a perturbation parameter by an unrecognized name.
struct UnknownParameterName : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Fitted conic is too close to a line to carry phase information.
struct DegenerateConic : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Two candidate functional forms describe the data equally well.
struct AmbiguousFit : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Fewer samples than the fit or estimate requires.
struct InsufficientData : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Iterative correction loop made the residual grow repeatedly.
struct Diverged : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Linear solve requested on a numerically singular matrix.
struct SingularMatrix : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace sagnac
