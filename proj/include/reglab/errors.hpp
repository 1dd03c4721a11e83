#ifndef REGLAB_ERRORS_HPP
#define REGLAB_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace reglab {

// Base for all domain errors; the CLI maps these to exit code 1.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParseError : Error {
    using Error::Error;
};
struct SchemaError : Error {
    using Error::Error;
};
struct GeometryError : Error {
    using Error::Error;
};
struct DimensionMismatch : Error {
    using Error::Error;
};
struct MissingLogits : Error {
    using Error::Error;
};
struct ZeroCountClass : Error {
    using Error::Error;
};
struct ManifoldMismatch : Error {
    using Error::Error;
};
struct ZeroNormAfterStep : Error {
    using Error::Error;
};
struct NonFiniteObjective : Error {
    using Error::Error;
};
struct NonPositiveVariance : Error {
    using Error::Error;
};
struct InfeasibleConfig : Error {
    using Error::Error;
};
struct EmptyDataset : Error {
    using Error::Error;
};
struct DivergenceDetected : Error {
    using Error::Error;
};

}  // namespace reglab

#endif
