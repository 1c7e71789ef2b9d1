#ifndef RECTIDIC_ERRORS_HPP
#define RECTIDIC_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace rectidic {

/// Base class for all rectidic failures.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Coordinate or window falls outside the image/search domain.
class OutOfBoundsError : public Error {
public:
    using Error::Error;
};

/// Argument violates a documented precondition.
class InvalidParameterError : public Error {
public:
    using Error::Error;
};

/// File could not be read or written, or its format is unsupported.
class IoError : public Error {
public:
    using Error::Error;
};

/// Point configuration does not determine a unique homography.
class DegenerateConfigurationError : public Error {
public:
    using Error::Error;
};

/// Robust estimation found no model with enough support.
class EstimationFailedError : public Error {
public:
    using Error::Error;
};

/// Subset has zero intensity variance; zero-normalized criteria undefined.
class DegenerateSubsetError : public Error {
public:
    using Error::Error;
};

/// Camera/object configuration puts a point behind or beside the pinhole.
class GeometryViolationError : public Error {
public:
    using Error::Error;
};

/// Seed point of a correlation run failed to converge acceptably.
class SeedFailedError : public Error {
public:
    using Error::Error;
};

} // namespace rectidic

#endif
