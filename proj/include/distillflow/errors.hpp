#pragma once

#include <stdexcept>
#include <string>

namespace distillflow {

// Base of every error raised by the library. The CLI maps the subclasses
// onto exit codes (numerical failures -> 2, I/O -> 3, config/usage -> 1).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Raster dimensions disagree between arguments.
class ShapeError : public Error {
public:
    using Error::Error;
};

// Arguments outside an operation's precondition (bad radius, empty list, ...).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

// A masked mean whose mask has no mass, e.g. every pixel occluded.
class DegenerateMask : public Error {
public:
    using Error::Error;
};

// Non-finite loss or step during optimization.
class NumericalError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace distillflow
