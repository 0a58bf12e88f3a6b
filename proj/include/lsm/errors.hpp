#pragma once

#include <stdexcept>
#include <string>

namespace lsm {

/// Argument outside the supported domain of a numerical routine.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Evaluation at (or numerically at) a kernel singularity.
class SingularityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid geometric configuration, e.g. a source inside a scatterer.
class GeometryError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Iterative routine that did not converge within its iteration cap.
class ConvergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Operation applied to a matrix of the wrong kind.
class KindError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

}  // namespace lsm
