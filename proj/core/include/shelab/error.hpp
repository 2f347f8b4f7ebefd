#pragma once

#include <stdexcept>
#include <string>

namespace shelab {

// Input outside the mathematical domain of an operation (t <= 0, bad ordering, off-grid source).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Source points given in the wrong time order (second derivative needs theta < r).
class OrderingError : public DomainError {
public:
    using DomainError::DomainError;
};

// Invalid run configuration (CFL, unsafe radius, missing seed, bad file).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Quadrature or fixed-point iteration did not reach the requested tolerance.
class NumericalError : public std::runtime_error {
public:
    NumericalError(const std::string& what, double achieved)
        : std::runtime_error(what), achieved_(achieved) {}
    double achieved() const noexcept { return achieved_; }

private:
    double achieved_;
};

class RangeError : public std::range_error {
public:
    using std::range_error::range_error;
};

class SimulationDiverged : public std::runtime_error {
public:
    SimulationDiverged(const std::string& what, long step)
        : std::runtime_error(what), step_(step) {}
    long step() const noexcept { return step_; }

private:
    long step_;
};

// Operation called with arguments it is not designed for (e.g. non-additive coefficients
// passed to the exact additive sampler).
class MisuseError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// Statistics requested on an ensemble that cannot support them.
class StatisticsError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace shelab
