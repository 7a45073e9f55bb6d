#pragma once

#include <stdexcept>
#include <string>

namespace mdclt {

// A spec that violates its own constraints (bad weights, parameter out of range, ...).
class invalid_spec_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// An analytic quantity was requested but only estimation is possible.
class needs_estimation_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A family was asked to sample but has no sampler attached.
class unsupported_family_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Exhaustive enumeration would exceed the configured outcome cap.
class enumeration_limit_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// The requested estimator is not meaningful for the given data (e.g. TV on lattice samples).
class estimator_inapplicable_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Quadrature could not certify a finite value of the integral.
class divergence_suspected_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Config file / CLI schema violations.
class config_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace mdclt
