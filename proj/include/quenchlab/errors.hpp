#pragma once

#include <stdexcept>
#include <string>

namespace quenchlab {

// Invalid user-facing configuration (bounds, counts, parameters, kernels).
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Grid too coarse for the kernel: some exterior mass b_i fell below -tol.
class ExteriorMassNegative : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Non-finite right-hand side (singular term overflowed).
class NumericalOverflow : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Step size underflow that is not explained by a decreasing minimum.
class NumericalFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

} // namespace quenchlab
