#pragma once

#include <stdexcept>
#include <string>

namespace sofctl {

// Root of every exception the library throws.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Shapes do not line up, or a value violates a documented precondition.
class DimensionError : public Error {
public:
    using Error::Error;
};

class InputError : public Error {
public:
    using Error::Error;
};

// Singular systems, failed factorizations, non-finite intermediate values.
class NumericalError : public Error {
public:
    using Error::Error;
};

class ConvergenceError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

// Controllability / observability hypotheses rejected under strict checking.
class AssumptionError : public Error {
public:
    using Error::Error;
};

class InfeasibleError : public Error {
public:
    using Error::Error;
};

// I - F D is singular: the feedthrough loop u = F(Cx + Du) has no unique solution.
class WellPosednessError : public Error {
public:
    using Error::Error;
};

}  // namespace sofctl
