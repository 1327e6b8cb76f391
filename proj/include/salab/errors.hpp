#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace salab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DomainError : public Error {
public:
    using Error::Error;
};

// markov_core
class NonStochastic : public Error {
public:
    using Error::Error;
};

class ReducibleOrDegenerate : public Error {
public:
    using Error::Error;
};

class DegenerateChain : public Error {
public:
    using Error::Error;
};

// sa_engine
class NumericalDivergence : public Error {
public:
    NumericalDivergence(std::int64_t index, const std::string& what)
        : Error(what + " (iterate index " + std::to_string(index) + ")"), index_(index) {}

    [[nodiscard]] std::int64_t index() const noexcept { return index_; }

private:
    std::int64_t index_;
};

class BurnInNotReached : public Error {
public:
    using Error::Error;
};

// linear_theory
class NotHurwitz : public Error {
public:
    using Error::Error;
};

class SingularAstar : public Error {
public:
    using Error::Error;
};

// mp_decomp
class MissingPath : public Error {
public:
    using Error::Error;
};

// harness
class ConfigError : public Error {
public:
    using Error::Error;
};

class ModelMismatch : public Error {
public:
    using Error::Error;
};

class InsufficientGrid : public Error {
public:
    using Error::Error;
};

}  // namespace salab
