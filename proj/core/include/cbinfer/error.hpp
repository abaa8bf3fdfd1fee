#pragma once

#include <stdexcept>
#include <string>

namespace cbinfer {

// Base class for all errors raised by this library.
class error : public std::runtime_error {
public:
    explicit error(const std::string& msg) : std::runtime_error(msg) {}
};

// Tensor / matrix dimension mismatch between operands.
class shape_error : public error {
public:
    explicit shape_error(const std::string& msg) : error(msg) {}
};

// Invalid convolution / pooling geometry (e.g. empty output).
class geometry_error : public error {
public:
    explicit geometry_error(const std::string& msg) : error(msg) {}
};

// Coordinate or index outside the valid domain.
class bounds_error : public error {
public:
    explicit bounds_error(const std::string& msg) : error(msg) {}
};

// File IO failure, including malformed or truncated data files.
class io_error : public error {
public:
    explicit io_error(const std::string& msg) : error(msg) {}
};

// Invalid network specification (bad layer chain, empty network, ...).
class spec_error : public error {
public:
    explicit spec_error(const std::string& msg) : error(msg) {}
};

}  // namespace cbinfer
