#pragma once

#include <stdexcept>

namespace rpsv {

/// Invalid user-supplied data or options. The CLI reports these with exit code 2.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Numerical failure inside an algorithm. The CLI reports these with exit code 1.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace rpsv
