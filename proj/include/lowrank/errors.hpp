#pragma once

#include <stdexcept>
#include <string>

namespace lowrank {

// Numerical failure (non-convergence, definiteness, singularity). CLI exit 1.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Dimension mismatch between operands; message names both shapes. CLI exit 2.
class ShapeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed file container or manifest; message names the offset. CLI exit 3.
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace lowrank
