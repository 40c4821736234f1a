#pragma once

#include <stdexcept>
#include <string>

namespace camid {

// Base class for everything camid throws.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad configuration, argument, manifest content, or value outside its
// domain. The CLI maps this family to exit code 2.
struct ValidationError : Error {
    using Error::Error;
};

// Unreadable, malformed, or too-short input data. CLI exit code 3.
struct DataError : Error {
    using Error::Error;
};

// Mismatched dimensions or misaligned sample/class orderings between
// objects that must agree. CLI exit code 3.
struct ShapeError : Error {
    using Error::Error;
};

}  // namespace camid
