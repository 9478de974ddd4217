#pragma once

#include <stdexcept>

namespace wqed {

/// A computation that should have succeeded for valid input did not
/// (singular system, non-finite result). The CLI maps it to exit code 3.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace wqed
