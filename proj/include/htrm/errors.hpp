#pragma once

#include <stdexcept>

namespace htrm {

// Invalid parameters or configuration. The CLI maps this to exit code 2.
struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// A computation could not produce a trustworthy result. The CLI maps this to exit code 3.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace htrm
