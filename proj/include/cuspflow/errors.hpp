#pragma once

#include <stdexcept>
#include <string>

namespace cuspflow {

// Error hierarchy maps onto CLI exit statuses: config_error -> 2,
// hypothesis_violation -> 3, numeric_failure -> 4.
struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct config_error : error {
    using error::error;
};

struct hypothesis_violation : error {
    using error::error;
};

struct numeric_failure : error {
    explicit numeric_failure(const std::string& what, double residual = 0.0)
        : error(what), last_residual(residual) {}
    double last_residual;
};

} // namespace cuspflow
