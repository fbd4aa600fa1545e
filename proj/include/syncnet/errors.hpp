#ifndef SYNCNET_ERRORS_HPP
#define SYNCNET_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace syncnet {

// Invalid scenario, topology or parameter set. The CLI maps it to exit code 1.
class ConfigError : public std::invalid_argument {
public:
    explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

// Numerical or model inconsistency detected while running an estimator.
class EstimationError : public std::runtime_error {
public:
    explicit EstimationError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace syncnet

#endif  // SYNCNET_ERRORS_HPP
