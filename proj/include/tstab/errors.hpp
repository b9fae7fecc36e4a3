#pragma once

#include <stdexcept>
#include <string>

namespace tstab {

/// Normalization denominator of a membership family fell below 1e-300.
class DegenerateDenominator : public std::runtime_error {
public:
    explicit DegenerateDenominator(const std::string& msg) : std::runtime_error(msg) {}
};

/// |x dmu/dx| keeps growing up to the working-box edge and the membership
/// is not of a known decaying form, so no finite derivative bound exists.
class UnboundedDerivative : public std::runtime_error {
public:
    explicit UnboundedDerivative(const std::string& msg) : std::runtime_error(msg) {}
};

class DimensionMismatch : public std::logic_error {
public:
    explicit DimensionMismatch(const std::string& msg) : std::logic_error(msg) {}
};

/// Configuration / input file problem, carries a location when available.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
    ConfigError(const std::string& file, int line, const std::string& msg)
        : std::runtime_error(file + ":" + std::to_string(line) + ": " + msg) {}
};

} // namespace tstab
