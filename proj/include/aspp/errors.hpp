#pragma once

#include <stdexcept>
#include <string>

namespace aspp {

// Invalid parameter block or configuration value.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Every active agent holds zero stock, so the clearing price is undefined.
class NoSupplyError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// The requested external flow would push the cleared price to zero or below.
class LiquidityError : public std::runtime_error {
public:
    LiquidityError(const std::string& what, double flow_in)
        : std::runtime_error(what), flow_in_(flow_in) {}
    double flow_in() const noexcept { return flow_in_; }

private:
    double flow_in_;
};

// ODE state became non-finite.
class DivergenceError : public std::runtime_error {
public:
    DivergenceError(const std::string& what, double last_finite_time)
        : std::runtime_error(what), last_finite_time_(last_finite_time) {}
    double last_finite_time() const noexcept { return last_finite_time_; }

private:
    double last_finite_time_;
};

// Root/extremum search could not establish or keep a valid bracket.
class BracketError : public std::runtime_error {
public:
    BracketError(const std::string& what, double low, double high)
        : std::runtime_error(what), low_(low), high_(high) {}
    double low() const noexcept { return low_; }
    double high() const noexcept { return high_; }

private:
    double low_;
    double high_;
};

}  // namespace aspp
