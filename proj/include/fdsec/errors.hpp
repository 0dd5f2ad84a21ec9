#pragma once

#include <sstream>
#include <stdexcept>
#include <string>

namespace fdsec {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of an operation.
struct DomainError : Error {
    using Error::Error;
};

struct ConfigError : Error {
    ConfigError(const std::string& msg, int line = 0)
        : Error(line > 0 ? "line " + std::to_string(line) + ": " + msg : msg), line(line) {}
    int line;
};

inline std::string format_g(double x) {
    std::ostringstream os;
    os << x;
    return os.str();
}

struct QuadratureError : Error {
    QuadratureError(const std::string& msg, double achieved)
        : Error(msg + " (achieved error estimate " + format_g(achieved) + ")"), achieved_error(achieved) {}
    double achieved_error;
};

struct NoSignChangeError : Error {
    using Error::Error;
};

// The ET signal cannot even cover the EHU processing cost.
struct InfeasibleEnergyError : Error {
    using Error::Error;
};

struct MonotonicityError : Error {
    using Error::Error;
};

struct ConvergenceError : Error {
    ConvergenceError(const std::string& msg, double residual)
        : Error(msg + " (residual " + format_g(residual) + ")"), residual(residual) {}
    double residual;
};

struct ShapeError : Error {
    using Error::Error;
};

}  // namespace fdsec
