#pragma once

#include <stdexcept>
#include <string>

namespace wpsc {

enum class ErrorKind {
    InfeasibleSpec,
    Format,
    Consistency,
    EmptyInput,
    Labeling,
    DegenerateColumn,
    Split,
    Size,
    Shape,
    Depth,
    DegenerateData,
    Convergence,
    Parameter,
    NoGrid,
    Precondition,
    Config,
    Io,
};

const char* to_string(ErrorKind kind);

/// Every failure raised by the library carries a kind so that drivers can map
/// it to an exit code without parsing messages.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Raised when an iterative solver exhausts its budget. Residuals at the last
/// iterate are kept so callers can report them.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, int iterations, double primal_residual,
                     double secondary_residual)
        : Error(ErrorKind::Convergence, what),
          iterations(iterations),
          primal_residual(primal_residual),
          secondary_residual(secondary_residual) {}

    int iterations;
    double primal_residual;
    double secondary_residual;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
    throw Error(kind, what);
}

}  // namespace wpsc
