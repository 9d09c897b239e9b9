#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pfm {

// Base of every domain error raised by the library. The CLI maps these to
// exit code 1 and the HTTP service to a JSON error body carrying code().
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

class ParseError : public Error {
public:
    ParseError(std::size_t row, const std::string& message)
        : Error("parse_error", "row " + std::to_string(row) + ": " + message), row_(row) {}

    /// 1-based line number in the source file (the header is row 1).
    std::size_t row() const noexcept { return row_; }

private:
    std::size_t row_;
};

class FormatError : public Error {
public:
    explicit FormatError(const std::string& message) : Error("format_error", message) {}
};

class IntegrityError : public Error {
public:
    explicit IntegrityError(const std::string& message) : Error("integrity_error", message) {}
};

class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& message) : Error("validation_error", message) {}
};

class DimensionError : public Error {
public:
    explicit DimensionError(const std::string& message) : Error("dimension_error", message) {}
};

class ConnectivityError : public Error {
public:
    ConnectivityError(std::size_t item, const std::string& message)
        : Error("connectivity_error", message), item_(item) {}

    std::size_t item() const noexcept { return item_; }

private:
    std::size_t item_;
};

class NumericalError : public Error {
public:
    explicit NumericalError(const std::string& message) : Error("numerical_error", message) {}
};

class ConvergenceError : public Error {
public:
    ConvergenceError(double residual, std::size_t iterations)
        : Error("convergence_error",
                "no convergence after " + std::to_string(iterations) +
                    " iterations (last residual " + std::to_string(residual) + ")"),
          residual_(residual), iterations_(iterations) {}

    double residual() const noexcept { return residual_; }
    std::size_t iterations() const noexcept { return iterations_; }

private:
    double residual_;
    std::size_t iterations_;
};

class CapacityError : public Error {
public:
    explicit CapacityError(const std::string& message) : Error("capacity_error", message) {}
};

class UndefinedMetricError : public Error {
public:
    explicit UndefinedMetricError(const std::string& message) : Error("undefined_metric", message) {}
};

class NotFoundError : public Error {
public:
    explicit NotFoundError(const std::string& message) : Error("not_found", message) {}
};

} // namespace pfm
