#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ridgecond {

enum class ErrorKind {
    InvalidInput,
    NotPositiveSemiDefinite,
    PenaltyOutOfDomain,
    NumericalFailure,
    SingularTarget,
    TargetNotPD,
    NearSingular,
    ConvergenceFailure,
    ParseError,
    MissingData,
    DegenerateVariance,
    Io,
    Usage,
};

inline const char* to_string(ErrorKind kind) noexcept
{
    switch (kind) {
    case ErrorKind::InvalidInput: return "InvalidInput";
    case ErrorKind::NotPositiveSemiDefinite: return "NotPositiveSemiDefinite";
    case ErrorKind::PenaltyOutOfDomain: return "PenaltyOutOfDomain";
    case ErrorKind::NumericalFailure: return "NumericalFailure";
    case ErrorKind::SingularTarget: return "SingularTarget";
    case ErrorKind::TargetNotPD: return "TargetNotPD";
    case ErrorKind::NearSingular: return "NearSingular";
    case ErrorKind::ConvergenceFailure: return "ConvergenceFailure";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::MissingData: return "MissingData";
    case ErrorKind::DegenerateVariance: return "DegenerateVariance";
    case ErrorKind::Io: return "Io";
    case ErrorKind::Usage: return "Usage";
    }
    return "Unknown";
}

/// Base of every exception thrown by the library. `kind()` is what callers
/// (and the CLI exit-code mapping) dispatch on.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind)
    {
    }

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

class ParseError : public Error {
public:
    ParseError(std::size_t line, std::size_t column, const std::string& what)
        : Error(ErrorKind::ParseError,
                "line " + std::to_string(line) +
                    (column ? ", column " + std::to_string(column) : std::string()) + ": " + what),
          line_(line), column_(column)
    {
    }

    std::size_t line() const noexcept { return line_; }
    // 0 when the problem concerns the whole line (e.g. ragged rows).
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

class MissingDataError : public Error {
public:
    MissingDataError(std::size_t count, std::size_t first_line, std::size_t first_column)
        : Error(ErrorKind::MissingData,
                std::to_string(count) + " missing value(s), first at line " +
                    std::to_string(first_line) + ", column " + std::to_string(first_column)),
          count_(count), first_line_(first_line), first_column_(first_column)
    {
    }

    std::size_t count() const noexcept { return count_; }
    std::size_t first_line() const noexcept { return first_line_; }
    std::size_t first_column() const noexcept { return first_column_; }

private:
    std::size_t count_;
    std::size_t first_line_;
    std::size_t first_column_;
};

class DegenerateVarianceError : public Error {
public:
    explicit DegenerateVarianceError(std::size_t index)
        : Error(ErrorKind::DegenerateVariance,
                "variable " + std::to_string(index) + " has non-positive variance"),
          index_(index)
    {
    }

    std::size_t index() const noexcept { return index_; }

private:
    std::size_t index_;
};

/// Thrown by iterative routines that exhaust their evaluation budget. Carries
/// the best point seen so far.
class ConvergenceError : public Error {
public:
    ConvergenceError(double best_x, double best_f, int evaluations)
        : Error(ErrorKind::ConvergenceFailure,
                "evaluation budget of " + std::to_string(evaluations) + " exhausted"),
          best_x_(best_x), best_f_(best_f), evaluations_(evaluations)
    {
    }

    double best_x() const noexcept { return best_x_; }
    double best_f() const noexcept { return best_f_; }
    int evaluations() const noexcept { return evaluations_; }

private:
    double best_x_;
    double best_f_;
    int evaluations_;
};

} // namespace ridgecond
