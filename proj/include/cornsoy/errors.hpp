#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace cornsoy {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed input file: carries file, line and column of the offending token.
class ParseError : public Error {
public:
    ParseError(std::string file, long line, long column, const std::string& what_failed)
        : Error(file + ":" + std::to_string(line) + ":" + std::to_string(column) +
                ": " + what_failed),
          file(std::move(file)), line(line), column(column) {}
    std::string file;
    long line = 0;
    long column = 0;
};

/// Input file has the wrong column set: names the missing/unknown column.
class SchemaMismatch : public Error {
public:
    SchemaMismatch(std::string file, std::string column, const std::string& detail)
        : Error(file + ": column '" + column + "': " + detail),
          file(std::move(file)), column(std::move(column)) {}
    std::string file;
    std::string column;
};

/// A technology cannot be calibrated from its baseline record.
class CalibrationError : public Error {
public:
    using Error::Error;
};

/// A cell sub-equilibrium failed to converge; carries the last residuals.
class CellNoConvergence : public Error {
public:
    CellNoConvergence(long cell_id, int iterations, double residual)
        : Error("cell " + std::to_string(cell_id) + ": no convergence after " +
                std::to_string(iterations) + " iterations (residual " +
                std::to_string(residual) + ")"),
          cell_id(cell_id), iterations(iterations), residual(residual) {}
    long cell_id = 0;
    int iterations = 0;
    double residual = 0.0;
};

/// Market solver failure; carries the residual-norm trace for diagnosis.
class SolveError : public Error {
public:
    enum class Kind { NoConvergence, NonFiniteResidual };
    SolveError(Kind kind, const std::string& msg, std::vector<double> trace)
        : Error(msg), kind(kind), residual_trace(std::move(trace)) {}
    Kind kind;
    std::vector<double> residual_trace;
};

}  // namespace cornsoy
