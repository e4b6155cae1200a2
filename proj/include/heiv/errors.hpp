#pragma once

#include <stdexcept>
#include <string>

namespace heiv {

// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DimensionMismatch : Error {
    using Error::Error;
};

// A per-observation covariance Sigma_i(theta) failed its symmetric
// positive-definite factorization. Carries the observation index.
struct NonPDCovariance : Error {
    int index;
    explicit NonPDCovariance(int i)
        : Error("covariance matrix of observation " + std::to_string(i + 1) +
                " is not positive definite"),
          index(i) {}
};

struct DegenerateData : Error {
    using Error::Error;
};

// Fisher information is numerically singular (condition number > 1e12).
struct SingularInformation : Error {
    using Error::Error;
};

struct IndexOutOfRange : Error {
    using Error::Error;
};

// CSV ingestion failure; row is 1-based over data rows (header excluded).
struct ParseError : Error {
    int row;
    std::string column;
    ParseError(int row_, std::string column_, const std::string& what_)
        : Error("row " + std::to_string(row_) + ", column '" + column_ + "': " + what_),
          row(row_),
          column(std::move(column_)) {}
    explicit ParseError(const std::string& what_) : Error(what_), row(0) {}
};

// More than 1% of Monte Carlo replications failed to converge.
struct TooManyFailures : Error {
    using Error::Error;
};

// Dense reference path refused an instance too large to materialize.
struct SizeGuard : Error {
    using Error::Error;
};

}  // namespace heiv
