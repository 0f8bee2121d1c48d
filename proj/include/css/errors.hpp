#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <string>
#include <vector>

namespace css {

using Index = Eigen::Index;

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input violates a documented precondition (bad shape, non-finite value, ...).
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Two features reach the same knot of the lasso path.
class PathTie : public Error {
public:
    PathTie(Index first, Index second, double lambda)
        : Error("lasso path tie at lambda=" + std::to_string(lambda) + " between features " +
                std::to_string(first) + " and " + std::to_string(second)),
          first_(first), second_(second), lambda_(lambda) {}

    Index first() const noexcept { return first_; }
    Index second() const noexcept { return second_; }
    double lambda() const noexcept { return lambda_; }

private:
    Index first_;
    Index second_;
    double lambda_;
};

/// The path saturated before the requested number of distinct entries.
class InsufficientPath : public Error {
public:
    InsufficientPath(Index requested, Index available)
        : Error("lasso path has " + std::to_string(available) +
                " distinct entered features, requested " + std::to_string(requested)),
          requested_(requested), available_(available) {}

    Index requested() const noexcept { return requested_; }
    Index available() const noexcept { return available_; }

private:
    Index requested_;
    Index available_;
};

class ConvergenceFailure : public Error {
public:
    ConvergenceFailure(int iterations, double residual)
        : Error("coordinate descent did not converge after " + std::to_string(iterations) +
                " sweeps (max change " + std::to_string(residual) + ")"),
          iterations_(iterations), residual_(residual) {}

    int iterations() const noexcept { return iterations_; }
    double residual() const noexcept { return residual_; }

private:
    int iterations_;
    double residual_;
};

/// Design matrix of an OLS refit is not of full column rank.
class RankDeficient : public Error {
public:
    explicit RankDeficient(std::vector<Index> collinear)
        : Error(make_message(collinear)), collinear_(std::move(collinear)) {}

    /// Design columns (0-based, excluding the intercept) found to be linearly dependent.
    const std::vector<Index>& collinear() const noexcept { return collinear_; }

private:
    static std::string make_message(const std::vector<Index>& cols) {
        std::string msg = "rank-deficient design; collinear columns:";
        for (Index c : cols) msg += " " + std::to_string(c);
        return msg;
    }
    std::vector<Index> collinear_;
};

class ConstantColumn : public Error {
public:
    explicit ConstantColumn(Index column)
        : Error("column " + std::to_string(column) + " is constant"), column_(column) {}

    Index column() const noexcept { return column_; }

private:
    Index column_;
};

/// A base-procedure failure on one half-sample. The original error is nested
/// (see std::rethrow_if_nested).
class HalfSampleError : public Error {
public:
    HalfSampleError(Index pair, bool complement, const std::string& what)
        : Error("half-sample " + std::to_string(pair) + (complement ? "b" : "a") + ": " + what),
          pair_(pair), complement_(complement) {}

    Index pair() const noexcept { return pair_; }
    bool complement() const noexcept { return complement_; }

private:
    Index pair_;
    bool complement_;
};

}  // namespace css
