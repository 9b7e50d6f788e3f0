#ifndef CUSPWAVE_ERRORS_HPP
#define CUSPWAVE_ERRORS_HPP

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace cuspwave {

/// Base class of everything thrown by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Invalid argument values (bad cutoff, nonpositive weights, divergent sums, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Operands defined over mismatched bases or grids.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// Experiment configuration problems (parse failure, inconsistent fields).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// File output problems.
class IoError : public Error {
public:
    using Error::Error;
};

/// Resource guard tripped (basis larger than the configured limit).
class ResourceLimitError : public Error {
public:
    using Error::Error;
};

/// Phase normalization anchor where the eigenfunction (nearly) vanishes.
class AnchorError : public Error {
public:
    using Error::Error;
};

/// A computation that requires a phase-normalized eigenvector got one with a
/// significant imaginary part at the nuclei.
class PhaseError : public Error {
public:
    using Error::Error;
};

/// Iterative eigensolver ran out of iterations; carries the best residuals seen.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, std::vector<double> residuals)
        : Error(what), residuals_(std::move(residuals)) {}

    const std::vector<double>& residuals() const noexcept { return residuals_; }

private:
    std::vector<double> residuals_;
};

} // namespace cuspwave

#endif
