#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace dtlfssc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;
using Labels = std::vector<int>;

// Error hierarchy. Every failure raised by the library derives from Error so
// callers can catch once and still dispatch on the category.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

class DomainError : public Error {
public:
    using Error::Error;
};

class NumericError : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

// Non-fatal conditions (non-convergence, degenerate input) are collected here
// and travel with the result instead of aborting the computation.
struct Diagnostics {
    std::vector<std::string> warnings;

    void warn(std::string message) { warnings.push_back(std::move(message)); }
    void merge(const Diagnostics& other, const std::string& prefix = {})
    {
        for (const auto& w : other.warnings) {
            warnings.push_back(prefix.empty() ? w : prefix + ": " + w);
        }
    }
    bool empty() const { return warnings.empty(); }
};

struct SolverOptions {
    int max_iters = 500;
    double tol = 1e-6;
    double rho = 1.0;
    std::uint64_t seed = 0;

    void validate() const
    {
        if (max_iters < 1) throw ConfigError("max_iters must be >= 1");
        if (!(tol > 0.0)) throw ConfigError("tol must be > 0");
        if (!(rho > 0.0)) throw ConfigError("rho must be > 0");
    }
};

inline bool all_finite(const Eigen::Ref<const Matrix>& m)
{
    return m.allFinite();
}

inline void require_finite(const Eigen::Ref<const Matrix>& m, const char* what)
{
    if (!m.allFinite()) throw NumericError(std::string(what) + " contains non-finite values");
}

} // namespace dtlfssc
