#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace aso {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index  = Eigen::Index;

// Index of one side of an interval observer pair.
enum class Obs { lower, upper };

inline constexpr Obs other(Obs o) { return o == Obs::lower ? Obs::upper : Obs::lower; }

inline const char* name(Obs o) { return o == Obs::lower ? "m" : "M"; }

// ============================================================================
// Errors
// ============================================================================

// A simulated state left the finite range (non-finite entry or norm guard).
class DivergenceError : public std::runtime_error {
public:
    DivergenceError(double t_bad, const std::string& what_)
        : std::runtime_error(what_), t_bad_(t_bad) {}
    [[nodiscard]] double time() const { return t_bad_; }
private:
    double t_bad_;
};

class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A trailing-window quantity was requested before the window filled up.
class WindowError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// The running information matrix is still singular; estimates undefined.
class IdentifiabilityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw DimensionError(msg);
}

} // namespace aso
