#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "aso/types.hpp"

namespace aso {

// ============================================================================
// Fixed-step integration
// ============================================================================

// Norm guard used by the divergence check; anything larger counts as blow-up.
inline constexpr double kDivergenceNorm = 1e9;

struct Trajectory {
    std::vector<double> times;
    std::vector<Vector> states;

    [[nodiscard]] std::size_t size() const { return times.size(); }
    [[nodiscard]] const Vector& back() const { return states.back(); }
};

using Rhs = std::function<Vector(double, const Vector&)>;

namespace detail {

inline bool state_ok(const Vector& x) {
    return x.allFinite() && x.norm() <= kDivergenceNorm;
}

} // namespace detail

// One classical 4th-order Runge-Kutta step. Shared by every integration path
// so that simulations and test oracles run on the identical scheme.
template <typename F>
inline void rk4_step(F&& rhs, double t, double h, Vector& x, Vector& k1,
                     Vector& k2, Vector& k3, Vector& k4, Vector& tmp) {
    k1 = rhs(t, x);
    tmp = x + (0.5 * h) * k1;
    k2 = rhs(t + 0.5 * h, tmp);
    tmp = x + (0.5 * h) * k2;
    k3 = rhs(t + 0.5 * h, tmp);
    tmp = x + h * k3;
    k4 = rhs(t + h, tmp);
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

template <typename F>
inline void rk4_step(F&& rhs, double t, double h, Vector& x) {
    Vector k1, k2, k3, k4, tmp;
    rk4_step(rhs, t, h, x, k1, k2, k3, k4, tmp);
}

// Integrates x' = rhs(t, x) from t0 to t1 on a uniform grid of step h; the
// final step is shortened so the trace lands exactly on t1. Throws
// DivergenceError at the first sample with a non-finite entry or a norm
// above the guard.
inline Trajectory integrate_fixed_step(const Rhs& rhs, const Vector& state0,
                                       double t0, double t1, double h) {
    require(h > 0.0, "integrate_fixed_step: h must be > 0");
    require(t1 > t0, "integrate_fixed_step: t1 must be > t0");

    Trajectory traj;
    const auto steps_est = static_cast<std::size_t>(std::ceil((t1 - t0) / h)) + 2;
    traj.times.reserve(steps_est);
    traj.states.reserve(steps_est);

    Vector x = state0;
    Vector k1, k2, k3, k4, tmp;
    double t = t0;
    traj.times.push_back(t);
    traj.states.push_back(x);
    if (!detail::state_ok(x))
        throw DivergenceError(t, "integrate_fixed_step: non-finite initial state");

    const double eps = 1e-12 * std::max(1.0, std::abs(t1));
    while (t < t1 - eps) {
        const double dt = std::min(h, t1 - t);
        rk4_step(rhs, t, dt, x, k1, k2, k3, k4, tmp);
        t += dt;
        if (!detail::state_ok(x))
            throw DivergenceError(t, "integrate_fixed_step: state diverged at t = " +
                                          std::to_string(t));
        traj.times.push_back(t);
        traj.states.push_back(x);
    }
    return traj;
}

// ============================================================================
// Reproducible bounded noise
// ============================================================================

namespace detail {

inline uint64_t splitmix64(uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Uniform on [-1, 1], fully determined by the key.
inline double unit_noise(uint64_t key) {
    const uint64_t bits = splitmix64(key);
    const double u01 = static_cast<double>(bits >> 11) * 0x1.0p-53; // [0,1)
    return 2.0 * u01 - 1.0;
}

} // namespace detail

// Componentwise uniform noise on [-amplitude_i, +amplitude_i], reproducible
// from (seed, t_index). Callers hold each draw constant over one integration
// step (zero-order hold), which keeps the perturbed dynamics a well-posed ODE.
inline Vector bounded_noise(uint64_t seed, const Vector& amplitude, uint64_t t_index) {
    Vector v(amplitude.size());
    for (Index i = 0; i < amplitude.size(); ++i) {
        require(amplitude[i] >= 0.0, "bounded_noise: amplitude must be >= 0");
        const uint64_t key =
            detail::splitmix64(seed ^ (0x517cc1b727220a95ULL * (t_index + 1))) +
            static_cast<uint64_t>(i);
        v[i] = amplitude[i] * detail::unit_noise(key);
    }
    return v;
}

// ============================================================================
// Small dense-matrix facilities
// ============================================================================

// Real parts of all eigenvalues of a square matrix, in no particular order.
inline Vector eig_real_parts(const Matrix& M) {
    require(M.rows() == M.cols(), "eig_real_parts: matrix must be square");
    require(M.allFinite(), "eig_real_parts: matrix must be finite");
    Eigen::EigenSolver<Matrix> solver(M, /*computeEigenvectors=*/false);
    if (solver.info() != Eigen::Success)
        throw NumericError("eig_real_parts: eigenvalue solver did not converge");
    return solver.eigenvalues().real();
}

inline double max_eig_real_part(const Matrix& M) {
    return eig_real_parts(M).maxCoeff();
}

inline bool is_symmetric_positive_definite(const Matrix& M, double tol = 1e-10) {
    if (M.rows() != M.cols()) return false;
    if (((M - M.transpose()).cwiseAbs().maxCoeff()) > tol * std::max(1.0, M.cwiseAbs().maxCoeff()))
        return false;
    Eigen::SelfAdjointEigenSolver<Matrix> es(M, Eigen::EigenvaluesOnly);
    return es.info() == Eigen::Success && es.eigenvalues().minCoeff() > tol;
}

inline double min_symmetric_eigenvalue(const Matrix& M) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (M + M.transpose()), Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success)
        throw NumericError("min_symmetric_eigenvalue: solver failed");
    return es.eigenvalues().minCoeff();
}

inline Vector solve_linear(const Matrix& A, const Vector& b) {
    require(A.rows() == A.cols() && A.rows() == b.size(), "solve_linear: shape mismatch");
    return A.fullPivLu().solve(b);
}

} // namespace aso
