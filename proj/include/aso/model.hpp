#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "aso/numerics.hpp"
#include "aso/types.hpp"

namespace aso {

// ============================================================================
// Bounded LPV system class
//
//   x' = A(rho(t)) x + B(rho(t)) u + phi(y) + G(y) theta,   y = C x,
//   y_v = y + v,
//
// with elementwise envelopes A_lower <= A(rho) <= A_upper (possibly output-
// dependent) and B_lower <= B(rho) <= B_upper. phi and G may also depend on
// measured time-varying signals, hence the extra time argument; scenarios
// with purely output-dependent nonlinearities just ignore it.
// ============================================================================

struct LpvSystemSpec {
    Index n = 0; // state dimension
    Index m = 0; // input dimension
    Index p = 0; // output dimension
    Index q = 0; // parameter dimension

    Matrix C; // p x n

    std::function<Vector(double, const Vector&)> phi;     // (t, y) -> R^n
    std::function<Matrix(double, const Vector&)> G;       // (t, y) -> n x q
    std::function<Matrix(const Vector&)> A_lower, A_upper; // y -> n x n
    bool bounds_depend_on_y = false;

    Matrix B_lower, B_upper; // n x m
    Vector theta_lower, theta_upper; // a-priori parameter box
    Vector x_lower, x_upper;         // operating box for the state
    Vector v_max;                    // noise amplitude per output

    void validate() const {
        require(n > 0 && m >= 0 && p > 0 && q > 0, "LpvSystemSpec: bad dimensions");
        require(C.rows() == p && C.cols() == n, "LpvSystemSpec: C shape");
        require(B_lower.rows() == n && B_lower.cols() == m, "LpvSystemSpec: B_lower shape");
        require(B_upper.rows() == n && B_upper.cols() == m, "LpvSystemSpec: B_upper shape");
        require(theta_lower.size() == q && theta_upper.size() == q, "LpvSystemSpec: theta box");
        require(x_lower.size() == n && x_upper.size() == n, "LpvSystemSpec: x box");
        require(v_max.size() == p, "LpvSystemSpec: v_max size");
        require((theta_lower.array() <= theta_upper.array()).all(), "LpvSystemSpec: theta box order");
        require((x_lower.array() <= x_upper.array()).all(), "LpvSystemSpec: x box order");
        require(static_cast<bool>(A_lower) && static_cast<bool>(A_upper), "LpvSystemSpec: A bounds unset");
        require(static_cast<bool>(G), "LpvSystemSpec: G unset");
    }

    [[nodiscard]] Matrix bound(Obs o, const Vector& y) const {
        return o == Obs::lower ? A_lower(y) : A_upper(y);
    }
    [[nodiscard]] const Matrix& input_bound(Obs o) const {
        return o == Obs::lower ? B_lower : B_upper;
    }
    [[nodiscard]] Vector phi_at(double t, const Vector& y) const {
        return phi ? phi(t, y) : Vector::Zero(n);
    }

    // Componentwise range of y = C x over the state box (interval arithmetic).
    [[nodiscard]] std::pair<Vector, Vector> output_box() const {
        Vector lo = Vector::Zero(p), hi = Vector::Zero(p);
        for (Index i = 0; i < p; ++i) {
            for (Index j = 0; j < n; ++j) {
                const double c = C(i, j);
                if (c >= 0) {
                    lo[i] += c * x_lower[j];
                    hi[i] += c * x_upper[j];
                } else {
                    lo[i] += c * x_upper[j];
                    hi[i] += c * x_lower[j];
                }
            }
        }
        return {lo, hi};
    }
};

// ============================================================================
// Ground-truth plant
// ============================================================================

// One piece of a piecewise-constant parameter schedule. Each piece may carry
// its own a-priori box; an empty box inherits the previous piece's box.
struct ThetaPhase {
    double t_start = 0.0;
    Vector theta;
    Vector box_lower, box_upper;
};

struct TruthModel {
    // Realized system matrices along the trajectory. The state argument
    // covers plants whose scheduling signal is the state itself.
    std::function<Matrix(double, const Vector&)> A_true; // (t, x) -> n x n
    std::function<Matrix(double)> B_true;                // t -> n x m
    std::vector<ThetaPhase> theta_schedule;              // sorted by t_start
    Vector x0;
    std::function<Vector(double, const Vector&)> u;      // (t, y_v) -> R^m

    [[nodiscard]] std::size_t phase_index(double t) const {
        std::size_t k = 0;
        while (k + 1 < theta_schedule.size() && t >= theta_schedule[k + 1].t_start) ++k;
        return k;
    }
    [[nodiscard]] const Vector& theta_at(double t) const {
        return theta_schedule[phase_index(t)].theta;
    }
    [[nodiscard]] Vector input_at(double t, const Vector& y_v) const {
        if (!u) return Vector::Zero(0);
        return u(t, y_v);
    }
};

// ============================================================================
// Observer gains
// ============================================================================

struct ObserverGains {
    Matrix L_lower, L_upper;         // n x p
    Matrix Gamma_lower, Gamma_upper; // q x q, symmetric positive definite

    [[nodiscard]] const Matrix& L(Obs o) const {
        return o == Obs::lower ? L_lower : L_upper;
    }
    [[nodiscard]] const Matrix& Gamma(Obs o) const {
        return o == Obs::lower ? Gamma_lower : Gamma_upper;
    }

    void validate(Index n, Index p, Index q) const {
        require(L_lower.rows() == n && L_lower.cols() == p, "ObserverGains: L_lower shape");
        require(L_upper.rows() == n && L_upper.cols() == p, "ObserverGains: L_upper shape");
        require(Gamma_lower.rows() == q && Gamma_lower.cols() == q, "ObserverGains: Gamma_lower shape");
        require(Gamma_upper.rows() == q && Gamma_upper.cols() == q, "ObserverGains: Gamma_upper shape");
        require(is_symmetric_positive_definite(Gamma_lower, 1e-12),
                "ObserverGains: Gamma_lower must be symmetric positive definite");
        require(is_symmetric_positive_definite(Gamma_upper, 1e-12),
                "ObserverGains: Gamma_upper must be symmetric positive definite");
    }
};

// ============================================================================
// Operations
// ============================================================================

// Componentwise envelope of y = C x over a state box [x_lo, x_hi]: interval
// product through the rows of C. For elementwise nonnegative C this reduces
// to (C x_lo, C x_hi).
inline std::pair<Vector, Vector> output_envelope(const Matrix& C, const Vector& x_lo,
                                                 const Vector& x_hi) {
    require(C.cols() == x_lo.size() && x_lo.size() == x_hi.size(),
            "output_envelope: shape mismatch");
    Vector lo = Vector::Zero(C.rows()), hi = Vector::Zero(C.rows());
    for (Index i = 0; i < C.rows(); ++i)
        for (Index j = 0; j < C.cols(); ++j) {
            const double c = C(i, j);
            if (c >= 0.0) {
                lo[i] += c * x_lo[j];
                hi[i] += c * x_hi[j];
            } else {
                lo[i] += c * x_hi[j];
                hi[i] += c * x_lo[j];
            }
        }
    return {lo, hi};
}

// y = C x and its noisy measurement y_v = y + v.
inline std::pair<Vector, Vector> sample_output(const LpvSystemSpec& spec,
                                               const Vector& x, const Vector& noise) {
    require(x.size() == spec.n, "sample_output: x size");
    require(noise.size() == spec.p, "sample_output: noise size");
    Vector y = spec.C * x;
    return {y, y + noise};
}

// Right-hand side of the true plant.
inline Vector plant_rhs(const LpvSystemSpec& spec, const TruthModel& truth,
                        double t, const Vector& x, const Vector& u) {
    const Vector y = spec.C * x;
    Vector dx = truth.A_true(t, x) * x;
    if (spec.m > 0 && u.size() > 0) dx += truth.B_true(t) * u;
    dx += spec.phi_at(t, y);
    dx += spec.G(t, y) * truth.theta_at(t);
    return dx;
}

} // namespace aso
