#pragma once

#include "aso/model.hpp"
#include "aso/types.hpp"

namespace aso {

// ============================================================================
// Adaptive observers
//
// Ideal observer (scheduling signal measured):
//   zeta'      = A(rho) zeta + B(rho) u + phi(y_v) + L (y_v - C zeta)
//   Omega'     = [A(rho) - L C] Omega - G(y_v)
//   theta_hat' = -Gamma0 Omega^T C^T (y_v - C zeta + C Omega theta_hat)
//
// Interval pair, o in {lower(m), upper(M)}, driven by the envelope matrices:
//   zeta_o'      = A_o zeta_o + B_o u + phi(y_v) + L_o (y_v - C zeta_o)
//   Omega_o'     = [A_o - L_o C] Omega_o - G(y_v)
//   theta_hat_o' = -Gamma_o Omega_o^T C^T (y_v - C zeta_o + C Omega_o theta_hat_o)
//
// State interval pair, each side fed by one parameter endpoint per pairing:
//   xi_o' = A_o xi_o + B_o u + phi(y_v) + G(y_v) theta_hat_pair(o)
//           + L_o (y_v - C xi_o)
// ============================================================================

struct IdealObserverState {
    Vector zeta;      // n
    Matrix Omega;     // n x q
    Vector theta_hat; // q
};

struct IdealObserverInputs {
    Matrix A_rho; // realized A(rho(t)), measured in the ideal setting
    Matrix B_rho; // realized B(rho(t))
    Vector u;
    Vector y_v;
    Matrix L;      // n x p
    Matrix Gamma0; // q x q
};

inline IdealObserverState ideal_observer_rhs(const LpvSystemSpec& spec,
                                             const IdealObserverState& s,
                                             double t, const IdealObserverInputs& in) {
    IdealObserverState d;
    const Vector innovation = in.y_v - spec.C * s.zeta;
    d.zeta = in.A_rho * s.zeta + spec.phi_at(t, in.y_v) + in.L * innovation;
    if (spec.m > 0 && in.u.size() > 0) d.zeta += in.B_rho * in.u;
    const Matrix Gv = spec.G(t, in.y_v);
    d.Omega = (in.A_rho - in.L * spec.C) * s.Omega - Gv;
    d.theta_hat = -in.Gamma0 * (s.Omega.transpose() *
                                (spec.C.transpose() * (innovation + spec.C * (s.Omega * s.theta_hat))));
    return d;
}

// Full coupled state of the adaptive set observer plus the state interval pair.
struct AdaptiveObserverState {
    Vector zeta_m, zeta_M;           // n
    Matrix Omega_m, Omega_M;         // n x q
    Vector theta_hat_m, theta_hat_M; // q
    Vector xi_m, xi_M;               // n

    [[nodiscard]] const Vector& zeta(Obs o) const { return o == Obs::lower ? zeta_m : zeta_M; }
    [[nodiscard]] const Matrix& Omega(Obs o) const { return o == Obs::lower ? Omega_m : Omega_M; }
    [[nodiscard]] const Vector& theta_hat(Obs o) const {
        return o == Obs::lower ? theta_hat_m : theta_hat_M;
    }
    [[nodiscard]] const Vector& xi(Obs o) const { return o == Obs::lower ? xi_m : xi_M; }
};

// Which parameter endpoint drives each side of the state interval observer.
struct StatePairing {
    Obs for_lower = Obs::lower; // endpoint feeding xi_m
    Obs for_upper = Obs::upper; // endpoint feeding xi_M
};

struct SetObserverInputs {
    Vector u;
    Vector y_v;
    const ObserverGains* gains = nullptr;
    StatePairing pairing;
};

// Derivative of one (zeta_o, Omega_o, theta_hat_o) branch.
struct BranchDerivative {
    Vector dzeta;
    Matrix dOmega;
    Vector dtheta;
};

inline BranchDerivative set_observer_rhs(const LpvSystemSpec& spec, Obs o,
                                         const AdaptiveObserverState& s, double t,
                                         const SetObserverInputs& in) {
    const Matrix Ao = spec.bound(o, in.y_v);
    const Matrix& Lo = in.gains->L(o);
    const Matrix Gv = spec.G(t, in.y_v);
    BranchDerivative d;
    const Vector innovation = in.y_v - spec.C * s.zeta(o);
    d.dzeta = Ao * s.zeta(o) + spec.phi_at(t, in.y_v) + Lo * innovation;
    if (spec.m > 0 && in.u.size() > 0) d.dzeta += spec.input_bound(o) * in.u;
    d.dOmega = (Ao - Lo * spec.C) * s.Omega(o) - Gv;
    d.dtheta = -in.gains->Gamma(o) *
               (s.Omega(o).transpose() *
                (spec.C.transpose() * (innovation + spec.C * (s.Omega(o) * s.theta_hat(o)))));
    return d;
}

inline Vector state_observer_rhs(const LpvSystemSpec& spec, Obs o,
                                 const AdaptiveObserverState& s, double t,
                                 const SetObserverInputs& in) {
    const Matrix Ao = spec.bound(o, in.y_v);
    const Matrix& Lo = in.gains->L(o);
    const Obs endpoint = (o == Obs::lower) ? in.pairing.for_lower : in.pairing.for_upper;
    Vector dxi = Ao * s.xi(o) + spec.phi_at(t, in.y_v) +
                 spec.G(t, in.y_v) * s.theta_hat(endpoint) +
                 Lo * (in.y_v - spec.C * s.xi(o));
    if (spec.m > 0 && in.u.size() > 0) dxi += spec.input_bound(o) * in.u;
    return dxi;
}

// ============================================================================
// Truth-referenced diagnostics (test instrumentation; needs the plant state)
// ============================================================================

struct ErrorDiagnostics {
    Vector eps_m, eps_M;     // x - zeta_o
    Vector delta_m, delta_M; // eps_o + Omega_o theta
    Vector e_m, e_M;         // x - xi_o
    Vector p_m, p_M;         // [A(rho) - A_o] x + [B(rho) - B_o] u
    Vector d_v;              // phi(y)-phi(y_v) + [G(y)-G(y_v)] theta - L v

    [[nodiscard]] const Vector& eps(Obs o) const { return o == Obs::lower ? eps_m : eps_M; }
    [[nodiscard]] const Vector& delta(Obs o) const { return o == Obs::lower ? delta_m : delta_M; }
    [[nodiscard]] const Vector& p(Obs o) const { return o == Obs::lower ? p_m : p_M; }
};

inline ErrorDiagnostics compute_error_diagnostics(
    const LpvSystemSpec& spec, const TruthModel& truth, const ObserverGains& gains,
    double t, const Vector& x, const AdaptiveObserverState& s, const Vector& u,
    const Vector& v) {
    ErrorDiagnostics d;
    const Vector theta = truth.theta_at(t);
    const Vector y = spec.C * x;
    const Vector y_v = y + v;
    const Matrix A_rho = truth.A_true(t, x);
    d.eps_m = x - s.zeta_m;
    d.eps_M = x - s.zeta_M;
    d.delta_m = d.eps_m + s.Omega_m * theta;
    d.delta_M = d.eps_M + s.Omega_M * theta;
    d.e_m = x - s.xi_m;
    d.e_M = x - s.xi_M;
    for (Obs o : {Obs::lower, Obs::upper}) {
        Vector p = (A_rho - spec.bound(o, y_v)) * x;
        if (spec.m > 0 && u.size() > 0)
            p += (truth.B_true(t) - spec.input_bound(o)) * u;
        (o == Obs::lower ? d.p_m : d.p_M) = std::move(p);
    }
    d.d_v = spec.phi_at(t, y) - spec.phi_at(t, y_v) +
            (spec.G(t, y) - spec.G(t, y_v)) * theta - gains.L_lower * v;
    return d;
}

// ============================================================================
// Initialization
// ============================================================================

// The two certifiable orderings of the parameter interval endpoints:
// reversed puts the upper-envelope estimate below the true parameter
// (theta_hat_M <= theta <= theta_hat_m), natural is the plain order.
enum class OrderClaim { reversed, natural };

enum class SignCase { nonnegative, nonpositive, indefinite };

// Initial observer state: zero auxiliary filters, state estimates at the
// operating-box corners, parameter endpoints at the box endpoints in the
// order dictated by the claimed certification. Arbitrary initialization is
// tolerated by the observers at the cost of a transient.
inline AdaptiveObserverState init_observer_state(const LpvSystemSpec& spec,
                                                 OrderClaim claim, SignCase sign_case,
                                                 const Vector& box_lower,
                                                 const Vector& box_upper) {
    AdaptiveObserverState s;
    s.Omega_m = Matrix::Zero(spec.n, spec.q);
    s.Omega_M = Matrix::Zero(spec.n, spec.q);
    if (claim == OrderClaim::reversed) {
        // eps_m(0) >= 0, eps_M(0) <= 0; crossed parameter endpoints.
        s.zeta_m = spec.x_lower;
        s.zeta_M = spec.x_upper;
        s.theta_hat_m = box_upper;
        s.theta_hat_M = box_lower;
    } else {
        s.zeta_m = spec.x_upper;
        s.zeta_M = spec.x_lower;
        s.theta_hat_m = box_lower;
        s.theta_hat_M = box_upper;
    }
    if (sign_case == SignCase::nonpositive) {
        // Flipped state interval claim: xi_M <= x <= xi_m.
        s.xi_M = spec.x_lower;
        s.xi_m = spec.x_upper;
    } else {
        s.xi_m = spec.x_lower;
        s.xi_M = spec.x_upper;
    }
    return s;
}

} // namespace aso
