#pragma once

#include <cmath>
#include <deque>
#include <optional>

#include "aso/model.hpp"
#include "aso/monotone.hpp"
#include "aso/numerics.hpp"
#include "aso/observers.hpp"
#include "aso/types.hpp"

namespace aso {

// ============================================================================
// Running integrals
//
// The on-line reliability machinery is built on two integrals per observer
// branch, accumulated on the simulation grid (trapezoidal rule):
//
//   I_b(t) = int_0^t Omega^T C^T r dtau        (r = y_v - C zeta, the
//                                               measurable residual)
//   I_R(t) = int_0^t Omega^T C^T C Omega dtau
//
// From these: b_hat(t) = -I_b(t)/t, R_hat(t) = I_R(t)/t, the equilibrium
// estimate theta_bar = R_hat^{-1} b_hat, trailing-window Gramians for PE
// measurement, and trailing-window averages for the periodic certification
// test. Cumulative snapshots are kept over a bounded trailing window so that
// any integral over [t - w, t] is an exact difference of two snapshots
// (linear interpolation between grid points is exact for trapezoids).
// ============================================================================

class Accumulators {
public:
    Accumulators(Index q, double window_capacity_seconds)
        : q_(q), capacity_(window_capacity_seconds) {
        reset();
    }

    // Restart the integrals, e.g. at a known regime boundary where the
    // a-priori parameter box changes. Time becomes phase-relative.
    void reset() {
        t_ = 0.0;
        for (auto& s : side_) {
            s.I_b = Vector::Zero(q_);
            s.I_R = Matrix::Zero(q_, q_);
            s.prev_b = Vector::Zero(q_);
            s.prev_R = Matrix::Zero(q_, q_);
        }
        has_prev_ = false;
        window_.clear();
        push_snapshot();
    }

    // Advance both branches by one step of length h. COmega_o = C * Omega_o,
    // residual_o = y_v - C zeta_o evaluated at the new grid point.
    void update(double h, const Matrix& COmega_m, const Vector& residual_m,
                const Matrix& COmega_M, const Vector& residual_M) {
        require(h > 0.0, "Accumulators::update: h must be > 0");
        struct {
            const Matrix* CO;
            const Vector* r;
        } in[2] = {{&COmega_m, &residual_m}, {&COmega_M, &residual_M}};
        for (int k = 0; k < 2; ++k) {
            Vector fb = in[k].CO->transpose() * (*in[k].r);
            Matrix fR = in[k].CO->transpose() * (*in[k].CO);
            if (has_prev_) {
                side_[k].I_b += 0.5 * h * (side_[k].prev_b + fb);
                side_[k].I_R += 0.5 * h * (side_[k].prev_R + fR);
            }
            side_[k].prev_b = std::move(fb);
            side_[k].prev_R = std::move(fR);
        }
        if (has_prev_) t_ += h;
        has_prev_ = true;
        push_snapshot();
        trim();
    }

    [[nodiscard]] double time() const { return t_; }
    [[nodiscard]] double window_span() const {
        return window_.empty() ? 0.0 : t_ - window_.front().tau;
    }
    [[nodiscard]] double capacity() const { return capacity_; }

    [[nodiscard]] const Vector& I_b(Obs o) const { return side_[idx(o)].I_b; }
    [[nodiscard]] const Matrix& I_R(Obs o) const { return side_[idx(o)].I_R; }

    // Cumulative averages of the two integrals.
    [[nodiscard]] Vector b_hat(Obs o) const {
        require(t_ > 0.0, "Accumulators::b_hat: no time accumulated");
        return -side_[idx(o)].I_b / t_;
    }
    [[nodiscard]] Matrix R_hat(Obs o) const {
        require(t_ > 0.0, "Accumulators::R_hat: no time accumulated");
        return side_[idx(o)].I_R / t_;
    }

    // Equilibrium estimate: solves R_hat theta = b_hat. Distinct failure
    // modes: PE may hold while the cumulative matrix is still near-singular.
    [[nodiscard]] Vector theta_bar_infty(Obs o) const {
        const Matrix R = R_hat(o);
        const Vector b = b_hat(o);
        Eigen::SelfAdjointEigenSolver<Matrix> es(R, Eigen::EigenvaluesOnly);
        const double mx = es.eigenvalues().cwiseAbs().maxCoeff();
        if (es.info() != Eigen::Success ||
            es.eigenvalues().minCoeff() <= 1e-12 * std::max(1.0, mx))
            throw IdentifiabilityError("theta_bar_infty: running information matrix singular");
        return R.ldlt().solve(b);
    }

    // Gramian of Omega^T C^T over the trailing window of length ell.
    [[nodiscard]] Matrix window_gramian(Obs o, double ell) const {
        if (window_span() < ell - 1e-12)
            throw WindowError("window_gramian: window shorter than requested length");
        return side_[idx(o)].I_R - interpolate_R(o, t_ - ell);
    }

    struct PeResult {
        bool ok = false;
        double level = 0.0; // measured min eigenvalue of the window Gramian
    };

    [[nodiscard]] PeResult pe_check(Obs o, double ell, double level_min) const {
        const Matrix W = window_gramian(o, ell);
        PeResult r;
        r.level = min_symmetric_eigenvalue(W);
        r.ok = r.level >= level_min;
        return r;
    }

    struct WindowEstimates {
        Vector b_hat; // -(1/T) int_{t-T}^t Omega^T C^T r
        Matrix R_hat; // (1/T) int_{t-T}^t Omega^T C^T C Omega
    };

    [[nodiscard]] WindowEstimates window_estimates(Obs o, double T) const {
        if (window_span() < T - 1e-12)
            throw WindowError("window_estimates: window shorter than requested length");
        WindowEstimates w;
        w.b_hat = -(side_[idx(o)].I_b - interpolate_b(o, t_ - T)) / T;
        w.R_hat = (side_[idx(o)].I_R - interpolate_R(o, t_ - T)) / T;
        return w;
    }

private:
    struct Side {
        Vector I_b, prev_b;
        Matrix I_R, prev_R;
    };
    struct Snapshot {
        double tau;
        Vector Ib[2];
        Matrix IR[2];
    };

    static int idx(Obs o) { return o == Obs::lower ? 0 : 1; }

    void push_snapshot() {
        Snapshot s;
        s.tau = t_;
        for (int k = 0; k < 2; ++k) {
            s.Ib[k] = side_[k].I_b;
            s.IR[k] = side_[k].I_R;
        }
        window_.push_back(std::move(s));
    }

    void trim() {
        while (window_.size() > 2 && window_[1].tau <= t_ - capacity_)
            window_.pop_front();
    }

    template <typename Get>
    [[nodiscard]] auto interpolate(double tau, Get get) const {
        // Snapshots bracket tau since trim() keeps one entry at or before
        // t - capacity; cumulative integrals are piecewise linear.
        std::size_t hi = window_.size() - 1;
        std::size_t lo = 0;
        while (lo + 1 < hi) {
            const std::size_t mid = (lo + hi) / 2;
            (window_[mid].tau <= tau ? lo : hi) = mid;
        }
        const auto& a = window_[lo];
        const auto& b = window_[hi];
        if (tau <= a.tau) return get(a);
        if (tau >= b.tau) return get(b);
        const double w = (tau - a.tau) / (b.tau - a.tau);
        return ((1.0 - w) * get(a) + w * get(b)).eval();
    }

    [[nodiscard]] Vector interpolate_b(Obs o, double tau) const {
        return interpolate(tau, [&](const Snapshot& s) { return s.Ib[idx(o)]; });
    }
    [[nodiscard]] Matrix interpolate_R(Obs o, double tau) const {
        return interpolate(tau, [&](const Snapshot& s) { return s.IR[idx(o)]; });
    }

    Index q_;
    double capacity_;
    double t_ = 0.0;
    bool has_prev_ = false;
    Side side_[2];
    std::deque<Snapshot> window_;
};

// ============================================================================
// Certification checks
// ============================================================================

enum class CompetitiveBranch { none, reversed, natural };

inline const char* to_string(CompetitiveBranch b) {
    switch (b) {
        case CompetitiveBranch::reversed: return "comp-rev";
        case CompetitiveBranch::natural: return "comp-nat";
        default: return "none";
    }
}

// Strictness margin for the branch inequalities.
inline constexpr double kBranchMargin = 1e-9;

// Competitive adaptation loop (elementwise nonnegative C). Compares the
// equilibrium estimates against the a-priori box:
//   reversed: box_hi < theta_bar_m  and  theta_bar_M < box_lo
//             certifies theta_hat_M <= theta <= theta_hat_m;
//   natural:  box_hi < theta_bar_M  and  theta_bar_m < box_lo
//             certifies theta_hat_m <= theta <= theta_hat_M.
inline CompetitiveBranch check_competitive_certification(
    const Vector& theta_bar_m, const Vector& theta_bar_M, const Vector& box_lo,
    const Vector& box_hi, double margin = kBranchMargin) {
    const auto strictly_above = [&](const Vector& a, const Vector& b) {
        return ((a.array() - b.array()) > margin).all();
    };
    if (strictly_above(theta_bar_m, box_hi) && strictly_above(box_lo, theta_bar_M))
        return CompetitiveBranch::reversed;
    if (strictly_above(theta_bar_M, box_hi) && strictly_above(box_lo, theta_bar_m))
        return CompetitiveBranch::natural;
    return CompetitiveBranch::none;
}

struct CooperativeInstantInputs {
    // Per branch: adaptation gain, C*Omega, measurable residual y_v - C zeta.
    Matrix Gamma_m, Gamma_M;
    Matrix COmega_m, COmega_M;
    Vector residual_m, residual_M;
};

struct CooperativeCheck {
    bool instant_ok = false;
    bool periodic_ok = false;
    // Which endpoint ended up certified as the lower one (when a check holds).
    std::optional<OrderClaim> instant_order;
    std::optional<OrderClaim> periodic_order;
};

namespace detail {

// Sign conditions for one (lower, upper) candidate assignment of the
// instantaneous cooperative test.
inline bool cooperative_instant_candidate(const CooperativeInstantInputs& in,
                                          Obs lo, const Vector& box_lo,
                                          const Vector& box_hi, double tol) {
    const Obs hi = other(lo);
    const auto& G_lo = (lo == Obs::lower) ? in.Gamma_m : in.Gamma_M;
    const auto& G_hi = (hi == Obs::lower) ? in.Gamma_m : in.Gamma_M;
    const auto& CO_lo = (lo == Obs::lower) ? in.COmega_m : in.COmega_M;
    const auto& CO_hi = (hi == Obs::lower) ? in.COmega_m : in.COmega_M;
    const auto& r_lo = (lo == Obs::lower) ? in.residual_m : in.residual_M;
    const auto& r_hi = (hi == Obs::lower) ? in.residual_m : in.residual_M;
    const Vector th_lo = (lo == Obs::lower) ? box_lo : box_hi;
    const Vector th_hi = (hi == Obs::lower) ? box_lo : box_hi;

    const Vector q1 = G_lo * (CO_lo.transpose() * (r_lo + CO_lo * th_lo));
    const Vector q2 = G_lo * (CO_lo.transpose() * (CO_lo * (th_hi - th_lo)));
    const Vector q3 = G_hi * (CO_hi.transpose() * (r_hi + CO_hi * th_hi));
    const Vector q4 = G_hi * (CO_hi.transpose() * (CO_hi * (th_lo - th_hi)));
    return (q1.array() >= -tol).all() && (q2.array() >= -tol).all() &&
           (q3.array() <= tol).all() && (q4.array() <= tol).all();
}

inline bool cooperative_periodic_candidate(const Accumulators::WindowEstimates& lo_est,
                                           const Accumulators::WindowEstimates& hi_est,
                                           const Vector& th_lo, const Vector& th_hi,
                                           double tol) {
    const Vector c1 = lo_est.R_hat * th_lo - lo_est.b_hat;        // >= 0
    const Vector c2 = lo_est.R_hat * (th_hi - th_lo);             // >= 0
    const Vector c3 = hi_est.b_hat - hi_est.R_hat * th_hi;        // >= 0
    const Vector c4 = hi_est.R_hat * (th_lo - th_hi);             // <= 0
    return (c1.array() >= -tol).all() && (c2.array() >= -tol).all() &&
           (c3.array() >= -tol).all() && (c4.array() <= tol).all();
}

} // namespace detail

// Cooperative adaptation loop. Each sub-check is gated by cooperativity of
// the gain matrix it actually relies on - the instantaneous test by
// -Gamma_o Omega_o^T C^T C Omega_o at the sample, the trailing-window test by
// the window average -Gamma_o R_hat_o - and both by measured persistency of
// excitation (a vanishing filter state renders every sign condition vacuously
// degenerate, so it certifies nothing).
inline CooperativeCheck check_cooperative_certification(
    const CooperativeInstantInputs& in, const Vector& box_lo, const Vector& box_hi,
    bool pe_ok_both, const std::optional<Accumulators::WindowEstimates>& win_m,
    const std::optional<Accumulators::WindowEstimates>& win_M, double tol = kBranchMargin) {
    CooperativeCheck out;
    if (!pe_ok_both) return out;

    const Matrix gain_m = in.Gamma_m * (in.COmega_m.transpose() * in.COmega_m);
    const Matrix gain_M = in.Gamma_M * (in.COmega_M.transpose() * in.COmega_M);
    if (is_cooperative(-gain_m, tol) && is_cooperative(-gain_M, tol)) {
        if (detail::cooperative_instant_candidate(in, Obs::lower, box_lo, box_hi, tol)) {
            out.instant_ok = true;
            out.instant_order = OrderClaim::natural;
        } else if (detail::cooperative_instant_candidate(in, Obs::upper, box_lo, box_hi, tol)) {
            out.instant_ok = true;
            out.instant_order = OrderClaim::reversed;
        }
    }

    if (win_m && win_M && is_cooperative(-(in.Gamma_m * win_m->R_hat), tol) &&
        is_cooperative(-(in.Gamma_M * win_M->R_hat), tol)) {
        if (detail::cooperative_periodic_candidate(*win_m, *win_M, box_lo, box_hi, tol)) {
            out.periodic_ok = true;
            out.periodic_order = OrderClaim::natural;
        } else if (detail::cooperative_periodic_candidate(*win_M, *win_m, box_hi, box_lo, tol)) {
            out.periodic_ok = true;
            out.periodic_order = OrderClaim::reversed;
        }
    }
    return out;
}

// ============================================================================
// State-observer pairing
// ============================================================================

// Maps a certified parameter ordering and the sign regime of (x, u) onto the
// endpoint assignment for the state interval pair. For nonnegative states and
// inputs the lower state bound is fed by the lower parameter endpoint; for
// nonpositive ones the roles swap (and so does the state interval claim).
inline StatePairing state_pairing_for(SignCase sign_case,
                                      std::optional<OrderClaim> certified_order) {
    if (!certified_order)
        throw ConfigError("state_pairing_for: no certified parameter ordering");
    if (sign_case == SignCase::indefinite)
        throw ConfigError("state_pairing_for: sign case must be definite");
    const Obs lower_endpoint =
        (*certified_order == OrderClaim::natural) ? Obs::lower : Obs::upper;
    StatePairing pr;
    if (sign_case == SignCase::nonnegative) {
        pr.for_lower = lower_endpoint;
        pr.for_upper = other(lower_endpoint);
    } else {
        pr.for_lower = other(lower_endpoint);
        pr.for_upper = lower_endpoint;
    }
    return pr;
}

// ============================================================================
// Averaged adaptation and the PE decay bound
// ============================================================================

// Averaged parameter-estimator flow theta' = Gamma (b - R theta); its
// equilibrium R^{-1} b is where the full estimator settles for small gains.
inline Trajectory integrate_averaged_estimator(const Vector& b, const Matrix& R,
                                               const Matrix& Gamma, const Vector& theta0,
                                               double horizon, double h) {
    require(b.size() == theta0.size() && R.rows() == b.size() && R.cols() == b.size(),
            "integrate_averaged_estimator: shape mismatch");
    const Rhs rhs = [&](double, const Vector& th) -> Vector {
        return Gamma * (b - R * th);
    };
    return integrate_fixed_step(rhs, theta0, 0.0, horizon, h);
}

// Closed-form solution bound for p' = -Gamma R(t) R(t)^T p + b(t) under
// (ell, vartheta)-persistent excitation; gamma is the smallest eigenvalue of
// Gamma, b_sup the essential supremum of ||b||, t0 = 0.
inline double pe_decay_bound(double gamma, double vartheta, double ell,
                             double p0_norm, double b_sup, double t) {
    require(gamma > 0.0 && vartheta > 0.0 && ell > 0.0, "pe_decay_bound: parameters must be > 0");
    require(t >= 0.0, "pe_decay_bound: t must be >= 0");
    const double decay = std::exp(-0.5 * gamma * vartheta * (t - ell) / ell);
    const double offset = (1.0 + 2.0 / (vartheta * gamma) * std::exp(-0.5 * vartheta * gamma)) *
                          ell * b_sup;
    return p0_norm * decay + offset;
}

} // namespace aso
