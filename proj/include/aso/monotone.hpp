#pragma once

#include <sstream>
#include <string>
#include <vector>

#include "aso/model.hpp"
#include "aso/numerics.hpp"
#include "aso/types.hpp"

namespace aso {

// ============================================================================
// Cooperativity / stability / elementwise order
// ============================================================================

// A square matrix is cooperative (Metzler) when every off-diagonal entry is
// nonnegative; cooperative stable flows preserve the componentwise order of
// initial conditions and inputs.
inline bool is_cooperative(const Matrix& M, double tol = 0.0) {
    require(M.rows() == M.cols(), "is_cooperative: matrix must be square");
    for (Index i = 0; i < M.rows(); ++i)
        for (Index j = 0; j < M.cols(); ++j)
            if (i != j && M(i, j) < -tol) return false;
    return true;
}

inline double min_offdiagonal(const Matrix& M) {
    double worst = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < M.rows(); ++i)
        for (Index j = 0; j < M.cols(); ++j)
            if (i != j) worst = std::min(worst, M(i, j));
    return M.rows() > 1 ? worst : 0.0;
}

inline bool is_hurwitz(const Matrix& M, double tol = 1e-9) {
    return max_eig_real_part(M) < -tol;
}

inline bool elementwise_leq(const Matrix& A, const Matrix& B, double tol = 0.0) {
    require(A.rows() == B.rows() && A.cols() == B.cols(), "elementwise_leq: shape mismatch");
    return ((A.array() - B.array()) <= tol).all();
}

// ============================================================================
// Observer-gain certification
//
// Certifies the structural conditions the interval observers rely on: both
// closed-loop envelope matrices A_o - L_o C cooperative and Hurwitz (at every
// sampled output when the bounds are output-dependent), and G nonnegative
// over the sampled outputs, noise corners and probe times.
// ============================================================================

struct GainCertificate {
    bool cooperative_lower = false;
    bool cooperative_upper = false;
    bool hurwitz_lower = false;
    bool hurwitz_upper = false;
    bool G_nonnegative = false;
    double worst_offdiag_entry = 0.0; // most negative off-diagonal seen
    double max_eig_realpart = 0.0;    // largest eigenvalue real part seen
    std::size_t samples_used = 0;

    [[nodiscard]] bool pass() const {
        return cooperative_lower && cooperative_upper && hurwitz_lower &&
               hurwitz_upper && G_nonnegative;
    }

    [[nodiscard]] std::string summary() const {
        std::ostringstream os;
        os << "gain certification: " << (pass() ? "PASS" : "FAIL")
           << "\n  cooperative lower: " << (cooperative_lower ? "yes" : "no")
           << "\n  cooperative upper: " << (cooperative_upper ? "yes" : "no")
           << "\n  hurwitz lower:     " << (hurwitz_lower ? "yes" : "no")
           << "\n  hurwitz upper:     " << (hurwitz_upper ? "yes" : "no")
           << "\n  G nonnegative:     " << (G_nonnegative ? "yes" : "no")
           << "\n  worst off-diagonal entry: " << worst_offdiag_entry
           << "\n  max eigenvalue real part: " << max_eig_realpart
           << "\n  samples used: " << samples_used << "\n";
        return os.str();
    }

    [[nodiscard]] std::string machine_line() const {
        std::ostringstream os;
        os << "gain_cert pass=" << pass()
           << " coop_lower=" << cooperative_lower << " coop_upper=" << cooperative_upper
           << " hurwitz_lower=" << hurwitz_lower << " hurwitz_upper=" << hurwitz_upper
           << " G_nonneg=" << G_nonnegative
           << " worst_offdiag=" << worst_offdiag_entry
           << " max_eig_real=" << max_eig_realpart
           << " samples=" << samples_used;
        return os.str();
    }
};

// Grid of sample outputs over the system's operating output box; falls back
// to deterministic Monte Carlo above 3 output dimensions.
inline std::vector<Vector> default_output_samples(const LpvSystemSpec& spec,
                                                  int points_per_dim = 11) {
    auto [lo, hi] = spec.output_box();
    std::vector<Vector> samples;
    if (spec.p <= 3) {
        std::vector<int> idx(spec.p, 0);
        const int ppd = points_per_dim;
        std::size_t total = 1;
        for (Index i = 0; i < spec.p; ++i) total *= ppd;
        samples.reserve(total);
        for (std::size_t flat = 0; flat < total; ++flat) {
            std::size_t rem = flat;
            Vector y(spec.p);
            for (Index i = 0; i < spec.p; ++i) {
                const int k = static_cast<int>(rem % ppd);
                rem /= ppd;
                const double a = ppd > 1 ? static_cast<double>(k) / (ppd - 1) : 0.5;
                y[i] = lo[i] + a * (hi[i] - lo[i]);
            }
            samples.push_back(std::move(y));
        }
    } else {
        const std::size_t count = 512;
        samples.reserve(count);
        for (std::size_t s = 0; s < count; ++s) {
            Vector y(spec.p);
            for (Index i = 0; i < spec.p; ++i) {
                const double u01 =
                    0.5 * (1.0 + detail::unit_noise(detail::splitmix64(s * 977 + 13 * i + 1)));
                y[i] = lo[i] + u01 * (hi[i] - lo[i]);
            }
            samples.push_back(std::move(y));
        }
    }
    return samples;
}

// Noise corners {-v_max, 0, +v_max} per output component.
inline std::vector<Vector> default_noise_samples(const LpvSystemSpec& spec) {
    std::vector<Vector> vs;
    if (spec.v_max.lpNorm<Eigen::Infinity>() == 0.0) {
        vs.push_back(Vector::Zero(spec.p));
        return vs;
    }
    const std::size_t total = static_cast<std::size_t>(std::pow(3.0, static_cast<double>(spec.p)));
    if (total <= 243) {
        for (std::size_t flat = 0; flat < total; ++flat) {
            std::size_t rem = flat;
            Vector v(spec.p);
            for (Index i = 0; i < spec.p; ++i) {
                v[i] = (static_cast<int>(rem % 3) - 1) * spec.v_max[i];
                rem /= 3;
            }
            vs.push_back(std::move(v));
        }
    } else {
        vs.push_back(Vector::Zero(spec.p));
        vs.push_back(spec.v_max);
        vs.push_back(-spec.v_max);
    }
    return vs;
}

inline GainCertificate certify_observer_gains(
    const LpvSystemSpec& spec, const ObserverGains& gains,
    const std::vector<Vector>& y_samples, const std::vector<Vector>& v_samples,
    const std::vector<double>& t_samples = {0.0}) {
    require(!y_samples.empty() && !v_samples.empty(),
            "certify_observer_gains: sample sets must be nonempty");
    GainCertificate cert;
    cert.cooperative_lower = cert.cooperative_upper = true;
    cert.hurwitz_lower = cert.hurwitz_upper = true;
    cert.G_nonnegative = true;
    cert.worst_offdiag_entry = std::numeric_limits<double>::infinity();
    cert.max_eig_realpart = -std::numeric_limits<double>::infinity();

    auto check_closed_loop = [&](Obs o, const Vector& y) {
        const Matrix M = spec.bound(o, y) - gains.L(o) * spec.C;
        const bool coop = is_cooperative(M, 0.0);
        const double maxre = max_eig_real_part(M);
        const bool hurw = maxre < -1e-9;
        cert.worst_offdiag_entry = std::min(cert.worst_offdiag_entry, min_offdiagonal(M));
        cert.max_eig_realpart = std::max(cert.max_eig_realpart, maxre);
        (o == Obs::lower ? cert.cooperative_lower : cert.cooperative_upper) &= coop;
        (o == Obs::lower ? cert.hurwitz_lower : cert.hurwitz_upper) &= hurw;
    };

    // Constant bounds need a single closed-loop check.
    const std::vector<Vector> y_for_bounds =
        spec.bounds_depend_on_y ? y_samples : std::vector<Vector>{y_samples.front()};
    for (const Vector& y : y_for_bounds) {
        check_closed_loop(Obs::lower, y);
        check_closed_loop(Obs::upper, y);
        ++cert.samples_used;
    }

    for (const Vector& y : y_samples)
        for (const Vector& v : v_samples)
            for (double t : t_samples) {
                if ((spec.G(t, y + v).array() < 0.0).any()) cert.G_nonnegative = false;
                ++cert.samples_used;
            }
    return cert;
}

inline GainCertificate certify_observer_gains(const LpvSystemSpec& spec,
                                              const ObserverGains& gains,
                                              const std::vector<double>& t_samples = {0.0}) {
    return certify_observer_gains(spec, gains, default_output_samples(spec),
                                  default_noise_samples(spec), t_samples);
}

// ============================================================================
// Sign-preservation oracle
//
// A cooperative Hurwitz flow s' = M s + r(t) with s(0) >= 0 and r(t) >= 0
// keeps s(t) >= 0. The oracle simulates and reports whether every component
// stayed above -tol_sign; it makes no claim when M is not cooperative.
// ============================================================================

inline bool cooperative_flow_sign_oracle(const Matrix& M, const Rhs& forcing_of_t,
                                         const Vector& s0, double horizon, double h,
                                         double tol_sign = 1e-9) {
    const Rhs rhs = [&](double t, const Vector& s) -> Vector {
        return M * s + forcing_of_t(t, s);
    };
    const Trajectory traj = integrate_fixed_step(rhs, s0, 0.0, horizon, h);
    for (const Vector& s : traj.states)
        if (s.minCoeff() < -tol_sign) return false;
    return true;
}

} // namespace aso
