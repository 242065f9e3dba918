#pragma once

#include <optional>
#include <vector>

#include "aso/types.hpp"

namespace aso {

// ============================================================================
// Interval fault indicators
//
// Three boolean residual families, all instantaneous:
//   s_i: measured output leaves the nominal-model output envelope
//        [C zeta_m, C zeta_M];
//   d_j: zero leaves the certified parameter interval (a parameter that can
//        no longer be zero signals a fault);
//   z_i: measured output leaves the parameter-aware state-observer envelope
//        [C xi_lower, C xi_upper] - fires only when the certification
//        conditions are violated or the noise is excessive.
// The aggregates S, D, Z are the componentwise ORs. Latching is a
// post-processing view used for delay measurement; raw signals stay
// instantaneous.
// ============================================================================

struct IndicatorSample {
    std::vector<bool> s, d, z;
    bool S = false, D = false, Z = false;
    bool d_applicable = false; // false while no parameter ordering is certified
};

// s_i = 0 iff lo_i <= y_i <= hi_i; returns (s, S).
inline std::pair<std::vector<bool>, bool> indicator_S(const Vector& y, const Vector& y_lo,
                                                      const Vector& y_hi) {
    require(y.size() == y_lo.size() && y.size() == y_hi.size(), "indicator_S: size mismatch");
    std::vector<bool> s(static_cast<std::size_t>(y.size()));
    bool any = false;
    for (Index i = 0; i < y.size(); ++i) {
        const bool inside = y_lo[i] <= y[i] && y[i] <= y_hi[i];
        s[static_cast<std::size_t>(i)] = !inside;
        any |= !inside;
    }
    return {std::move(s), any};
}

// d_j = 0 iff lower_j <= 0 <= upper_j; endpoints must come in certified order.
inline std::pair<std::vector<bool>, bool> indicator_D(const Vector& theta_lower,
                                                      const Vector& theta_upper) {
    require(theta_lower.size() == theta_upper.size(), "indicator_D: size mismatch");
    std::vector<bool> d(static_cast<std::size_t>(theta_lower.size()));
    bool any = false;
    for (Index j = 0; j < theta_lower.size(); ++j) {
        const bool inside = theta_lower[j] <= 0.0 && 0.0 <= theta_upper[j];
        d[static_cast<std::size_t>(j)] = !inside;
        any |= !inside;
    }
    return {std::move(d), any};
}

// z_i = 0 iff lo_i <= y_i <= hi_i against the state-observer output envelope.
inline std::pair<std::vector<bool>, bool> indicator_Z(const Vector& y, const Vector& psi_lo,
                                                      const Vector& psi_hi) {
    return indicator_S(y, psi_lo, psi_hi);
}

// ============================================================================
// Indicator traces and detection delays
// ============================================================================

struct FaultIndicatorTrace {
    std::vector<double> times;
    std::vector<std::vector<bool>> s, d, z; // per sample, per component
    std::vector<bool> S, D, Z;
    std::vector<bool> d_applicable;

    void push(double t, const IndicatorSample& smp) {
        times.push_back(t);
        s.push_back(smp.s);
        d.push_back(smp.d);
        z.push_back(smp.z);
        S.push_back(smp.S);
        D.push_back(smp.D);
        Z.push_back(smp.Z);
        d_applicable.push_back(smp.d_applicable);
    }

    [[nodiscard]] std::size_t size() const { return times.size(); }
};

// First time at or after t0 where the signal reads 1; nullopt if never.
inline std::optional<double> first_latch(const std::vector<double>& times,
                                         const std::vector<bool>& signal, double t0) {
    for (std::size_t k = 0; k < times.size(); ++k)
        if (times[k] >= t0 && signal[k]) return times[k];
    return std::nullopt;
}

// Optional debounce view: a sample reads 1 only when the raw signal has been
// high for min_consecutive samples ending there. Zero (the default
// everywhere) returns the raw signal; delays are measured on raw signals.
inline std::vector<bool> debounce(const std::vector<bool>& signal,
                                  std::size_t min_consecutive) {
    if (min_consecutive <= 1) return signal;
    std::vector<bool> out(signal.size(), false);
    std::size_t run = 0;
    for (std::size_t k = 0; k < signal.size(); ++k) {
        run = signal[k] ? run + 1 : 0;
        out[k] = run >= min_consecutive;
    }
    return out;
}

struct DetectionDelays {
    // delays[f][i]: delay of component i of the indicator after fault f.
    std::vector<std::vector<std::optional<double>>> s, d, z;
    std::vector<std::optional<double>> S, D, Z; // aggregate signals
};

// Measures, for every fault time and every indicator component, the first
// latch time minus the fault time; raw signals, no debounce.
inline DetectionDelays detection_delay(const FaultIndicatorTrace& trace,
                                       const std::vector<double>& fault_times) {
    DetectionDelays out;
    const auto component_count = [](const std::vector<std::vector<bool>>& series) {
        return series.empty() ? std::size_t{0} : series.front().size();
    };
    const std::size_t ns = component_count(trace.s);
    const std::size_t nd = component_count(trace.d);
    const std::size_t nz = component_count(trace.z);

    const auto component_signal = [&](const std::vector<std::vector<bool>>& series,
                                      std::size_t i) {
        std::vector<bool> sig(series.size());
        for (std::size_t k = 0; k < series.size(); ++k) sig[k] = series[k][i];
        return sig;
    };

    for (double tf : fault_times) {
        const auto delay_of = [&](const std::vector<bool>& sig) -> std::optional<double> {
            const auto latch = first_latch(trace.times, sig, tf);
            if (!latch) return std::nullopt;
            return *latch - tf;
        };
        std::vector<std::optional<double>> srow(ns), drow(nd), zrow(nz);
        for (std::size_t i = 0; i < ns; ++i) srow[i] = delay_of(component_signal(trace.s, i));
        for (std::size_t i = 0; i < nd; ++i) drow[i] = delay_of(component_signal(trace.d, i));
        for (std::size_t i = 0; i < nz; ++i) zrow[i] = delay_of(component_signal(trace.z, i));
        out.s.push_back(std::move(srow));
        out.d.push_back(std::move(drow));
        out.z.push_back(std::move(zrow));
        out.S.push_back(delay_of(trace.S));
        out.D.push_back(delay_of(trace.D));
        out.Z.push_back(delay_of(trace.Z));
    }
    return out;
}

// Samples with the signal high inside [t0, t1) - used for false-alarm counts
// over known fault-free windows.
inline std::size_t count_high(const std::vector<double>& times, const std::vector<bool>& signal,
                              double t0, double t1) {
    std::size_t c = 0;
    for (std::size_t k = 0; k < times.size(); ++k)
        if (times[k] >= t0 && times[k] < t1 && signal[k]) ++c;
    return c;
}

} // namespace aso
