#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "aso/fault.hpp"
#include "aso/model.hpp"
#include "aso/monotone.hpp"
#include "aso/numerics.hpp"
#include "aso/observers.hpp"
#include "aso/scenarios.hpp"
#include "aso/types.hpp"
#include "aso/verifier.hpp"

namespace aso {

// ============================================================================
// Per-sample condition report
// ============================================================================

enum class LoopKind { competitive, cooperative, neither };

struct ConditionReport {
    bool pe_ok_m = false, pe_ok_M = false;
    double pe_level_m = 0.0, pe_level_M = 0.0; // measured window-Gramian min eig
    std::optional<Vector> b_hat_m, b_hat_M;
    std::optional<Matrix> R_hat_m, R_hat_M;
    std::optional<Vector> theta_bar_m, theta_bar_M;
    CompetitiveBranch branch = CompetitiveBranch::none;
    bool coop_instant_ok = false, coop_periodic_ok = false;
    LoopKind loop_kind = LoopKind::neither;
    std::optional<OrderClaim> certified_order; // this sample
    std::optional<OrderClaim> latched_order;   // most recent within the phase
    std::optional<StatePairing> pairing;
    bool valid = false;

    [[nodiscard]] bool pe_ok_both() const { return pe_ok_m && pe_ok_M; }

    [[nodiscard]] const char* branch_token() const {
        if (branch != CompetitiveBranch::none) return to_string(branch);
        if (coop_periodic_ok) return "coop-per";
        if (coop_instant_ok) return "coop-inst";
        return "none";
    }

    [[nodiscard]] const std::optional<Vector>& theta_bar(Obs o) const {
        return o == Obs::lower ? theta_bar_m : theta_bar_M;
    }
};

// Snapshot handed to per-sample callbacks; buffers are reused between samples.
struct Frame {
    double t = 0.0;
    uint64_t index = 0;
    std::size_t phase = 0;
    Vector x, y, y_v, u, v, theta_true;
    AdaptiveObserverState obs;
    std::optional<IdealObserverState> ideal;
    ConditionReport report;
    IndicatorSample ind;
    std::optional<ErrorDiagnostics> diag;
};

// ============================================================================
// Run configuration and results
// ============================================================================

struct RunOptions {
    uint64_t seed = 0;
    bool noise = false;
    std::optional<Vector> noise_amplitude; // override of the scenario amplitude
    std::optional<double> horizon, step;
    std::optional<double> gamma_scale;
    bool run_ideal = false;
    bool collect_diagnostics = false; // truth-referenced extras for tests
    bool force = false;               // run even if gain certification fails
    int keep_every = 0;               // decimation for stored series; 0 = auto
    std::function<void(const Frame&)> on_sample;
};

struct PhaseStats {
    double t_start = 0.0, t_end = 0.0;
    uint64_t window_total = 0;    // samples past the per-phase transient
    uint64_t branch_expected = 0; // report branch equals the expected one
    uint64_t order_present = 0;   // some ordering latched
    uint64_t theta_contained = 0; // true theta inside the latched interval
};

struct RunStats {
    std::vector<PhaseStats> phases;
    uint64_t samples = 0;
    uint64_t x_contained = 0, x_total = 0; // state envelope per sign case
    uint64_t pe_ok = 0, pe_total = 0;
    uint64_t valid_samples = 0;
    double max_state_norm = 0.0;
    double max_observer_norm = 0.0;
    double theta_tol = 1e-9; // containment slack
};

struct Series {
    std::vector<double> t;
    std::vector<Vector> x, y, y_v, zeta_m, zeta_M, xi_m, xi_M, theta_hat_m, theta_hat_M,
        theta_bar_m, theta_bar_M, theta_true;
    std::vector<double> pe_level_m, pe_level_M;
    std::vector<std::string> branch;
    std::vector<uint8_t> S, D, Z;
};

struct RunResult {
    std::string scenario;
    GainCertificate gain_cert;
    ConditionReport final_report;
    RunStats stats;
    FaultIndicatorTrace indicators;
    DetectionDelays delays;
    Series series;
    double wall_seconds = 0.0;
    uint64_t steps = 0;
    double horizon = 0.0, step = 0.0;
};

class CertificationFailure : public std::runtime_error {
public:
    CertificationFailure(std::string what_, GainCertificate cert)
        : std::runtime_error(std::move(what_)), cert_(std::move(cert)) {}
    [[nodiscard]] const GainCertificate& certificate() const { return cert_; }
private:
    GainCertificate cert_;
};

// Gain certification over the operating box, noise corners and a probe grid
// of times covering the horizon (for measured time-varying G).
inline GainCertificate precheck_scenario(const Scenario& sc) {
    std::vector<double> probes;
    const int count = 64;
    for (int i = 0; i <= count; ++i)
        probes.push_back(sc.horizon * static_cast<double>(i) / count);
    return certify_observer_gains(sc.spec, sc.gains, probes);
}

// ============================================================================
// Simulation engine
//
// Integrates the plant, the adaptive interval pair, the state interval pair
// and (optionally) the ideal observer as one coupled ODE with classical RK4
// on a uniform grid; measurement noise is sampled per step and held constant
// across the stages. At every accepted grid point the running integrals are
// advanced and the applicability conditions evaluated; the integrals restart
// whenever a schedule phase with a different a-priori box begins.
// ============================================================================

class SimulationEngine {
public:
    SimulationEngine(Scenario sc, RunOptions opt)
        : sc_(std::move(sc)), opt_(std::move(opt)) {
        if (opt_.horizon) sc_.horizon = *opt_.horizon;
        if (opt_.step) sc_.step = *opt_.step;
        if (opt_.gamma_scale) {
            sc_.gains.Gamma_lower *= *opt_.gamma_scale;
            sc_.gains.Gamma_upper *= *opt_.gamma_scale;
        }
        if (opt_.noise_amplitude) sc_.noise_amplitude = *opt_.noise_amplitude;
        require(sc_.step > 0.0, "SimulationEngine: step must be > 0");
    }

    [[nodiscard]] const Scenario& scenario() const { return sc_; }

    RunResult run() {
        const auto t_begin = std::chrono::steady_clock::now();
        RunResult res;
        res.scenario = sc_.name;
        res.horizon = sc_.horizon;
        res.step = sc_.step;
        res.gain_cert = precheck_scenario(sc_);
        if (!res.gain_cert.pass() && !opt_.force)
            throw CertificationFailure(
                "gain certification failed for scenario '" + sc_.name + "':\n" +
                    res.gain_cert.summary(),
                res.gain_cert);
        if (sc_.horizon <= 0.0) {
            res.wall_seconds = 0.0;
            return res; // degenerate run: no samples, trivial report
        }

        setup(res);
        loop(res);

        res.delays = detection_delay(res.indicators, sc_.fault_times);
        res.final_report = frame_.report;
        res.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t_begin).count();
        return res;
    }

private:
    // ---- flat state layout ----
    struct Layout {
        Index n = 0, q = 0;
        Index x0 = 0, zm = 0, zM = 0, Om = 0, OM = 0, thm = 0, thM = 0, xim = 0, xiM = 0;
        Index iz = 0, iO = 0, ith = 0;
        Index total = 0;
        bool ideal = false;
    };

    void make_layout() {
        const Index n = sc_.spec.n, q = sc_.spec.q;
        lay_.n = n;
        lay_.q = q;
        Index off = 0;
        lay_.x0 = off; off += n;
        lay_.zm = off; off += n;
        lay_.zM = off; off += n;
        lay_.Om = off; off += n * q;
        lay_.OM = off; off += n * q;
        lay_.thm = off; off += q;
        lay_.thM = off; off += q;
        lay_.xim = off; off += n;
        lay_.xiM = off; off += n;
        lay_.ideal = opt_.run_ideal;
        if (lay_.ideal) {
            lay_.iz = off; off += n;
            lay_.iO = off; off += n * q;
            lay_.ith = off; off += q;
        }
        lay_.total = off;
    }

    void setup(RunResult& res) {
        const auto& spec = sc_.spec;
        make_layout();
        Y_.setZero(lay_.total);

        const auto& phase0 = sc_.truth.theta_schedule.front();
        AdaptiveObserverState s0 = init_observer_state(
            spec, sc_.claimed_order, sc_.sign_case, phase0.box_lower, phase0.box_upper);
        seg(Y_, lay_.x0, spec.n) = sc_.truth.x0;
        seg(Y_, lay_.zm, spec.n) = s0.zeta_m;
        seg(Y_, lay_.zM, spec.n) = s0.zeta_M;
        seg(Y_, lay_.thm, spec.q) = s0.theta_hat_m;
        seg(Y_, lay_.thM, spec.q) = s0.theta_hat_M;
        seg(Y_, lay_.xim, spec.n) = s0.xi_m;
        seg(Y_, lay_.xiM, spec.n) = s0.xi_M;
        if (lay_.ideal) {
            seg(Y_, lay_.iz, spec.n) = 0.5 * (spec.x_lower + spec.x_upper);
            seg(Y_, lay_.ith, spec.q) =
                0.5 * (phase0.box_lower + phase0.box_upper);
        }

        // Pairing fixed from the claimed certification; the verifier reports
        // the pairing its own checks imply alongside.
        if (sc_.sign_case != SignCase::indefinite)
            pairing_ = state_pairing_for(sc_.sign_case, sc_.claimed_order);
        else
            pairing_ = StatePairing{};

        const double cap =
            std::max(sc_.pe_window, sc_.periodic_window.value_or(0.0)) + 8.0 * sc_.step;
        acc_ = std::make_unique<Accumulators>(spec.q, cap);
        acc_start_ = sc_.estimate_settle;

        steps_ = static_cast<uint64_t>(std::llround(sc_.horizon / sc_.step));
        if (std::abs(steps_ * sc_.step - sc_.horizon) > 1e-9 * std::max(1.0, sc_.horizon))
            steps_ = static_cast<uint64_t>(std::ceil(sc_.horizon / sc_.step - 1e-12));
        keep_every_ = opt_.keep_every > 0
                          ? static_cast<uint64_t>(opt_.keep_every)
                          : std::max<uint64_t>(1, steps_ / 2000);

        noise_amp_ = opt_.noise ? sc_.noise_amplitude : Vector::Zero(spec.p);
        use_noise_ = opt_.noise && noise_amp_.lpNorm<Eigen::Infinity>() > 0.0;

        res.stats.phases.clear();
        for (std::size_t i = 0; i < sc_.truth.theta_schedule.size(); ++i) {
            PhaseStats ps;
            ps.t_start = sc_.truth.theta_schedule[i].t_start;
            ps.t_end = (i + 1 < sc_.truth.theta_schedule.size())
                           ? sc_.truth.theta_schedule[i + 1].t_start
                           : sc_.horizon;
            res.stats.phases.push_back(ps);
        }

        // frame buffers
        frame_.x.resize(spec.n);
        frame_.y.resize(spec.p);
        frame_.y_v.resize(spec.p);
        frame_.v = Vector::Zero(spec.p);
        frame_.obs.Omega_m.resize(spec.n, spec.q);
        frame_.obs.Omega_M.resize(spec.n, spec.q);
        if (lay_.ideal) frame_.ideal.emplace();

        hoist_constant_bounds();
        prev_phase_ = 0;
        latched_order_.reset();
        if (sc_.claimed_order == OrderClaim::natural || sc_.claimed_order == OrderClaim::reversed)
            claimed_for_envelope_ = sc_.claimed_order;
    }

    void hoist_constant_bounds() {
        const auto& spec = sc_.spec;
        if (!spec.bounds_depend_on_y) {
            const Vector y0 = Vector::Zero(spec.p);
            A_lo_c_ = spec.A_lower(y0);
            A_hi_c_ = spec.A_upper(y0);
            Mcl_lo_c_ = A_lo_c_ - sc_.gains.L_lower * spec.C;
            Mcl_hi_c_ = A_hi_c_ - sc_.gains.L_upper * spec.C;
        }
    }

    static Eigen::VectorBlock<Vector> seg(Vector& v, Index off, Index len) {
        return v.segment(off, len);
    }
    static Eigen::VectorBlock<const Vector> seg(const Vector& v, Index off, Index len) {
        return v.segment(off, len);
    }

    // Coupled right-hand side; v held constant over the step.
    void rhs(double t, const Vector& Y, const Vector& v, Vector& dY) {
        const auto& spec = sc_.spec;
        const auto& truth = sc_.truth;
        const Index n = spec.n, q = spec.q;

        const auto x = seg(Y, lay_.x0, n);
        ws_y_.noalias() = spec.C * x;
        ws_yv_ = ws_y_ + v;
        ws_u_ = truth.input_at(t, ws_yv_);
        const Vector& theta = truth.theta_at(t);

        const Matrix A_rho = truth.A_true(t, x);
        const Matrix Gv = spec.G(t, ws_yv_);
        const bool has_u = spec.m > 0 && ws_u_.size() > 0;

        // plant
        {
            auto dx = seg(dY, lay_.x0, n);
            dx.noalias() = A_rho * x;
            if (has_u) dx.noalias() += truth.B_true(t) * ws_u_;
            if (spec.phi) dx += spec.phi(t, ws_y_);
            dx.noalias() += spec.G(t, ws_y_) * theta;
        }

        const bool dyn_bounds = spec.bounds_depend_on_y;
        const Matrix& A_lo = dyn_bounds ? (ws_Alo_ = spec.A_lower(ws_yv_)) : A_lo_c_;
        const Matrix& A_hi = dyn_bounds ? (ws_Ahi_ = spec.A_upper(ws_yv_)) : A_hi_c_;
        const Matrix& Mcl_lo =
            dyn_bounds ? (ws_Mlo_ = A_lo - sc_.gains.L_lower * spec.C) : Mcl_lo_c_;
        const Matrix& Mcl_hi =
            dyn_bounds ? (ws_Mhi_ = A_hi - sc_.gains.L_upper * spec.C) : Mcl_hi_c_;
        if (spec.phi) ws_phiv_ = spec.phi(t, ws_yv_);

        for (Obs o : {Obs::lower, Obs::upper}) {
            const bool lo = o == Obs::lower;
            const Matrix& Ao = lo ? A_lo : A_hi;
            const Matrix& Mo = lo ? Mcl_lo : Mcl_hi;
            const Matrix& Lo = sc_.gains.L(o);
            const auto zeta = seg(Y, lo ? lay_.zm : lay_.zM, n);
            const auto th = seg(Y, lo ? lay_.thm : lay_.thM, q);
            const auto xi = seg(Y, lo ? lay_.xim : lay_.xiM, n);
            const Eigen::Map<const Matrix> Om(Y.data() + (lo ? lay_.Om : lay_.OM), n, q);

            auto dzeta = seg(dY, lo ? lay_.zm : lay_.zM, n);
            auto dth = seg(dY, lo ? lay_.thm : lay_.thM, q);
            auto dxi = seg(dY, lo ? lay_.xim : lay_.xiM, n);
            Eigen::Map<Matrix> dOm(dY.data() + (lo ? lay_.Om : lay_.OM), n, q);

            ws_innov_.noalias() = ws_yv_ - spec.C * zeta;
            dzeta.noalias() = Ao * zeta;
            dzeta.noalias() += Lo * ws_innov_;
            if (has_u) dzeta.noalias() += spec.input_bound(o) * ws_u_;
            if (spec.phi) dzeta += ws_phiv_;

            dOm.noalias() = Mo * Om;
            dOm -= Gv;

            // theta_hat' = -Gamma Om^T C^T (innov + C Om th)
            ws_p_.noalias() = spec.C * (Om * th);
            ws_p_ += ws_innov_;
            ws_q_.noalias() = Om.transpose() * (spec.C.transpose() * ws_p_);
            dth.noalias() = -(sc_.gains.Gamma(o) * ws_q_);

            const Obs endpoint = lo ? pairing_.for_lower : pairing_.for_upper;
            const auto th_pair =
                seg(Y, endpoint == Obs::lower ? lay_.thm : lay_.thM, q);
            ws_innov2_.noalias() = ws_yv_ - spec.C * xi;
            dxi.noalias() = Ao * xi;
            dxi.noalias() += Lo * ws_innov2_;
            dxi.noalias() += Gv * th_pair;
            if (has_u) dxi.noalias() += spec.input_bound(o) * ws_u_;
            if (spec.phi) dxi += ws_phiv_;
        }

        if (lay_.ideal) {
            const auto zeta = seg(Y, lay_.iz, n);
            const auto th = seg(Y, lay_.ith, q);
            const Eigen::Map<const Matrix> Om(Y.data() + lay_.iO, n, q);
            auto dzeta = seg(dY, lay_.iz, n);
            auto dth = seg(dY, lay_.ith, q);
            Eigen::Map<Matrix> dOm(dY.data() + lay_.iO, n, q);
            const Matrix& L = sc_.gains.L_lower;
            ws_innov_.noalias() = ws_yv_ - spec.C * zeta;
            dzeta.noalias() = A_rho * zeta;
            dzeta.noalias() += L * ws_innov_;
            if (has_u) dzeta.noalias() += truth.B_true(t) * ws_u_;
            if (spec.phi) dzeta += ws_phiv_;
            dOm.noalias() = (A_rho - L * spec.C) * Om;
            dOm -= Gv;
            ws_p_.noalias() = spec.C * (Om * th);
            ws_p_ += ws_innov_;
            ws_q_.noalias() = Om.transpose() * (spec.C.transpose() * ws_p_);
            dth.noalias() = -(sc_.gains.Gamma_lower * ws_q_);
        }
    }

    void loop(RunResult& res) {
        Vector k1(lay_.total), k2(lay_.total), k3(lay_.total), k4(lay_.total),
            tmp(lay_.total);
        const double h = sc_.step;
        double t = 0.0;
        for (uint64_t k = 0; k <= steps_; ++k) {
            if (use_noise_)
                frame_.v = bounded_noise(opt_.seed, noise_amp_, k);
            process_sample(res, k, t);
            if (k == steps_) break;
            const double dt = std::min(h, sc_.horizon - t);
            const Vector& v = frame_.v;
            // classical RK4 on the flat coupled state
            rhs(t, Y_, v, k1);
            tmp = Y_ + (0.5 * dt) * k1;
            rhs(t + 0.5 * dt, tmp, v, k2);
            tmp = Y_ + (0.5 * dt) * k2;
            rhs(t + 0.5 * dt, tmp, v, k3);
            tmp = Y_ + dt * k3;
            rhs(t + dt, tmp, v, k4);
            Y_ += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            t += dt;
            if (!Y_.allFinite() || Y_.norm() > kDivergenceNorm)
                throw DivergenceError(t, "simulation diverged at t = " + std::to_string(t));
        }
        res.steps = steps_;
        res.stats.samples = steps_ + 1;
    }

    void materialize_frame(uint64_t k, double t) {
        const auto& spec = sc_.spec;
        const Index n = spec.n, q = spec.q;
        frame_.t = t;
        frame_.index = k;
        frame_.x = seg(Y_, lay_.x0, n);
        frame_.y.noalias() = spec.C * frame_.x;
        frame_.y_v = frame_.y + frame_.v;
        frame_.u = sc_.truth.input_at(t, frame_.y_v);
        frame_.theta_true = sc_.truth.theta_at(t);
        frame_.phase = sc_.truth.phase_index(t);
        auto& obs = frame_.obs;
        obs.zeta_m = seg(Y_, lay_.zm, n);
        obs.zeta_M = seg(Y_, lay_.zM, n);
        obs.Omega_m = Eigen::Map<const Matrix>(Y_.data() + lay_.Om, n, q);
        obs.Omega_M = Eigen::Map<const Matrix>(Y_.data() + lay_.OM, n, q);
        obs.theta_hat_m = seg(Y_, lay_.thm, q);
        obs.theta_hat_M = seg(Y_, lay_.thM, q);
        obs.xi_m = seg(Y_, lay_.xim, n);
        obs.xi_M = seg(Y_, lay_.xiM, n);
        if (lay_.ideal) {
            frame_.ideal->zeta = seg(Y_, lay_.iz, n);
            frame_.ideal->Omega = Eigen::Map<const Matrix>(Y_.data() + lay_.iO, n, q);
            frame_.ideal->theta_hat = seg(Y_, lay_.ith, q);
        }
    }

    void process_sample(RunResult& res, uint64_t k, double t) {
        const auto& spec = sc_.spec;
        materialize_frame(k, t);

        // phase change with a different a-priori box restarts the integrals
        if (k > 0 && frame_.phase != prev_phase_) {
            const auto& prv = sc_.truth.theta_schedule[prev_phase_];
            const auto& cur = sc_.truth.theta_schedule[frame_.phase];
            const bool box_changed = prv.box_lower.size() != cur.box_lower.size() ||
                                     prv.box_lower != cur.box_lower ||
                                     prv.box_upper != cur.box_upper;
            if (box_changed) {
                acc_->reset();
                latched_order_.reset();
                acc_start_ = t + sc_.estimate_settle;
            }
        }
        prev_phase_ = frame_.phase;

        // advance the running integrals to this sample (dormant through the
        // post-regime-change settling window)
        ws_COm_.noalias() = spec.C * frame_.obs.Omega_m;
        ws_COM_.noalias() = spec.C * frame_.obs.Omega_M;
        ws_rm_ = frame_.y_v - spec.C * frame_.obs.zeta_m;
        ws_rM_ = frame_.y_v - spec.C * frame_.obs.zeta_M;
        if (t >= acc_start_ - 1e-12)
            acc_->update(sc_.step, ws_COm_, ws_rm_, ws_COM_, ws_rM_);

        evaluate_conditions();
        evaluate_indicators();
        collect(res, k, t);

        if (opt_.collect_diagnostics)
            frame_.diag = compute_error_diagnostics(spec, sc_.truth, sc_.gains, t, frame_.x,
                                                    frame_.obs, frame_.u, frame_.v);
        else
            frame_.diag.reset();

        if (opt_.on_sample) opt_.on_sample(frame_);
    }

    void evaluate_conditions() {
        ConditionReport rep;
        const bool competitive = sc_.competitive_checks_applicable();
        rep.loop_kind = competitive ? LoopKind::competitive : LoopKind::neither;

        const double tau = acc_->time();
        if (tau >= sc_.pe_window - 1e-12) {
            const auto pm = acc_->pe_check(Obs::lower, sc_.pe_window, sc_.pe_level_min);
            const auto pM = acc_->pe_check(Obs::upper, sc_.pe_window, sc_.pe_level_min);
            rep.pe_ok_m = pm.ok;
            rep.pe_ok_M = pM.ok;
            rep.pe_level_m = pm.level;
            rep.pe_level_M = pM.level;
        }

        const auto& phase = sc_.truth.theta_schedule[frame_.phase];
        const Vector& box_lo = phase.box_lower;
        const Vector& box_hi = phase.box_upper;

        if (tau >= sc_.pe_window - 1e-12 && tau > 0.0) {
            rep.b_hat_m = acc_->b_hat(Obs::lower);
            rep.b_hat_M = acc_->b_hat(Obs::upper);
            rep.R_hat_m = acc_->R_hat(Obs::lower);
            rep.R_hat_M = acc_->R_hat(Obs::upper);
            try {
                rep.theta_bar_m = acc_->theta_bar_infty(Obs::lower);
                rep.theta_bar_M = acc_->theta_bar_infty(Obs::upper);
            } catch (const IdentifiabilityError&) {
                rep.theta_bar_m.reset();
                rep.theta_bar_M.reset();
            }
        }

        if (competitive && rep.theta_bar_m && rep.theta_bar_M) {
            rep.branch = check_competitive_certification(*rep.theta_bar_m, *rep.theta_bar_M,
                                                         box_lo, box_hi);
            if (rep.branch == CompetitiveBranch::reversed)
                rep.certified_order = OrderClaim::reversed;
            else if (rep.branch == CompetitiveBranch::natural)
                rep.certified_order = OrderClaim::natural;
        }

        if (sc_.use_cooperative_checks) {
            CooperativeInstantInputs in;
            in.Gamma_m = sc_.gains.Gamma_lower;
            in.Gamma_M = sc_.gains.Gamma_upper;
            in.COmega_m = ws_COm_;
            in.COmega_M = ws_COM_;
            in.residual_m = ws_rm_;
            in.residual_M = ws_rM_;
            std::optional<Accumulators::WindowEstimates> wm, wM;
            if (sc_.periodic_window && acc_->window_span() >= *sc_.periodic_window - 1e-12) {
                wm = acc_->window_estimates(Obs::lower, *sc_.periodic_window);
                wM = acc_->window_estimates(Obs::upper, *sc_.periodic_window);
            }
            const CooperativeCheck cc = check_cooperative_certification(
                in, box_lo, box_hi, rep.pe_ok_both(), wm, wM);
            rep.coop_instant_ok = cc.instant_ok;
            rep.coop_periodic_ok = cc.periodic_ok;
            if (cc.instant_ok || cc.periodic_ok) {
                rep.loop_kind = LoopKind::cooperative;
                if (!rep.certified_order)
                    rep.certified_order =
                        cc.periodic_ok ? cc.periodic_order : cc.instant_order;
            }
        }

        if (rep.certified_order) latched_order_ = rep.certified_order;
        rep.latched_order = latched_order_;
        if (sc_.sign_case != SignCase::indefinite && latched_order_)
            rep.pairing = state_pairing_for(sc_.sign_case, latched_order_);
        rep.valid = rep.pe_ok_both() &&
                    (rep.branch != CompetitiveBranch::none || rep.coop_instant_ok ||
                     rep.coop_periodic_ok);
        frame_.report = std::move(rep);
    }

    void evaluate_indicators() {
        const auto& spec = sc_.spec;
        IndicatorSample ind;
        // nominal output envelope from the claimed ordering of the zeta pair
        const bool zeta_natural = claimed_for_envelope_ == OrderClaim::reversed;
        const Vector& zlo = zeta_natural ? frame_.obs.zeta_m : frame_.obs.zeta_M;
        const Vector& zhi = zeta_natural ? frame_.obs.zeta_M : frame_.obs.zeta_m;
        const auto [ym, yM] = output_envelope(spec.C, zlo, zhi);
        auto [s, S] = indicator_S(frame_.y, ym, yM);
        ind.s = std::move(s);
        ind.S = S;

        if (frame_.report.latched_order) {
            const bool nat = *frame_.report.latched_order == OrderClaim::natural;
            const Vector& lo = nat ? frame_.obs.theta_hat_m : frame_.obs.theta_hat_M;
            const Vector& hi = nat ? frame_.obs.theta_hat_M : frame_.obs.theta_hat_m;
            auto [d, D] = indicator_D(lo, hi);
            ind.d = std::move(d);
            ind.D = D;
            ind.d_applicable = true;
        } else {
            ind.d.assign(static_cast<std::size_t>(spec.q), false);
            ind.D = false;
            ind.d_applicable = false;
        }

        const bool xi_natural = sc_.sign_case != SignCase::nonpositive;
        const Vector& xlo = xi_natural ? frame_.obs.xi_m : frame_.obs.xi_M;
        const Vector& xhi = xi_natural ? frame_.obs.xi_M : frame_.obs.xi_m;
        const auto [pm, pM] = output_envelope(spec.C, xlo, xhi);
        auto [z, Z] = indicator_Z(frame_.y, pm, pM);
        ind.z = std::move(z);
        ind.Z = Z;
        frame_.ind = std::move(ind);
    }

    void collect(RunResult& res, uint64_t k, double t) {
        auto& st = res.stats;
        res.indicators.push(t, frame_.ind);

        st.max_state_norm = std::max(st.max_state_norm, frame_.x.norm());
        double obs_norm = std::max({frame_.obs.zeta_m.norm(), frame_.obs.zeta_M.norm(),
                                    frame_.obs.Omega_m.norm(), frame_.obs.Omega_M.norm(),
                                    frame_.obs.theta_hat_m.norm(), frame_.obs.theta_hat_M.norm(),
                                    frame_.obs.xi_m.norm(), frame_.obs.xi_M.norm()});
        st.max_observer_norm = std::max(st.max_observer_norm, obs_norm);

        if (acc_->time() >= sc_.pe_window) {
            ++st.pe_total;
            if (frame_.report.pe_ok_both()) ++st.pe_ok;
        }
        if (frame_.report.valid) ++st.valid_samples;

        auto& ph = st.phases[frame_.phase];
        if (t >= ph.t_start + sc_.expected.branch_transient) {
            ++ph.window_total;
            if (frame_.phase < sc_.expected.branch_per_phase.size() &&
                frame_.report.branch == sc_.expected.branch_per_phase[frame_.phase])
                ++ph.branch_expected;
            if (frame_.report.latched_order) {
                ++ph.order_present;
                const bool nat = *frame_.report.latched_order == OrderClaim::natural;
                const Vector& lo = nat ? frame_.obs.theta_hat_m : frame_.obs.theta_hat_M;
                const Vector& hi = nat ? frame_.obs.theta_hat_M : frame_.obs.theta_hat_m;
                if (((frame_.theta_true - lo).array() >= -st.theta_tol).all() &&
                    ((hi - frame_.theta_true).array() >= -st.theta_tol).all())
                    ++ph.theta_contained;
            }
        }

        if (sc_.sign_case != SignCase::indefinite &&
            t >= sc_.expected.containment_transient) {
            ++st.x_total;
            const bool nat = sc_.sign_case == SignCase::nonnegative;
            const Vector& lo = nat ? frame_.obs.xi_m : frame_.obs.xi_M;
            const Vector& hi = nat ? frame_.obs.xi_M : frame_.obs.xi_m;
            if (((frame_.x - lo).array() >= -st.theta_tol).all() &&
                ((hi - frame_.x).array() >= -st.theta_tol).all())
                ++st.x_contained;
        }

        if (k % keep_every_ == 0 || k == steps_) {
            auto& se = res.series;
            se.t.push_back(t);
            se.x.push_back(frame_.x);
            se.y.push_back(frame_.y);
            se.y_v.push_back(frame_.y_v);
            se.zeta_m.push_back(frame_.obs.zeta_m);
            se.zeta_M.push_back(frame_.obs.zeta_M);
            se.xi_m.push_back(frame_.obs.xi_m);
            se.xi_M.push_back(frame_.obs.xi_M);
            se.theta_hat_m.push_back(frame_.obs.theta_hat_m);
            se.theta_hat_M.push_back(frame_.obs.theta_hat_M);
            se.theta_true.push_back(frame_.theta_true);
            const Vector nanv = Vector::Constant(sc_.spec.q, std::nan(""));
            se.theta_bar_m.push_back(frame_.report.theta_bar_m.value_or(nanv));
            se.theta_bar_M.push_back(frame_.report.theta_bar_M.value_or(nanv));
            se.pe_level_m.push_back(frame_.report.pe_level_m);
            se.pe_level_M.push_back(frame_.report.pe_level_M);
            se.branch.push_back(frame_.report.branch_token());
            se.S.push_back(frame_.ind.S);
            se.D.push_back(frame_.ind.D);
            se.Z.push_back(frame_.ind.Z);
        }
    }

    Scenario sc_;
    RunOptions opt_;
    Layout lay_;
    Vector Y_;
    Frame frame_;
    std::unique_ptr<Accumulators> acc_;
    double acc_start_ = 0.0;
    StatePairing pairing_;
    std::optional<OrderClaim> latched_order_;
    OrderClaim claimed_for_envelope_ = OrderClaim::reversed;
    std::size_t prev_phase_ = 0;
    uint64_t steps_ = 0;
    uint64_t keep_every_ = 1;
    Vector noise_amp_;
    bool use_noise_ = false;

    // constant-bound hoists and per-stage workspaces
    Matrix A_lo_c_, A_hi_c_, Mcl_lo_c_, Mcl_hi_c_;
    Matrix ws_Alo_, ws_Ahi_, ws_Mlo_, ws_Mhi_, ws_COm_, ws_COM_;
    Vector ws_y_, ws_yv_, ws_u_, ws_phiv_, ws_innov_, ws_innov2_, ws_p_, ws_q_, ws_rm_, ws_rM_;
};

inline RunResult run_scenario(const Scenario& sc, const RunOptions& opt = {}) {
    SimulationEngine eng(sc, opt);
    return eng.run();
}

// ============================================================================
// Averaging agreement, gain search, worst-case sweep
// ============================================================================

struct AveragingComparison {
    Vector theta_bar_m, theta_bar_M; // equilibria from the accumulated integrals
    double max_dev_m = 0.0, max_dev_M = 0.0; // max deviation / |equilibrium - start|
};

// Runs the full observer and the averaged estimator flow side by side over
// the first schedule phase and reports the worst deviation per branch,
// normalized by the distance from the initial endpoint to the equilibrium.
// The averaged flow is driven by the run's own running estimates (which do
// not depend on the adaptation gain - they are built from the zeta/Omega
// subsystems alone) and is anchored at the full observer's state once the
// estimates exist and the stated transient has passed.
inline AveragingComparison compare_with_averaged(const Scenario& scenario,
                                                 const RunOptions& base_opt,
                                                 double transient = 10.0) {
    Scenario sc = scenario;
    const double phase_end = sc.truth.theta_schedule.size() > 1
                                 ? sc.truth.theta_schedule[1].t_start
                                 : sc.horizon;
    RunOptions opt = base_opt;
    opt.horizon = phase_end;

    struct Side {
        bool anchored = false;
        Vector avg;        // averaged-flow state
        Vector theta0;     // full observer's initial endpoint
        Vector worst_abs;  // per-component max |full - avg|
    } side_m, side_M;
    double t_prev = 0.0;
    Matrix Gm, GM; // adaptation gains as actually run (after overrides)

    opt.on_sample = [&](const Frame& f) {
        if (f.index == 0) {
            side_m.theta0 = f.obs.theta_hat_m;
            side_M.theta0 = f.obs.theta_hat_M;
        }
        const double dt = f.t - t_prev;
        t_prev = f.t;
        for (Obs o : {Obs::lower, Obs::upper}) {
            const bool lo = o == Obs::lower;
            Side& s = lo ? side_m : side_M;
            const auto& b = lo ? f.report.b_hat_m : f.report.b_hat_M;
            const auto& R = lo ? f.report.R_hat_m : f.report.R_hat_M;
            const auto& tb = lo ? f.report.theta_bar_m : f.report.theta_bar_M;
            const Vector& full = lo ? f.obs.theta_hat_m : f.obs.theta_hat_M;
            if (!b || !R || !tb) continue;
            if (!s.anchored) {
                if (f.t < transient) continue;
                s.avg = full; // anchor at the matched state
                s.worst_abs = Vector::Zero(full.size());
                s.anchored = true;
                continue;
            }
            // averaged estimator flow with the current running coefficients
            const Matrix& G = lo ? Gm : GM;
            const Rhs rhs = [&](double, const Vector& th) -> Vector {
                return G * (*b - *R * th);
            };
            rk4_step(rhs, f.t - dt, dt, s.avg);
            s.worst_abs = s.worst_abs.cwiseMax((full - s.avg).cwiseAbs());
        }
    };
    SimulationEngine run_eng(sc, opt);
    Gm = run_eng.scenario().gains.Gamma_lower;
    GM = run_eng.scenario().gains.Gamma_upper;
    const RunResult rr = run_eng.run();

    if (!rr.final_report.theta_bar_m || !rr.final_report.theta_bar_M ||
        !side_m.anchored || !side_M.anchored)
        throw IdentifiabilityError("compare_with_averaged: estimates unavailable");
    AveragingComparison out;
    out.theta_bar_m = *rr.final_report.theta_bar_m;
    out.theta_bar_M = *rr.final_report.theta_bar_M;
    // normalize by the travel distance to the equilibrium, per component
    const auto ratio = [](const Side& s, const Vector& equil) {
        double worst = 0.0;
        for (Index j = 0; j < equil.size(); ++j) {
            const double scale = std::abs(equil[j] - s.theta0[j]);
            if (scale < 1e-12) continue;
            worst = std::max(worst, s.worst_abs[j] / scale);
        }
        return worst;
    };
    out.max_dev_m = ratio(side_m, out.theta_bar_m);
    out.max_dev_M = ratio(side_M, out.theta_bar_M);
    return out;
}

struct GainSearchResult {
    Matrix Gamma; // largest tested gain meeting the match tolerance
    int halvings = 0;
    double deviation = 0.0;
};

// Shrinks the adaptation gain geometrically until the full estimator tracks
// the averaged flow within match_tol.
inline GainSearchResult adaptation_gain_search(const Scenario& scenario,
                                               const Matrix& gamma_init, double shrink,
                                               double match_tol, int max_halvings = 12,
                                               double transient = 10.0) {
    require(shrink > 0.0 && shrink < 1.0, "adaptation_gain_search: shrink must be in (0,1)");
    for (int k = 0; k <= max_halvings; ++k) {
        Scenario sc = scenario;
        const double scale = std::pow(shrink, k);
        sc.gains.Gamma_lower = scale * gamma_init;
        sc.gains.Gamma_upper = scale * gamma_init;
        const AveragingComparison cmp = compare_with_averaged(sc, RunOptions{}, transient);
        const double dev = std::max(cmp.max_dev_m, cmp.max_dev_M);
        if (dev <= match_tol) return {sc.gains.Gamma_lower, k, dev};
    }
    throw NumericError("adaptation_gain_search: no gain within the halving budget matched");
}

struct SweepEntry {
    Vector x0, theta;
    Vector theta_bar_m, theta_bar_M;
    CompetitiveBranch branch = CompetitiveBranch::none;
};

// Multi-run corner sweep over x(0) in {x_lower, x_upper} and theta in
// {box_lower, box_upper}: worst-case context for the asymptotic estimates
// when the plant is monotone (monotonicity is the caller's assertion).
inline std::vector<SweepEntry> worst_case_sweep(const Scenario& scenario,
                                                double horizon,
                                                const RunOptions& base_opt = {}) {
    std::vector<SweepEntry> out;
    const auto& phase0 = scenario.truth.theta_schedule.front();
    for (const Vector& x0 : {scenario.spec.x_lower, scenario.spec.x_upper})
        for (const Vector& th : {phase0.box_lower, phase0.box_upper}) {
            Scenario sc = scenario;
            sc.truth.x0 = x0;
            sc.truth.theta_schedule = {{0.0, th, phase0.box_lower, phase0.box_upper}};
            sc.horizon = horizon;
            RunOptions opt = base_opt;
            opt.horizon = horizon;
            const RunResult rr = run_scenario(sc, opt);
            SweepEntry e;
            e.x0 = x0;
            e.theta = th;
            e.branch = rr.final_report.branch;
            if (rr.final_report.theta_bar_m) e.theta_bar_m = *rr.final_report.theta_bar_m;
            if (rr.final_report.theta_bar_M) e.theta_bar_M = *rr.final_report.theta_bar_M;
            out.push_back(std::move(e));
        }
    return out;
}

} // namespace aso
