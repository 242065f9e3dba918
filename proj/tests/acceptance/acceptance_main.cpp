// Acceptance suite: end-to-end checks of the four benchmark scenarios at
// their published operating points. Each criterion prints one PASS/FAIL line
// (with sub-results where applicable); the process exit code is the number
// of failed criteria.

#include <cmath>
#include <cstdio>
#include <optional>
#include <sstream>
#include <vector>

#include "aso/aso.hpp"

using namespace aso;

namespace {

int g_failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
    std::printf("[%s] criterion %d: %s%s%s\n", pass ? "PASS" : "FAIL", id, name.c_str(),
                detail.empty() ? "" : " - ", detail.c_str());
    if (!pass) ++g_failures;
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

bool in_band(std::optional<double> v, double lo, double hi) {
    return v && *v >= lo && *v <= hi;
}

std::string delay_str(const std::optional<double>& d) {
    return d ? fmt(*d) + " s" : std::string("none");
}

// ---------------------------------------------------------------------------
// Criterion 1 + the first-benchmark parts of criterion 6
// ---------------------------------------------------------------------------

struct Example1Outcome {
    double branch_frac[2] = {0, 0};
    double theta_frac[2] = {0, 0};
    double wall = 0;
    double max_omega_entry = -1e300;
    double worst_order = -1e300;
};

Example1Outcome run_example1() {
    const Scenario sc = builtin_scenario("example1");
    RunOptions opt;
    opt.run_ideal = true; // needed for the filter-ordering property

    struct PhaseCount {
        uint64_t total = 0, branch = 0, theta = 0;
    } counts[2];
    Example1Outcome out;

    opt.on_sample = [&](const Frame& f) {
        const std::size_t ph = f.phase;
        const double start = sc.truth.theta_schedule[ph].t_start;
        if (f.t >= start + 50.0) {
            auto& c = counts[ph];
            ++c.total;
            if (f.report.branch == sc.expected.branch_per_phase[ph]) ++c.branch;
            if (f.report.latched_order) {
                const bool nat = *f.report.latched_order == OrderClaim::natural;
                const Vector& lo = nat ? f.obs.theta_hat_m : f.obs.theta_hat_M;
                const Vector& hi = nat ? f.obs.theta_hat_M : f.obs.theta_hat_m;
                if (((f.theta_true - lo).array() >= -1e-9).all() &&
                    ((hi - f.theta_true).array() >= -1e-9).all())
                    ++c.theta;
            }
        }
        out.max_omega_entry = std::max(
            {out.max_omega_entry, f.obs.Omega_m.maxCoeff(), f.obs.Omega_M.maxCoeff()});
        out.worst_order =
            std::max({out.worst_order, (f.obs.Omega_M - f.ideal->Omega).maxCoeff(),
                      (f.ideal->Omega - f.obs.Omega_m).maxCoeff(), f.obs.Omega_m.maxCoeff()});
    };
    const RunResult rr = run_scenario(sc, opt);
    out.wall = rr.wall_seconds;
    for (int ph = 0; ph < 2; ++ph) {
        out.branch_frac[ph] = counts[ph].total
                                  ? static_cast<double>(counts[ph].branch) / counts[ph].total
                                  : 0.0;
        out.theta_frac[ph] = counts[ph].total
                                 ? static_cast<double>(counts[ph].theta) / counts[ph].total
                                 : 0.0;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Criterion 2 + criterion 7 share the noise-free second-benchmark run
// ---------------------------------------------------------------------------

struct Example2Outcome {
    double coop_frac = 0, theta_frac = 0, x_frac = 0;
    std::vector<double> pe_levels_m, pe_levels_M; // at 4pi, 6pi, 8pi, ...
    double noisy_theta_frac = 0;
};

Example2Outcome run_example2() {
    const Scenario sc = builtin_scenario("example2");
    Example2Outcome out;
    uint64_t total = 0, coop = 0, theta_in = 0, x_in = 0;
    double next_window = 4.0 * M_PI;
    RunOptions opt;
    opt.on_sample = [&](const Frame& f) {
        if (f.t >= next_window) {
            out.pe_levels_m.push_back(f.report.pe_level_m);
            out.pe_levels_M.push_back(f.report.pe_level_M);
            next_window += 2.0 * M_PI;
        }
        if (f.t < 25.0) return;
        ++total;
        if (f.report.coop_periodic_ok) ++coop;
        const double tol = 1e-6;
        if (((f.theta_true - f.obs.theta_hat_m).array() >= -tol).all() &&
            ((f.obs.theta_hat_M - f.theta_true).array() >= -tol).all())
            ++theta_in;
        if (((f.x - f.obs.xi_M).array() >= -tol).all() &&
            ((f.obs.xi_m - f.x).array() >= -tol).all())
            ++x_in;
    };
    run_scenario(sc, opt);
    out.coop_frac = static_cast<double>(coop) / total;
    out.theta_frac = static_cast<double>(theta_in) / total;
    out.x_frac = static_cast<double>(x_in) / total;

    // noisy variant: containment of the true parameter only
    RunOptions nopt;
    nopt.noise = true;
    nopt.seed = 1;
    uint64_t ntotal = 0, nin = 0;
    nopt.on_sample = [&](const Frame& f) {
        if (f.t < 25.0) return;
        ++ntotal;
        if (((f.theta_true - f.obs.theta_hat_m).array() >= -1e-6).all() &&
            ((f.obs.theta_hat_M - f.theta_true).array() >= -1e-6).all())
            ++nin;
    };
    run_scenario(sc, nopt);
    out.noisy_theta_frac = static_cast<double>(nin) / ntotal;
    return out;
}

void criterion_3() {
    const RunResult r1 = run_scenario(builtin_scenario("tank1"), {});
    const RunResult r2 = run_scenario(builtin_scenario("tank2"), {});
    // per-fault delays on the matching output channel
    const auto d1f1 = r1.delays.s[0][0];
    const auto d1f2 = r1.delays.s[1][1];
    const auto d2f1 = r2.delays.s[0][0];
    const auto d2f2 = r2.delays.s[1][1];
    const auto d2f3 = r2.delays.s[2][2];
    const bool p1 = in_band(d1f1, 0.35 / 3.0, 0.35 * 3.0) && in_band(d1f1, 0.1, 1.5);
    const bool p2 = in_band(d1f2, 0.45 / 3.0, 0.45 * 3.0) && in_band(d1f2, 0.1, 1.5);
    const bool p3 = in_band(d2f1, 0.52 / 3.0, 0.52 * 3.0);
    const bool p4 = in_band(d2f2, 0.55 / 3.0, 0.55 * 3.0);
    const bool p5 = in_band(d2f3, 7.61 / 3.0, 7.61 * 3.0);
    std::ostringstream os;
    os << "scenario1 s1 " << delay_str(d1f1) << (p1 ? " ok" : " OUT")
       << ", s2 " << delay_str(d1f2) << (p2 ? " ok" : " OUT")
       << "; scenario2 s1 " << delay_str(d2f1) << (p3 ? " ok" : " OUT")
       << ", s2 " << delay_str(d2f2) << (p4 ? " ok" : " OUT")
       << ", s3 " << delay_str(d2f3) << (p5 ? " ok" : " OUT");
    report(3, "three-tank detection delays in the published bands",
           p1 && p2 && p3 && p4 && p5, os.str());
}

void criterion_4() {
    TankParams prm;
    prm.horizon = 220.0;
    Scenario sc = make_tank(TankScenario::one, prm);
    sc.truth.theta_schedule = {
        {0.0, Vector::Zero(2), sc.spec.theta_lower, sc.spec.theta_upper}};
    sc.fault_times.clear();
    RunOptions opt;
    opt.noise = true;
    opt.seed = 7;
    const RunResult rr = run_scenario(sc, opt);
    const auto fa = count_false_alarms(rr, 20.0, 220.0);
    const bool ordering = fa.D < fa.S;
    const bool z_zero = fa.Z == 0;
    std::ostringstream os;
    os << "false alarms over the fault-free window: S=" << fa.S << " D=" << fa.D
       << " Z=" << fa.Z;
    report(4, "interval indicators are noise-robust in the published order",
           ordering && z_zero, os.str());
}

void criterion_5() {
    const Scenario sc = builtin_scenario("example1");
    RunOptions opt;
    opt.gamma_scale = 0.01;
    const auto cmp = compare_with_averaged(sc, opt, 10.0);
    const bool pass = cmp.max_dev_m <= 0.05 && cmp.max_dev_M <= 0.05;
    std::ostringstream os;
    os << "max deviation / travel: lower " << fmt(cmp.max_dev_m) << ", upper "
       << fmt(cmp.max_dev_M) << " (gate 0.05)";
    if (!pass) {
        // root cause: the residual is the O(Gamma) averaging ripple; show the
        // proportionality at a 10x smaller gain
        RunOptions opt2;
        opt2.gamma_scale = 0.001;
        const auto cmp2 = compare_with_averaged(sc, opt2, 10.0);
        os << "; at gain scale 0.001: lower " << fmt(cmp2.max_dev_m) << ", upper "
           << fmt(cmp2.max_dev_M) << " (deviation tracks the gain)";
    }
    report(5, "averaged-flow agreement at gain scale 0.01", pass, os.str());
}

void criterion_6(const Example1Outcome& ex1) {
    // (a) sign preservation across random cooperative stable flows
    int violations = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const Index n = 2 + trial % 3;
        Matrix M(n, n);
        for (Index i = 0; i < n; ++i)
            for (Index j = 0; j < n; ++j)
                M(i, j) =
                    0.5 * (1.0 + detail::unit_noise(detail::splitmix64(trial * 37 + 5 * i + j)));
        for (Index i = 0; i < n; ++i) {
            double row = 0.0;
            for (Index j = 0; j < n; ++j)
                if (i != j) row += M(i, j);
            M(i, i) = -row - 0.4;
        }
        const Rhs forcing = [n, trial](double t, const Vector&) {
            Vector r(n);
            for (Index i = 0; i < n; ++i)
                r[i] = std::abs(std::sin(1.7 * t + 0.3 * trial + i));
            return r;
        };
        Vector s0(n);
        for (Index i = 0; i < n; ++i) s0[i] = 0.5 * (1.0 + detail::unit_noise(trial + 11 * i));
        if (!cooperative_flow_sign_oracle(M, forcing, s0, 8.0, 1e-2)) ++violations;
    }
    report(6, "cooperative flows preserve sign (100 random systems)", violations == 0,
           std::to_string(violations) + " violations");

    // (b) filter-state sign and ordering collected from the criterion-1 run
    report(6, "auxiliary filter sign and ordering along the first benchmark",
           ex1.max_omega_entry <= 1e-9 && ex1.worst_order <= 1e-9,
           "max entry " + fmt(ex1.max_omega_entry) + ", worst ordering gap " +
               fmt(ex1.worst_order));

    // (c) decay bound dominates random persistently excited systems
    int undominated = 0;
    for (int trial = 0; trial < 50; ++trial) {
        const Index l1 = 1 + trial % 3;
        const double gamma = 0.5 + 0.3 * (trial % 4) / 3.0;
        const Matrix Gm = gamma * Matrix::Identity(l1, l1);
        const auto Rt = [l1, trial](double t) {
            Matrix R(l1, l1);
            for (Index i = 0; i < l1; ++i)
                for (Index j = 0; j < l1; ++j) {
                    const double a = 0.6 + 0.4 * detail::unit_noise(trial * 53 + 9 * i + j);
                    const double w = 1.0 + ((i + j + trial) % 3);
                    R(i, j) = a * std::sin(w * t + i - j) + (i == j ? 0.8 : 0.0);
                }
            return R;
        };
        const auto bt = [l1, trial](double t) {
            Vector b(l1);
            for (Index i = 0; i < l1; ++i)
                b[i] = 0.25 * detail::unit_noise(trial * 29 + i) * std::cos(2.0 * t + i);
            return b;
        };
        Vector p0(l1);
        for (Index i = 0; i < l1; ++i) p0[i] = 1.5 * detail::unit_noise(trial * 41 + i);
        const double h = 1e-3, horizon = 10.0, ell = 2.0 * M_PI;
        const Rhs rhs = [&](double t, const Vector& p) -> Vector {
            const Matrix R = Rt(t);
            return -Gm * (R * (R.transpose() * p)) + bt(t);
        };
        const Trajectory traj = integrate_fixed_step(rhs, p0, 0.0, horizon, h);
        Accumulators acc(l1, ell + 1.0);
        double vartheta = 1e300, b_sup = 0.0;
        for (std::size_t k = 0; k < traj.size(); ++k) {
            const Matrix R = Rt(traj.times[k]);
            acc.update(h, R.transpose(), Vector::Zero(l1), R.transpose(), Vector::Zero(l1));
            b_sup = std::max(b_sup, bt(traj.times[k]).norm());
            if (acc.window_span() >= ell)
                vartheta = std::min(
                    vartheta, min_symmetric_eigenvalue(acc.window_gramian(Obs::lower, ell)));
        }
        const double vt = 0.9 * vartheta;
        for (std::size_t k = 0; k < traj.size(); ++k) {
            if (traj.states[k].norm() >
                pe_decay_bound(gamma, vt, ell, p0.norm(), b_sup, traj.times[k]) *
                        (1.0 + 1e-9) + 1e-12) {
                ++undominated;
                break;
            }
        }
    }
    report(6, "decay bound dominates simulated excited systems (50 random)",
           undominated == 0, std::to_string(undominated) + " undominated");

    // (d) raw nonlinear tank dynamics equal the factored form
    {
        const TankParams prm;
        const Vector a{{prm.a13, prm.a32, prm.a20}};
        Matrix B(3, 2);
        B << 1, 0, 0, 1, 0, 0;
        B /= prm.Sc;
        double worst = 0.0;
        for (int k = 0; k < 1000; ++k) {
            Vector x(3), u(2), th(3);
            for (Index i = 0; i < 3; ++i) {
                const double r =
                    0.5 * (1.0 + detail::unit_noise(detail::splitmix64(k * 13 + i)));
                x[i] = prm.x_lower[i] + r * (prm.x_upper[i] - prm.x_lower[i]);
                th[i] = 1e-4 * detail::unit_noise(k * 7 + i);
            }
            u << 1e-4 * std::abs(detail::unit_noise(k * 3 + 1)),
                1e-4 * std::abs(detail::unit_noise(k * 3 + 2));
            const Vector raw = three_tank_rhs(x, u, th, a, prm.Sc);
            const Vector fac = three_tank_A(x, a, prm.Sc) * x + B * u + th / prm.Sc;
            worst = std::max(worst, (raw - fac).lpNorm<Eigen::Infinity>());
        }
        report(6, "raw and factored tank dynamics agree (1000 random states)",
               worst < 1e-12, "max difference " + fmt(worst));
    }

    // (e) accumulator linearity and information-matrix symmetry
    {
        const auto integrand = [](int k) {
            const double t = 1e-2 * k;
            Matrix CO(2, 2);
            CO << std::sin(t), 0.4 * std::cos(2 * t), -0.6, std::sin(3 * t);
            Vector r(2);
            r << std::cos(t), 0.3 * std::sin(0.7 * t);
            return std::make_pair(CO, r);
        };
        Accumulators whole(2, 50.0), first(2, 50.0), second(2, 50.0);
        for (int k = 0; k <= 800; ++k) {
            const auto [CO, r] = integrand(k);
            whole.update(1e-2, CO, r, CO, r);
            if (k <= 400) first.update(1e-2, CO, r, CO, r);
            if (k >= 400) second.update(1e-2, CO, r, CO, r);
        }
        const double lin =
            std::max((whole.I_b(Obs::lower) - first.I_b(Obs::lower) - second.I_b(Obs::lower))
                         .lpNorm<Eigen::Infinity>(),
                     (whole.I_R(Obs::lower) - first.I_R(Obs::lower) - second.I_R(Obs::lower))
                         .lpNorm<Eigen::Infinity>());
        const Matrix R = whole.R_hat(Obs::lower);
        const double sym = (R - R.transpose()).lpNorm<Eigen::Infinity>();
        report(6, "accumulator linearity and symmetry", lin < 1e-12 && sym < 1e-12,
               "linearity " + fmt(lin) + ", symmetry " + fmt(sym));
    }

    // (f) byte-identical reruns
    {
        Scenario sc = make_tank(TankScenario::one);
        RunOptions opt;
        opt.horizon = 20.0;
        opt.noise = true;
        opt.seed = 99;
        const auto render = [&]() {
            std::ostringstream os;
            CsvTraceWriter w(os, sc.spec.n, sc.spec.p, sc.spec.q);
            RunOptions o = opt;
            o.on_sample = [&](const Frame& f) { w.write_row(f); };
            run_scenario(sc, o);
            return os.str();
        };
        const std::string a = render(), b = render();
        report(6, "identical config and seed reproduce the trace byte for byte", a == b,
               std::to_string(a.size()) + " bytes compared");
    }
}

void criterion_7(const Example2Outcome& ex2) {
    bool pass = ex2.pe_levels_m.size() >= 3;
    double worst_var = 0.0, min_level = 1e300;
    for (const auto* levels : {&ex2.pe_levels_m, &ex2.pe_levels_M}) {
        for (std::size_t k = 0; k < levels->size(); ++k) {
            min_level = std::min(min_level, (*levels)[k]);
            if (k + 1 < levels->size()) {
                const double var =
                    std::abs((*levels)[k + 1] - (*levels)[k]) / std::max(1e-300, (*levels)[k]);
                worst_var = std::max(worst_var, var);
            }
        }
    }
    pass = pass && min_level > 0.0 && worst_var < 0.10;
    report(7, "persistent excitation level is positive and window-stable", pass,
           "min level " + fmt(min_level) + ", worst window-to-window variation " +
               fmt(worst_var));
}

} // namespace

int main() {
    std::printf("acceptance suite\n================\n");

    const Example1Outcome ex1 = run_example1();
    {
        const bool pass = ex1.branch_frac[0] >= 0.95 && ex1.branch_frac[1] >= 0.95 &&
                          ex1.theta_frac[0] >= 0.95 && ex1.theta_frac[1] >= 0.95 &&
                          ex1.wall < 10.0;
        std::ostringstream os;
        os << "branch certified " << fmt(100 * ex1.branch_frac[0]) << "% / "
           << fmt(100 * ex1.branch_frac[1]) << "%, containment "
           << fmt(100 * ex1.theta_frac[0]) << "% / " << fmt(100 * ex1.theta_frac[1])
           << "%, wall " << fmt(ex1.wall) << " s";
        report(1, "first benchmark: branch certification and parameter containment", pass,
               os.str());
    }

    const Example2Outcome ex2 = run_example2();
    {
        const bool pass = ex2.coop_frac >= 1.0 - 1e-12 && ex2.theta_frac >= 1.0 - 1e-12 &&
                          ex2.x_frac >= 1.0 - 1e-12 && ex2.noisy_theta_frac >= 0.90;
        std::ostringstream os;
        os << "trailing-window certification " << fmt(100 * ex2.coop_frac)
           << "%, parameter containment " << fmt(100 * ex2.theta_frac)
           << "%, state containment " << fmt(100 * ex2.x_frac) << "%, noisy containment "
           << fmt(100 * ex2.noisy_theta_frac) << "%";
        report(2, "second benchmark: parameter and state interval containment", pass,
               os.str());
    }

    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6(ex1);
    criterion_7(ex2);

    std::printf("================\n%d criterion(s) failed\n", g_failures);
    return g_failures;
}
