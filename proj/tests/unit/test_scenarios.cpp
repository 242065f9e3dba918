#include <doctest.h>

#include <cmath>

#include "aso/aso.hpp"

using namespace aso;

TEST_SUITE_BEGIN("scenarios");

TEST_CASE("all builtin scenarios certify at construction") {
    for (const auto& name : builtin_scenario_names()) {
        const Scenario sc = builtin_scenario(name);
        const auto cert = precheck_scenario(sc);
        INFO("scenario ", name);
        CHECK(cert.pass());
    }
    CHECK_THROWS_AS(builtin_scenario("nope"), ConfigError);
}

TEST_CASE("first benchmark carries the published values") {
    const Scenario sc = make_example1();
    CHECK(sc.gains.Gamma_lower(0, 0) == 5.0);
    CHECK(sc.gains.Gamma_lower(1, 1) == 5.0);
    CHECK((sc.truth.x0 - Vector{{1.0, 1.0, 1.0}}).norm() == 0.0);
    REQUIRE(sc.truth.theta_schedule.size() == 2);
    CHECK((sc.truth.theta_schedule[0].box_lower - Vector{{1.0, -4.5}}).norm() == 0.0);
    CHECK((sc.truth.theta_schedule[0].box_upper - Vector{{3.5, 7.0}}).norm() == 0.0);
    CHECK(sc.truth.theta_schedule[1].t_start == 300.0);

    // closed-loop envelope matrices, digit for digit
    const Matrix Mlo = sc.spec.A_lower(Vector::Zero(2)) - sc.gains.L_lower * sc.spec.C;
    const Matrix Mhi = sc.spec.A_upper(Vector::Zero(2)) - sc.gains.L_upper * sc.spec.C;
    const Matrix Mlo_pub{{-3.5, 1.0, 0.0}, {1.2, -5.3, 1.3}, {0.0, 0.0, -3.6}};
    const Matrix Mhi_pub{{-2.5, 1.0, 0.0}, {1.2, -4.7, 1.3}, {0.0, 0.0, -2.4}};
    CHECK((Mlo - Mlo_pub).lpNorm<Eigen::Infinity>() < 1e-14);
    CHECK((Mhi - Mhi_pub).lpNorm<Eigen::Infinity>() < 1e-14);
}

TEST_CASE("second benchmark closed-loop matrices match the published ones") {
    const Scenario sc = make_example2();
    const Matrix Mlo = sc.spec.A_lower(Vector::Zero(2)) - sc.gains.L_lower * sc.spec.C;
    const Matrix Mhi = sc.spec.A_upper(Vector::Zero(2)) - sc.gains.L_upper * sc.spec.C;
    const Matrix Mlo_pub{{-1.6, 0.5, 0.2}, {0.0, -2.3, 0.0}, {1.4, 2.0, -2.2}};
    const Matrix Mhi_pub{{-1.9, 0.0, 0.6}, {0.0, -1.7, 0.0}, {0.0, 0.4, -1.8}};
    CHECK((Mlo - Mlo_pub).lpNorm<Eigen::Infinity>() < 1e-12);
    CHECK((Mhi - Mhi_pub).lpNorm<Eigen::Infinity>() < 1e-12);

    // realized dynamics stay inside the envelope
    const Matrix Alo = sc.spec.A_lower(Vector::Zero(2));
    const Matrix Ahi = sc.spec.A_upper(Vector::Zero(2));
    for (double t = 0.0; t < 13.0; t += 0.01) {
        const Matrix At = sc.truth.A_true(t, Vector::Zero(3));
        REQUIRE(elementwise_leq(Alo, At, 1e-12));
        REQUIRE(elementwise_leq(At, Ahi, 1e-12));
    }
}

TEST_CASE("crusher model structure") {
    const CrusherParams prm;
    const Scenario sc = make_crusher(prm);
    const Matrix Am = sc.spec.A_lower(Vector::Zero(2));
    const Matrix AM = sc.spec.A_upper(Vector::Zero(2));

    SUBCASE("integrator rows are exact") {
        const Vector row0{{0.0, 1.0, 0.0, 0.0}};
        const Vector row2{{0.0, 0.0, 0.0, 1.0}};
        CHECK((Am.row(0).transpose() - row0).norm() == 0.0);
        CHECK((AM.row(0).transpose() - row0).norm() == 0.0);
        CHECK((Am.row(2).transpose() - row2).norm() == 0.0);
        CHECK((AM.row(2).transpose() - row2).norm() == 0.0);
    }
    SUBCASE("control gains act only on the velocity rows") {
        for (double t : {0.3, 1.7, 2.6, 4.9, 5.5}) {
            const Matrix G = sc.spec.G(t, Vector::Zero(2));
            CHECK(G.row(0).norm() == 0.0);
            CHECK(G.row(2).norm() == 0.0);
            for (Index j = 0; j < 4; ++j) {
                CHECK((G(1, j) == 0.0 || G(1, j) == 1.0));
                CHECK((G(3, j) == 0.0 || G(3, j) == 1.0));
            }
        }
        // pulse trains: amplitude 1, half-period duty
        CHECK(square_pulse(0.0, 5.0) == 1.0);
        CHECK(square_pulse(2.49, 5.0) == 1.0);
        CHECK(square_pulse(2.5, 5.0) == 0.0);
        CHECK(square_pulse(5.0, 5.0) == 1.0);
    }
    SUBCASE("inverse-mass drift stays between the corner values") {
        // value at the midpoint of the drift: 0.5 (1/m_M - 1/m_m) + 1/m_m
        // plus the sinusoidal part
        const double mi_lo = 1.0 / prm.m_M, mi_hi = 1.0 / prm.m_m;
        const double mid = 0.5 * (mi_lo - mi_hi) + mi_hi;
        CHECK(mid == doctest::Approx(3.51515).epsilon(1e-4));
        // envelope assertion already ran at construction; spot-check the
        // realized dynamics against the printed bounds
        for (double t = 0.0; t <= prm.t_k; t += 0.37) {
            const Matrix At = sc.truth.A_true(t, Vector());
            REQUIRE(elementwise_leq(Am, At, 1e-12));
            REQUIRE(elementwise_leq(At, AM, 1e-12));
        }
    }
    SUBCASE("estimates stay bounded and bracket the true gains") {
        RunOptions opt;
        uint64_t total = 0, inside = 0;
        opt.on_sample = [&](const Frame& f) {
            if (f.t < 30.0) return;
            ++total;
            if (((f.theta_true - f.obs.theta_hat_M).array() >= -1e-9).all() &&
                ((f.obs.theta_hat_m - f.theta_true).array() >= -1e-9).all())
                ++inside;
        };
        const RunResult rr = run_scenario(sc, opt);
        CHECK(rr.stats.max_observer_norm < sc.expected.norm_ceiling);
        CHECK(static_cast<double>(inside) / total > 0.9);
    }
}

TEST_CASE("three-tank building blocks") {
    const TankParams prm;
    SUBCASE("signed square root") {
        CHECK(tank_rho(4.0) == 2.0);
        CHECK(tank_rho(-4.0) == -2.0);
        CHECK(tank_rho(0.0) == 0.0);
    }
    SUBCASE("no inter-tank flow at equal levels") {
        Vector x(3);
        x << 0.3, 0.1, 0.3;
        const Vector dx =
            three_tank_rhs(x, Vector::Zero(2), Vector::Zero(3),
                           Vector{{prm.a13, prm.a32, prm.a20}}, prm.Sc);
        CHECK(dx[0] == 0.0);
    }
    SUBCASE("published constants") {
        const Scenario sc = make_tank(TankScenario::one);
        CHECK(prm.Sc == 0.0154);
        CHECK(prm.k == doctest::Approx(1.329e-3));
        CHECK(prm.ell == 3.0);
        CHECK((sc.spec.x_lower - Vector{{0.44, 0.04, 0.24}}).norm() == 0.0);
        CHECK((sc.spec.x_upper - Vector{{0.56, 0.16, 0.36}}).norm() == 0.0);
        CHECK(prm.T_ref == 200.0);
        CHECK((sc.truth.x0 - Vector{{0.5, 0.1, 0.3}}).norm() < 1e-15);
    }
    SUBCASE("pipe-flow arguments stay positive over the output box") {
        CHECK(0.5 - prm.x_upper[2] == doctest::Approx(0.14));
        const TankLpv lpv = three_tank_lpv(TankScenario::one, prm);
        Vector y(2);
        y << 0.5, 0.1;
        const Matrix Alo = lpv.A_lower(y);
        const Matrix Ahi = lpv.A_upper(y);
        CHECK(Alo.allFinite());
        CHECK(Ahi.allFinite());
        CHECK(is_cooperative(Alo));
        CHECK(is_cooperative(Ahi));
    }
    SUBCASE("measured-coefficient envelope bounds independent in-band draws") {
        const TankLpv lpv = three_tank_lpv(TankScenario::two, prm);
        const Vector a{{prm.a13, prm.a32, prm.a20}};
        for (int trial = 0; trial < 200; ++trial) {
            Vector y(3), atil(3);
            for (Index i = 0; i < 3; ++i) {
                const double u01 =
                    0.5 * (1.0 + detail::unit_noise(detail::splitmix64(trial * 11 + i)));
                y[i] = prm.x_lower[i] + u01 * (prm.x_upper[i] - prm.x_lower[i]);
                const double r01 =
                    0.5 * (1.0 + detail::unit_noise(detail::splitmix64(trial * 23 + 7 * i)));
                atil[i] = (prm.r_m + r01 * (prm.r_M - prm.r_m)) * a[i];
            }
            const Matrix At = three_tank_A(y, atil, prm.Sc);
            REQUIRE(elementwise_leq(lpv.A_lower(y), At, 1e-12));
            REQUIRE(elementwise_leq(At, lpv.A_upper(y), 1e-12));
            REQUIRE(is_cooperative(lpv.A_lower(y)));
            REQUIRE(is_cooperative(lpv.A_upper(y)));
        }
    }
    SUBCASE("pump laws") {
        CHECK(tank_nu(-1.0) == 0.0);
        CHECK(tank_nu(2.0) == 2.0);
        const Vector ref0 = tank_reference(0.0, prm.T_ref);
        CHECK(ref0[0] == 0.5);
        CHECK(ref0[1] == 0.1);
        const Vector ref_hi = tank_reference(150.0, prm.T_ref);
        CHECK(ref_hi[0] == doctest::Approx(0.535));
        CHECK(ref_hi[1] == doctest::Approx(0.15));
        // exact tracking: first pump off, second compensates its outflow
        Vector y = ref0;
        const Vector u = tank_controller(0.0, y, prm.k, prm.a20, prm.T_ref);
        CHECK(u[0] == 0.0);
        CHECK(u[1] == doctest::Approx(prm.a20 * tank_rho(y[1])));
    }
}

TEST_CASE("three-tank closed loop") {
    SUBCASE("fault-free trajectory stays inside the operating box") {
        TankParams prm;
        Scenario sc = make_tank(TankScenario::one, prm);
        sc.truth.theta_schedule = {
            {0.0, Vector::Zero(2), sc.spec.theta_lower, sc.spec.theta_upper}};
        sc.fault_times.clear();
        double worst = -1e300;
        RunOptions opt;
        opt.on_sample = [&](const Frame& f) {
            worst = std::max({worst, (sc.spec.x_lower - f.x).maxCoeff(),
                              (f.x - sc.spec.x_upper).maxCoeff()});
        };
        run_scenario(sc, opt);
        CHECK(worst <= 1e-9);
    }
    SUBCASE("realized dynamics stay inside the output-dependent envelope") {
        TankParams prm;
        prm.horizon = 150.0;
        Scenario sc = make_tank(TankScenario::one, prm);
        sc.truth.theta_schedule = {
            {0.0, Vector::Zero(2), sc.spec.theta_lower, sc.spec.theta_upper}};
        const Vector a{{prm.a13, prm.a32, prm.a20}};
        bool ok = true;
        RunOptions opt;
        opt.on_sample = [&](const Frame& f) {
            const Matrix At = three_tank_A(f.x, a, prm.Sc);
            ok = ok && elementwise_leq(sc.spec.A_lower(f.y), At, 1e-9) &&
                 elementwise_leq(At, sc.spec.A_upper(f.y), 1e-9);
        };
        run_scenario(sc, opt);
        CHECK(ok);
    }
}

TEST_SUITE_END();
