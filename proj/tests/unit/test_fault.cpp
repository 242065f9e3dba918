#include <doctest.h>

#include "aso/aso.hpp"

using namespace aso;

TEST_SUITE_BEGIN("fault");

TEST_CASE("output-envelope indicator") {
    Vector y(2), lo(2), hi(2);
    y << 0.5, 0.1;
    lo << 0.4, 0.0;
    hi << 0.6, 0.2;
    SUBCASE("inside the envelope") {
        const auto [s, S] = indicator_S(y, lo, hi);
        CHECK_FALSE(S);
        CHECK_FALSE(s[0]);
        CHECK_FALSE(s[1]);
    }
    SUBCASE("one component above its bound") {
        y[1] = 0.25;
        const auto [s, S] = indicator_S(y, lo, hi);
        CHECK(S);
        CHECK_FALSE(s[0]);
        CHECK(s[1]);
    }
    SUBCASE("boundary counts as inside") {
        y[0] = 0.6;
        const auto [s, S] = indicator_S(y, lo, hi);
        CHECK_FALSE(S);
    }
}

TEST_CASE("parameter-interval indicator") {
    SUBCASE("interval straddling zero is nominal") {
        const auto [d, D] = indicator_D(Vector{{-1.0, -0.5}}, Vector{{1.0, 0.5}});
        CHECK_FALSE(D);
    }
    SUBCASE("interval excluding zero fires") {
        const auto [d, D] = indicator_D(Vector{{0.2, -0.5}}, Vector{{0.9, 0.5}});
        CHECK(D);
        CHECK(d[0]);
        CHECK_FALSE(d[1]);
    }
}

TEST_CASE("state-envelope indicator fires on a collapsed envelope") {
    Vector y(1), p(1);
    y << 1.0;
    p << 0.0; // envelope collapsed to a point away from y
    const auto [z, Z] = indicator_Z(y, p, p);
    CHECK(Z);
    CHECK(z[0]);
}

TEST_CASE("detection delay measurement") {
    FaultIndicatorTrace tr;
    for (int k = 0; k <= 100; ++k) {
        IndicatorSample smp;
        const double t = 0.1 * k;
        smp.s = {t >= 5.0, false};
        smp.d = {false};
        smp.z = {t >= 7.25, false};
        smp.S = smp.s[0];
        smp.D = false;
        smp.Z = smp.z[0];
        tr.push(t, smp);
    }
    SUBCASE("latch exactly at the fault time gives zero delay") {
        const auto d = detection_delay(tr, {5.0});
        REQUIRE(d.S[0].has_value());
        CHECK(*d.S[0] == 0.0);
        REQUIRE(d.s[0][0].has_value());
        CHECK(*d.s[0][0] == 0.0);
        REQUIRE(d.z[0][0].has_value());
        CHECK(*d.z[0][0] == doctest::Approx(2.3));
    }
    SUBCASE("never-latching components report none") {
        const auto d = detection_delay(tr, {5.0});
        CHECK_FALSE(d.s[0][1].has_value());
        CHECK_FALSE(d.D[0].has_value());
    }
    SUBCASE("high-sample counting over a window") {
        CHECK(count_high(tr.times, tr.S, 0.0, 5.0) == 0);
        CHECK(count_high(tr.times, tr.S, 4.0, 6.0) == 10);
    }
}

TEST_CASE("debounce view") {
    const std::vector<bool> raw{false, true, false, true, true, true, false, true, true};
    SUBCASE("disabled by default") { CHECK(debounce(raw, 0) == raw); }
    SUBCASE("requires a run of consecutive highs") {
        const std::vector<bool> d3 = debounce(raw, 3);
        const std::vector<bool> expect{false, false, false, false, false, true, false,
                                       false, false};
        CHECK(d3 == expect);
    }
}

TEST_CASE("fault-free soundness of all indicators") {
    // noise-free, fault-free certified run: S, D, Z identically zero after
    // the initialization transient
    TankParams prm;
    prm.horizon = 120.0;
    Scenario sc = make_tank(TankScenario::one, prm);
    sc.truth.theta_schedule = {
        {0.0, Vector::Zero(2), sc.spec.theta_lower, sc.spec.theta_upper}};
    sc.fault_times.clear();
    const RunResult rr = run_scenario(sc, {});
    CHECK(count_high(rr.indicators.times, rr.indicators.S, 20.0, 120.0) == 0);
    CHECK(count_high(rr.indicators.times, rr.indicators.D, 20.0, 120.0) == 0);
    CHECK(count_high(rr.indicators.times, rr.indicators.Z, 20.0, 120.0) == 0);
}

TEST_CASE("widening the parameter box never raises the parameter indicator") {
    // same trace, two a-priori boxes: the wider box can only clear d_j
    const auto run_with_box = [](double halfwidth) {
        TankParams prm;
        prm.horizon = 260.0;
        prm.theta_box = halfwidth;
        Scenario sc = make_tank(TankScenario::one, prm);
        return run_scenario(sc, {});
    };
    const RunResult narrow = run_with_box(2e-5);
    const RunResult wide = run_with_box(4e-5);
    REQUIRE(narrow.indicators.size() == wide.indicators.size());
    std::size_t raises = 0;
    for (std::size_t k = 0; k < narrow.indicators.size(); ++k) {
        if (narrow.indicators.times[k] < 20.0) continue;
        for (std::size_t j = 0; j < narrow.indicators.d[k].size(); ++j)
            if (wide.indicators.d[k][j] && !narrow.indicators.d[k][j]) ++raises;
    }
    CHECK(raises == 0);
}

TEST_SUITE_END();
