#include <doctest.h>

#include "aso/model.hpp"
#include "aso/monotone.hpp"
#include "aso/scenarios.hpp"

using namespace aso;

TEST_SUITE_BEGIN("model");

TEST_CASE("sample_output") {
    SUBCASE("identity output map") {
        LpvSystemSpec spec;
        spec.n = 2; spec.m = 1; spec.p = 2; spec.q = 1;
        spec.C = Matrix::Identity(2, 2);
        Vector x(2);
        x << 1, 2;
        const auto [y, y_v] = sample_output(spec, x, Vector::Zero(2));
        CHECK((y - x).norm() == 0.0);
        CHECK((y_v - x).norm() == 0.0);
    }
    SUBCASE("partial measurement") {
        LpvSystemSpec spec;
        spec.n = 3; spec.p = 2;
        spec.C = Matrix{{1, 0, 0}, {0, 1, 0}};
        Vector x(3);
        x << 1, 1, 1;
        const auto [y, y_v] = sample_output(spec, x, Vector::Zero(2));
        CHECK(y_v[0] == 1.0);
        CHECK(y_v[1] == 1.0);
    }
    SUBCASE("mixing output map with noise") {
        LpvSystemSpec spec;
        spec.n = 3; spec.p = 2;
        spec.C = Matrix{{1, 0, -1}, {1, 1, 0}};
        Vector x(3);
        x << 1, 2, 3;
        Vector v(2);
        v << 0.1, -0.1;
        const auto [y, y_v] = sample_output(spec, x, v);
        CHECK(y_v[0] == doctest::Approx(-1.9));
        CHECK(y_v[1] == doctest::Approx(2.9));
    }
    SUBCASE("dimension mismatch") {
        LpvSystemSpec spec;
        spec.n = 2; spec.p = 1;
        spec.C = Matrix::Ones(1, 2);
        CHECK_THROWS_AS(sample_output(spec, Vector::Zero(3), Vector::Zero(1)), DimensionError);
    }
}

TEST_CASE("plant right-hand side") {
    SUBCASE("everything zero gives zero derivative") {
        const Scenario sc = make_example1();
        TruthModel truth = sc.truth;
        truth.theta_schedule = {{0.0, Vector::Zero(2), Vector::Zero(2), Vector::Zero(2)}};
        const Vector dx =
            plant_rhs(sc.spec, truth, 0.0, Vector::Zero(3), Vector::Zero(1));
        // A x vanishes with x = 0; only G theta could contribute and theta = 0
        CHECK(dx.norm() == 0.0);
    }
    SUBCASE("first benchmark at t = 0") {
        // oracle: evaluate the published matrices at t = 0 directly
        const Scenario sc = make_example1();
        Vector x(3);
        x << 1, 1, 1;
        const Matrix A0{{-1.0, 1.0, 0.0}, {1.2, -1.7, 1.3}, {0.0, 1.0, -2.4}};
        const Matrix G0{{0.0, 1.0}, {1.0, 0.0}, {0.0, 1.0}};
        Vector theta1(2);
        theta1 << 2, 1;
        const Vector expect = A0 * x + G0 * theta1;
        CHECK(expect[0] == doctest::Approx(1.0));
        CHECK(expect[1] == doctest::Approx(2.8));
        CHECK(expect[2] == doctest::Approx(-0.4));
        const Vector dx = plant_rhs(sc.spec, sc.truth, 0.0, x, Vector::Zero(1));
        CHECK((dx - expect).norm() < 1e-12);
    }
    SUBCASE("factored tank dynamics reproduce the raw nonlinear form") {
        const Scenario sc = make_tank(TankScenario::two);
        const TankParams prm;
        const Vector a{{prm.a13, prm.a32, prm.a20}};
        for (int k = 0; k < 1000; ++k) {
            Vector x(3), u(2);
            for (Index i = 0; i < 3; ++i) {
                const double r = 0.5 * (1.0 + detail::unit_noise(
                                                  detail::splitmix64(1000 * k + 7 * i + 3)));
                x[i] = prm.x_lower[i] + r * (prm.x_upper[i] - prm.x_lower[i]);
            }
            u << 1e-4 * std::abs(detail::unit_noise(17 * k + 1)),
                1e-4 * std::abs(detail::unit_noise(17 * k + 2));
            const Vector theta =
                1e-4 * Vector{{detail::unit_noise(23 * k + 1), detail::unit_noise(23 * k + 2),
                               detail::unit_noise(23 * k + 3)}};
            const Vector raw = three_tank_rhs(x, u, theta, a, prm.Sc);
            const Vector factored =
                three_tank_A(x, a, prm.Sc) * x + sc.spec.B_lower * u + theta / prm.Sc;
            CHECK((raw - factored).lpNorm<Eigen::Infinity>() < 1e-12);
        }
    }
}

TEST_CASE("truth stays inside the envelope along a simulated trace") {
    const Scenario sc = make_example1();
    const Matrix Am = sc.spec.A_lower(Vector::Zero(2));
    const Matrix AM = sc.spec.A_upper(Vector::Zero(2));
    for (double t = 0.0; t <= 20.0; t += 0.05) {
        const Matrix At = sc.truth.A_true(t, Vector::Zero(3));
        CHECK(elementwise_leq(Am, At, 1e-12));
        CHECK(elementwise_leq(At, AM, 1e-12));
    }
}

TEST_CASE("piecewise parameter schedule lookup") {
    const Scenario sc = make_example1();
    CHECK(sc.truth.phase_index(0.0) == 0);
    CHECK(sc.truth.phase_index(299.999) == 0);
    CHECK(sc.truth.phase_index(300.0) == 1);
    CHECK(sc.truth.phase_index(600.0) == 1);
    CHECK(sc.truth.theta_at(10.0)[0] == doctest::Approx(2.0));
    CHECK(sc.truth.theta_at(400.0)[0] == doctest::Approx(-1.0));
}

TEST_CASE("spec validation rejects inconsistent boxes") {
    Scenario sc = make_example1();
    LpvSystemSpec bad = sc.spec;
    bad.theta_lower = Vector{{5.0, 0.0}};
    bad.theta_upper = Vector{{1.0, 1.0}};
    CHECK_THROWS_AS(bad.validate(), DimensionError);
}

TEST_SUITE_END();
