#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "sagnac/dynamics.hpp"

using namespace sagnac;

namespace {

PacketState random_state(std::mt19937_64& rng, double scale) {
    std::uniform_real_distribution<double> u(-scale, scale);
    PacketState p;
    p.r = Vec3(u(rng), u(rng), u(rng));
    p.v = Vec3(u(rng), u(rng), u(rng));
    return p;
}

}  // namespace

TEST_CASE("numerical propagation matches the closed harmonic solution") {
    std::mt19937_64 rng(314159u);
    std::uniform_real_distribution<double> uc(-0.2, 0.2);
    std::uniform_real_distribution<double> uz(0.4, 2.5);
    std::uniform_real_distribution<double> ut(0.5, 12.0);
    for (int trial = 0; trial < 100; ++trial) {
        TrapConfig trap = ideal_trap(uz(rng));
        const double c200 = uc(rng), c020 = uc(rng), c002 = uc(rng);
        set_trap_coefficient(trap, 2, 0, 0, c200);
        set_trap_coefficient(trap, 0, 2, 0, c020);
        set_trap_coefficient(trap, 0, 0, 2, c002);
        const Vec3 omega_axes(std::sqrt(1.0 + c200), std::sqrt(1.0 + c020),
                              std::sqrt(trap.zeta * trap.zeta + c002));
        const PacketState start = random_state(rng, 1.2);
        const double duration = ut(rng);

        const PacketState numeric = propagate(trap, start, duration);
        const PacketState exact = analytic_propagate(omega_axes, start, duration);

        CHECK((numeric.r - exact.r).norm() < 1e-8);
        CHECK((numeric.v - exact.v).norm() < 1e-8);
        CHECK(numeric.action == doctest::Approx(exact.action).epsilon(1e-8).scale(1.0));
    }
}

TEST_CASE("single-axis action matches the oscillator quadrature formula") {
    std::mt19937_64 rng(2718u);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    std::uniform_real_distribution<double> ut(0.3, 9.0);
    for (int trial = 0; trial < 20; ++trial) {
        PacketState start;
        const double x0 = u(rng), v0 = u(rng), T = ut(rng);
        start.r = Vec3(x0, 0, 0);
        start.v = Vec3(v0, 0, 0);
        const PacketState end = propagate(ideal_trap(), start, T);
        const double expected = 0.25 * (v0 * v0 - x0 * x0) * std::sin(2.0 * T) +
                                0.5 * x0 * v0 * (std::cos(2.0 * T) - 1.0);
        CHECK(end.action == doctest::Approx(expected).epsilon(1e-9).scale(1.0));
    }
}

TEST_CASE("energy is conserved in an anharmonic trap") {
    std::mt19937_64 rng(55u);
    std::uniform_real_distribution<double> uc(-0.03, 0.03);
    for (int trial = 0; trial < 10; ++trial) {
        TrapConfig trap = ideal_trap(1.3);
        for (auto& ci : trap.c) ci = uc(rng);
        const PacketState start = random_state(rng, 0.9);
        const double e0 = 0.5 * start.v.squaredNorm() + potential_eval(trap, start.r);
        const PacketState end = propagate(trap, start, 10.0);
        const double e1 = 0.5 * end.v.squaredNorm() + potential_eval(trap, end.r);
        CHECK(e1 == doctest::Approx(e0).epsilon(1e-9));
    }
}

TEST_CASE("velocity reversal retraces the path and doubles the action") {
    std::mt19937_64 rng(808u);
    std::uniform_real_distribution<double> uc(-0.05, 0.05);
    TrapConfig trap = ideal_trap(0.8);
    for (auto& ci : trap.c) ci = uc(rng);
    const PacketState start = random_state(rng, 1.0);
    const double T = 4.321;

    PacketState fwd = propagate(trap, start, T);
    const double action_fwd = fwd.action;
    fwd.v = -fwd.v;
    const PacketState back = propagate(trap, fwd, T);

    CHECK((back.r - start.r).norm() < 1e-8);
    CHECK((back.v + start.v).norm() < 1e-8);
    CHECK(back.action == doctest::Approx(2.0 * action_fwd).epsilon(1e-8).scale(1.0));
}

TEST_CASE("propagation composes over subintervals") {
    std::mt19937_64 rng(4242u);
    std::uniform_real_distribution<double> uc(-0.04, 0.04);
    TrapConfig trap = ideal_trap(1.6);
    for (auto& ci : trap.c) ci = uc(rng);
    const PacketState start = random_state(rng, 0.8);

    const PacketState direct = propagate(trap, start, 7.5);
    const PacketState mid = propagate(trap, start, 3.1);
    const PacketState chained = propagate(trap, mid, 4.4);

    CHECK((direct.r - chained.r).norm() < 1e-9);
    CHECK((direct.v - chained.v).norm() < 1e-9);
    CHECK(direct.action == doctest::Approx(chained.action).epsilon(1e-9).scale(1.0));
}

TEST_CASE("momentum kicks shift velocity by a unit vector") {
    PacketState p;
    p.r = Vec3(0.3, -0.2, 0.1);
    p.v = Vec3(0.0, 1.0, 0.0);
    const Vec3 dir = Vec3(1.0, 0.01, -0.02).normalized();

    const PacketState plus = apply_bragg_kick(p, dir, +1);
    CHECK((plus.v - p.v - dir).norm() < 1e-15);
    CHECK((plus.r - p.r).norm() == 0.0);
    CHECK(plus.action == p.action);

    const PacketState minus = apply_bragg_kick(p, dir, -1);
    CHECK((minus.v - p.v + dir).norm() < 1e-15);

    CHECK_THROWS_AS(apply_bragg_kick(p, Vec3(1.0, 0.01, -0.02), +1),
                    NonUnitDirection);
    CHECK_THROWS_AS(apply_bragg_kick(p, dir, 2), std::invalid_argument);
    CHECK_THROWS_AS(apply_bragg_kick(p, dir, 0), std::invalid_argument);
}

TEST_CASE("runaway potentials raise an integration failure") {
    TrapConfig trap;
    set_trap_coefficient(trap, 3, 0, 0, -50.0);
    PacketState start;
    start.r = Vec3(2.0, 0.0, 0.0);
    start.v = Vec3(2.0, 0.0, 0.0);
    CHECK_THROWS_AS(propagate(trap, start, 5.0), IntegrationFailure);
}

TEST_CASE("negative durations are rejected, zero is the identity") {
    const PacketState p = {Vec3(0.1, 0.2, 0.3), Vec3(-1.0, 0.5, 0.0), 1.5};
    CHECK_THROWS_AS(propagate(ideal_trap(), p, -1.0), std::invalid_argument);
    const PacketState same = propagate(ideal_trap(), p, 0.0);
    CHECK((same.r - p.r).norm() == 0.0);
    CHECK((same.v - p.v).norm() == 0.0);
    CHECK(same.action == p.action);
}

TEST_CASE("trace records start, monotone accepted steps, and the endpoint") {
    TrapConfig trap = ideal_trap();
    set_trap_coefficient(trap, 3, 0, 0, 0.02);
    PacketState start;
    start.r = Vec3(1.0, 0.0, 0.0);
    start.v = Vec3(0.0, 1.0, 0.0);

    std::vector<TrajectorySample> trace;
    IntegratorSettings settings;
    settings.max_step = 0.05;
    const PacketState end = propagate(trap, start, 2.0, settings, &trace);

    REQUIRE(trace.size() >= 41);
    CHECK(trace.front().t == 0.0);
    CHECK((trace.front().r - start.r).norm() == 0.0);
    CHECK(trace.back().t == 2.0);
    CHECK((trace.back().r - end.r).norm() == 0.0);
    CHECK(trace.back().action == end.action);
    for (std::size_t i = 1; i < trace.size(); ++i) {
        CHECK(trace[i].t > trace[i - 1].t);
        CHECK(trace[i].t - trace[i - 1].t <= 0.05 + 1e-12);
    }
}

TEST_CASE("fused potential and force evaluation matches the separate calls") {
    std::mt19937_64 rng(31337u);
    std::uniform_real_distribution<double> u(-0.6, 0.6);
    TrapConfig trap = ideal_trap(1.4);
    for (auto& ci : trap.c) ci = u(rng) * 0.05;
    for (int trial = 0; trial < 10; ++trial) {
        const Vec3 r(u(rng), u(rng), u(rng));
        Vec3 force;
        const double pot = potential_and_force(trap, r, force);
        CHECK(pot == potential_eval(trap, r));
        CHECK((force - force_eval(trap, r)).norm() == 0.0);
    }
}
