#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "sagnac/model.hpp"

using namespace sagnac;

namespace {

TrapConfig random_trap(std::mt19937_64& rng, double scale) {
    std::uniform_real_distribution<double> u(-scale, scale);
    TrapConfig trap;
    trap.zeta = 1.0 + u(rng);
    for (auto& ci : trap.c) ci = u(rng);
    return trap;
}

}  // namespace

TEST_CASE("potential adds half of each polynomial distortion") {
    TrapConfig trap;
    set_trap_coefficient(trap, 1, 1, 0, 0.01);
    CHECK(potential_eval(trap, Vec3(1.0, 1.0, 0.0)) == doctest::Approx(1.005).epsilon(1e-12));

    TrapConfig tight = ideal_trap(2.0);
    CHECK(potential_eval(tight, Vec3(0.0, 0.0, 0.5)) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("force on the axis of a zeta=2 trap") {
    TrapConfig trap = ideal_trap(2.0);
    const Vec3 f = force_eval(trap, Vec3(0.0, 0.0, 0.5));
    CHECK(f.x() == doctest::Approx(0.0));
    CHECK(f.y() == doctest::Approx(0.0));
    CHECK(f.z() == doctest::Approx(-2.0).epsilon(1e-12));
}

TEST_CASE("force equals the negative finite-difference gradient") {
    std::mt19937_64 rng(20260816u);
    std::uniform_real_distribution<double> u(-0.8, 0.8);
    const double h = 1e-6;
    for (int trial = 0; trial < 25; ++trial) {
        const TrapConfig trap = random_trap(rng, 0.05);
        const Vec3 r(u(rng), u(rng), u(rng));
        const Vec3 f = force_eval(trap, r);
        for (int axis = 0; axis < 3; ++axis) {
            Vec3 rp = r, rm = r;
            rp[axis] += h;
            rm[axis] -= h;
            const double grad =
                (potential_eval(trap, rp) - potential_eval(trap, rm)) / (2.0 * h);
            CHECK(f[axis] == doctest::Approx(-grad).epsilon(1e-7));
        }
    }
}

TEST_CASE("coefficient index table is a canonical bijection") {
    CHECK(trap_coefficient_index(2, 0, 0) == 0);
    CHECK(trap_coefficient_index(1, 1, 0) == 1);
    CHECK(trap_coefficient_index(0, 0, 2) == 5);
    CHECK(trap_coefficient_index(3, 0, 0) == 6);
    CHECK(trap_coefficient_index(0, 0, 3) == 15);
    CHECK(trap_coefficient_index(4, 0, 0) == 16);
    CHECK(trap_coefficient_index(0, 0, 4) == 30);
    std::set<int> seen;
    for (const auto& m : kTrapMonomials) {
        const int degree = m.lx + m.ly + m.lz;
        CHECK(degree >= 2);
        CHECK(degree <= 4);
        seen.insert(trap_coefficient_index(m.lx, m.ly, m.lz));
    }
    CHECK(seen.size() == kTrapCoefficientCount);
    CHECK_THROWS_AS(trap_coefficient_index(1, 0, 0), std::invalid_argument);
    CHECK_THROWS_AS(trap_coefficient_index(5, 0, 0), std::invalid_argument);
    CHECK_THROWS_AS(trap_coefficient_index(2, 2, 1), std::invalid_argument);
}

TEST_CASE("pure shear curvature splits modes along the diagonals") {
    const QuadraticDiag d = diagonalize_quadratic(0.0, 0.01);
    CHECK(d.omega1 == doctest::Approx(std::sqrt(1.01)).epsilon(1e-12));
    CHECK(d.omega2 == doctest::Approx(std::sqrt(0.99)).epsilon(1e-12));
    CHECK(d.e1.x() == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
    CHECK(d.e1.y() == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
    CHECK_FALSE(d.degenerate);
}

TEST_CASE("normal-mode axes are orthonormal eigenvectors") {
    std::mt19937_64 rng(7u);
    std::uniform_real_distribution<double> u(-0.4, 0.4);
    for (int trial = 0; trial < 50; ++trial) {
        const double Delta = u(rng), gamma = u(rng);
        if (std::hypot(Delta, gamma) >= 0.9) continue;
        const QuadraticDiag d = diagonalize_quadratic(Delta, gamma);
        Eigen::Matrix2d q;
        q << 1.0 + Delta, gamma, gamma, 1.0 - Delta;
        CHECK((q * d.e1 - d.omega1 * d.omega1 * d.e1).norm() < 1e-12);
        CHECK((q * d.e2 - d.omega2 * d.omega2 * d.e2).norm() < 1e-12);
        CHECK(std::abs(d.e1.dot(d.e2)) < 1e-13);
        CHECK(d.e1.norm() == doctest::Approx(1.0).epsilon(1e-13));
        CHECK(d.omega1 >= d.omega2);
    }
}

TEST_CASE("axis construction is stable near the degenerate point") {
    const QuadraticDiag plus = diagonalize_quadratic(0.01, 1e-18);
    CHECK(std::abs(plus.e1.x()) == doctest::Approx(1.0).epsilon(1e-12));
    const QuadraticDiag minus = diagonalize_quadratic(-0.01, 1e-18);
    CHECK(std::abs(minus.e1.y()) == doctest::Approx(1.0).epsilon(1e-12));

    const QuadraticDiag iso = diagonalize_quadratic(0.0, 0.0);
    CHECK(iso.degenerate);
    CHECK(iso.omega1 == doctest::Approx(1.0));

    CHECK_THROWS_AS(diagonalize_quadratic(1.0, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(diagonalize_quadratic(0.0, 0.0, -1.5), std::invalid_argument);
}

TEST_CASE("trap overload reads curvature distortions") {
    TrapConfig trap;
    set_trap_coefficient(trap, 2, 0, 0, 0.02);
    set_trap_coefficient(trap, 0, 2, 0, -0.02);
    set_trap_coefficient(trap, 1, 1, 0, 0.02);
    const QuadraticDiag d = diagonalize_quadratic(trap);
    CHECK(d.Delta == doctest::Approx(0.02).epsilon(1e-15));
    CHECK(d.gamma == doctest::Approx(0.01).epsilon(1e-15));
    CHECK(d.mean == doctest::Approx(0.0));
}

TEST_CASE("kick axes are unit vectors tilted by the beam angles") {
    BraggGeometry ideal;
    CHECK((bragg_axis_x(ideal) - Vec3(1, 0, 0)).norm() < 1e-15);
    CHECK((bragg_axis_y(ideal) - Vec3(0, 1, 0)).norm() < 1e-15);

    BraggGeometry tilted;
    tilted.psi_x_p = 0.01;
    tilted.psi_x_pp = -0.02;
    tilted.psi_y_p = 0.03;
    tilted.psi_y_pp = 0.04;
    const Vec3 kx = bragg_axis_x(tilted);
    const Vec3 ky = bragg_axis_y(tilted);
    CHECK(kx.norm() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(ky.norm() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(kx.y() / kx.x() == doctest::Approx(0.01).epsilon(1e-12));
    CHECK(kx.z() / kx.x() == doctest::Approx(-0.02).epsilon(1e-12));
    CHECK(ky.x() / ky.y() == doctest::Approx(-0.03).epsilon(1e-12));
    CHECK(ky.z() / ky.y() == doctest::Approx(0.04).epsilon(1e-12));

    BraggGeometry bad;
    bad.psi_y_pp = 0.1;
    CHECK_THROWS_AS(bragg_axis_y(bad), std::invalid_argument);
}

TEST_CASE("parameter catalogue has 43 named entries") {
    const auto& names = parameter_names();
    REQUIRE(names.size() == kParameterCount);
    CHECK(names[0] == "c200");
    CHECK(names[1] == "c110");
    CHECK(names[16] == "c400");
    CHECK(names[31] == "x0");
    CHECK(names[36] == "vz0");
    CHECK(names[37] == "psi_x_p");
    CHECK(names[41] == "delta1");
    CHECK(names[42] == "delta2");
    for (int i = 0; i < kParameterCount; ++i)
        CHECK(parameter_index(names[static_cast<std::size_t>(i)]) == i);
    CHECK_THROWS_AS(parameter_index("c500"), UnknownParameterName);
    CHECK_THROWS_AS(parameter_index(""), UnknownParameterName);
}

TEST_CASE("pack and unpack are inverse maps") {
    std::mt19937_64 rng(99u);
    std::uniform_real_distribution<double> u(-0.05, 0.05);
    ParameterVector eta;
    for (int i = 0; i < kParameterCount; ++i) eta[i] = u(rng);
    const ScenarioConfig s = unpack_parameters(eta, 1.7);
    CHECK(s.trap.zeta == 1.7);
    CHECK(trap_coefficient(s.trap, 2, 0, 0) == eta[0]);
    CHECK(s.init.r0.x() == eta[31]);
    CHECK(s.init.v0.z() == eta[36]);
    CHECK(s.bragg.psi_x_pp == eta[38]);
    CHECK(s.delta2 == eta[42]);
    const ParameterVector back = pack_parameters(s);
    CHECK((back - eta).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("coupling groups are disjoint known parameter sets") {
    const auto& h = horizontal_group();
    const auto& v = vertical_group();
    CHECK(h.size() == 10);
    CHECK(v.size() == 13);
    std::set<std::string> all(h.begin(), h.end());
    for (const auto& name : v) {
        CHECK(all.count(name) == 0);
        all.insert(name);
    }
    for (const auto& name : all) CHECK_NOTHROW(parameter_index(name));
}

TEST_CASE("rotational symmetry predicate matches the invariant pattern") {
    CHECK(is_cylindrically_symmetric(ideal_trap()));
    CHECK(is_cylindrically_symmetric(ideal_trap(2.5)));

    TrapConfig round;
    set_trap_coefficient(round, 2, 0, 0, 0.01);
    set_trap_coefficient(round, 0, 2, 0, 0.01);
    set_trap_coefficient(round, 2, 0, 1, 0.005);
    set_trap_coefficient(round, 0, 2, 1, 0.005);
    set_trap_coefficient(round, 4, 0, 0, 0.003);
    set_trap_coefficient(round, 0, 4, 0, 0.003);
    set_trap_coefficient(round, 2, 2, 0, 0.006);
    set_trap_coefficient(round, 0, 0, 3, 0.02);
    CHECK(is_cylindrically_symmetric(round));

    TrapConfig sheared = round;
    set_trap_coefficient(sheared, 1, 1, 0, 1e-3);
    CHECK_FALSE(is_cylindrically_symmetric(sheared));

    TrapConfig lopsided = round;
    set_trap_coefficient(lopsided, 4, 0, 0, 0.004);
    CHECK_FALSE(is_cylindrically_symmetric(lopsided));

    TrapConfig cubic;
    set_trap_coefficient(cubic, 3, 0, 0, 1e-3);
    CHECK_FALSE(is_cylindrically_symmetric(cubic));
}

TEST_CASE("rubidium-87 scales at a 9.26 Hz trap") {
    const PhysicalScales s = rubidium87(2.0 * M_PI * 9.26);
    CHECK(s.mass == doctest::Approx(1.4431608951791763e-25).epsilon(1e-9));
    CHECK(s.wavenumber == doctest::Approx(8052960.214678931).epsilon(1e-9));
    CHECK(s.bragg_velocity() == doctest::Approx(0.011769200390879895).epsilon(1e-9));
    CHECK(s.orbit_radius() == doctest::Approx(2.0228147067468706e-4).epsilon(1e-9));
    CHECK(s.phase_scale() == doctest::Approx(1628.9646355099978).epsilon(1e-9));
}
