#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "sagnac/protocol.hpp"

using namespace sagnac;

namespace {

ScenarioConfig scenario_with(double zeta = 1.0) {
    ScenarioConfig s;
    s.trap = ideal_trap(zeta);
    return s;
}

IntegratorSettings tight_settings() {
    IntegratorSettings s;
    s.rel_tol = 1e-12;
    s.abs_tol = 1e-12;
    return s;
}

// Parameters that flip sign under the y -> -y mirror: trap coefficients with
// odd y exponent, the y components of the launch state, and the beam angles
// whose axes pick up a reflected component.
const char* const kMirrorOdd[] = {
    "c110", "c011", "c210", "c111", "c030", "c012", "c310", "c130", "c211",
    "c112", "c031", "c013", "y0",   "vy0",  "psi_x_p", "psi_y_p", "psi_y_pp"};

}  // namespace

TEST_CASE("ideal trap: maximum packet separation at a quarter period") {
    const ScenarioConfig s = scenario_with();
    const double t1o = find_t1o(s.trap, s.init, s.bragg);
    CHECK(t1o == doctest::Approx(M_PI / 2.0).epsilon(1e-9));
}

TEST_CASE("softer launch axis delays the separation peak") {
    ScenarioConfig s = scenario_with();
    set_trap_coefficient(s.trap, 2, 0, 0, 0.01);
    set_trap_coefficient(s.trap, 0, 2, 0, -0.01);
    const double t1o = find_t1o(s.trap, s.init, s.bragg);
    CHECK(t1o == doctest::Approx(M_PI / 2.0 / std::sqrt(0.99)).epsilon(1e-6));
}

TEST_CASE("timing searches are deterministic") {
    ScenarioConfig s = scenario_with();
    set_trap_coefficient(s.trap, 3, 0, 0, 0.01);
    const double a = find_t1o(s.trap, s.init, s.bragg);
    const double b = find_t1o(s.trap, s.init, s.bragg);
    CHECK(a == b);
    // A quartic along the launch axis stiffens the oscillation with
    // amplitude and pulls the peak off pi/2 at first order.
    ScenarioConfig bent = scenario_with();
    set_trap_coefficient(bent.trap, 0, 4, 0, 0.01);
    const double c = find_t1o(bent.trap, bent.init, bent.bragg);
    const double d = find_t1o(bent.trap, bent.init, bent.bragg);
    CHECK(c == d);
    CHECK(std::abs(c - M_PI / 2.0) > 1e-3);
    CHECK(c < M_PI / 2.0);
}

TEST_CASE("ideal trap: arms recombine after full orbits") {
    const ScenarioConfig s = scenario_with();
    for (int n : {1, 2}) {
        const double t2o = find_t2o(s.trap, s.init, s.bragg, M_PI / 2.0, n);
        CHECK(t2o == doctest::Approx(2.0 * M_PI * n).epsilon(1e-9));
    }
    CHECK_THROWS_AS(find_t2o(s.trap, s.init, s.bragg, M_PI / 2.0, 0),
                    std::invalid_argument);
}

TEST_CASE("sheared trap: best recombination leaves a quadratic residual") {
    ScenarioConfig s = scenario_with();
    set_trap_coefficient(s.trap, 1, 1, 0, 0.01);
    const double t1o = find_t1o(s.trap, s.init, s.bragg);
    const double res = closure_residual(s.trap, s.init, s.bragg, t1o, 1);
    // Mode splitting gamma = c110/2 leaves 8 (pi n gamma)^2 at best focus.
    const double expected = 8.0 * std::pow(M_PI * 0.005, 2);
    CHECK(res == doctest::Approx(expected).epsilon(0.1));
}

TEST_CASE("separation peaking outside the window is reported") {
    ScenarioConfig s = scenario_with();
    set_trap_coefficient(s.trap, 0, 2, 0, -0.5);
    CHECK_THROWS_AS(find_t1o(s.trap, s.init, s.bragg), NoBracket);
}

TEST_CASE("ideal run closes and accumulates no differential phase") {
    const ScenarioConfig s = scenario_with();
    for (int n : {1, 2, 3}) {
        const RunReport report = run_with_operational_timing(s, n, tight_settings());
        CHECK(std::abs(report.phases.differential) < 1e-7);
        CHECK(report.t1o == doctest::Approx(M_PI / 2.0).epsilon(1e-9));
        CHECK(report.t2o == doctest::Approx(2.0 * M_PI * n).epsilon(1e-9));
        if (n == 1) CHECK(report.phases.delta_r2 < 1e-20);
    }
}

TEST_CASE("explicit-timing phase matches the harmonic mode formula") {
    std::mt19937_64 rng(1234u);
    std::uniform_real_distribution<double> uc(-0.05, 0.05);
    std::uniform_real_distribution<double> upsi(-0.02, 0.02);
    std::uniform_real_distribution<double> ur(-0.1, 0.1);
    std::uniform_real_distribution<double> uz(0.5, 2.0);
    std::uniform_real_distribution<double> ut1(1.2, 1.9);
    std::uniform_real_distribution<double> ut2(5.0, 8.0);
    for (int trial = 0; trial < 30; ++trial) {
        ScenarioConfig s = scenario_with(uz(rng));
        set_trap_coefficient(s.trap, 2, 0, 0, uc(rng));
        set_trap_coefficient(s.trap, 0, 2, 0, uc(rng));
        set_trap_coefficient(s.trap, 1, 1, 0, uc(rng));
        set_trap_coefficient(s.trap, 1, 0, 1, uc(rng));
        set_trap_coefficient(s.trap, 0, 1, 1, uc(rng));
        set_trap_coefficient(s.trap, 0, 0, 2, uc(rng));
        s.bragg.psi_x_p = upsi(rng);
        s.bragg.psi_x_pp = upsi(rng);
        s.bragg.psi_y_p = upsi(rng);
        s.bragg.psi_y_pp = upsi(rng);
        s.init.r0 = Vec3(ur(rng), ur(rng), ur(rng));
        s.init.v0 = Vec3(ur(rng), ur(rng), ur(rng));
        const ProtocolTiming timing{ut1(rng), ut2(rng)};

        const PhaseBreakdown run =
            run_interferometer(s.trap, s.init, s.bragg, timing, tight_settings());
        const double exact =
            analytic_phase_harmonic(s.trap, s.bragg, timing.t1, timing.t2);

        CHECK(run.differential == doctest::Approx(exact).epsilon(1e-8).scale(1.0));
        CHECK(std::abs(run.right.phi_dyn + run.right.phi_sep) < 1e-8);
        CHECK(std::abs(run.left.phi_dyn + run.left.phi_sep) < 1e-8);
    }
}

TEST_CASE("harmonic phase is independent of the launch point") {
    TrapConfig trap = ideal_trap(1.3);
    set_trap_coefficient(trap, 1, 1, 0, 0.03);
    BraggGeometry bragg;
    bragg.psi_x_pp = 0.01;
    const ProtocolTiming timing{1.6, 6.4};
    InitialState a;
    InitialState b;
    b.r0 = Vec3(0.2, -0.1, 0.15);
    b.v0 = Vec3(-0.05, 0.1, 0.2);
    const double phi_a =
        run_interferometer(trap, a, bragg, timing, tight_settings()).differential;
    const double phi_b =
        run_interferometer(trap, b, bragg, timing, tight_settings()).differential;
    CHECK(phi_a == doctest::Approx(phi_b).epsilon(1e-9).scale(1.0));
}

TEST_CASE("shear plus timing offsets reproduce the leading-order phase") {
    ScenarioConfig s = scenario_with();
    set_trap_coefficient(s.trap, 1, 1, 0, 2e-3);  // gamma = 1e-3
    s.delta1 = 1e-3;
    s.delta2 = 1e-3;
    const RunReport report = run_with_operational_timing(s, 1);
    CHECK(report.phases.differential == doctest::Approx(2.827e-5).epsilon(0.02));
    CHECK(analytic_phase_second_order(1e-3, 1e-3, 1e-3, 0, 0, 1.0, 1) ==
          doctest::Approx(2.827e-5).epsilon(0.002));
}

TEST_CASE("crossed out-of-plane tilts reproduce the leading-order phase") {
    ScenarioConfig s = scenario_with(0.5);
    s.bragg.psi_x_pp = 0.01;
    s.bragg.psi_y_pp = 0.01;
    const RunReport report = run_with_operational_timing(s, 1);
    CHECK(report.phases.differential == doctest::Approx(1.131e-3).epsilon(0.02));
    CHECK(analytic_phase_second_order(0, 0, 0, 0.01, 0.01, 0.5, 1) ==
          doctest::Approx(8e-4 * std::sqrt(2.0)).epsilon(1e-6));
}

TEST_CASE("timing envelopes close at matched frequencies") {
    for (int n : {1, 2, 3}) {
        CHECK(f1_envelope(1.0, n) == doctest::Approx(0.0).scale(1.0));
        CHECK(f2_envelope(1.0, n) == doctest::Approx(0.0).scale(1.0));
        CHECK(f3_envelope(1.0, n) == doctest::Approx(0.0).scale(1.0));
        CHECK(f1_envelope(2.0, n) == doctest::Approx(0.0).scale(1.0));
        CHECK(f3_envelope(2.0, n) == doctest::Approx(0.0).scale(1.0));
    }
    CHECK(f1_envelope(0.5, 1) == doctest::Approx(-std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("mirror reflection of the setup flips the differential phase") {
    std::mt19937_64 rng(5150u);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    ParameterVector eta = ParameterVector::Zero();
    for (const char* name : {"c110", "c300", "c030", "c111", "c012", "x0", "y0",
                             "vx0", "vy0", "psi_x_p", "psi_y_pp", "delta1",
                             "delta2"})
        eta[parameter_index(name)] = 0.01 * u(rng);

    ParameterVector mirrored = eta;
    for (const char* name : kMirrorOdd)
        mirrored[parameter_index(name)] = -mirrored[parameter_index(name)];

    const ScenarioConfig a = unpack_parameters(eta, 1.4);
    const ScenarioConfig b = unpack_parameters(mirrored, 1.4);
    const RunReport ra = run_with_operational_timing(a, 1);
    const RunReport rb = run_with_operational_timing(b, 1);

    CHECK(ra.phases.differential ==
          doctest::Approx(-rb.phases.differential).epsilon(1e-8).scale(1e-4));
    CHECK(ra.t1o == doctest::Approx(rb.t1o).epsilon(1e-9));
    CHECK(ra.phases.right.phi_total ==
          doctest::Approx(rb.phases.left.phi_total).epsilon(1e-8).scale(1e-4));
}

TEST_CASE("run reports serialize to key-value text and csv") {
    const ScenarioConfig s = scenario_with();
    const RunReport report = run_with_operational_timing(s, 1);
    const std::string kv = run_report_kv(report);
    CHECK(kv.find("t1o = ") != std::string::npos);
    CHECK(kv.find("differential = ") != std::string::npos);
    CHECK(kv.find("right_phi_dyn = ") != std::string::npos);
    CHECK(kv.find("left_phi_total = ") != std::string::npos);

    const std::string header = run_report_csv_header();
    const std::string row = run_report_csv_row(report);
    CHECK(std::count(header.begin(), header.end(), ',') ==
          std::count(row.begin(), row.end(), ','));
    CHECK(header.substr(0, 2) == "n,");
}
