#pragma once

#include <string>

#include "sagnac/dynamics.hpp"

namespace sagnac {

// ---------------------------------------------------------------------------
// Pulse sequence
// ---------------------------------------------------------------------------
//
// Two counter-orbiting interferometers run simultaneously: at t = 0 the right
// (left) one is kicked along +y (-y) and orbits for t1; a second pulse then
// splits each into a +x and a -x arm which orbit for t2 before the readout
// pulse.  The differential phase between the two interferometers doubles the
// rotation signal and cancels common-mode noise.

// Phase contributions of one interferometer, all per kR.
struct ArmPhases {
    double phi_dyn = 0.0;    // 2 * (S+ - S-), action accumulated after the split
    double phi_laser = 0.0;  // 2 khat_x . (r_a - (r_b+ + r_b-)/2)
    double phi_sep = 0.0;    // -(v_b+ + v_b-) . (r_b+ - r_b-)
    double phi_total = 0.0;
    Vec3 r_a = Vec3::Zero();  // split-pulse point
    Vec3 r_b_plus = Vec3::Zero(), r_b_minus = Vec3::Zero();
    Vec3 v_b_plus = Vec3::Zero(), v_b_minus = Vec3::Zero();
};

struct PhaseBreakdown {
    ArmPhases right, left;
    double differential = 0.0;  // right total minus left total
    double delta_r2 = 0.0;      // summed squared arm separations at readout
};

// Hold times actually applied between the pulses.
struct ProtocolTiming {
    double t1 = M_PI / 2.0;
    double t2 = 2.0 * M_PI;
};

PhaseBreakdown run_interferometer(const TrapConfig& trap,
                                  const InitialState& init,
                                  const BraggGeometry& bragg,
                                  const ProtocolTiming& timing,
                                  const IntegratorSettings& settings = {});

// ---------------------------------------------------------------------------
// Operational timing
// ---------------------------------------------------------------------------
//
// The hold times are not set to their nominal values pi/2 and 2 pi n but to
// the operationally calibrated ones: t1o maximizes the separation of the two
// counter-orbiting packets, t2o minimizes the summed squared arm separations
// at readout.  Both searches scan a coarse grid, refine the best interior
// bracket by golden sections, and polish with a parabolic vertex step.

// Maximizer of |r_R - r_L| over [0.6, 1.4] * pi/2; throws NoBracket when the
// best grid sample sits on the window edge.
double find_t1o(const TrapConfig& trap, const InitialState& init,
                const BraggGeometry& bragg, const IntegratorSettings& settings = {});

// Minimizer of |r_R+ - r_R-|^2 + |r_L+ - r_L-|^2 over
// [2 pi n - pi/2, 2 pi n + pi/2] given the first hold time actually applied;
// throws NoBracket as above.
double find_t2o(const TrapConfig& trap, const InitialState& init,
                const BraggGeometry& bragg, double t1, int n,
                const IntegratorSettings& settings = {});

// Minimized summed squared arm separation at the found t2o (same search).
double closure_residual(const TrapConfig& trap, const InitialState& init,
                        const BraggGeometry& bragg, double t1, int n,
                        const IntegratorSettings& settings = {});

struct RunReport {
    PhaseBreakdown phases;
    double t1o = 0.0, t2o = 0.0;  // calibrated reference times
    double t1 = 0.0, t2 = 0.0;    // applied times (reference + offsets)
    int n = 1;
};

// Full sequence with calibrated timing plus the scenario's timing offsets.
RunReport run_with_operational_timing(const ScenarioConfig& scenario, int n,
                                      const IntegratorSettings& settings = {});

// Multi-line "key = value" rendering of a run, and a one-row CSV form.
std::string run_report_kv(const RunReport& report);
std::string run_report_csv_header();
std::string run_report_csv_row(const RunReport& report);

// ---------------------------------------------------------------------------
// Closed-form references
// ---------------------------------------------------------------------------

// Differential phase in a separable harmonic trap with mode frequencies
// omegas and kick projections kappa_x/kappa_y on the mode axes:
//   Phi/kR = -4 sum_i (kappa_xi kappa_yi / w_i)
//                     [sin w_i (t1 + t2) - sin w_i t1].
double analytic_phase_harmonic(const Vec3& omegas, const Vec3& kappa_x,
                               const Vec3& kappa_y, double t1, double t2);

// Same, reading the mode structure from the quadratic part of the trap
// (higher-degree coefficients are ignored) and the kick axes from the beam
// geometry.
double analytic_phase_harmonic(const TrapConfig& trap, const BraggGeometry& bragg,
                               double t1, double t2);

// Leading-order phase for small in-plane shear gamma = c110/2, timing offsets
// and out-of-plane beam tilts:
//   Phi/kR = 4 pi gamma [n delta1 + (n + 1/4) delta2]
//            - (4/zeta) psi_x_pp psi_y_pp f1(zeta, n).
double analytic_phase_second_order(double gamma, double delta1, double delta2,
                                   double psi_x_pp, double psi_y_pp, double zeta,
                                   int n);

// Timing envelopes of the vertical couplings.
double f1_envelope(double zeta, int n);  // sin 2 pi zeta (n + 1/4) - sin(pi zeta / 2)
double f2_envelope(double zeta, int n);  // cos 2 pi zeta (n + 1/4) - cos(pi zeta / 2)
double f3_envelope(double zeta, int n);  // 1 - cos 2 pi zeta n

}  // namespace sagnac
