#pragma once

#include <vector>

#include "sagnac/model.hpp"

namespace sagnac {

// ---------------------------------------------------------------------------
// Packet propagation
// ---------------------------------------------------------------------------

// Classical wave-packet centroid with its accumulated action
// S = integral of (v^2/2 - V) dt, in trap units.
struct PacketState {
    Vec3 r = Vec3::Zero();
    Vec3 v = Vec3::Zero();
    double action = 0.0;
};

struct IntegratorSettings {
    double rel_tol = 1e-10;
    double abs_tol = 1e-10;
    double max_step = 0.2;
};

struct TrajectorySample {
    double t = 0.0;
    Vec3 r = Vec3::Zero();
    Vec3 v = Vec3::Zero();
    double action = 0.0;
};

// Advance a packet for the given duration with an embedded 4(5) Runge-Kutta
// pair and proportional step control.  Throws IntegrationFailure when the
// step size underflows or the state stops being finite, and
// std::invalid_argument for negative durations.  When trace is non-null the
// start state and every accepted step are appended.
PacketState propagate(const TrapConfig& trap, const PacketState& start,
                      double duration, const IntegratorSettings& settings = {},
                      std::vector<TrajectorySample>* trace = nullptr);

// Closed-form propagation in a separable harmonic trap with mode frequencies
// omega_axes along x, y, z (all positive).  Per axis:
//   x(t) = x0 cos wt + (v0/w) sin wt,
//   dS   = (v0^2 - w^2 x0^2) sin 2wT / (4w) + x0 v0 (cos 2wT - 1) / 2.
PacketState analytic_propagate(const Vec3& omega_axes, const PacketState& start,
                               double duration);

// Instantaneous two-photon momentum kick v -> v + sign * direction, in units
// of the Bragg velocity.  direction must be unit length (NonUnitDirection)
// and sign +1 or -1 (std::invalid_argument).
PacketState apply_bragg_kick(const PacketState& state, const Vec3& direction,
                             int sign);

}  // namespace sagnac
