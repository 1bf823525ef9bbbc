#include "sagnac/dynamics.hpp"

#include <algorithm>
#include <cmath>

namespace sagnac {

namespace {

// State layout: (r, v, S).
using State7 = Eigen::Matrix<double, 7, 1>;

State7 pack_state(const PacketState& p) {
    State7 y;
    y << p.r, p.v, p.action;
    return y;
}

PacketState unpack_state(const State7& y) {
    PacketState p;
    p.r = y.head<3>();
    p.v = y.segment<3>(3);
    p.action = y[6];
    return p;
}

State7 derivative(const TrapConfig& trap, const State7& y) {
    const Vec3 r = y.head<3>();
    const Vec3 v = y.segment<3>(3);
    Vec3 force;
    const double pot = potential_and_force(trap, r, force);
    State7 dy;
    dy << v, force, 0.5 * v.squaredNorm() - pot;
    return dy;
}

// Dormand-Prince 5(4) tableau.
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                 a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                 b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

}  // namespace

PacketState propagate(const TrapConfig& trap, const PacketState& start,
                      double duration, const IntegratorSettings& settings,
                      std::vector<TrajectorySample>* trace) {
    if (duration < 0.0)
        throw std::invalid_argument("propagation duration must be non-negative");
    State7 y = pack_state(start);
    double t = 0.0;
    if (trace) trace->push_back({t, start.r, start.v, start.action});
    if (duration == 0.0) return start;

    double h = std::min({settings.max_step, duration, 1e-2});
    State7 k1 = derivative(trap, y);  // reused across steps: last stage matches
    while (t < duration) {
        const bool last = duration - t <= h;
        const double hs = last ? duration - t : h;

        const State7 k2 = derivative(trap, y + hs * (a21 * k1));
        const State7 k3 = derivative(trap, y + hs * (a31 * k1 + a32 * k2));
        const State7 k4 = derivative(trap, y + hs * (a41 * k1 + a42 * k2 + a43 * k3));
        const State7 k5 =
            derivative(trap, y + hs * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
        const State7 k6 = derivative(
            trap, y + hs * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
        const State7 y1 =
            y + hs * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
        const State7 k7 = derivative(trap, y1);
        const State7 diff =
            hs * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

        double err_sq = 0.0;
        for (int i = 0; i < 7; ++i) {
            const double sc = settings.abs_tol +
                              settings.rel_tol *
                                  std::max(std::abs(y[i]), std::abs(y1[i]));
            const double q = diff[i] / sc;
            err_sq += q * q;
        }
        const double err = std::sqrt(err_sq / 7.0);

        const bool finite = y1.allFinite() && std::isfinite(err);
        double factor = 0.9 * std::pow(std::max(err, 1e-300), -0.2);
        if (!finite || !std::isfinite(factor)) factor = 0.2;
        factor = std::clamp(factor, 0.2, 5.0);

        if (err <= 1.0 && finite) {
            y = y1;
            k1 = k7;
            t = last ? duration : t + hs;
            if (trace)
                trace->push_back({t, y.head<3>(), y.segment<3>(3), y[6]});
            h = std::min(hs * factor, settings.max_step);
        } else {
            h = hs * std::min(factor, 1.0);
        }
        if (h < 1e-13)
            throw IntegrationFailure("step size underflow during propagation");
    }
    return unpack_state(y);
}

PacketState analytic_propagate(const Vec3& omega_axes, const PacketState& start,
                               double duration) {
    for (int i = 0; i < 3; ++i)
        if (!(omega_axes[i] > 0.0))
            throw std::invalid_argument("mode frequencies must be positive");
    PacketState out = start;
    for (int i = 0; i < 3; ++i) {
        const double w = omega_axes[i];
        const double x0 = start.r[i], v0 = start.v[i];
        const double c = std::cos(w * duration), s = std::sin(w * duration);
        out.r[i] = x0 * c + v0 / w * s;
        out.v[i] = -x0 * w * s + v0 * c;
        const double c2 = std::cos(2.0 * w * duration),
                     s2 = std::sin(2.0 * w * duration);
        out.action += (v0 * v0 - w * w * x0 * x0) * s2 / (4.0 * w) +
                      0.5 * x0 * v0 * (c2 - 1.0);
    }
    return out;
}

PacketState apply_bragg_kick(const PacketState& state, const Vec3& direction,
                             int sign) {
    if (std::abs(direction.norm() - 1.0) > 1e-12)
        throw NonUnitDirection("kick direction is not unit length");
    if (sign != 1 && sign != -1)
        throw std::invalid_argument("kick sign must be +1 or -1");
    PacketState out = state;
    out.v += static_cast<double>(sign) * direction;
    return out;
}

}  // namespace sagnac
