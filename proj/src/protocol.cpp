#include "sagnac/protocol.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <functional>
#include <utility>

namespace sagnac {

namespace {

constexpr int kGridPoints = 9;

// Golden-section minimum of f over [a, b], to an absolute abscissa tolerance.
double golden_minimize(const std::function<double(double)>& f, double a,
                       double b, double xtol) {
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = b - gr * (b - a);
    double x2 = a + gr * (b - a);
    double f1 = f(x1);
    double f2 = f(x2);
    int guard = 0;
    while (b - a > xtol && ++guard < 200) {
        if (f1 < f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - gr * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + gr * (b - a);
            f2 = f(x2);
        }
    }
    return 0.5 * (a + b);
}

// One parabolic vertex step through (x - s, x, x + s); keeps x when the
// curvature estimate is unusable.
double parabolic_polish(const std::function<double(double)>& f, double x,
                        double s) {
    const double fm = f(x - s), f0 = f(x), fp = f(x + s);
    const double denom = fm - 2.0 * f0 + fp;
    if (!(denom > 0.0) || !std::isfinite(denom)) return x;
    const double shift = 0.5 * s * (fm - fp) / denom;
    if (!(std::abs(shift) <= s)) return x;
    return x + shift;
}

// Coarse grid scan + anchored golden refinement of the minimum of
// value(state(t)).  advance(state, dt) must move the cached anchor forward.
template <typename State>
double refine_minimum(State anchor, double window_lo, double window_hi,
                      const std::function<State(const State&, double)>& advance,
                      const std::function<double(const State&)>& value,
                      const char* edge_message) {
    const double spacing = (window_hi - window_lo) / (kGridPoints - 1);
    std::array<State, kGridPoints> at_grid;
    std::array<double, kGridPoints> f_grid;
    at_grid[0] = anchor;
    f_grid[0] = value(anchor);
    for (int i = 1; i < kGridPoints; ++i) {
        at_grid[static_cast<std::size_t>(i)] =
            advance(at_grid[static_cast<std::size_t>(i - 1)], spacing);
        f_grid[static_cast<std::size_t>(i)] =
            value(at_grid[static_cast<std::size_t>(i)]);
    }
    int best = 0;
    for (int i = 1; i < kGridPoints; ++i)
        if (f_grid[static_cast<std::size_t>(i)] <
            f_grid[static_cast<std::size_t>(best)])
            best = i;
    if (best == 0 || best == kGridPoints - 1) throw NoBracket(edge_message);

    const double bracket_lo = window_lo + (best - 1) * spacing;
    const double bracket_hi = window_lo + (best + 1) * spacing;
    const State& base = at_grid[static_cast<std::size_t>(best - 1)];
    const auto f = [&](double t) { return value(advance(base, t - bracket_lo)); };

    double t_star = golden_minimize(f, bracket_lo, bracket_hi, 1e-10);
    t_star = parabolic_polish(f, t_star, 1e-6);
    return std::clamp(t_star, window_lo, window_hi);
}

struct PacketPair {
    PacketState right, left;
};

struct ArmQuad {
    PacketState rp, rm, lp, lm;
};

double pair_separation_sq(const PacketPair& p) {
    return (p.right.r - p.left.r).squaredNorm();
}

double quad_separation_sq(const ArmQuad& q) {
    return (q.rp.r - q.rm.r).squaredNorm() + (q.lp.r - q.lm.r).squaredNorm();
}

// Search for the second hold time; returns (t2o, residual at t2o).
std::pair<double, double> t2o_search(const TrapConfig& trap,
                                     const InitialState& init,
                                     const BraggGeometry& bragg, double t1,
                                     int n, const IntegratorSettings& settings) {
    if (n < 1) throw std::invalid_argument("orbit count n must be >= 1");
    const Vec3 kx = bragg_axis_x(bragg);
    const Vec3 ky = bragg_axis_y(bragg);
    const PacketState launch{init.r0, init.v0, 0.0};

    ArmQuad arms;
    {
        const PacketState right =
            propagate(trap, apply_bragg_kick(launch, ky, +1), t1, settings);
        const PacketState left =
            propagate(trap, apply_bragg_kick(launch, ky, -1), t1, settings);
        arms.rp = apply_bragg_kick(right, kx, +1);
        arms.rm = apply_bragg_kick(right, kx, -1);
        arms.lp = apply_bragg_kick(left, kx, +1);
        arms.lm = apply_bragg_kick(left, kx, -1);
    }

    const double center = 2.0 * M_PI * n;
    const double lo = center - M_PI / 2.0;
    const double hi = center + M_PI / 2.0;
    const std::function<ArmQuad(const ArmQuad&, double)> advance =
        [&](const ArmQuad& q, double dt) {
            return ArmQuad{propagate(trap, q.rp, dt, settings),
                           propagate(trap, q.rm, dt, settings),
                           propagate(trap, q.lp, dt, settings),
                           propagate(trap, q.lm, dt, settings)};
        };
    const std::function<double(const ArmQuad&)> value = quad_separation_sq;

    const ArmQuad at_lo = advance(arms, lo);
    const double t2o = refine_minimum<ArmQuad>(
        at_lo, lo, hi, advance, value,
        "arm recombination is tightest at the search window edge");
    const double residual = value(advance(at_lo, t2o - lo));
    return {t2o, residual};
}

}  // namespace

// ---------------------------------------------------------------------------
// Pulse sequence
// ---------------------------------------------------------------------------

PhaseBreakdown run_interferometer(const TrapConfig& trap,
                                  const InitialState& init,
                                  const BraggGeometry& bragg,
                                  const ProtocolTiming& timing,
                                  const IntegratorSettings& settings) {
    const Vec3 kx = bragg_axis_x(bragg);
    const Vec3 ky = bragg_axis_y(bragg);
    const PacketState launch{init.r0, init.v0, 0.0};

    PhaseBreakdown out;
    for (int sign : {+1, -1}) {
        PacketState at_split = propagate(
            trap, apply_bragg_kick(launch, ky, sign), timing.t1, settings);
        at_split.action = 0.0;  // only the post-split action difference matters
        const PacketState b_plus = propagate(
            trap, apply_bragg_kick(at_split, kx, +1), timing.t2, settings);
        const PacketState b_minus = propagate(
            trap, apply_bragg_kick(at_split, kx, -1), timing.t2, settings);

        ArmPhases arm;
        arm.r_a = at_split.r;
        arm.r_b_plus = b_plus.r;
        arm.r_b_minus = b_minus.r;
        arm.v_b_plus = b_plus.v;
        arm.v_b_minus = b_minus.v;
        arm.phi_dyn = 2.0 * (b_plus.action - b_minus.action);
        arm.phi_laser =
            2.0 * kx.dot(at_split.r - 0.5 * (b_plus.r + b_minus.r));
        arm.phi_sep = -(b_plus.v + b_minus.v).dot(b_plus.r - b_minus.r);
        arm.phi_total = arm.phi_dyn + arm.phi_laser + arm.phi_sep;
        (sign > 0 ? out.right : out.left) = arm;
    }
    out.differential = out.right.phi_total - out.left.phi_total;
    out.delta_r2 = (out.right.r_b_plus - out.right.r_b_minus).squaredNorm() +
                   (out.left.r_b_plus - out.left.r_b_minus).squaredNorm();
    return out;
}

// ---------------------------------------------------------------------------
// Operational timing
// ---------------------------------------------------------------------------

double find_t1o(const TrapConfig& trap, const InitialState& init,
                const BraggGeometry& bragg, const IntegratorSettings& settings) {
    const Vec3 ky = bragg_axis_y(bragg);
    const PacketState launch{init.r0, init.v0, 0.0};

    const double lo = 0.6 * M_PI / 2.0;
    const double hi = 1.4 * M_PI / 2.0;
    const std::function<PacketPair(const PacketPair&, double)> advance =
        [&](const PacketPair& p, double dt) {
            return PacketPair{propagate(trap, p.right, dt, settings),
                              propagate(trap, p.left, dt, settings)};
        };
    // Negated separation: the refiner minimizes.
    const std::function<double(const PacketPair&)> value =
        [](const PacketPair& p) { return -pair_separation_sq(p); };

    PacketPair kicked{apply_bragg_kick(launch, ky, +1),
                      apply_bragg_kick(launch, ky, -1)};
    const PacketPair at_lo = advance(kicked, lo);
    return refine_minimum<PacketPair>(
        at_lo, lo, hi, advance, value,
        "packet separation peaks at the search window edge");
}

double find_t2o(const TrapConfig& trap, const InitialState& init,
                const BraggGeometry& bragg, double t1, int n,
                const IntegratorSettings& settings) {
    return t2o_search(trap, init, bragg, t1, n, settings).first;
}

double closure_residual(const TrapConfig& trap, const InitialState& init,
                        const BraggGeometry& bragg, double t1, int n,
                        const IntegratorSettings& settings) {
    return t2o_search(trap, init, bragg, t1, n, settings).second;
}

RunReport run_with_operational_timing(const ScenarioConfig& scenario, int n,
                                      const IntegratorSettings& settings) {
    RunReport report;
    report.n = n;
    report.t1o = find_t1o(scenario.trap, scenario.init, scenario.bragg, settings);
    report.t1 = report.t1o + scenario.delta1;
    report.t2o = find_t2o(scenario.trap, scenario.init, scenario.bragg,
                          report.t1, n, settings);
    report.t2 = report.t2o + scenario.delta2;
    report.phases =
        run_interferometer(scenario.trap, scenario.init, scenario.bragg,
                           {report.t1, report.t2}, settings);
    return report;
}

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

}  // namespace

std::string run_report_kv(const RunReport& report) {
    std::string s;
    s += "n = " + std::to_string(report.n) + "\n";
    s += "t1o = " + fmt(report.t1o) + "\n";
    s += "t2o = " + fmt(report.t2o) + "\n";
    s += "t1 = " + fmt(report.t1) + "\n";
    s += "t2 = " + fmt(report.t2) + "\n";
    s += "differential = " + fmt(report.phases.differential) + "\n";
    s += "delta_r2 = " + fmt(report.phases.delta_r2) + "\n";
    const auto arm = [&](const char* side, const ArmPhases& a) {
        std::string r;
        r += std::string(side) + "_phi_dyn = " + fmt(a.phi_dyn) + "\n";
        r += std::string(side) + "_phi_laser = " + fmt(a.phi_laser) + "\n";
        r += std::string(side) + "_phi_sep = " + fmt(a.phi_sep) + "\n";
        r += std::string(side) + "_phi_total = " + fmt(a.phi_total) + "\n";
        return r;
    };
    s += arm("right", report.phases.right);
    s += arm("left", report.phases.left);
    return s;
}

std::string run_report_csv_header() {
    return "n,t1o,t2o,t1,t2,differential,delta_r2,"
           "right_phi_dyn,right_phi_laser,right_phi_sep,right_phi_total,"
           "left_phi_dyn,left_phi_laser,left_phi_sep,left_phi_total";
}

std::string run_report_csv_row(const RunReport& report) {
    std::string s = std::to_string(report.n);
    const double vals[] = {report.t1o,
                           report.t2o,
                           report.t1,
                           report.t2,
                           report.phases.differential,
                           report.phases.delta_r2,
                           report.phases.right.phi_dyn,
                           report.phases.right.phi_laser,
                           report.phases.right.phi_sep,
                           report.phases.right.phi_total,
                           report.phases.left.phi_dyn,
                           report.phases.left.phi_laser,
                           report.phases.left.phi_sep,
                           report.phases.left.phi_total};
    for (double v : vals) s += "," + fmt(v);
    return s;
}

// ---------------------------------------------------------------------------
// Closed-form references
// ---------------------------------------------------------------------------

double analytic_phase_harmonic(const Vec3& omegas, const Vec3& kappa_x,
                               const Vec3& kappa_y, double t1, double t2) {
    double phi = 0.0;
    for (int i = 0; i < 3; ++i) {
        const double w = omegas[i];
        if (!(w > 0.0))
            throw std::invalid_argument("mode frequencies must be positive");
        phi -= 4.0 * kappa_x[i] * kappa_y[i] / w *
               (std::sin(w * (t1 + t2)) - std::sin(w * t1));
    }
    return phi;
}

double analytic_phase_harmonic(const TrapConfig& trap, const BraggGeometry& bragg,
                               double t1, double t2) {
    auto c = [&trap](int lx, int ly, int lz) {
        return trap_coefficient(trap, lx, ly, lz);
    };
    Eigen::Matrix3d q;
    q << 1.0 + c(2, 0, 0), 0.5 * c(1, 1, 0), 0.5 * c(1, 0, 1),
         0.5 * c(1, 1, 0), 1.0 + c(0, 2, 0), 0.5 * c(0, 1, 1),
         0.5 * c(1, 0, 1), 0.5 * c(0, 1, 1), trap.zeta * trap.zeta + c(0, 0, 2);
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(q);
    if (es.eigenvalues().minCoeff() <= 0.0)
        throw std::invalid_argument("quadratic trap part is not confining");
    const Vec3 kx = bragg_axis_x(bragg);
    const Vec3 ky = bragg_axis_y(bragg);
    Vec3 omegas, kappa_x, kappa_y;
    for (int i = 0; i < 3; ++i) {
        omegas[i] = std::sqrt(es.eigenvalues()[i]);
        kappa_x[i] = es.eigenvectors().col(i).dot(kx);
        kappa_y[i] = es.eigenvectors().col(i).dot(ky);
    }
    return analytic_phase_harmonic(omegas, kappa_x, kappa_y, t1, t2);
}

double analytic_phase_second_order(double gamma, double delta1, double delta2,
                                   double psi_x_pp, double psi_y_pp, double zeta,
                                   int n) {
    return 4.0 * M_PI * gamma * (n * delta1 + (n + 0.25) * delta2) -
           4.0 / zeta * psi_x_pp * psi_y_pp * f1_envelope(zeta, n);
}

double f1_envelope(double zeta, int n) {
    return std::sin(2.0 * M_PI * zeta * (n + 0.25)) - std::sin(M_PI * zeta / 2.0);
}

double f2_envelope(double zeta, int n) {
    return std::cos(2.0 * M_PI * zeta * (n + 0.25)) - std::cos(M_PI * zeta / 2.0);
}

double f3_envelope(double zeta, int n) {
    return 1.0 - std::cos(2.0 * M_PI * zeta * n);
}

}  // namespace sagnac
