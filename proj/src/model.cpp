#include "sagnac/model.hpp"

#include <cmath>
#include <unordered_map>

namespace sagnac {

// ---------------------------------------------------------------------------
// Trap potential
// ---------------------------------------------------------------------------

const std::array<MonomialExponents, kTrapCoefficientCount> kTrapMonomials = {{
    {2, 0, 0}, {1, 1, 0}, {1, 0, 1}, {0, 2, 0}, {0, 1, 1}, {0, 0, 2},
    {3, 0, 0}, {2, 1, 0}, {2, 0, 1}, {1, 2, 0}, {1, 1, 1}, {1, 0, 2},
    {0, 3, 0}, {0, 2, 1}, {0, 1, 2}, {0, 0, 3},
    {4, 0, 0}, {3, 1, 0}, {3, 0, 1}, {2, 2, 0}, {2, 1, 1}, {2, 0, 2},
    {1, 3, 0}, {1, 2, 1}, {1, 1, 2}, {1, 0, 3},
    {0, 4, 0}, {0, 3, 1}, {0, 2, 2}, {0, 1, 3}, {0, 0, 4},
}};

TrapConfig ideal_trap(double zeta) {
    TrapConfig trap;
    trap.zeta = zeta;
    return trap;
}

int trap_coefficient_index(int lx, int ly, int lz) {
    static const auto lookup = [] {
        std::array<int, 125> table{};
        table.fill(-1);
        for (int i = 0; i < kTrapCoefficientCount; ++i) {
            const auto& m = kTrapMonomials[i];
            table[static_cast<std::size_t>(m.lx * 25 + m.ly * 5 + m.lz)] = i;
        }
        return table;
    }();
    if (lx < 0 || ly < 0 || lz < 0 || lx > 4 || ly > 4 || lz > 4)
        throw std::invalid_argument("trap coefficient exponents out of range");
    const int idx = lookup[static_cast<std::size_t>(lx * 25 + ly * 5 + lz)];
    if (idx < 0)
        throw std::invalid_argument("no trap coefficient with degree " +
                                    std::to_string(lx + ly + lz));
    return idx;
}

double trap_coefficient(const TrapConfig& trap, int lx, int ly, int lz) {
    return trap.c[static_cast<std::size_t>(trap_coefficient_index(lx, ly, lz))];
}

void set_trap_coefficient(TrapConfig& trap, int lx, int ly, int lz, double value) {
    trap.c[static_cast<std::size_t>(trap_coefficient_index(lx, ly, lz))] = value;
}

double potential_and_force(const TrapConfig& trap, const Vec3& r, Vec3& force) {
    const double x = r.x(), y = r.y(), z = r.z();
    double v = 0.5 * (x * x + y * y + trap.zeta * trap.zeta * z * z);
    double ax = -x;
    double ay = -y;
    double az = -trap.zeta * trap.zeta * z;
    double px[5] = {1.0, x, x * x, 0.0, 0.0};
    double py[5] = {1.0, y, y * y, 0.0, 0.0};
    double pz[5] = {1.0, z, z * z, 0.0, 0.0};
    px[3] = px[2] * x; px[4] = px[3] * x;
    py[3] = py[2] * y; py[4] = py[3] * y;
    pz[3] = pz[2] * z; pz[4] = pz[3] * z;
    for (int i = 0; i < kTrapCoefficientCount; ++i) {
        const double ci = trap.c[static_cast<std::size_t>(i)];
        if (ci == 0.0) continue;
        const auto& m = kTrapMonomials[static_cast<std::size_t>(i)];
        const double h = 0.5 * ci;
        v += h * px[m.lx] * py[m.ly] * pz[m.lz];
        if (m.lx > 0) ax -= h * m.lx * px[m.lx - 1] * py[m.ly] * pz[m.lz];
        if (m.ly > 0) ay -= h * m.ly * px[m.lx] * py[m.ly - 1] * pz[m.lz];
        if (m.lz > 0) az -= h * m.lz * px[m.lx] * py[m.ly] * pz[m.lz - 1];
    }
    force = Vec3(ax, ay, az);
    return v;
}

double potential_eval(const TrapConfig& trap, const Vec3& r) {
    Vec3 unused;
    return potential_and_force(trap, r, unused);
}

Vec3 force_eval(const TrapConfig& trap, const Vec3& r) {
    Vec3 force;
    potential_and_force(trap, r, force);
    return force;
}

bool is_cylindrically_symmetric(const TrapConfig& trap, double tol) {
    auto c = [&trap](int lx, int ly, int lz) {
        return trap_coefficient(trap, lx, ly, lz);
    };
    // Azimuthally invariant combinations: rho^2, z^2, rho^2 z, z^3,
    // rho^4, rho^2 z^2, z^4 with rho^2 = x^2 + y^2.
    if (std::abs(c(2, 0, 0) - c(0, 2, 0)) > tol) return false;
    if (std::abs(c(2, 0, 1) - c(0, 2, 1)) > tol) return false;
    if (std::abs(c(4, 0, 0) - c(0, 4, 0)) > tol) return false;
    if (std::abs(c(2, 2, 0) - 2.0 * c(4, 0, 0)) > tol) return false;
    if (std::abs(c(2, 0, 2) - c(0, 2, 2)) > tol) return false;
    static const int allowed[] = {
        trap_coefficient_index(2, 0, 0), trap_coefficient_index(0, 2, 0),
        trap_coefficient_index(0, 0, 2), trap_coefficient_index(2, 0, 1),
        trap_coefficient_index(0, 2, 1), trap_coefficient_index(0, 0, 3),
        trap_coefficient_index(4, 0, 0), trap_coefficient_index(0, 4, 0),
        trap_coefficient_index(2, 2, 0), trap_coefficient_index(2, 0, 2),
        trap_coefficient_index(0, 2, 2), trap_coefficient_index(0, 0, 4),
    };
    for (int i = 0; i < kTrapCoefficientCount; ++i) {
        bool ok = false;
        for (int a : allowed) ok = ok || (a == i);
        if (!ok && std::abs(trap.c[static_cast<std::size_t>(i)]) > tol) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// Horizontal curvature normal modes
// ---------------------------------------------------------------------------

QuadraticDiag diagonalize_quadratic(double Delta, double gamma, double mean) {
    QuadraticDiag d;
    d.Delta = Delta;
    d.gamma = gamma;
    d.mean = mean;
    d.Gamma = std::hypot(Delta, gamma);
    const double w1sq = 1.0 + mean + d.Gamma;
    const double w2sq = 1.0 + mean - d.Gamma;
    if (w2sq <= 0.0)
        throw std::invalid_argument("horizontal curvature is not confining");
    d.omega1 = std::sqrt(w1sq);
    d.omega2 = std::sqrt(w2sq);
    if (d.Gamma < 1e-14) {
        d.degenerate = true;
        d.e1 = Vec2(1.0, 0.0);
        d.e2 = Vec2(0.0, 1.0);
        return d;
    }
    d.degenerate = false;
    // Pick the branch whose components cannot cancel.
    if (Delta > 0.0) {
        d.e1 = Vec2(d.Gamma + Delta, gamma).normalized();
    } else {
        d.e1 = Vec2(gamma, d.Gamma - Delta).normalized();
    }
    d.e2 = Vec2(-d.e1.y(), d.e1.x());
    return d;
}

QuadraticDiag diagonalize_quadratic(const TrapConfig& trap) {
    const double c200 = trap_coefficient(trap, 2, 0, 0);
    const double c020 = trap_coefficient(trap, 0, 2, 0);
    const double c110 = trap_coefficient(trap, 1, 1, 0);
    return diagonalize_quadratic(0.5 * (c200 - c020), 0.5 * c110,
                                 0.5 * (c200 + c020));
}

// ---------------------------------------------------------------------------
// Bragg beam geometry
// ---------------------------------------------------------------------------

namespace {

void check_small_angles(const BraggGeometry& bragg) {
    const double psis[] = {bragg.psi_x_p, bragg.psi_x_pp, bragg.psi_y_p,
                           bragg.psi_y_pp};
    for (double psi : psis)
        if (!(std::abs(psi) < 0.1))
            throw std::invalid_argument("beam misalignment angle exceeds 0.1 rad");
}

}  // namespace

Vec3 bragg_axis_x(const BraggGeometry& bragg) {
    check_small_angles(bragg);
    return Vec3(1.0, bragg.psi_x_p, bragg.psi_x_pp).normalized();
}

Vec3 bragg_axis_y(const BraggGeometry& bragg) {
    check_small_angles(bragg);
    return Vec3(-bragg.psi_y_p, 1.0, bragg.psi_y_pp).normalized();
}

// ---------------------------------------------------------------------------
// Launch state and perturbation vector
// ---------------------------------------------------------------------------

const std::vector<std::string>& parameter_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> list;
        list.reserve(kParameterCount);
        for (const auto& m : kTrapMonomials)
            list.push_back("c" + std::to_string(m.lx) + std::to_string(m.ly) +
                           std::to_string(m.lz));
        for (const char* tail : {"x0", "y0", "z0", "vx0", "vy0", "vz0",
                                 "psi_x_p", "psi_x_pp", "psi_y_p", "psi_y_pp",
                                 "delta1", "delta2"})
            list.push_back(tail);
        return list;
    }();
    return names;
}

int parameter_index(const std::string& name) {
    static const std::unordered_map<std::string, int> lookup = [] {
        std::unordered_map<std::string, int> map;
        const auto& names = parameter_names();
        for (int i = 0; i < kParameterCount; ++i)
            map.emplace(names[static_cast<std::size_t>(i)], i);
        return map;
    }();
    const auto it = lookup.find(name);
    if (it == lookup.end())
        throw UnknownParameterName("unknown perturbation parameter: " + name);
    return it->second;
}

ScenarioConfig unpack_parameters(const ParameterVector& eta, double zeta) {
    ScenarioConfig s;
    s.trap.zeta = zeta;
    for (int i = 0; i < kTrapCoefficientCount; ++i)
        s.trap.c[static_cast<std::size_t>(i)] = eta[i];
    s.init.r0 = Vec3(eta[31], eta[32], eta[33]);
    s.init.v0 = Vec3(eta[34], eta[35], eta[36]);
    s.bragg.psi_x_p = eta[37];
    s.bragg.psi_x_pp = eta[38];
    s.bragg.psi_y_p = eta[39];
    s.bragg.psi_y_pp = eta[40];
    s.delta1 = eta[41];
    s.delta2 = eta[42];
    return s;
}

ParameterVector pack_parameters(const ScenarioConfig& scenario) {
    ParameterVector eta = ParameterVector::Zero();
    for (int i = 0; i < kTrapCoefficientCount; ++i)
        eta[i] = scenario.trap.c[static_cast<std::size_t>(i)];
    eta[31] = scenario.init.r0.x();
    eta[32] = scenario.init.r0.y();
    eta[33] = scenario.init.r0.z();
    eta[34] = scenario.init.v0.x();
    eta[35] = scenario.init.v0.y();
    eta[36] = scenario.init.v0.z();
    eta[37] = scenario.bragg.psi_x_p;
    eta[38] = scenario.bragg.psi_x_pp;
    eta[39] = scenario.bragg.psi_y_p;
    eta[40] = scenario.bragg.psi_y_pp;
    eta[41] = scenario.delta1;
    eta[42] = scenario.delta2;
    return eta;
}

const std::vector<std::string>& horizontal_group() {
    static const std::vector<std::string> names = {
        "delta1", "delta2", "c200", "c020", "c110",
        "c400",   "c310",   "c220", "c130", "c040",
    };
    return names;
}

const std::vector<std::string>& vertical_group() {
    static const std::vector<std::string> names = {
        "psi_x_pp", "psi_y_pp", "z0",   "vz0",  "c011", "c101", "c111",
        "c201",     "c021",     "c301", "c031", "c211", "c121",
    };
    return names;
}

// ---------------------------------------------------------------------------
// Physical scales
// ---------------------------------------------------------------------------

PhysicalScales rubidium87(double omega) {
    PhysicalScales s;
    s.mass = 86.909180531 * kAtomicMassUnit;
    s.wavenumber = 2.0 * M_PI / 780.233e-9;
    s.omega = omega;
    return s;
}

}  // namespace sagnac
