#pragma once

#include <array>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sagnac/errors.hpp"

// Trap, beam-geometry and parameter bookkeeping for the dual Sagnac
// interferometer.
//
// Units: atom mass, radial trap frequency and Bragg recoil velocity are all 1,
// so the orbit radius R = v_B/omega is 1, one radial period is 2*pi, and all
// phases are reported per kR (multiply by PhysicalScales::phase_scale() to get
// radians for a concrete apparatus).

namespace sagnac {

using Vec3 = Eigen::Vector3d;
using Vec2 = Eigen::Vector2d;

// ---------------------------------------------------------------------------
// Trap potential
// ---------------------------------------------------------------------------

// Number of polynomial coefficients c_{lmn} with 2 <= l+m+n <= 4.
inline constexpr int kTrapCoefficientCount = 31;

struct MonomialExponents {
    int lx, ly, lz;
};

// Canonical coefficient order: degree ascending, exponents lexicographically
// descending within a degree.
extern const std::array<MonomialExponents, kTrapCoefficientCount> kTrapMonomials;

// V(r) = (x^2 + y^2 + zeta^2 z^2)/2 + sum_i c_i x^lx y^ly z^lz / 2.
struct TrapConfig {
    double zeta = 1.0;                              // axial/radial frequency ratio
    std::array<double, kTrapCoefficientCount> c{};  // polynomial distortions
};

TrapConfig ideal_trap(double zeta = 1.0);

// Index of (lx, ly, lz) in TrapConfig::c; throws std::invalid_argument for
// exponents outside the table.
int trap_coefficient_index(int lx, int ly, int lz);

double trap_coefficient(const TrapConfig& trap, int lx, int ly, int lz);
void set_trap_coefficient(TrapConfig& trap, int lx, int ly, int lz, double value);

double potential_eval(const TrapConfig& trap, const Vec3& r);

// Acceleration -grad V (unit mass).
Vec3 force_eval(const TrapConfig& trap, const Vec3& r);

// Both in one pass over the coefficients; returns V and fills force.
double potential_and_force(const TrapConfig& trap, const Vec3& r, Vec3& force);

// True when V is invariant under rotations about z: c110, c101, c011 and all
// other azimuth-dependent terms vanish, c200 = c020, c201 = c021,
// c400 = c040 = c220/2 and c202 = c022.
bool is_cylindrically_symmetric(const TrapConfig& trap, double tol = 1e-14);

// ---------------------------------------------------------------------------
// Horizontal curvature normal modes
// ---------------------------------------------------------------------------

// Decomposition of the in-plane quadratic form
//   [[1 + mean + Delta, gamma], [gamma, 1 + mean - Delta]]
// into principal axes.  omega1 >= omega2 are the mode frequencies, e1/e2 the
// corresponding unit axes.  gamma = c110/2, Delta = (c200 - c020)/2,
// mean = (c200 + c020)/2.
struct QuadraticDiag {
    double Delta = 0.0;
    double gamma = 0.0;
    double mean = 0.0;
    double Gamma = 0.0;  // sqrt(Delta^2 + gamma^2)
    double omega1 = 1.0;
    double omega2 = 1.0;
    Vec2 e1 = Vec2(1.0, 0.0);
    Vec2 e2 = Vec2(0.0, 1.0);
    bool degenerate = true;  // axes arbitrary when Gamma ~ 0
};

// Throws std::invalid_argument when the weaker mode is not confining
// (1 + mean - Gamma <= 0).
QuadraticDiag diagonalize_quadratic(double Delta, double gamma, double mean = 0.0);
QuadraticDiag diagonalize_quadratic(const TrapConfig& trap);

// ---------------------------------------------------------------------------
// Bragg beam geometry
// ---------------------------------------------------------------------------

// Small misalignment angles of the two kick axes; primes tilt within the
// horizontal plane, double primes tilt out of plane.
struct BraggGeometry {
    double psi_x_p = 0.0;
    double psi_x_pp = 0.0;
    double psi_y_p = 0.0;
    double psi_y_pp = 0.0;
};

// Unit kick axes normalize(1, psi_x_p, psi_x_pp) and
// normalize(-psi_y_p, 1, psi_y_pp).  Throws std::invalid_argument when any
// |psi| >= 0.1 (small-angle regime only).
Vec3 bragg_axis_x(const BraggGeometry& bragg);
Vec3 bragg_axis_y(const BraggGeometry& bragg);

// ---------------------------------------------------------------------------
// Launch state and perturbation vector
// ---------------------------------------------------------------------------

struct InitialState {
    Vec3 r0 = Vec3::Zero();
    Vec3 v0 = Vec3::Zero();
};

// All imperfection parameters of one experimental configuration, in canonical
// order: the 31 trap coefficients, then x0 y0 z0 vx0 vy0 vz0, the four beam
// angles psi_x_p psi_x_pp psi_y_p psi_y_pp, and the timing offsets
// delta1 delta2.
inline constexpr int kParameterCount = 43;

using ParameterVector = Eigen::Matrix<double, kParameterCount, 1>;

const std::vector<std::string>& parameter_names();

// Throws UnknownParameterName.
int parameter_index(const std::string& name);

// One fully specified (possibly imperfect) run configuration.
struct ScenarioConfig {
    TrapConfig trap;
    InitialState init;
    BraggGeometry bragg;
    double delta1 = 0.0;  // offset of the first hold time
    double delta2 = 0.0;  // offset of the second hold time
};

ScenarioConfig unpack_parameters(const ParameterVector& eta, double zeta = 1.0);
ParameterVector pack_parameters(const ScenarioConfig& scenario);

// Parameters that couple to in-plane motion only / to vertical motion only.
const std::vector<std::string>& horizontal_group();
const std::vector<std::string>& vertical_group();

// ---------------------------------------------------------------------------
// Physical scales
// ---------------------------------------------------------------------------

inline constexpr double kHbar = 1.054571817e-34;              // J s
inline constexpr double kAtomicMassUnit = 1.66053906660e-27;  // kg

struct PhysicalScales {
    double mass = 0.0;        // kg
    double wavenumber = 0.0;  // single-photon k, 1/m
    double omega = 0.0;       // radial trap frequency, rad/s

    double bragg_velocity() const { return 2.0 * kHbar * wavenumber / mass; }
    double orbit_radius() const { return bragg_velocity() / omega; }
    double phase_scale() const { return wavenumber * orbit_radius(); }  // kR
};

// 87Rb with 780.233 nm Bragg light.
PhysicalScales rubidium87(double omega);

}  // namespace sagnac
