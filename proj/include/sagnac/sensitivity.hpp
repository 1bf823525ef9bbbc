#pragma once

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "sagnac/protocol.hpp"

namespace sagnac {

// ---------------------------------------------------------------------------
// Phase as a function of the perturbation vector
// ---------------------------------------------------------------------------

// Differential phase per kR with operational timing recalibrated for every
// configuration, exactly as an experiment would re-tune after any change.
double phase_at(const ParameterVector& eta, int n, double zeta = 1.0,
                const IntegratorSettings& settings = {});

// Memoizing, thread-safe wrapper around phase_at for a fixed (n, zeta).
// Cache keys are the exact parameter bits, so only verbatim revisits hit.
class PhaseEvaluator {
  public:
    PhaseEvaluator(int n, double zeta = 1.0, IntegratorSettings settings = {});

    double operator()(const ParameterVector& eta) const;

    int n() const { return n_; }
    double zeta() const { return zeta_; }
    const IntegratorSettings& settings() const { return settings_; }
    std::size_t cache_size() const;

  private:
    struct Cache;
    int n_;
    double zeta_;
    IntegratorSettings settings_;
    std::shared_ptr<Cache> cache_;
};

// ---------------------------------------------------------------------------
// Finite differences along parameter-space directions
// ---------------------------------------------------------------------------

using ScalarField = std::function<double(const ParameterVector&)>;

// Central first derivative along dir.
double fd_gradient(const ScalarField& f, const ParameterVector& base,
                   const ParameterVector& dir, double h);

// Mixed second derivative along d1, d2 (four-corner stencil; three-point
// stencil when the directions coincide).
double fd_second(const ScalarField& f, const ParameterVector& base,
                 const ParameterVector& d1, const ParameterVector& d2, double h);

// Mixed third derivative along d1, d2, d3 (eight-corner stencil; compact
// stencils for repeated directions).
double fd_third(const ScalarField& f, const ParameterVector& base,
                const ParameterVector& d1, const ParameterVector& d2,
                const ParameterVector& d3, double h);

// ---------------------------------------------------------------------------
// Scan directions
// ---------------------------------------------------------------------------

// A scan direction: a named unit displacement in parameter space.  Directions
// may tie several raw coefficients together (symmetry-constrained families).
struct Direction {
    std::string name;
    ParameterVector vector = ParameterVector::Zero();
};

// One axis direction per raw parameter, canonical order.
std::vector<Direction> full_parameter_directions();

// The 19 directions that preserve rotational symmetry of the trap about z:
// 7 tied coefficient families (c200, c002, c201, c003, c400, c202, c004,
// with c200 also moving c020, c201 also c021, c400 also c040 and 2 x c220,
// c202 also c022) plus the 12 non-trap parameters.
std::vector<Direction> cylindrical_directions();

// Subset of full_parameter_directions() by name.
std::vector<Direction> directions_for(const std::vector<std::string>& names);

// Lookup by name; throws UnknownParameterName.
const Direction& find_direction(const std::vector<Direction>& space,
                                const std::string& name);

// ---------------------------------------------------------------------------
// Sensitivity scans
// ---------------------------------------------------------------------------

struct ScanSettings {
    int order = 2;             // 2 for pairs, 3 for triples
    double h = 0.0;            // finite-difference step; 0 = default by order
    double threshold = 1e-4;   // retain |coefficient| above this
    std::vector<int> n_list = {1, 2, 3};
    double zeta = 1.0;
    IntegratorSettings integrator;
    int threads = 0;           // 0 = hardware concurrency
    bool richardson = false;   // re-check retained entries at h/2

    double step() const { return h > 0.0 ? h : (order >= 3 ? 1e-3 : 1e-4); }
};

struct SensitivityEntry {
    std::vector<std::string> names;        // 2 or 3 direction labels
    std::map<int, double> value_by_n;      // coefficient at each scanned n
    double richardson_delta = 0.0;         // |C(h) - C(h/2)| at the first n
};

// All unordered direction pairs (order 2) or triples with repetition
// (order 3), screened at the first n of n_list against the threshold and then
// evaluated at the remaining n.  Entries come back in canonical index order.
std::vector<SensitivityEntry> table_scan(const std::vector<Direction>& space,
                                         const ScanSettings& settings);

// Single coefficient along 1-3 named legs (repeats allowed for order 3).
double scan_coefficient(const PhaseEvaluator& phase,
                        const std::vector<Direction>& legs, double h);

// ---------------------------------------------------------------------------
// Dependence fits
// ---------------------------------------------------------------------------

// Functional form of a coefficient's dependence on the orbit count n at fixed
// zeta.  Candidates: identically zero, b n + c n^2, and the three timing
// envelopes; sinusoidal winners get a free phase-offset refinement
//   sin family: A [sin(2 pi zeta (n + n0)) - sin(2 pi zeta n0)]
//   cos family: A [cos(2 pi zeta (n + n0)) - cos(2 pi zeta n0)].
struct NDependenceFit {
    std::string form;        // "zero", "poly", "f1", "f2" or "f3"
    double b = 0.0, c = 0.0; // poly coefficients
    double amplitude = 0.0;  // envelope amplitude
    double n0 = 0.0;         // refined offset (envelope forms)
    bool sin_family = false;
    double residual = 0.0;   // relative fit residual
};

// Throws InsufficientData for fewer than 4 samples and AmbiguousFit when the
// two best candidates are not separated by at least 10% in residual, or when
// the runner-up also fits to numerical precision (residual < 1e-6).
NDependenceFit fit_n_dependence(const std::vector<std::pair<int, double>>& samples,
                                double zeta);

// Amplitude A0 of C(zeta) = A0 / (zeta^p (1-zeta^2)^q (9-zeta^2)^r) by least
// squares.  Samples closer than 0.05 to a pole (zeta = 0, 1, 3) are rejected
// with std::invalid_argument.
double fit_zeta_amplitude(const std::vector<std::pair<double, double>>& samples,
                          int p, int q, int r);

// ---------------------------------------------------------------------------
// Rotation-rate error budget
// ---------------------------------------------------------------------------

// Rotation-rate bias produced by a quadratic sensitivity coefficient
// C = (1/kR) d^2 Phi / d eta_i d eta_j:
//   dOmega = C omega eta_i eta_j / (16 pi n).
double rotation_error(double coefficient, double omega, double eta_i,
                      double eta_j, int n);

// Largest common magnitude |eta| keeping the bias below target.
double allowed_imperfection(double coefficient, double omega, double target,
                            int n);

// ---------------------------------------------------------------------------
// Fringe-slope reduction
// ---------------------------------------------------------------------------

struct FringeSlopeSample {
    double t2 = 0.0;     // second hold time, seconds
    double phase = 0.0;  // measured differential phase, radians
    double sigma = 0.0;  // 1-sigma phase uncertainty, radians (0 = unweighted)
};

struct SlopeSeries {
    double beta = 0.0;  // applied relative curvature asymmetry
    std::vector<FringeSlopeSample> samples;
};

struct SlopePipelineResult {
    std::vector<std::pair<double, double>> slope_by_beta;  // (beta, rad/s)
    double d2_t2_beta = 0.0;        // rad/s per unit beta
    double d2_delta2_gamma = 0.0;   // radians, = d2_t2_beta * 7 / omega
    double uncertainty = 0.0;       // 1-sigma on d2_delta2_gamma
};

// Phase-vs-t2 slopes per curvature setting (ordinary least squares), then the
// slope-vs-beta trend (weighted when uncertainties are available).  In a
// time-orbiting-potential trap a curvature asymmetry beta produces the mode
// splitting gamma = beta/7, hence the 7/omega conversion to trap units.
SlopePipelineResult slope_pipeline(const std::vector<SlopeSeries>& data,
                                   double omega);

}  // namespace sagnac
