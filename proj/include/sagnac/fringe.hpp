#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace sagnac {

// ---------------------------------------------------------------------------
// Fringe signals and ellipse-based phase extraction
// ---------------------------------------------------------------------------
//
// Each shot returns the resting-atom fractions (S_R, S_L) of the two
// interferometers.  The common-mode phase is noisy shot to shot, so the
// points trace a Lissajous ellipse whose shape encodes the differential
// phase: with S_s = A_s + B_s cos(phi_c +- Phi/2) the implicit conic obeys
// cos Phi = -b / (2 sqrt(ac)).

struct FringePoint {
    double S_R = 0.0;
    double S_L = 0.0;
};

enum class CommonModeDistribution {
    Uniform,     // phi_c ~ U[0, 2pi)
    Stratified,  // phi_c on an evenly spaced grid covering [0, 2pi)
};

struct SignalModel {
    double A_R = 0.5;  // signal offsets
    double A_L = 0.5;
    double B_R = 0.5;  // fringe amplitudes; A +- B must stay within [0, 1]
    double B_L = 0.5;
    double phi = 0.0;    // differential phase
    double sigma = 0.0;  // Gaussian detection noise per signal
    CommonModeDistribution distribution = CommonModeDistribution::Uniform;
};

// Draws `count` shots (count >= 5); deterministic for a fixed seed.  Points
// are clipped to [-0.05, 1.05] (fractions with slight noise spill).
std::vector<FringePoint> synthesize_fringe(const SignalModel& model, int count,
                                           std::uint64_t seed);

struct EllipseFitResult {
    std::array<double, 6> conic{};  // a,b,c,d,e,f; unit norm, a > 0
    double phi = 0.0;               // extracted differential phase in (0, pi)
    double ellipticity = 0.0;       // minor/major semi-axis ratio of the fit
    double reference_ellipticity = 0.0;  // [2/(|sec phi| - 1)]^{1/2}, verbatim
    double residual = 0.0;          // rms Sampson distance of the points
};

// Direct least-squares conic fit with the ellipse constraint, then phase
// extraction.  Needs >= 6 points; throws DegenerateConic when the data are
// (near-)collinear, i.e. the phase sits too close to 0 or pi.
//
// `reference_ellipticity` evaluates a published shape formula verbatim for
// comparison; its convention differs from the axis ratio (it vanishes at
// phi = pi/2 where the equal-amplitude figure is a circle), so it is
// reported alongside, never used for extraction.
EllipseFitResult fit_ellipse(const std::vector<FringePoint>& points);

// ---------------------------------------------------------------------------
// Rotating-bias trap control
// ---------------------------------------------------------------------------

// Phase-lag control beta of the rotating bias field; time averaging turns it
// into the shear 1/2 m w^2 (2/7) beta xy, i.e. gamma = beta / 7 exactly.
struct TopTrapControl {
    double beta = 0.0;
    double gamma() const { return beta / 7.0; }
};

}  // namespace sagnac
