#include "sagnac/fringe.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include <Eigen/Dense>

#include "sagnac/errors.hpp"

namespace sagnac {

namespace {

// Fixed bit-to-real mappings keep output byte-identical across platforms.
struct Rng {
    std::mt19937_64 eng;
    bool have_spare = false;
    double spare = 0.0;

    explicit Rng(std::uint64_t seed) : eng(seed) {}

    double uniform() {  // [0, 1)
        return static_cast<double>(eng() >> 11) * 0x1.0p-53;
    }

    double normal() {  // Box-Muller pair, one cached
        if (have_spare) {
            have_spare = false;
            return spare;
        }
        double u = 0.0;
        do {
            u = uniform();
        } while (u <= 0.0);
        const double r = std::sqrt(-2.0 * std::log(u));
        const double t = 2.0 * M_PI * uniform();
        spare = r * std::sin(t);
        have_spare = true;
        return r * std::cos(t);
    }
};

double clip_signal(double s) { return std::clamp(s, -0.05, 1.05); }

}  // namespace

// ---------------------------------------------------------------------------
// Signal synthesis
// ---------------------------------------------------------------------------

std::vector<FringePoint> synthesize_fringe(const SignalModel& model, int count,
                                           std::uint64_t seed) {
    if (count < 5)
        throw std::invalid_argument("synthesize_fringe: need at least 5 shots");
    if (!(model.sigma >= 0.0))
        throw std::invalid_argument("synthesize_fringe: sigma must be >= 0");
    for (const double v : {model.A_R + model.B_R, model.A_R - model.B_R,
                           model.A_L + model.B_L, model.A_L - model.B_L})
        if (v < 0.0 || v > 1.0)
            throw std::invalid_argument(
                "synthesize_fringe: offsets and amplitudes must keep A +- B "
                "within [0, 1]");

    Rng rng(seed);
    std::vector<FringePoint> points;
    points.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        const double phi_c =
            model.distribution == CommonModeDistribution::Uniform
                ? 2.0 * M_PI * rng.uniform()
                : 2.0 * M_PI * (i + 0.5) / count;
        double s_r = model.A_R + model.B_R * std::cos(phi_c + 0.5 * model.phi);
        double s_l = model.A_L + model.B_L * std::cos(phi_c - 0.5 * model.phi);
        if (model.sigma > 0.0) {
            s_r += model.sigma * rng.normal();
            s_l += model.sigma * rng.normal();
        }
        points.push_back({clip_signal(s_r), clip_signal(s_l)});
    }
    return points;
}

// ---------------------------------------------------------------------------
// Direct least-squares ellipse fit
// ---------------------------------------------------------------------------

EllipseFitResult fit_ellipse(const std::vector<FringePoint>& points) {
    const auto n = static_cast<Eigen::Index>(points.size());
    if (n < 6)
        throw std::invalid_argument("fit_ellipse: need at least 6 points");

    // Center and isotropically scale for conditioning.
    double mx = 0.0, my = 0.0;
    for (const auto& p : points) {
        mx += p.S_R;
        my += p.S_L;
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double ms = 0.0;
    for (const auto& p : points) {
        const double u = p.S_R - mx, v = p.S_L - my;
        ms += u * u + v * v;
    }
    const double scale = std::sqrt(ms / static_cast<double>(n));
    if (!(scale > 0.0))
        throw DegenerateConic("fit_ellipse: all points coincide");

    // Split design into quadratic and linear blocks.
    Eigen::MatrixXd d1(n, 3), d2(n, 3);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double u = (points[static_cast<std::size_t>(i)].S_R - mx) / scale;
        const double v = (points[static_cast<std::size_t>(i)].S_L - my) / scale;
        d1(i, 0) = u * u;
        d1(i, 1) = u * v;
        d1(i, 2) = v * v;
        d2(i, 0) = u;
        d2(i, 1) = v;
        d2(i, 2) = 1.0;
    }
    const Eigen::Matrix3d s1 = d1.transpose() * d1;
    const Eigen::Matrix3d s2 = d1.transpose() * d2;
    const Eigen::Matrix3d s3 = d2.transpose() * d2;

    Eigen::FullPivLU<Eigen::Matrix3d> lu(s3);
    if (lu.rank() < 3)
        throw DegenerateConic("fit_ellipse: collinear points");
    const Eigen::Matrix3d t = -lu.solve(s2.transpose());
    const Eigen::Matrix3d m = s1 + s2 * t;

    // Apply the inverse ellipse-constraint matrix to the reduced problem.
    Eigen::Matrix3d mr;
    mr.row(0) = m.row(2) / 2.0;
    mr.row(1) = -m.row(1);
    mr.row(2) = m.row(0) / 2.0;

    const Eigen::EigenSolver<Eigen::Matrix3d> eig(mr);
    Eigen::Vector3d quad = Eigen::Vector3d::Zero();
    double best = 0.0;
    for (int j = 0; j < 3; ++j) {
        if (std::abs(eig.eigenvalues()[j].imag()) >
            1e-8 * (1.0 + std::abs(eig.eigenvalues()[j].real())))
            continue;
        const Eigen::Vector3d v = eig.eigenvectors().col(j).real();
        const double constraint = 4.0 * v[0] * v[2] - v[1] * v[1];
        if (constraint > best) {
            best = constraint;
            quad = v;
        }
    }
    if (!(best > 0.0))
        throw DegenerateConic("fit_ellipse: no ellipse solution");
    const Eigen::Vector3d lin = t * quad;

    // Undo the normalization: u = (x - mx)/s, v = (y - my)/s.
    const double A = quad[0], B = quad[1], C = quad[2];
    const double D = lin[0], E = lin[1], F = lin[2];
    const double s2i = 1.0 / (scale * scale);
    Eigen::Matrix<double, 6, 1> conic;
    conic[0] = A * s2i;
    conic[1] = B * s2i;
    conic[2] = C * s2i;
    conic[3] = -(2.0 * A * mx + B * my) * s2i + D / scale;
    conic[4] = -(2.0 * C * my + B * mx) * s2i + E / scale;
    conic[5] = (A * mx * mx + B * mx * my + C * my * my) * s2i -
               (D * mx + E * my) / scale + F;
    conic.normalize();
    if (conic[0] < 0.0) conic = -conic;

    const double a = conic[0], b = conic[1], c = conic[2];
    const double d = conic[3], e = conic[4], f = conic[5];
    if (!(b * b - 4.0 * a * c < 0.0) || !(a * c > 0.0))
        throw DegenerateConic("fit_ellipse: fitted conic is not an ellipse");

    const double cos_phi = std::clamp(-b / (2.0 * std::sqrt(a * c)), -1.0, 1.0);
    if (std::abs(cos_phi) > 1.0 - 1e-4)
        throw DegenerateConic(
            "fit_ellipse: phase too close to 0 or pi for extraction");

    EllipseFitResult result;
    for (int i = 0; i < 6; ++i) result.conic[static_cast<std::size_t>(i)] = conic[i];
    result.phi = std::acos(cos_phi);

    // Axis ratio from the centered quadratic form.
    Eigen::Matrix2d q;
    q << a, b / 2.0, b / 2.0, c;
    Eigen::Matrix2d centering;
    centering << 2.0 * a, b, b, 2.0 * c;
    const Eigen::Vector2d center = centering.lu().solve(Eigen::Vector2d(-d, -e));
    const double f0 = f + 0.5 * (d * center[0] + e * center[1]);
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> qe(q);
    const double ax1 = -f0 / qe.eigenvalues()[0];
    const double ax2 = -f0 / qe.eigenvalues()[1];
    if (!(ax1 > 0.0) || !(ax2 > 0.0))
        throw DegenerateConic("fit_ellipse: degenerate axis lengths");
    result.ellipticity = std::sqrt(std::min(ax1, ax2) / std::max(ax1, ax2));

    const double sec = 1.0 / cos_phi;
    result.reference_ellipticity = std::sqrt(2.0 / (std::abs(sec) - 1.0));

    double ss = 0.0;
    for (const auto& p : points) {
        const double x = p.S_R, y = p.S_L;
        const double g = a * x * x + b * x * y + c * y * y + d * x + e * y + f;
        const double gx = 2.0 * a * x + b * y + d;
        const double gy = b * x + 2.0 * c * y + e;
        ss += g * g / (gx * gx + gy * gy);
    }
    result.residual = std::sqrt(ss / static_cast<double>(n));
    return result;
}

}  // namespace sagnac
