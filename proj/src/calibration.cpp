#include "sagnac/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "sagnac/errors.hpp"

namespace sagnac {

namespace {

ParameterVector axis_direction(int index) {
    ParameterVector d = ParameterVector::Zero();
    d[index] = 1.0;
    return d;
}

bool any_member(const std::vector<std::string>& names,
                const std::vector<std::string>& group) {
    for (const auto& n : names)
        if (std::find(group.begin(), group.end(), n) != group.end()) return true;
    return false;
}

}  // namespace

// ---------------------------------------------------------------------------
// Model-minimum estimate
// ---------------------------------------------------------------------------

Eigen::VectorXd estimate_eta0(const Eigen::MatrixXd& M, const Eigen::VectorXd& g) {
    if (M.rows() != M.cols() || M.rows() != g.size())
        throw std::invalid_argument("estimate_eta0: M must be square and match g");
    if (!M.allFinite() || !g.allFinite())
        throw SingularMatrix("estimate_eta0: non-finite model matrix or gradient");

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const double smax = svd.singularValues()(0);
    const double smin = svd.singularValues()(svd.singularValues().size() - 1);
    if (!(smin > 0.0) || smax / smin > 1e8)
        throw SingularMatrix("estimate_eta0: model matrix condition number exceeds 1e8");

    return -0.5 * svd.solve(g);
}

// ---------------------------------------------------------------------------
// Subset measurements
// ---------------------------------------------------------------------------

Eigen::VectorXd measure_subset_gradient(const ScalarField& f,
                                        const ParameterVector& knobs,
                                        const std::vector<int>& indices,
                                        double h) {
    Eigen::VectorXd g(static_cast<Eigen::Index>(indices.size()));
    for (std::size_t i = 0; i < indices.size(); ++i)
        g[static_cast<Eigen::Index>(i)] =
            fd_gradient(f, knobs, axis_direction(indices[i]), h);
    return g;
}

Eigen::MatrixXd measure_subset_half_hessian(const ScalarField& f,
                                            const ParameterVector& knobs,
                                            const std::vector<int>& indices,
                                            double h) {
    const auto m = static_cast<Eigen::Index>(indices.size());
    Eigen::MatrixXd M(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
        const ParameterVector di = axis_direction(indices[static_cast<std::size_t>(i)]);
        for (Eigen::Index j = i; j < m; ++j) {
            const ParameterVector dj =
                axis_direction(indices[static_cast<std::size_t>(j)]);
            const double half = 0.5 * fd_second(f, knobs, di, dj, h);
            M(i, j) = half;
            M(j, i) = half;
        }
    }
    return M;
}

// ---------------------------------------------------------------------------
// Calibration loop
// ---------------------------------------------------------------------------

CalibrationState iterate_calibration(const ScalarField& phase,
                                     const std::vector<std::string>& active,
                                     const ParameterVector& start,
                                     const CalibrationSettings& settings) {
    if (active.empty())
        throw std::invalid_argument("iterate_calibration: empty active subset");
    if (!(settings.h > 0.0) || !(settings.tol > 0.0) || settings.max_iter < 1)
        throw std::invalid_argument("iterate_calibration: bad settings");

    CalibrationState state;
    state.active = active;
    for (const auto& name : active)
        state.indices.push_back(parameter_index(name));
    state.knobs = start;

    if (any_member(active, horizontal_group()) &&
        any_member(active, vertical_group())) {
        state.straddles_groups = true;
        state.warnings.push_back(
            "active subset straddles the two independent parameter groups; "
            "their couplings vanish and joint calibration gains nothing");
    }

    int growth_streak = 0;
    for (int it = 1; it <= settings.max_iter; ++it) {
        if (it == 1 || settings.remeasure)
            state.M = measure_subset_half_hessian(phase, state.knobs,
                                                  state.indices, settings.h);

        state.gradient =
            measure_subset_gradient(phase, state.knobs, state.indices, settings.h);
        const double gnorm = state.gradient.lpNorm<Eigen::Infinity>();

        state.iteration = it;
        Eigen::VectorXd eta(static_cast<Eigen::Index>(state.indices.size()));
        for (std::size_t i = 0; i < state.indices.size(); ++i)
            eta[static_cast<Eigen::Index>(i)] = state.knobs[state.indices[i]];
        state.eta = eta;
        state.eta_history.push_back(eta);
        state.grad_norm_history.push_back(gnorm);
        state.phase_history.push_back(phase(state.knobs));

        if (gnorm < settings.tol) {
            state.converged = true;
            return state;
        }

        const std::size_t k = state.grad_norm_history.size();
        if (k >= 2 && state.grad_norm_history[k - 1] > state.grad_norm_history[k - 2])
            ++growth_streak;
        else
            growth_streak = 0;
        if (growth_streak >= 3)
            throw Diverged("iterate_calibration: gradient norm grew for 3 "
                           "consecutive iterations");

        const Eigen::VectorXd shift = estimate_eta0(state.M, state.gradient);
        for (std::size_t i = 0; i < state.indices.size(); ++i)
            state.knobs[state.indices[i]] += shift[static_cast<Eigen::Index>(i)];
    }

    Eigen::VectorXd eta(static_cast<Eigen::Index>(state.indices.size()));
    for (std::size_t i = 0; i < state.indices.size(); ++i)
        eta[static_cast<Eigen::Index>(i)] = state.knobs[state.indices[i]];
    state.eta = eta;
    return state;
}

// ---------------------------------------------------------------------------
// Trace output
// ---------------------------------------------------------------------------

std::string calibration_csv(const CalibrationState& state) {
    std::string out = "iteration";
    for (const auto& name : state.active) out += "," + name;
    out += ",grad_inf,phase\n";

    char buf[64];
    for (std::size_t row = 0; row < state.grad_norm_history.size(); ++row) {
        std::snprintf(buf, sizeof(buf), "%zu", row + 1);
        out += buf;
        for (Eigen::Index i = 0; i < state.eta_history[row].size(); ++i) {
            std::snprintf(buf, sizeof(buf), ",%.12g", state.eta_history[row][i]);
            out += buf;
        }
        std::snprintf(buf, sizeof(buf), ",%.12g,%.12g\n",
                      state.grad_norm_history[row], state.phase_history[row]);
        out += buf;
    }
    return out;
}

}  // namespace sagnac
