#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sagnac/sensitivity.hpp"

namespace sagnac {

// ---------------------------------------------------------------------------
// Quadratic-model calibration
// ---------------------------------------------------------------------------
//
// Near the ideal configuration the phase obeys Phi ~ (eta - eta0)^T M
// (eta - eta0) for unknown ideal settings eta0.  Measuring the gradient g and
// the model matrix M (half the phase Hessian) on an adjustable subset of
// parameters lets an experiment walk its knobs to eta0:
//   g = 2 M (eta - eta0)   =>   eta0 - eta = -1/2 M^{-1} g.

struct CalibrationSettings {
    double h = 1e-4;          // finite-difference step for g and M
    double tol = 1e-6;        // stop when |g|_inf drops below this
    int max_iter = 20;
    bool remeasure = false;   // re-measure M each iteration (default: reuse)
};

struct CalibrationState {
    std::vector<std::string> active;  // adjustable parameter names, fixed
    std::vector<int> indices;         // their canonical indices
    ParameterVector knobs = ParameterVector::Zero();  // full current settings
    Eigen::VectorXd eta;              // current active-subset values
    Eigen::MatrixXd M;                // measured quadratic model matrix
    Eigen::VectorXd gradient;         // latest measured subset gradient
    int iteration = 0;                // gradient measurements performed
    bool converged = false;
    bool straddles_groups = false;    // subset mixes the independent groups
    std::vector<std::string> warnings;
    std::vector<double> grad_norm_history;      // |g|_inf per iteration
    std::vector<double> phase_history;          // Phi at each measured point
    std::vector<Eigen::VectorXd> eta_history;   // subset values at each point
};

// Knob shift -1/2 M^{-1} g toward the model minimum.  Throws SingularMatrix
// when the condition number exceeds 1e8 (no silent pseudo-inverse).
Eigen::VectorXd estimate_eta0(const Eigen::MatrixXd& M, const Eigen::VectorXd& g);

// Central-difference gradient of f over the chosen parameter indices.
Eigen::VectorXd measure_subset_gradient(const ScalarField& f,
                                        const ParameterVector& knobs,
                                        const std::vector<int>& indices,
                                        double h);

// Half the Hessian of f over the chosen indices: the model matrix M.
Eigen::MatrixXd measure_subset_half_hessian(const ScalarField& f,
                                            const ParameterVector& knobs,
                                            const std::vector<int>& indices,
                                            double h);

// Iterate measure-and-shift until |g|_inf < tol or max_iter.  M is measured
// at the start and reused unless settings.remeasure is set.  Warns (flag +
// message) when the subset straddles the two independent parameter groups;
// throws Diverged when |g|_inf grows three iterations in a row, and
// UnknownParameterName / std::invalid_argument on bad subsets.
CalibrationState iterate_calibration(const ScalarField& phase,
                                     const std::vector<std::string>& active,
                                     const ParameterVector& start,
                                     const CalibrationSettings& settings = {});

// One CSV row per iteration: iteration, each active parameter, |g|_inf, Phi.
std::string calibration_csv(const CalibrationState& state);

}  // namespace sagnac
