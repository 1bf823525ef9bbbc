#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "sagnac/sensitivity.hpp"

namespace sagnac {

// ---------------------------------------------------------------------------
// Run configuration
// ---------------------------------------------------------------------------
//
// Flat "key = value" text with [section] headers; '#' and ';' start comments.
// Sections: [run], [scales], [parameters], [integrator], [scan],
// [calibration].  Unknown sections, keys, and parameter names are rejected
// by name.  configs/default.cfg documents every key.

struct RunConfig {
    // [run]
    double zeta = 1.0;
    int n = 1;
    std::uint64_t seed = 1;

    // [scales] (optional SI block)
    bool has_scales = false;
    PhysicalScales scales;

    // [parameters] imperfections by canonical name
    std::map<std::string, double> overrides;

    // [integrator]
    IntegratorSettings integrator;

    // [scan]; n_list empty means "use the single n above"
    int scan_order = 2;
    double scan_h = 0.0;
    double scan_threshold = 1e-4;
    std::vector<int> n_list;
    std::vector<double> zeta_list;
    int threads = 0;
    bool richardson = false;

    // [calibration]
    std::vector<std::string> calibration_active;
    double calibration_tol = 1e-6;
    int calibration_max_iter = 20;
    bool calibration_remeasure = false;
};

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

// Zero vector with the configured overrides applied.
ParameterVector config_parameters(const RunConfig& config);

// Scan settings assembled from the config (order/h/threshold may have been
// overridden by command-line flags before this call).
ScanSettings config_scan_settings(const RunConfig& config, double zeta);

}  // namespace sagnac
