#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sagnac/calibration.hpp"
#include "sagnac/config.hpp"
#include "sagnac/errors.hpp"
#include "sagnac/fringe.hpp"
#include "sagnac/protocol.hpp"
#include "sagnac/sensitivity.hpp"

using namespace sagnac;

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

void emit(const std::string& out_path, const std::string& text) {
    if (out_path.empty()) {
        std::fwrite(text.data(), 1, text.size(), stdout);
        return;
    }
    std::ofstream out(out_path);
    if (!out)
        throw std::invalid_argument("cannot write output file '" + out_path + "'");
    out << text;
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) fields.push_back(field);
    return fields;
}

double parse_cell(const std::string& file, std::size_t lineno,
                  const std::string& cell) {
    const char* start = cell.c_str();
    char* end = nullptr;
    const double v = std::strtod(start, &end);
    if (end == start)
        throw std::invalid_argument("file '" + file + "' line " +
                                    std::to_string(lineno) +
                                    ": bad number '" + cell + "'");
    return v;
}

// Rows of a comma-separated file whose first line must match the header.
std::vector<std::vector<std::string>> read_csv(const std::string& path,
                                               const std::string& header) {
    std::ifstream in(path);
    if (!in)
        throw std::invalid_argument("cannot read input file '" + path + "'");
    std::string line;
    if (!std::getline(in, line))
        throw std::invalid_argument("input file '" + path + "' is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != header)
        throw std::invalid_argument("input file '" + path +
                                    "': expected header '" + header + "'");
    std::vector<std::vector<std::string>> rows;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        rows.push_back(split_fields(line));
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

void cmd_simulate(const RunConfig& config, const std::string& out) {
    const ScenarioConfig scenario =
        unpack_parameters(config_parameters(config), config.zeta);
    const RunReport report =
        run_with_operational_timing(scenario, config.n, config.integrator);
    if (out.empty())
        emit(out, run_report_kv(report));
    else
        emit(out, run_report_csv_header() + "\n" + run_report_csv_row(report) +
                      "\n");
}

void cmd_table(const RunConfig& config, const std::string& out) {
    if (config.scan_order < 1 || config.scan_order > 3)
        throw std::invalid_argument("table: order must be 1, 2, or 3");
    const std::vector<double> zetas =
        config.zeta_list.empty() ? std::vector<double>{config.zeta}
                                 : config.zeta_list;

    std::string csv = "zeta,name_1,name_2,name_3,n,coefficient\n";
    for (const double zeta : zetas) {
        if (config.scan_order == 1) {
            const auto n_list = config.n_list.empty() ? std::vector<int>{config.n}
                                                      : config.n_list;
            const double h = config.scan_h > 0.0 ? config.scan_h : 1e-4;
            for (const int n : n_list) {
                PhaseEvaluator eval(n, zeta, config.integrator);
                const ScalarField f = [&eval](const ParameterVector& e) {
                    return eval(e);
                };
                for (const auto& dir : full_parameter_directions()) {
                    const double g =
                        fd_gradient(f, ParameterVector::Zero(), dir.vector, h);
                    if (std::abs(g) > config.scan_threshold)
                        csv += fmt(zeta) + "," + dir.name + ",,," +
                               std::to_string(n) + "," + fmt(g) + "\n";
                }
            }
            continue;
        }

        const auto space = config.scan_order == 3 ? cylindrical_directions()
                                                  : full_parameter_directions();
        const ScanSettings settings = config_scan_settings(config, zeta);
        for (const auto& entry : table_scan(space, settings)) {
            std::string names;
            for (std::size_t i = 0; i < 3; ++i)
                names += (i < entry.names.size() ? entry.names[i] : "") +
                         std::string(i + 1 < 3 ? "," : "");
            for (const int n : settings.n_list)
                csv += fmt(zeta) + "," + names + "," + std::to_string(n) + "," +
                       fmt(entry.value_by_n.at(n)) + "\n";
        }
    }
    emit(out, csv);
}

void cmd_fitforms(const RunConfig&, const std::string& input, int p, int q,
                  int r, const std::string& out) {
    const auto rows = read_csv(input, "zeta,n,value");
    std::vector<double> zeta_order;
    std::map<double, std::vector<std::pair<int, double>>> by_zeta;
    std::size_t lineno = 1;
    for (const auto& row : rows) {
        ++lineno;
        if (row.size() != 3)
            throw std::invalid_argument("file '" + input + "' line " +
                                        std::to_string(lineno) +
                                        ": expected 3 columns");
        const double zeta = parse_cell(input, lineno, row[0]);
        const int n = static_cast<int>(parse_cell(input, lineno, row[1]));
        const double value = parse_cell(input, lineno, row[2]);
        if (by_zeta.find(zeta) == by_zeta.end()) zeta_order.push_back(zeta);
        by_zeta[zeta].push_back({n, value});
    }
    if (zeta_order.empty())
        throw InsufficientData("fitforms: no samples in '" + input + "'");

    std::string text;
    std::vector<std::pair<double, double>> amplitudes;
    for (const double zeta : zeta_order) {
        try {
            const NDependenceFit fit = fit_n_dependence(by_zeta[zeta], zeta);
            text += "zeta = " + fmt(zeta) + ": form = " + fit.form;
            if (fit.form == "poly")
                text += ", b = " + fmt(fit.b) + ", c = " + fmt(fit.c);
            else if (fit.form != "zero")
                text += ", amplitude = " + fmt(fit.amplitude) +
                        ", n0 = " + fmt(fit.n0);
            text += ", residual = " + fmt(fit.residual) + "\n";
            if (fit.form == "zero")
                amplitudes.push_back({zeta, 0.0});
            else if (fit.form != "poly")
                amplitudes.push_back({zeta, fit.amplitude});
        } catch (const AmbiguousFit& e) {
            text += "zeta = " + fmt(zeta) + ": ambiguous (" +
                    std::string(e.what()) + ")\n";
        }
    }

    if (!amplitudes.empty()) {
        bool all_zero = true;
        for (const auto& [z, a] : amplitudes) all_zero = all_zero && a == 0.0;
        if (all_zero)
            text += "A0 = 0 (all amplitudes zero)\n";
        else
            text += "A0 = " + fmt(fit_zeta_amplitude(amplitudes, p, q, r)) +
                    " (p = " + std::to_string(p) + ", q = " + std::to_string(q) +
                    ", r = " + std::to_string(r) + ")\n";
    }
    emit(out, text);
}

void cmd_calibrate(const RunConfig& config, const std::string& active_flag,
                   const std::string& out) {
    std::vector<std::string> active;
    if (!active_flag.empty()) {
        std::string item;
        std::istringstream in(active_flag);
        while (std::getline(in, item, ','))
            if (!item.empty()) active.push_back(item);
    } else {
        active = config.calibration_active;
    }
    if (active.empty())
        throw std::invalid_argument(
            "calibrate: no active parameters (set [calibration] active or "
            "--active)");

    const ParameterVector offsets = config_parameters(config);
    const int n = config.n;
    const double zeta = config.zeta;
    const IntegratorSettings integrator = config.integrator;
    const ScalarField experiment = [=](const ParameterVector& knobs) {
        return phase_at(knobs - offsets, n, zeta, integrator);
    };

    CalibrationSettings settings;
    if (config.scan_h > 0.0) settings.h = config.scan_h;
    settings.tol = config.calibration_tol;
    settings.max_iter = config.calibration_max_iter;
    settings.remeasure = config.calibration_remeasure;

    const CalibrationState state =
        iterate_calibration(experiment, active, ParameterVector::Zero(), settings);
    for (const auto& w : state.warnings)
        std::fprintf(stderr, "warning: %s\n", w.c_str());
    if (!state.converged)
        std::fprintf(stderr, "warning: not converged after %d iterations\n",
                     state.iteration);
    emit(out, calibration_csv(state));
}

void cmd_ellipse(const std::string& input, const std::string& out) {
    const auto rows = read_csv(input, "S_R,S_L");
    std::vector<FringePoint> points;
    std::size_t lineno = 1;
    for (const auto& row : rows) {
        ++lineno;
        if (row.size() != 2)
            throw std::invalid_argument("file '" + input + "' line " +
                                        std::to_string(lineno) +
                                        ": expected 2 columns");
        points.push_back({parse_cell(input, lineno, row[0]),
                          parse_cell(input, lineno, row[1])});
    }

    const EllipseFitResult fit = fit_ellipse(points);

    // Leave-one-out spread of the extracted phase.
    double stderr_phi = std::numeric_limits<double>::quiet_NaN();
    if (points.size() > 6) {
        std::vector<double> phis;
        for (std::size_t skip = 0; skip < points.size(); ++skip) {
            std::vector<FringePoint> rest;
            rest.reserve(points.size() - 1);
            for (std::size_t i = 0; i < points.size(); ++i)
                if (i != skip) rest.push_back(points[i]);
            try {
                phis.push_back(fit_ellipse(rest).phi);
            } catch (const DegenerateConic&) {
            }
        }
        if (phis.size() > 1) {
            double mean = 0.0;
            for (const double p : phis) mean += p;
            mean /= static_cast<double>(phis.size());
            double ss = 0.0;
            for (const double p : phis) ss += (p - mean) * (p - mean);
            const double m = static_cast<double>(phis.size());
            stderr_phi = std::sqrt((m - 1.0) / m * ss);
        }
    }

    std::string text;
    text += "points = " + std::to_string(points.size()) + "\n";
    const char* names[6] = {"conic_a", "conic_b", "conic_c",
                            "conic_d", "conic_e", "conic_f"};
    for (int i = 0; i < 6; ++i)
        text += std::string(names[i]) + " = " +
                fmt(fit.conic[static_cast<std::size_t>(i)]) + "\n";
    text += "phi = " + fmt(fit.phi) + "\n";
    text += "phi_stderr = " + fmt(stderr_phi) + "\n";
    text += "ellipticity = " + fmt(fit.ellipticity) + "\n";
    text += "reference_ellipticity = " + fmt(fit.reference_ellipticity) + "\n";
    text += "# reference formula uses a different shape convention (it vanishes"
            " at quadrature); reported for comparison only\n";
    text += "residual = " + fmt(fit.residual) + "\n";
    emit(out, text);
}

void cmd_budget(const RunConfig& config, const std::string& input,
                double target, std::optional<double> omega_flag,
                const std::string& out) {
    if (!(target > 0.0))
        throw std::invalid_argument("budget: --target must be positive");
    double omega = 0.0;
    if (omega_flag)
        omega = *omega_flag;
    else if (config.has_scales && config.scales.omega > 0.0)
        omega = config.scales.omega;
    else
        throw std::invalid_argument("budget: need --omega or [scales] omega");

    const auto rows = read_csv(input, "zeta,name_1,name_2,name_3,n,coefficient");
    std::string csv = "zeta,name_1,name_2,name_3,n,coefficient,allowed_eta\n";
    std::size_t lineno = 1;
    for (const auto& row : rows) {
        ++lineno;
        if (row.size() != 6)
            throw std::invalid_argument("file '" + input + "' line " +
                                        std::to_string(lineno) +
                                        ": expected 6 columns");
        const int n = static_cast<int>(parse_cell(input, lineno, row[4]));
        const double coefficient = parse_cell(input, lineno, row[5]);
        const double allowed = allowed_imperfection(coefficient, omega, target, n);
        csv += row[0] + "," + row[1] + "," + row[2] + "," + row[3] + "," +
               row[4] + "," + row[5] + "," + fmt(allowed) + "\n";
    }
    emit(out, csv);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Dual Sagnac interferometer simulator"};
    app.set_help_flag("--help", "print this help message and exit");
    app.require_subcommand(1);

    std::string config_path, out_path;
    std::optional<double> zeta_flag, h_flag, threshold_flag;
    std::optional<int> n_flag, order_flag;
    std::optional<std::uint64_t> seed_flag;
    app.add_option("--config", config_path, "configuration file path");
    app.add_option("--zeta", zeta_flag, "axial/radial frequency ratio");
    app.add_option("--n", n_flag, "orbit count of the second hold");
    app.add_option("--order", order_flag, "scan order")
        ->check(CLI::IsMember({1, 2, 3}));
    app.add_option("--h", h_flag, "finite-difference step");
    app.add_option("--threshold", threshold_flag, "scan retention threshold");
    app.add_option("--seed", seed_flag, "Monte-Carlo seed");
    app.add_option("--out", out_path, "write output to this file");

    auto* simulate = app.add_subcommand("simulate", "run one configuration");
    auto* table = app.add_subcommand("table", "scan imperfection couplings");
    auto* fitforms =
        app.add_subcommand("fitforms", "fit orbit-count and ratio dependences");
    auto* calibrate =
        app.add_subcommand("calibrate", "iterate the quadratic-model calibration");
    auto* ellipse = app.add_subcommand("ellipse", "extract a phase from signals");
    auto* budget = app.add_subcommand("budget", "allowed imperfection sizes");
    for (auto* sub : {simulate, table, fitforms, calibrate, ellipse, budget})
        sub->fallthrough();

    std::string fit_input;
    int fit_p = 0, fit_q = 0, fit_r = 0;
    fitforms->add_option("--input", fit_input, "CSV with header zeta,n,value")
        ->required();
    fitforms->add_option("--p", fit_p, "ratio power of zeta");
    fitforms->add_option("--q", fit_q, "ratio power of (1 - zeta^2)");
    fitforms->add_option("--r", fit_r, "ratio power of (9 - zeta^2)");

    std::string active_flag;
    calibrate->add_option("--active", active_flag,
                          "comma-separated adjustable parameters");

    std::string ellipse_input;
    ellipse->add_option("--input", ellipse_input, "CSV with header S_R,S_L")
        ->required();

    std::string budget_input;
    double budget_target = 0.0;
    std::optional<double> omega_flag;
    budget->add_option("--input", budget_input, "table CSV to budget")
        ->required();
    budget->add_option("--target", budget_target, "rotation bias bound, rad/s")
        ->required();
    budget->add_option("--omega", omega_flag, "radial trap frequency, rad/s");

    CLI11_PARSE(app, argc, argv);

    try {
        RunConfig config =
            config_path.empty() ? RunConfig{} : load_config(config_path);
        if (zeta_flag) config.zeta = *zeta_flag;
        if (n_flag) config.n = *n_flag;
        if (order_flag) config.scan_order = *order_flag;
        if (h_flag) config.scan_h = *h_flag;
        if (threshold_flag) config.scan_threshold = *threshold_flag;
        if (seed_flag) config.seed = *seed_flag;
        if (!(config.zeta > 0.0))
            throw std::invalid_argument("zeta must be positive");
        if (config.n < 1) throw std::invalid_argument("n must be >= 1");

        if (simulate->parsed())
            cmd_simulate(config, out_path);
        else if (table->parsed())
            cmd_table(config, out_path);
        else if (fitforms->parsed())
            cmd_fitforms(config, fit_input, fit_p, fit_q, fit_r, out_path);
        else if (calibrate->parsed())
            cmd_calibrate(config, active_flag, out_path);
        else if (ellipse->parsed())
            cmd_ellipse(ellipse_input, out_path);
        else if (budget->parsed())
            cmd_budget(config, budget_input, budget_target, omega_flag, out_path);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
