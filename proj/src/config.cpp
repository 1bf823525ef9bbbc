#include "sagnac/config.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "sagnac/errors.hpp"

namespace sagnac {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

double parse_double(const std::string& key, const std::string& value) {
    const char* start = value.c_str();
    char* end = nullptr;
    const double v = std::strtod(start, &end);
    if (end == start || *end != '\0')
        throw std::invalid_argument("config: bad numeric value for '" + key +
                                    "': " + value);
    return v;
}

long long parse_int(const std::string& key, const std::string& value) {
    const char* start = value.c_str();
    char* end = nullptr;
    const long long v = std::strtoll(start, &end, 10);
    if (end == start || *end != '\0')
        throw std::invalid_argument("config: bad integer value for '" + key +
                                    "': " + value);
    return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw std::invalid_argument("config: bad boolean value for '" + key +
                                "': " + value);
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> items;
    std::string item;
    std::istringstream in(value);
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (!item.empty()) items.push_back(item);
    }
    return items;
}

}  // namespace

RunConfig parse_config(const std::string& text) {
    RunConfig config;
    std::string section = "run";
    std::istringstream in(text);
    std::string raw;

    while (std::getline(in, raw)) {
        const std::size_t cut = raw.find_first_of("#;");
        std::string line = trim(cut == std::string::npos ? raw : raw.substr(0, cut));
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']')
                throw std::invalid_argument("config: malformed section line: " + line);
            section = trim(line.substr(1, line.size() - 2));
            if (section != "run" && section != "scales" && section != "parameters" &&
                section != "integrator" && section != "scan" &&
                section != "calibration")
                throw std::invalid_argument("config: unknown section '" + section +
                                            "'");
            continue;
        }

        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config: expected 'key = value', got: " +
                                        line);
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const std::string path = section + "." + key;

        if (section == "run") {
            if (key == "zeta")
                config.zeta = parse_double(path, value);
            else if (key == "n")
                config.n = static_cast<int>(parse_int(path, value));
            else if (key == "seed")
                config.seed = static_cast<std::uint64_t>(parse_int(path, value));
            else
                throw std::invalid_argument("config: unknown key '" + path + "'");
        } else if (section == "scales") {
            config.has_scales = true;
            if (key == "mass")
                config.scales.mass = parse_double(path, value);
            else if (key == "wavenumber")
                config.scales.wavenumber = parse_double(path, value);
            else if (key == "omega")
                config.scales.omega = parse_double(path, value);
            else
                throw std::invalid_argument("config: unknown key '" + path + "'");
        } else if (section == "parameters") {
            parameter_index(key);  // rejects unknown names
            config.overrides[key] = parse_double(path, value);
        } else if (section == "integrator") {
            if (key == "rel_tol")
                config.integrator.rel_tol = parse_double(path, value);
            else if (key == "abs_tol")
                config.integrator.abs_tol = parse_double(path, value);
            else if (key == "max_step")
                config.integrator.max_step = parse_double(path, value);
            else
                throw std::invalid_argument("config: unknown key '" + path + "'");
        } else if (section == "scan") {
            if (key == "order")
                config.scan_order = static_cast<int>(parse_int(path, value));
            else if (key == "h")
                config.scan_h = parse_double(path, value);
            else if (key == "threshold")
                config.scan_threshold = parse_double(path, value);
            else if (key == "n_list") {
                config.n_list.clear();
                for (const auto& item : split_list(value))
                    config.n_list.push_back(static_cast<int>(parse_int(path, item)));
            } else if (key == "zeta_list") {
                config.zeta_list.clear();
                for (const auto& item : split_list(value))
                    config.zeta_list.push_back(parse_double(path, item));
            } else if (key == "threads")
                config.threads = static_cast<int>(parse_int(path, value));
            else if (key == "richardson")
                config.richardson = parse_bool(path, value);
            else
                throw std::invalid_argument("config: unknown key '" + path + "'");
        } else {  // calibration
            if (key == "active")
                config.calibration_active = split_list(value);
            else if (key == "tol")
                config.calibration_tol = parse_double(path, value);
            else if (key == "max_iter")
                config.calibration_max_iter = static_cast<int>(parse_int(path, value));
            else if (key == "remeasure")
                config.calibration_remeasure = parse_bool(path, value);
            else
                throw std::invalid_argument("config: unknown key '" + path + "'");
        }
    }

    if (!(config.zeta > 0.0))
        throw std::invalid_argument("config: zeta must be positive");
    if (config.n < 1)
        throw std::invalid_argument("config: n must be >= 1");
    for (const auto& name : config.calibration_active) parameter_index(name);
    return config;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::invalid_argument("config: cannot read file '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str());
}

ParameterVector config_parameters(const RunConfig& config) {
    ParameterVector eta = ParameterVector::Zero();
    for (const auto& [name, value] : config.overrides)
        eta[parameter_index(name)] = value;
    return eta;
}

ScanSettings config_scan_settings(const RunConfig& config, double zeta) {
    ScanSettings settings;
    settings.order = config.scan_order;
    settings.h = config.scan_h;
    settings.threshold = config.scan_threshold;
    settings.n_list = config.n_list.empty() ? std::vector<int>{config.n}
                                            : config.n_list;
    settings.zeta = zeta;
    settings.integrator = config.integrator;
    settings.threads = config.threads;
    settings.richardson = config.richardson;
    return settings;
}

}  // namespace sagnac
