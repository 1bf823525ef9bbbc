#include "sagnac/sensitivity.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <mutex>
#include <thread>
#include <unordered_map>

namespace sagnac {

// ---------------------------------------------------------------------------
// Phase as a function of the perturbation vector
// ---------------------------------------------------------------------------

double phase_at(const ParameterVector& eta, int n, double zeta,
                const IntegratorSettings& settings) {
    const ScenarioConfig scenario = unpack_parameters(eta, zeta);
    return run_with_operational_timing(scenario, n, settings)
        .phases.differential;
}

namespace {

using CacheKey = std::array<std::uint64_t, kParameterCount>;

struct CacheKeyHash {
    std::size_t operator()(const CacheKey& key) const {
        std::uint64_t h = 1469598103934665603ull;
        for (std::uint64_t w : key) {
            h ^= w;
            h *= 1099511628211ull;
        }
        return static_cast<std::size_t>(h);
    }
};

CacheKey cache_key(const ParameterVector& eta) {
    CacheKey key;
    for (int i = 0; i < kParameterCount; ++i)
        key[static_cast<std::size_t>(i)] = std::bit_cast<std::uint64_t>(eta[i]);
    return key;
}

}  // namespace

struct PhaseEvaluator::Cache {
    std::mutex mutex;
    std::unordered_map<CacheKey, double, CacheKeyHash> map;
};

PhaseEvaluator::PhaseEvaluator(int n, double zeta, IntegratorSettings settings)
    : n_(n), zeta_(zeta), settings_(settings), cache_(std::make_shared<Cache>()) {
    if (n < 1) throw std::invalid_argument("orbit count n must be >= 1");
    if (!(zeta > 0.0))
        throw std::invalid_argument("frequency ratio zeta must be positive");
}

double PhaseEvaluator::operator()(const ParameterVector& eta) const {
    const CacheKey key = cache_key(eta);
    {
        std::lock_guard<std::mutex> lock(cache_->mutex);
        const auto it = cache_->map.find(key);
        if (it != cache_->map.end()) return it->second;
    }
    const double value = phase_at(eta, n_, zeta_, settings_);
    std::lock_guard<std::mutex> lock(cache_->mutex);
    cache_->map.emplace(key, value);
    return value;
}

std::size_t PhaseEvaluator::cache_size() const {
    std::lock_guard<std::mutex> lock(cache_->mutex);
    return cache_->map.size();
}

// ---------------------------------------------------------------------------
// Finite differences along parameter-space directions
// ---------------------------------------------------------------------------

double fd_gradient(const ScalarField& f, const ParameterVector& base,
                   const ParameterVector& dir, double h) {
    return (f(base + h * dir) - f(base - h * dir)) / (2.0 * h);
}

double fd_second(const ScalarField& f, const ParameterVector& base,
                 const ParameterVector& d1, const ParameterVector& d2,
                 double h) {
    if ((d1 - d2).isZero(0.0)) {
        return (f(base + h * d1) - 2.0 * f(base) + f(base - h * d1)) / (h * h);
    }
    return (f(base + h * d1 + h * d2) - f(base + h * d1 - h * d2) -
            f(base - h * d1 + h * d2) + f(base - h * d1 - h * d2)) /
           (4.0 * h * h);
}

double fd_third(const ScalarField& f, const ParameterVector& base,
                const ParameterVector& d1, const ParameterVector& d2,
                const ParameterVector& d3, double h) {
    const bool eq12 = (d1 - d2).isZero(0.0);
    const bool eq13 = (d1 - d3).isZero(0.0);
    const bool eq23 = (d2 - d3).isZero(0.0);
    const double h3 = h * h * h;

    if (eq12 && eq13) {
        return (f(base + 2.0 * h * d1) - 2.0 * f(base + h * d1) +
                2.0 * f(base - h * d1) - f(base - 2.0 * h * d1)) /
               (2.0 * h3);
    }
    if (eq12 || eq13 || eq23) {
        // Repeated leg a, single leg b.
        const ParameterVector& a = eq23 ? d2 : d1;
        const ParameterVector& b = eq12 ? d3 : (eq13 ? d2 : d1);
        return (f(base + h * a + h * b) - 2.0 * f(base + h * b) +
                f(base - h * a + h * b) - f(base + h * a - h * b) +
                2.0 * f(base - h * b) - f(base - h * a - h * b)) /
               (2.0 * h3);
    }
    double sum = 0.0;
    for (int s1 : {+1, -1})
        for (int s2 : {+1, -1})
            for (int s3 : {+1, -1})
                sum += s1 * s2 * s3 *
                       f(base + s1 * h * d1 + s2 * h * d2 + s3 * h * d3);
    return sum / (8.0 * h3);
}

// ---------------------------------------------------------------------------
// Scan directions
// ---------------------------------------------------------------------------

namespace {

ParameterVector axis(const std::string& name) {
    ParameterVector v = ParameterVector::Zero();
    v[parameter_index(name)] = 1.0;
    return v;
}

}  // namespace

std::vector<Direction> full_parameter_directions() {
    std::vector<Direction> dirs;
    dirs.reserve(kParameterCount);
    for (const auto& name : parameter_names()) dirs.push_back({name, axis(name)});
    return dirs;
}

std::vector<Direction> cylindrical_directions() {
    std::vector<Direction> dirs;
    dirs.push_back({"c200", axis("c200") + axis("c020")});
    dirs.push_back({"c002", axis("c002")});
    dirs.push_back({"c201", axis("c201") + axis("c021")});
    dirs.push_back({"c003", axis("c003")});
    dirs.push_back({"c400", axis("c400") + axis("c040") + 2.0 * axis("c220")});
    dirs.push_back({"c202", axis("c202") + axis("c022")});
    dirs.push_back({"c004", axis("c004")});
    for (const char* name : {"x0", "y0", "z0", "vx0", "vy0", "vz0", "psi_x_p",
                             "psi_x_pp", "psi_y_p", "psi_y_pp", "delta1",
                             "delta2"})
        dirs.push_back({name, axis(name)});
    return dirs;
}

std::vector<Direction> directions_for(const std::vector<std::string>& names) {
    std::vector<Direction> dirs;
    dirs.reserve(names.size());
    for (const auto& name : names) dirs.push_back({name, axis(name)});
    return dirs;
}

const Direction& find_direction(const std::vector<Direction>& space,
                                const std::string& name) {
    for (const auto& dir : space)
        if (dir.name == name) return dir;
    throw UnknownParameterName("no scan direction named " + name);
}

// ---------------------------------------------------------------------------
// Sensitivity scans
// ---------------------------------------------------------------------------

namespace {

// Index-sharded worker pool; rethrows the first failure on the caller.
void parallel_for(std::size_t count, int threads,
                  const std::function<void(std::size_t)>& body) {
    int t = threads > 0 ? threads
                        : static_cast<int>(std::thread::hardware_concurrency());
    if (t < 1) t = 1;
    if (t == 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        std::size_t i;
        while (!failed.load(std::memory_order_relaxed) &&
               (i = next.fetch_add(1)) < count) {
            try {
                body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                failed.store(true);
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(t));
    for (int k = 0; k < t; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace

double scan_coefficient(const PhaseEvaluator& phase,
                        const std::vector<Direction>& legs, double h) {
    if (!(h > 0.0)) throw std::invalid_argument("step must be positive");
    const ScalarField f = [&phase](const ParameterVector& eta) {
        return phase(eta);
    };
    const ParameterVector base = ParameterVector::Zero();
    switch (legs.size()) {
        case 1:
            return fd_gradient(f, base, legs[0].vector, h);
        case 2:
            return fd_second(f, base, legs[0].vector, legs[1].vector, h);
        case 3:
            return fd_third(f, base, legs[0].vector, legs[1].vector,
                            legs[2].vector, h);
        default:
            throw std::invalid_argument("1 to 3 legs required");
    }
}

std::vector<SensitivityEntry> table_scan(const std::vector<Direction>& space,
                                         const ScanSettings& settings) {
    if (settings.order != 2 && settings.order != 3)
        throw std::invalid_argument("scan order must be 2 or 3");
    if (settings.n_list.empty())
        throw std::invalid_argument("at least one orbit count required");
    const double h = settings.step();
    const int m = static_cast<int>(space.size());

    std::vector<std::array<int, 3>> tuples;
    if (settings.order == 2) {
        for (int i = 0; i < m; ++i)
            for (int j = i; j < m; ++j) tuples.push_back({i, j, -1});
    } else {
        for (int i = 0; i < m; ++i)
            for (int j = i; j < m; ++j)
                for (int k = j; k < m; ++k) tuples.push_back({i, j, k});
    }

    const auto evaluate = [&](const PhaseEvaluator& phase,
                              const std::array<int, 3>& tuple, double step) {
        std::vector<Direction> legs;
        for (int idx : tuple)
            if (idx >= 0) legs.push_back(space[static_cast<std::size_t>(idx)]);
        return scan_coefficient(phase, legs, step);
    };

    const int n0 = settings.n_list.front();
    const PhaseEvaluator phase0(n0, settings.zeta, settings.integrator);
    std::vector<double> first(tuples.size(), 0.0);
    parallel_for(tuples.size(), settings.threads, [&](std::size_t t) {
        first[t] = evaluate(phase0, tuples[t], h);
    });

    std::vector<SensitivityEntry> entries;
    std::vector<std::array<int, 3>> retained;
    for (std::size_t t = 0; t < tuples.size(); ++t) {
        if (std::abs(first[t]) <= settings.threshold) continue;
        SensitivityEntry entry;
        for (int idx : tuples[t])
            if (idx >= 0) entry.names.push_back(space[static_cast<std::size_t>(idx)].name);
        entry.value_by_n[n0] = first[t];
        entries.push_back(std::move(entry));
        retained.push_back(tuples[t]);
    }

    for (std::size_t ni = 1; ni < settings.n_list.size(); ++ni) {
        const int n = settings.n_list[ni];
        const PhaseEvaluator phase_n(n, settings.zeta, settings.integrator);
        std::vector<double> values(retained.size(), 0.0);
        parallel_for(retained.size(), settings.threads, [&](std::size_t t) {
            values[t] = evaluate(phase_n, retained[t], h);
        });
        for (std::size_t t = 0; t < retained.size(); ++t)
            entries[t].value_by_n[n] = values[t];
    }

    if (settings.richardson) {
        std::vector<double> halved(retained.size(), 0.0);
        parallel_for(retained.size(), settings.threads, [&](std::size_t t) {
            halved[t] = evaluate(phase0, retained[t], 0.5 * h);
        });
        for (std::size_t t = 0; t < retained.size(); ++t)
            entries[t].richardson_delta =
                std::abs(entries[t].value_by_n[n0] - halved[t]);
    }
    return entries;
}

// ---------------------------------------------------------------------------
// Dependence fits
// ---------------------------------------------------------------------------

namespace {

double golden_min(const std::function<double(double)>& f, double a, double b,
                  double xtol) {
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
    double f1 = f(x1), f2 = f(x2);
    int guard = 0;
    while (b - a > xtol && ++guard < 200) {
        if (f1 < f2) {
            b = x2; x2 = x1; f2 = f1;
            x1 = b - gr * (b - a); f1 = f(x1);
        } else {
            a = x1; x1 = x2; f1 = f2;
            x2 = a + gr * (b - a); f2 = f(x2);
        }
    }
    return 0.5 * (a + b);
}

// Best scale A for data ~ A * model, with the relative residual.
std::pair<double, double> scale_fit(const std::vector<double>& data,
                                    const std::vector<double>& model,
                                    double data_norm) {
    double mm = 0.0, dm = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        mm += model[i] * model[i];
        dm += data[i] * model[i];
    }
    if (mm < 1e-24) return {0.0, 1.0};
    const double a = dm / mm;
    double res = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const double r = data[i] - a * model[i];
        res += r * r;
    }
    return {a, std::sqrt(res) / data_norm};
}

}  // namespace

NDependenceFit fit_n_dependence(const std::vector<std::pair<int, double>>& samples,
                                double zeta) {
    if (samples.size() < 4)
        throw InsufficientData("n-dependence fit needs at least 4 samples");

    std::vector<double> data;
    double norm_sq = 0.0;
    for (const auto& [n, c] : samples) {
        (void)n;
        data.push_back(c);
        norm_sq += c * c;
    }
    const double norm = std::sqrt(norm_sq);

    NDependenceFit fit;
    if (norm < 1e-12) {
        fit.form = "zero";
        return fit;
    }

    // b n + c n^2 by 2x2 normal equations.
    double s2 = 0, s3 = 0, s4 = 0, d1 = 0, d2 = 0;
    for (const auto& [n, c] : samples) {
        const double x = n;
        s2 += x * x; s3 += x * x * x; s4 += x * x * x * x;
        d1 += c * x; d2 += c * x * x;
    }
    const double det = s2 * s4 - s3 * s3;
    double res_poly = 1.0, pb = 0.0, pc = 0.0;
    if (std::abs(det) > 1e-12 * s2 * s4 + 1e-300) {
        pb = (d1 * s4 - d2 * s3) / det;
        pc = (d2 * s2 - d1 * s3) / det;
        double res = 0.0;
        for (const auto& [n, c] : samples) {
            const double r = c - pb * n - pc * n * n;
            res += r * r;
        }
        res_poly = std::sqrt(res) / norm;
    }

    const auto envelope_fit = [&](double (*env)(double, int)) {
        std::vector<double> model;
        for (const auto& [n, c] : samples) {
            (void)c;
            model.push_back(env(zeta, n));
        }
        return scale_fit(data, model, norm);
    };
    const auto [a1, r1] = envelope_fit(f1_envelope);
    const auto [a2, r2] = envelope_fit(f2_envelope);
    const auto [a3, r3] = envelope_fit(f3_envelope);

    struct Candidate {
        const char* form;
        double residual;
    };
    std::array<Candidate, 4> ranked = {{{"poly", res_poly},
                                        {"f1", r1},
                                        {"f2", r2},
                                        {"f3", r3}}};
    std::sort(ranked.begin(), ranked.end(),
              [](const Candidate& a, const Candidate& b) {
                  return a.residual < b.residual;
              });
    if (ranked[1].residual - ranked[0].residual <= 0.1 * ranked[1].residual ||
        ranked[1].residual < 1e-6)
        throw AmbiguousFit(std::string("forms ") + ranked[0].form + " and " +
                           ranked[1].form + " fit the samples equally well");

    fit.form = ranked[0].form;
    fit.residual = ranked[0].residual;
    if (fit.form == "poly") {
        fit.b = pb;
        fit.c = pc;
        return fit;
    }

    fit.amplitude = fit.form == "f1" ? a1 : (fit.form == "f2" ? a2 : a3);
    fit.sin_family = fit.form == "f1";

    // Free-offset refinement within the winning family.
    const auto family_residual = [&](double n0) {
        std::vector<double> model;
        for (const auto& [n, c] : samples) {
            (void)c;
            const double arg = 2.0 * M_PI * zeta * (n + n0);
            const double ref = 2.0 * M_PI * zeta * n0;
            model.push_back(fit.sin_family ? std::sin(arg) - std::sin(ref)
                                           : std::cos(arg) - std::cos(ref));
        }
        return scale_fit(data, model, norm).second;
    };
    double best_n0 = 0.0, best_res = family_residual(0.0);
    for (int k = 1; k <= 64; ++k) {
        const double n0 = 0.5 * k / 64.0;
        const double res = family_residual(n0);
        if (res < best_res) {
            best_res = res;
            best_n0 = n0;
        }
    }
    const double lo = std::max(0.0, best_n0 - 0.5 / 64.0);
    const double hi = std::min(0.5, best_n0 + 0.5 / 64.0);
    fit.n0 = golden_min(family_residual, lo, hi, 1e-8);
    fit.residual = family_residual(fit.n0);
    return fit;
}

double fit_zeta_amplitude(const std::vector<std::pair<double, double>>& samples,
                          int p, int q, int r) {
    if (samples.empty())
        throw InsufficientData("zeta-amplitude fit needs at least 1 sample");
    double num = 0.0, den = 0.0;
    for (const auto& [zeta, c] : samples) {
        if (zeta < 0.05 || std::abs(zeta - 1.0) < 0.05 ||
            std::abs(zeta - 3.0) < 0.05)
            throw std::invalid_argument(
                "zeta sample too close to a resonance pole");
        const double d = std::pow(zeta, p) * std::pow(1.0 - zeta * zeta, q) *
                         std::pow(9.0 - zeta * zeta, r);
        num += c / d;
        den += 1.0 / (d * d);
    }
    return num / den;
}

// ---------------------------------------------------------------------------
// Rotation-rate error budget
// ---------------------------------------------------------------------------

double rotation_error(double coefficient, double omega, double eta_i,
                      double eta_j, int n) {
    if (n < 1) throw std::invalid_argument("orbit count n must be >= 1");
    return coefficient * omega * eta_i * eta_j / (16.0 * M_PI * n);
}

double allowed_imperfection(double coefficient, double omega, double target,
                            int n) {
    if (n < 1) throw std::invalid_argument("orbit count n must be >= 1");
    if (!(target > 0.0) || !(omega > 0.0))
        throw std::invalid_argument("target and omega must be positive");
    if (coefficient == 0.0) return std::numeric_limits<double>::infinity();
    return std::sqrt(target * 16.0 * M_PI * n / (std::abs(coefficient) * omega));
}

// ---------------------------------------------------------------------------
// Fringe-slope reduction
// ---------------------------------------------------------------------------

SlopePipelineResult slope_pipeline(const std::vector<SlopeSeries>& data,
                                   double omega) {
    if (!(omega > 0.0)) throw std::invalid_argument("omega must be positive");
    if (data.size() < 2)
        throw InsufficientData("slope trend needs at least 2 curvature settings");

    SlopePipelineResult out;
    std::vector<double> betas, slopes, variances;
    bool weighted = true;
    for (const auto& series : data) {
        if (series.samples.size() < 2)
            throw InsufficientData("each series needs at least 2 samples");
        double sw = 0.0, st = 0.0, sp = 0.0;
        bool series_weighted = true;
        for (const auto& s : series.samples)
            if (!(s.sigma > 0.0)) series_weighted = false;
        for (const auto& s : series.samples) {
            const double w = series_weighted ? 1.0 / (s.sigma * s.sigma) : 1.0;
            sw += w;
            st += w * s.t2;
            sp += w * s.phase;
        }
        const double tbar = st / sw, pbar = sp / sw;
        double stt = 0.0, stp = 0.0;
        for (const auto& s : series.samples) {
            const double w = series_weighted ? 1.0 / (s.sigma * s.sigma) : 1.0;
            stt += w * (s.t2 - tbar) * (s.t2 - tbar);
            stp += w * (s.t2 - tbar) * (s.phase - pbar);
        }
        if (!(stt > 0.0))
            throw std::invalid_argument("degenerate hold-time values in a series");
        const double slope = stp / stt;
        betas.push_back(series.beta);
        slopes.push_back(slope);
        variances.push_back(series_weighted ? 1.0 / stt : 0.0);
        weighted = weighted && series_weighted;
        out.slope_by_beta.emplace_back(series.beta, slope);
    }

    double sw = 0.0, sb = 0.0, ss = 0.0;
    for (std::size_t i = 0; i < betas.size(); ++i) {
        const double w = weighted ? 1.0 / variances[i] : 1.0;
        sw += w;
        sb += w * betas[i];
        ss += w * slopes[i];
    }
    const double bbar = sb / sw, sbar = ss / sw;
    double sbb = 0.0, sbs = 0.0;
    for (std::size_t i = 0; i < betas.size(); ++i) {
        const double w = weighted ? 1.0 / variances[i] : 1.0;
        sbb += w * (betas[i] - bbar) * (betas[i] - bbar);
        sbs += w * (betas[i] - bbar) * (slopes[i] - sbar);
    }
    if (!(sbb > 0.0))
        throw std::invalid_argument("degenerate curvature settings");
    out.d2_t2_beta = sbs / sbb;
    out.d2_delta2_gamma = out.d2_t2_beta * 7.0 / omega;
    out.uncertainty = weighted ? std::sqrt(1.0 / sbb) * 7.0 / omega : 0.0;
    return out;
}

}  // namespace sagnac
