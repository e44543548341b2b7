#include "cascade/commands.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <thread>

#include <fmt/format.h>
#include <json.hpp>

#include "cascade/discretize.hpp"

namespace cascade::cli {

namespace {

std::ostream& out_of(const Context& ctx) { return ctx.out ? *ctx.out : std::cout; }
std::ostream& err_of(const Context& ctx) { return ctx.err ? *ctx.err : std::cerr; }

std::size_t worker_count(const ScenarioConfig& cfg, const Context& ctx) {
    return std::max<std::size_t>(1, ctx.workers > 0 ? ctx.workers : cfg.workers);
}

// Runs task(i) for i in [0, n) on up to `workers` threads. Each task owns its
// own output slot, so no synchronization beyond the index counter is needed.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& task) {
    workers = std::min(workers, n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) task(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) task(i);
        });
}

SweepRow run_point(const ScenarioConfig& cfg, double sweep_value) {
    SweepRow row;
    row.sweep_value = sweep_value;
    try {
        const CascadeSpec spec = cfg.spec();
        row.prediction = predict_rates(spec);
        row.report = run_scenario(spec, cfg.controls()).report;
    } catch (const std::exception& e) {
        row.error = e.what();
    }
    return row;
}

std::string csv_fields(const SweepRow& r) {
    auto num = [](double x) { return format_number(x); };
    std::string s = num(r.sweep_value);
    if (r.prediction)
        s += fmt::format(",{},{},{}", num(r.prediction->n_factor), num(r.prediction->gamma2),
                         num(r.prediction->gamma2_modified));
    else
        s += ",,,";
    if (r.report)
        s += fmt::format(",{},{},{}", num(r.report->fit.rate), num(r.report->relative_error),
                         num(r.report->fit.r_squared));
    else
        s += ",,,";
    return s;
}

int sweep_exit_code(const std::vector<SweepRow>& rows) {
    auto failed = std::count_if(rows.begin(), rows.end(), [](const SweepRow& r) { return !r.ok(); });
    if (failed == 0) return kOk;
    if (static_cast<std::size_t>(failed) == rows.size()) return kFailure;
    return kPartialFailure;
}

void report_failures(const std::vector<SweepRow>& rows, std::ostream& err) {
    for (const auto& r : rows)
        if (!r.ok()) err << fmt::format("point {} failed: {}\n", format_number(r.sweep_value), r.error);
}

bool write_file(const std::string& path, const std::string& content, std::ostream& err) {
    std::ofstream f(path, std::ios::binary);
    if (!f) {
        err << "cannot write " << path << "\n";
        return false;
    }
    f << content;
    return static_cast<bool>(f);
}

}  // namespace

ScenarioConfig resolve_config(const std::string& path, const Context& ctx) {
    ScenarioConfig cfg = load_config(path);
    for (const auto& o : ctx.overrides) apply_assignment(cfg, o, "--override");
    return cfg;
}

std::string trajectory_csv(const Trajectory& traj) {
    std::string s = "t,p2,p1,p0,norm\n";
    for (std::size_t i = 0; i < traj.size(); ++i)
        s += fmt::format("{},{},{},{},{}\n", format_number(traj.t[i]), format_number(traj.p2[i]),
                         format_number(traj.p1[i]), format_number(traj.p0[i]), format_number(traj.norm[i]));
    return s;
}

std::string report_json(const RateReport& r, const ScenarioConfig& cfg) {
    nlohmann::ordered_json j;
    j["convention"] = "amplitude rates, hbar=1; p2(t) ~ exp(-2 rate t)";
    j["prediction"] = {
        {"gamma2", r.prediction.gamma2},
        {"n_factor", r.prediction.n_factor},
        {"gamma2_modified", r.prediction.gamma2_modified},
        {"gamma1_estimate", r.prediction.gamma1_estimate},
        {"gamma1_estimate_note", "rough estimate N * Gamma2"},
    };
    j["fit"] = {
        {"rate", r.fit.rate},
        {"t_lo", r.fit.window.t_lo},
        {"t_hi", r.fit.window.t_hi},
        {"r_squared", r.fit.r_squared},
        {"residual_rms", r.fit.residual_rms},
        {"rate_uncertainty", r.fit.rate_uncertainty},
        {"n_points", r.fit.n_points},
    };
    j["relative_error"] = r.relative_error;
    j["convergence_flag"] = r.convergence_flag;
    j["beyond_proved_regime"] = r.beyond_proved_regime;
    j["run"] = {
        {"n1", r.n1},
        {"n0", r.n0},
        {"dt", r.dt},
        {"recurrence_time", r.recurrence_time},
        {"max_norm_drift", r.max_norm_drift},
    };
    j["config"] = to_text(cfg);
    return j.dump(2) + "\n";
}

std::string summary_line(const RateReport& r) {
    return fmt::format("gamma2={} N={} predicted={} fitted={} rel_err={}", format_number(r.prediction.gamma2),
                       format_number(r.prediction.n_factor), format_number(r.prediction.gamma2_modified),
                       format_number(r.fit.rate), format_number(r.relative_error));
}

ScenarioConfig with_sweep_value(const ScenarioConfig& cfg, const std::string& key, double value) {
    ScenarioConfig c = cfg;
    if (key == "v10")
        c.v10 = c.v10.with_scale(value);
    else if (key == "rho0")
        c.rho0 = c.rho0.with_scale(value);
    else if (key == "rho1")
        c.rho1 = c.rho1.with_scale(value);
    else if (key == "v12")
        c.v12 = c.v12.with_scale(value);
    else
        throw ConfigError("--key", 0, fmt::format("cannot sweep '{}': expected one of v10, rho0, rho1, v12", key));
    return c;
}

std::vector<SweepRow> run_sweep(const ScenarioConfig& cfg, const std::string& key, std::vector<double> values,
                                std::size_t workers) {
    // Validates the key before any work starts.
    (void)with_sweep_value(cfg, key, 0.0);
    std::stable_sort(values.begin(), values.end());
    std::vector<SweepRow> rows(values.size());
    parallel_for(values.size(), workers, [&](std::size_t i) {
        SweepRow row;
        try {
            row = run_point(with_sweep_value(cfg, key, values[i]), values[i]);
        } catch (const std::exception& e) {
            row.sweep_value = values[i];
            row.error = e.what();
        }
        rows[i] = std::move(row);
    });
    return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
    std::string s = std::string(kSweepHeader) + "\n";
    for (const auto& r : rows) s += csv_fields(r) + "\n";
    return s;
}

PeaksResult run_peaks(const ScenarioConfig& cfg, std::size_t workers) {
    const auto* lor = std::get_if<LorentzianProfile>(&cfg.rho0.variant());
    if (!lor) throw ConfigError("config", 0, "peaks needs rho0 = lorentzian(center, width, peak)");
    if (cfg.peak_widths.empty()) throw ConfigError("config", 0, "peaks needs a peak_widths list");

    const double lo = cfg.center0 - cfg.halfwidth0;
    const double hi = cfg.center0 + cfg.halfwidth0;
    PeaksResult res;
    res.band_weight = cfg.rho0.integral(lo, hi);

    std::vector<double> widths = cfg.peak_widths;
    std::stable_sort(widths.begin(), widths.end());
    res.rows.resize(widths.size());
    parallel_for(widths.size(), workers, [&](std::size_t i) {
        const double w = widths[i];
        SweepRow row;
        row.peak_width = w;
        try {
            if (!(w > 0.0)) throw SpecError("peak width must be positive");
            const double shape = w * (std::atan((hi - lor->center) / w) - std::atan((lo - lor->center) / w));
            const double peak = res.band_weight / shape;
            ScenarioConfig c = cfg;
            c.rho0 = CouplingProfile::lorentzian(lor->center, w, peak);
            row = run_point(c, peak);
            row.peak_width = w;
        } catch (const std::exception& e) {
            row.error = e.what();
        }
        res.rows[i] = std::move(row);
    });

    ScenarioConfig flat = cfg;
    flat.rho0 = CouplingProfile::flat(res.band_weight / (hi - lo));
    res.flat_reference = run_point(flat, res.band_weight / (hi - lo));
    return res;
}

std::string peaks_csv(const PeaksResult& res) {
    std::string s =
        "# EXPLORATORY: rho0 Lorentzian width sweep at fixed band-integrated weight; trend recorded, not asserted\n";
    s += fmt::format("# band_weight={}\n", format_number(res.band_weight));
    s += std::string("peak_width,") + kSweepHeader + "\n";
    for (const auto& r : res.rows) s += format_number(r.peak_width) + "," + csv_fields(r) + "\n";
    s += "# flat_reference," + csv_fields(res.flat_reference) + "\n";
    return s;
}

int cmd_simulate(const std::string& config_path, const Context& ctx) {
    auto& out = out_of(ctx);
    auto& err = err_of(ctx);
    try {
        const ScenarioConfig cfg = resolve_config(config_path, ctx);
        const CascadeSpec spec = cfg.spec();
        RunResult run = run_scenario(spec, cfg.controls());
        if (!write_file(cfg.output + "_trajectory.csv", trajectory_csv(run.trajectory), err)) return kFailure;
        if (!write_file(cfg.output + "_report.json", report_json(run.report, cfg), err)) return kFailure;
        if (run.report.beyond_proved_regime)
            err << "warning: N > 1, outside the regime where the series argument is proved\n";
        out << summary_line(run.report) << "\n";
        return kOk;
    } catch (const FitError& e) {
        err << "error: " << e.what() << "\n";
        if (e.diagnostics())
            err << fmt::format("  window [{:.6g}, {:.6g}], {} points, r^2 = {:.6f}\n", e.diagnostics()->window.t_lo,
                               e.diagnostics()->window.t_hi, e.diagnostics()->n_points,
                               e.diagnostics()->r_squared);
        return kFailure;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kFailure;
    }
}

int cmd_sweep(const std::string& config_path, const std::string& key, const std::vector<double>& values,
              const Context& ctx) {
    auto& out = out_of(ctx);
    auto& err = err_of(ctx);
    try {
        if (values.size() < 2) {
            err << "error: sweep needs at least 2 values\n";
            return kUsage;
        }
        const ScenarioConfig cfg = resolve_config(config_path, ctx);
        auto rows = run_sweep(cfg, key, values, worker_count(cfg, ctx));
        const std::string path = cfg.output + "_sweep.csv";
        if (!write_file(path, sweep_csv(rows), err)) return kFailure;
        report_failures(rows, err);
        out << fmt::format("wrote {} ({} points)\n", path, rows.size());
        return sweep_exit_code(rows);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kFailure;
    }
}

int cmd_peaks(const std::string& config_path, const Context& ctx) {
    auto& out = out_of(ctx);
    auto& err = err_of(ctx);
    try {
        const ScenarioConfig cfg = resolve_config(config_path, ctx);
        auto res = run_peaks(cfg, worker_count(cfg, ctx));
        const std::string path = cfg.output + "_peaks.csv";
        if (!write_file(path, peaks_csv(res), err)) return kFailure;
        report_failures(res.rows, err);
        out << fmt::format("wrote {} ({} widths, EXPLORATORY)\n", path, res.rows.size());
        return sweep_exit_code(res.rows);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kFailure;
    }
}

}  // namespace cascade::cli
