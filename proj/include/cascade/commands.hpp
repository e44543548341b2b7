// commands.hpp - the cascade_zeno subcommands, callable without a process boundary

#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cascade/analysis.hpp"
#include "cascade/config.hpp"

namespace cascade::cli {

enum ExitCode : int {
    kOk = 0,
    kFailure = 1,
    kUsage = 2,
    kPartialFailure = 3,
};

struct Context {
    std::size_t workers{0};              ///< 0: take `workers` from the config
    std::vector<std::string> overrides;  ///< key=value, applied after the file
    std::ostream* out{nullptr};
    std::ostream* err{nullptr};
};

/// Config file plus overrides.
ScenarioConfig resolve_config(const std::string& path, const Context& ctx);

// ---- artifacts -----------------------------------------------------------

std::string trajectory_csv(const Trajectory& traj);

/// Structured report text (JSON) with the convention label and the echoed config.
std::string report_json(const RateReport& report, const ScenarioConfig& cfg);

/// `gamma2=.. N=.. predicted=.. fitted=.. rel_err=..`
std::string summary_line(const RateReport& report);

// ---- sweeps --------------------------------------------------------------

inline constexpr const char* kSweepHeader =
    "sweep_value,n_factor,gamma2,predicted_rate,fitted_rate,rel_err,r_squared";

struct SweepRow {
    double sweep_value{0.0};
    double peak_width{0.0};  ///< peaks only
    std::optional<RatePrediction> prediction;
    std::optional<RateReport> report;
    std::string error;  ///< empty on success

    bool ok() const { return report.has_value(); }
};

/// Returns `cfg` with the scale of profile `key` (v10, rho0, rho1, v12) set to `value`.
ScenarioConfig with_sweep_value(const ScenarioConfig& cfg, const std::string& key, double value);

/// One simulate per value on up to `workers` threads; rows sorted by sweep_value.
std::vector<SweepRow> run_sweep(const ScenarioConfig& cfg, const std::string& key,
                                std::vector<double> values, std::size_t workers);

std::string sweep_csv(const std::vector<SweepRow>& rows);

struct PeaksResult {
    std::vector<SweepRow> rows;  ///< sorted by peak width
    SweepRow flat_reference;     ///< rho0 flat with the same band-integrated weight
    double band_weight{0.0};
};

/// Lorentzian rho0 width sweep at fixed integrated weight over the 0-band.
PeaksResult run_peaks(const ScenarioConfig& cfg, std::size_t workers);

std::string peaks_csv(const PeaksResult& res);

// ---- subcommands ---------------------------------------------------------

int cmd_simulate(const std::string& config_path, const Context& ctx);
int cmd_sweep(const std::string& config_path, const std::string& key, const std::vector<double>& values,
              const Context& ctx);
int cmd_peaks(const std::string& config_path, const Context& ctx);

struct ValidateOptions {
    bool v10_zero{false};  ///< run the term-ratio item with v10 = 0 (expects ratio 0)
};

/// Built-in verification battery. Honors CASCADE_ZENO_DT_OVERRIDE.
int cmd_validate(const ValidateOptions& opts, const Context& ctx);

}  // namespace cascade::cli
