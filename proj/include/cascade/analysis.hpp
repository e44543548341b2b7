// analysis.hpp - decay-rate extraction and comparison against the closed-form rates

#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cascade/dynamics.hpp"
#include "cascade/model.hpp"

namespace cascade {

struct FitWindow {
    double t_lo{0.0};
    double t_hi{0.0};
};

/// Amplitude rate from a log-linear fit of p2: p2 ~ exp(-2 rate t).
struct FitResult {
    double rate{0.0};
    FitWindow window;
    double r_squared{1.0};
    double residual_rms{0.0};
    /// sqrt(12) * residual_rms / (2 * window span): the rate shift a systematic
    /// residual of that size could induce across the window.
    double rate_uncertainty{0.0};
    std::size_t n_points{0};
    bool constant{false};  ///< ln p2 had zero variance; rate forced to 0
};

class FitError : public std::runtime_error {
public:
    enum class Kind { BadWindow, Underflow, NonExponential, ConstantTrajectory };
    FitError(Kind kind, const std::string& what, std::optional<FitResult> diagnostics = std::nullopt)
        : std::runtime_error(what), kind_(kind), diagnostics_(std::move(diagnostics)) {}
    Kind kind() const { return kind_; }
    const std::optional<FitResult>& diagnostics() const { return diagnostics_; }

private:
    Kind kind_;
    std::optional<FitResult> diagnostics_;
};

inline constexpr double kMinRSquared = 0.99;

FitResult fit_decay_rate(const Trajectory& traj, FitWindow window);

/// [0.5 / rate, 2.5 / rate], clipped below half the recurrence time.
FitWindow default_window(double predicted_rate, double recurrence_time);

struct RateReport {
    RatePrediction prediction;
    FitResult fit;
    double relative_error{0.0};
    bool convergence_flag{false};
    bool beyond_proved_regime{false};
    // run metadata
    std::size_t n1{0}, n0{0};
    double dt{0.0};
    double recurrence_time{0.0};
    double max_norm_drift{0.0};
};

/// Fits `traj` (produced from build_discrete(spec)) over `window`, or the
/// default window when none is given. A constant trajectory is an error here.
RateReport compare(const CascadeSpec& spec, const Trajectory& traj,
                   std::optional<FitWindow> window = std::nullopt);

/// Run controls for one simulate-and-compare pass. Zero means "derive the default".
struct RunControls {
    double dt{0.0};
    double t_max{0.0};
    std::size_t sample_every{0};
    std::optional<FitWindow> window;
    double norm_tolerance{1e-6};
    bool allow_past_recurrence{false};
    DiscretizeOptions discretize{};
};

struct RunResult {
    Trajectory trajectory;
    RateReport report;
};

/// build_discrete -> integrate -> compare with defaults filled in from the prediction.
RunResult run_scenario(const CascadeSpec& spec, const RunControls& controls = {});

/// Runs `refinements` passes doubling both grid counts each time. The final
/// report's convergence_flag is set iff the last two fitted rates differ by < 1%.
std::vector<RateReport> convergence_study(const CascadeSpec& spec, std::size_t refinements,
                                          const RunControls& controls = {});

/// N * Gamma2, the rough level-1 rate estimate (amplitude rate).
double estimate_gamma1(const RateReport& report);

}  // namespace cascade
