// config.hpp - line-oriented scenario configuration
//
//     # comment
//     key = value
//
// Profiles accept `0.25`, `flat(0.25)`, `lorentzian(center, width, peak)` or
// `table(e0:v0, e1:v1, ...)`. Unknown keys are rejected; omitted keys take the
// defaults below. Grid centers default to e2.

#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "cascade/analysis.hpp"
#include "cascade/model.hpp"

namespace cascade {

class ConfigError : public std::runtime_error {
public:
    /// line 0 means the error is not tied to a line (e.g. an override).
    ConfigError(std::string source, std::size_t line, const std::string& message);
    std::size_t line() const { return line_; }
    const std::string& message() const { return message_; }

private:
    std::size_t line_;
    std::string message_;
};

struct ScenarioConfig {
    double e2{0.0};
    double center1{0.0};
    double halfwidth1{1.0};
    std::size_t count1{500};
    double center0{0.0};
    double halfwidth0{1.0};
    std::size_t count0{500};
    CouplingProfile rho1{CouplingProfile::flat(0.31830988618379067)};  // 1/pi
    CouplingProfile rho0{CouplingProfile::flat(0.31830988618379067)};
    CouplingProfile v12{CouplingProfile::flat(0.22360679774997896)};  // sqrt(0.05): gamma2 = 0.05
    CouplingProfile v10{CouplingProfile::flat(0.0)};
    double edge_taper{0.0};

    double t_max{0.0};  ///< 0: derived from the predicted rate
    double dt{0.0};     ///< 0: default_time_step
    std::size_t sample_every{0};
    std::optional<double> fit_t_lo;
    std::optional<double> fit_t_hi;
    double norm_tolerance{1e-6};

    std::string output{"cascade"};  ///< prefix for written artifacts
    std::size_t workers{1};
    std::vector<double> peak_widths;  ///< used by `peaks`

    bool operator==(const ScenarioConfig&) const = default;

    CascadeSpec spec() const;
    RunControls controls() const;
};

/// Parses config text; `source` names the origin in error messages.
ScenarioConfig parse_config(std::string_view text, const std::string& source = "config");
ScenarioConfig load_config(const std::string& path);

/// Applies one `key=value` assignment on top of `cfg`.
void apply_assignment(ScenarioConfig& cfg, std::string_view assignment, const std::string& source = "override");

/// Canonical text form; parse_config(to_text(c)) == c.
std::string to_text(const ScenarioConfig& cfg);

CouplingProfile parse_profile(std::string_view text);
std::string format_profile(const CouplingProfile& profile);

/// 17 significant digits.
std::string format_number(double x);

}  // namespace cascade
