// model.hpp - physical description of the 2 -> 1 -> 0 cascade and closed-form rates
//
// Conventions: hbar = 1, every rate is an amplitude rate (a(t) ~ exp(-Gamma t),
// population ~ exp(-2 Gamma t)).

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace cascade {

class SpecError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Uniform midpoint grid over [center - halfwidth, center + halfwidth].
class EnergyGrid {
public:
    EnergyGrid(double center, double halfwidth, std::size_t count);

    double center() const { return center_; }
    double halfwidth() const { return halfwidth_; }
    std::size_t count() const { return points_.size(); }
    double spacing() const { return spacing_; }
    double lower() const { return center_ - halfwidth_; }
    double upper() const { return center_ + halfwidth_; }
    const std::vector<double>& points() const { return points_; }
    double operator[](std::size_t k) const { return points_[k]; }

    /// Same band, count multiplied by `factor`.
    EnergyGrid refined(std::size_t factor) const;

private:
    double center_;
    double halfwidth_;
    double spacing_;
    std::vector<double> points_;
};

struct FlatProfile {
    double value{0.0};
    bool operator==(const FlatProfile&) const = default;
};

/// peak * width^2 / ((E - center)^2 + width^2); `width` is the half width at half maximum.
struct LorentzianProfile {
    double center{0.0};
    double width{1.0};
    double peak{0.0};
    bool operator==(const LorentzianProfile&) const = default;
};

/// Piecewise linear through (energy, value) knots, clamped outside the table.
struct TabulatedProfile {
    std::vector<std::pair<double, double>> knots;
    bool operator==(const TabulatedProfile&) const = default;
};

class CouplingProfile {
public:
    using Variant = std::variant<FlatProfile, LorentzianProfile, TabulatedProfile>;

    CouplingProfile() : CouplingProfile(FlatProfile{}) {}
    CouplingProfile(FlatProfile p);
    CouplingProfile(LorentzianProfile p);
    CouplingProfile(TabulatedProfile p);

    static CouplingProfile flat(double value) { return CouplingProfile(FlatProfile{value}); }
    static CouplingProfile lorentzian(double center, double width, double peak) {
        return CouplingProfile(LorentzianProfile{center, width, peak});
    }

    double operator()(double energy) const;

    bool is_flat() const { return std::holds_alternative<FlatProfile>(v_); }
    const Variant& variant() const { return v_; }

    /// Integral of the profile over [a, b]; closed form for every variant.
    double integral(double a, double b) const;

    /// Copy with the overall scale replaced: Flat value, Lorentzian peak.
    /// Throws SpecError for Tabulated profiles.
    CouplingProfile with_scale(double value) const;

    /// Copy with every energy (center, width, knot positions) multiplied by s
    /// and values multiplied by `value_factor`.
    CouplingProfile rescaled(double s, double value_factor) const;

    bool operator==(const CouplingProfile&) const = default;

private:
    Variant v_;
};

/// Continuum description of the cascade. Validated on construction.
///
/// `v10` is the <0E|V|1E'> matrix element modeled as a function of the
/// emitted-photon detuning E' - E; the resonant value is v10(0).
class CascadeSpec {
public:
    CascadeSpec(double e2, EnergyGrid grid1, EnergyGrid grid0, CouplingProfile rho1,
                CouplingProfile rho0, CouplingProfile v12, CouplingProfile v10);

    double e2() const { return e2_; }
    const EnergyGrid& grid1() const { return grid1_; }
    const EnergyGrid& grid0() const { return grid0_; }
    const CouplingProfile& rho1() const { return rho1_; }
    const CouplingProfile& rho0() const { return rho0_; }
    const CouplingProfile& v12() const { return v12_; }
    const CouplingProfile& v10() const { return v10_; }

    /// Both grids with counts multiplied by `factor`.
    CascadeSpec refined(std::size_t factor) const;

    /// Energies and couplings multiplied by s, densities divided by s.
    CascadeSpec scaled(double s) const;

private:
    double e2_;
    EnergyGrid grid1_;
    EnergyGrid grid0_;
    CouplingProfile rho1_;
    CouplingProfile rho0_;
    CouplingProfile v12_;
    CouplingProfile v10_;
};

struct RatePrediction {
    double gamma2{0.0};           ///< golden-rule rate pi rho1(E2) |V12(E2)|^2
    double n_factor{0.0};         ///< N = pi^2 rho0(E2) |V10(0)|^2 rho1(E2)
    double gamma2_modified{0.0};  ///< gamma2 / (1 + N)
    double gamma1_estimate{0.0};  ///< N * gamma2_modified, a rough order-of-magnitude figure
    bool beyond_proved_regime{false};  ///< N > 1
};

double golden_rule_rate(const CascadeSpec& spec);
double zeno_factor(const CascadeSpec& spec);
RatePrediction predict_rates(const CascadeSpec& spec);

/// Flat reference cascade: rho1 = rho0 = 1/pi, V12 = sqrt(gamma2), V10 = sqrt(N),
/// both bands centered on E2 with the given halfwidth and count.
CascadeSpec flat_cascade(double gamma2, double n_factor, double halfwidth, std::size_t count, double e2 = 0.0);

}  // namespace cascade
