#include "cascade/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace cascade {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

void require(bool cond, const std::string& what) {
    if (!cond) throw SpecError(what);
}

double tabulated_value(const TabulatedProfile& t, double e) {
    const auto& kn = t.knots;
    if (e <= kn.front().first) return kn.front().second;
    if (e >= kn.back().first) return kn.back().second;
    auto it = std::upper_bound(kn.begin(), kn.end(), e,
                               [](double x, const auto& p) { return x < p.first; });
    const auto& hi = *it;
    const auto& lo = *(it - 1);
    double w = (e - lo.first) / (hi.first - lo.first);
    return lo.second + w * (hi.second - lo.second);
}

// Exact integral of the clamped piecewise-linear interpolant.
double tabulated_integral(const TabulatedProfile& t, double a, double b) {
    const auto& kn = t.knots;
    auto value_at = [&](double e) { return tabulated_value(t, e); };
    // Break [a, b] at the knots; the integrand is linear on each piece.
    std::vector<double> cuts{a};
    for (const auto& [e, v] : kn)
        if (e > a && e < b) cuts.push_back(e);
    cuts.push_back(b);
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
        total += 0.5 * (value_at(cuts[i]) + value_at(cuts[i + 1])) * (cuts[i + 1] - cuts[i]);
    return total;
}

}  // namespace

EnergyGrid::EnergyGrid(double center, double halfwidth, std::size_t count)
    : center_(center), halfwidth_(halfwidth) {
    require(std::isfinite(center), "grid center must be finite");
    require(std::isfinite(halfwidth) && halfwidth > 0.0, "grid halfwidth must be positive");
    require(count >= 2, "grid count must be at least 2");
    spacing_ = 2.0 * halfwidth / static_cast<double>(count);
    require(spacing_ > 0.0, "grid spacing must be positive");
    points_.resize(count);
    for (std::size_t k = 0; k < count; ++k)
        points_[k] = center - halfwidth + (static_cast<double>(k) + 0.5) * spacing_;
}

EnergyGrid EnergyGrid::refined(std::size_t factor) const {
    return EnergyGrid(center_, halfwidth_, count() * factor);
}

CouplingProfile::CouplingProfile(FlatProfile p) : v_(p) {
    require(std::isfinite(p.value) && p.value >= 0.0, "flat profile value must be finite and >= 0");
}

CouplingProfile::CouplingProfile(LorentzianProfile p) : v_(p) {
    require(std::isfinite(p.center), "lorentzian center must be finite");
    require(std::isfinite(p.width) && p.width > 0.0, "lorentzian width must be positive");
    require(std::isfinite(p.peak) && p.peak >= 0.0, "lorentzian peak must be finite and >= 0");
}

CouplingProfile::CouplingProfile(TabulatedProfile p) : v_(std::move(p)) {
    const auto& kn = std::get<TabulatedProfile>(v_).knots;
    require(!kn.empty(), "tabulated profile needs at least one knot");
    for (std::size_t i = 0; i < kn.size(); ++i) {
        require(std::isfinite(kn[i].first) && std::isfinite(kn[i].second),
                "tabulated profile entries must be finite");
        require(kn[i].second >= 0.0, "tabulated profile values must be >= 0");
        if (i > 0)
            require(kn[i].first > kn[i - 1].first,
                    "tabulated profile energies must be strictly increasing");
    }
}

double CouplingProfile::operator()(double e) const {
    return std::visit(
        overloaded{
            [](const FlatProfile& f) { return f.value; },
            [e](const LorentzianProfile& l) {
                double d = e - l.center;
                return l.peak * l.width * l.width / (d * d + l.width * l.width);
            },
            [e](const TabulatedProfile& t) { return tabulated_value(t, e); },
        },
        v_);
}

double CouplingProfile::integral(double a, double b) const {
    if (b < a) return -integral(b, a);
    return std::visit(
        overloaded{
            [&](const FlatProfile& f) { return f.value * (b - a); },
            [&](const LorentzianProfile& l) {
                return l.peak * l.width *
                       (std::atan((b - l.center) / l.width) - std::atan((a - l.center) / l.width));
            },
            [&](const TabulatedProfile& t) { return tabulated_integral(t, a, b); },
        },
        v_);
}

CouplingProfile CouplingProfile::with_scale(double value) const {
    return std::visit(
        overloaded{
            [&](const FlatProfile&) { return CouplingProfile(FlatProfile{value}); },
            [&](const LorentzianProfile& l) {
                return CouplingProfile(LorentzianProfile{l.center, l.width, value});
            },
            [&](const TabulatedProfile&) -> CouplingProfile {
                throw SpecError("cannot rescale a tabulated profile by a single value");
            },
        },
        v_);
}

CouplingProfile CouplingProfile::rescaled(double s, double value_factor) const {
    return std::visit(
        overloaded{
            [&](const FlatProfile& f) { return CouplingProfile(FlatProfile{f.value * value_factor}); },
            [&](const LorentzianProfile& l) {
                return CouplingProfile(
                    LorentzianProfile{l.center * s, l.width * s, l.peak * value_factor});
            },
            [&](const TabulatedProfile& t) {
                TabulatedProfile out;
                for (const auto& [e, v] : t.knots) out.knots.emplace_back(e * s, v * value_factor);
                return CouplingProfile(std::move(out));
            },
        },
        v_);
}

CascadeSpec::CascadeSpec(double e2, EnergyGrid grid1, EnergyGrid grid0, CouplingProfile rho1,
                         CouplingProfile rho0, CouplingProfile v12, CouplingProfile v10)
    : e2_(e2),
      grid1_(std::move(grid1)),
      grid0_(std::move(grid0)),
      rho1_(std::move(rho1)),
      rho0_(std::move(rho0)),
      v12_(std::move(v12)),
      v10_(std::move(v10)) {
    require(std::isfinite(e2), "e2 must be finite");
    require(grid1_.lower() < e2 && e2 < grid1_.upper(), "grid1 must contain e2 in its interior");
    require(grid0_.lower() < e2 && e2 < grid0_.upper(), "grid0 must contain e2 in its interior");
    // Profiles are validated non-negative on construction; this checks finiteness
    // at the points the discrete model will actually sample.
    for (double e : grid1_.points())
        require(std::isfinite(rho1_(e)) && std::isfinite(v12_(e)), "rho1/v12 not finite on grid1");
    for (double e : grid0_.points()) require(std::isfinite(rho0_(e)), "rho0 not finite on grid0");
}

CascadeSpec CascadeSpec::refined(std::size_t factor) const {
    return CascadeSpec(e2_, grid1_.refined(factor), grid0_.refined(factor), rho1_, rho0_, v12_,
                       v10_);
}

CascadeSpec CascadeSpec::scaled(double s) const {
    require(s > 0.0, "scale factor must be positive");
    return CascadeSpec(e2_ * s, EnergyGrid(grid1_.center() * s, grid1_.halfwidth() * s, grid1_.count()),
                       EnergyGrid(grid0_.center() * s, grid0_.halfwidth() * s, grid0_.count()),
                       rho1_.rescaled(s, 1.0 / s), rho0_.rescaled(s, 1.0 / s),
                       v12_.rescaled(s, s), v10_.rescaled(s, s));
}

double golden_rule_rate(const CascadeSpec& spec) {
    double v = spec.v12()(spec.e2());
    return std::numbers::pi * spec.rho1()(spec.e2()) * v * v;
}

double zeno_factor(const CascadeSpec& spec) {
    constexpr double pi = std::numbers::pi;
    double v = spec.v10()(0.0);
    return pi * pi * spec.rho0()(spec.e2()) * v * v * spec.rho1()(spec.e2());
}

RatePrediction predict_rates(const CascadeSpec& spec) {
    RatePrediction p;
    p.gamma2 = golden_rule_rate(spec);
    p.n_factor = zeno_factor(spec);
    p.gamma2_modified = p.gamma2 / (1.0 + p.n_factor);
    p.gamma1_estimate = p.n_factor * p.gamma2_modified;
    p.beyond_proved_regime = p.n_factor > 1.0;
    return p;
}

CascadeSpec flat_cascade(double gamma2, double n_factor, double halfwidth, std::size_t count, double e2) {
    if (!(gamma2 >= 0.0) || !(n_factor >= 0.0)) throw SpecError("flat_cascade: gamma2 and N must be >= 0");
    const double rho = 1.0 / std::numbers::pi;
    return CascadeSpec(e2, EnergyGrid(e2, halfwidth, count), EnergyGrid(e2, halfwidth, count),
                       CouplingProfile::flat(rho), CouplingProfile::flat(rho),
                       CouplingProfile::flat(std::sqrt(gamma2)), CouplingProfile::flat(std::sqrt(n_factor)));
}

}  // namespace cascade
