// The built-in verification battery behind `cascade_zeno validate`.

#include <cmath>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <limits>
#include <optional>

#include <fmt/format.h>

#include "cascade/commands.hpp"
#include "cascade/series.hpp"

namespace cascade::cli {

namespace {

constexpr double kGamma2 = 0.05;

struct Item {
    bool pass{false};
    std::string detail;
};

// Testing hook: CASCADE_ZENO_DT_OVERRIDE forces the step of every integration
// below and disables the step-size guard.
std::optional<double> dt_override() {
    const char* env = std::getenv("CASCADE_ZENO_DT_OVERRIDE");
    if (!env || !*env) return std::nullopt;
    char* end = nullptr;
    double v = std::strtod(env, &end);
    if (end == env || *end != '\0' || !(v > 0.0))
        throw std::invalid_argument(fmt::format("CASCADE_ZENO_DT_OVERRIDE: bad value '{}'", env));
    return v;
}

Item unitarity(std::optional<double> forced_dt) {
    const DiscreteModel model = build_discrete(flat_cascade(kGamma2, 0.25, 1.0, 200));
    const double dt = forced_dt.value_or(default_time_step(model, kGamma2));
    IntegrateOptions opts;
    opts.norm_tolerance = std::numeric_limits<double>::infinity();
    opts.allow_large_step = forced_dt.has_value();
    const Trajectory tr = integrate(model, 1.0 / kGamma2, dt, 10, opts);
    const double drift = tr.max_norm_drift;
    return {drift <= 1e-6, fmt::format("max |norm - 1| = {:.3e} at dt = {:.4g} (limit 1e-6)", drift, dt)};
}

Item rabi_pair(std::optional<double> forced_dt) {
    const double g = 0.1;
    const DiscreteModel model = DiscreteModel::from_modes(0.0, {0.0}, {g}, {}, {});
    const double dt = forced_dt.value_or(0.01);
    IntegrateOptions opts;
    opts.allow_large_step = forced_dt.has_value();
    opts.norm_tolerance = std::numeric_limits<double>::infinity();
    const Trajectory tr = integrate(model, 10.0 / g, dt, 1, opts);
    double worst = 0.0;
    for (std::size_t i = 0; i < tr.size(); ++i) {
        const double c = std::cos(g * tr.t[i]);
        worst = std::max(worst, std::abs(tr.p2[i] - c * c));
    }
    return {worst <= 1e-8, fmt::format("max |p2 - cos^2(g t)| = {:.3e} over t <= {:g} (limit 1e-8)", worst, 10.0 / g)};
}

Item golden_rule(std::optional<double> forced_dt) {
    RunControls rc;
    if (forced_dt) rc.dt = *forced_dt;
    const RateReport r = run_scenario(flat_cascade(kGamma2, 0.0, 20.0 * kGamma2, 500), rc).report;
    return {r.relative_error <= 0.05, fmt::format("fitted {:.6g} vs gamma2 {:.6g}, rel_err {:.3e} (limit 0.05)",
                                                  r.fit.rate, r.prediction.gamma2, r.relative_error)};
}

// Wide tapered flat band: the series terms are geometric there (see DiscretizeOptions).
DiscreteModel series_model(double n_factor) {
    return build_discrete(flat_cascade(kGamma2, n_factor, 80.0 * kGamma2, 2000), DiscretizeOptions{0.5});
}

Item term_ratio(bool v10_zero) {
    const double n_factor = v10_zero ? 0.0 : 0.25;
    const DiscreteModel model = series_model(n_factor);
    const double rate = kGamma2 / (1.0 + n_factor);
    const series::cplx ratio = series::neumann_term_ratio(model, rate, 1, 1.0 / kGamma2);
    const double expected = v10_zero ? 0.0 : -n_factor;
    const bool pass = v10_zero ? std::abs(ratio) == 0.0
                               : std::abs(ratio - expected) <= 0.05 * std::abs(expected);
    // + 0.0 folds -0 into 0 for display.
    return {pass, fmt::format("T1/T0 = {:.6g}{:+.6g}i, expected {:g}{}", ratio.real() + 0.0, ratio.imag() + 0.0, expected,
                              v10_zero ? " exactly" : " within 5%")};
}

Item consistency(std::optional<double> forced_dt) {
    const double n_factor = 0.25;
    const CascadeSpec spec = flat_cascade(kGamma2, n_factor, 80.0 * kGamma2, 2000);
    const double formula = predict_rates(spec).gamma2_modified;
    const double resummed = series::resummed_rate(series_model(n_factor), 4);
    RunControls rc;
    rc.discretize.edge_taper = 0.5;
    if (forced_dt) rc.dt = *forced_dt;
    const double fitted = run_scenario(spec, rc).report.fit.rate;
    auto rel = [](double a, double b) { return std::abs(a - b) / std::max(std::abs(a), std::abs(b)); };
    const double worst = std::max({rel(formula, resummed), rel(formula, fitted), rel(resummed, fitted)});
    return {worst <= 0.10, fmt::format("formula {:.6g}, series {:.6g}, simulation {:.6g}; worst pair {:.3e} (limit 0.10)",
                                       formula, resummed, fitted, worst)};
}

}  // namespace

int cmd_validate(const ValidateOptions& vopts, const Context& ctx) {
    std::ostream& out = ctx.out ? *ctx.out : std::cout;
    std::ostream& err = ctx.err ? *ctx.err : std::cerr;

    std::optional<double> forced_dt;
    try {
        forced_dt = dt_override();
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    }
    if (forced_dt) out << fmt::format("note: CASCADE_ZENO_DT_OVERRIDE = {:g} in effect\n", *forced_dt);

    const std::vector<std::pair<std::string, std::function<Item()>>> items = {
        {"unitarity", [&] { return unitarity(forced_dt); }},
        {"rabi-pair", [&] { return rabi_pair(forced_dt); }},
        {"golden-rule", [&] { return golden_rule(forced_dt); }},
        {"term-ratio", [&] { return term_ratio(vopts.v10_zero); }},
        {"consistency-triangle", [&] { return consistency(forced_dt); }},
    };

    int failed = 0;
    for (const auto& [name, run] : items) {
        Item it;
        try {
            it = run();
        } catch (const std::exception& e) {
            it = {false, fmt::format("error: {}", e.what())};
        }
        failed += !it.pass;
        out << fmt::format("{} {}: {}\n", it.pass ? "PASS" : "FAIL", name, it.detail) << std::flush;
    }
    out << fmt::format("{} of {} items passed\n", items.size() - failed, items.size());
    return failed == 0 ? kOk : kFailure;
}

}  // namespace cascade::cli
