#include "cascade/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "cascade/discretize.hpp"

namespace cascade {

namespace {

constexpr double kWindowLo = 0.5;
constexpr double kWindowHi = 2.5;
constexpr double kRecurrenceFraction = 0.49;  // stay strictly below half the recurrence time
constexpr std::size_t kTargetSamples = 400;

}  // namespace

FitResult fit_decay_rate(const Trajectory& traj, FitWindow window) {
    if (!(window.t_lo < window.t_hi))
        throw FitError(FitError::Kind::BadWindow,
                       fmt::format("fit window [{}, {}] is empty", window.t_lo, window.t_hi));
    if (traj.size() == 0 || window.t_lo < traj.t.front() - 1e-12 ||
        window.t_hi > traj.t.back() + 1e-9 * std::max(1.0, traj.t.back()))
        throw FitError(FitError::Kind::BadWindow,
                       fmt::format("fit window [{:.6g}, {:.6g}] outside trajectory span [{:.6g}, {:.6g}]",
                                   window.t_lo, window.t_hi, traj.size() ? traj.t.front() : 0.0,
                                   traj.size() ? traj.t.back() : 0.0));

    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < traj.size(); ++i) {
        double t = traj.t[i];
        if (t < window.t_lo || t > window.t_hi) continue;
        if (!(traj.p2[i] > 0.0))
            throw FitError(FitError::Kind::Underflow,
                           fmt::format("p2 = {} at t = {:.6g} inside the fit window", traj.p2[i], t));
        xs.push_back(t);
        ys.push_back(std::log(traj.p2[i]));
    }
    const std::size_t n = xs.size();
    if (n < 3)
        throw FitError(FitError::Kind::BadWindow,
                       fmt::format("fit window holds {} samples, need at least 3", n));

    double xm = 0.0, ym = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        xm += xs[i];
        ym += ys[i];
    }
    xm /= static_cast<double>(n);
    ym /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double dx = xs[i] - xm, dy = ys[i] - ym;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }

    FitResult fit;
    fit.window = window;
    fit.n_points = n;
    const double span = xs.back() - xs.front();

    // Zero-variance guard: no decay at all.
    if (syy <= 1e-24 * static_cast<double>(n)) {
        fit.rate = 0.0;
        fit.r_squared = 1.0;
        fit.constant = true;
        return fit;
    }

    const double slope = sxy / sxx;
    const double intercept = ym - slope * xm;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double r = ys[i] - (intercept + slope * xs[i]);
        ss_res += r * r;
    }
    fit.rate = std::max(0.0, -0.5 * slope);
    fit.r_squared = std::clamp(1.0 - ss_res / syy, 0.0, 1.0);
    fit.residual_rms = std::sqrt(ss_res / static_cast<double>(n));
    fit.rate_uncertainty = span > 0.0 ? std::sqrt(12.0) * fit.residual_rms / (2.0 * span) : 0.0;

    if (fit.r_squared < kMinRSquared)
        throw FitError(FitError::Kind::NonExponential,
                       fmt::format("non-exponential window: r^2 = {:.6f} < {} (rate {:.6g}, {} points)",
                                   fit.r_squared, kMinRSquared, fit.rate, n),
                       fit);
    return fit;
}

FitWindow default_window(double predicted_rate, double recurrence_time) {
    FitWindow w{kWindowLo / predicted_rate, kWindowHi / predicted_rate};
    double limit = kRecurrenceFraction * recurrence_time;
    w.t_hi = std::min(w.t_hi, limit);
    w.t_lo = std::min(w.t_lo, w.t_hi);
    return w;
}

RateReport compare(const CascadeSpec& spec, const Trajectory& traj, std::optional<FitWindow> window) {
    RateReport rep;
    rep.prediction = predict_rates(spec);
    rep.beyond_proved_regime = rep.prediction.beyond_proved_regime;
    rep.n1 = spec.grid1().count();
    rep.n0 = spec.grid0().count();
    rep.dt = traj.dt;
    rep.recurrence_time = traj.recurrence_time;
    rep.max_norm_drift = traj.max_norm_drift;

    FitWindow w;
    if (window) {
        w = *window;
    } else if (rep.prediction.gamma2_modified > 0.0) {
        w = default_window(rep.prediction.gamma2_modified, traj.recurrence_time);
        w.t_hi = std::min(w.t_hi, traj.t.empty() ? 0.0 : traj.t.back());
    } else {
        w = {0.1 * traj.t.back(), traj.t.back()};
    }
    rep.fit = fit_decay_rate(traj, w);
    if (rep.fit.constant)
        throw FitError(FitError::Kind::ConstantTrajectory,
                       "constant trajectory: p2 does not decay, no rate to compare", rep.fit);

    const double pred = rep.prediction.gamma2_modified;
    rep.relative_error = pred > 0.0 ? std::abs(rep.fit.rate - pred) / pred
                                    : std::numeric_limits<double>::infinity();
    return rep;
}

RunResult run_scenario(const CascadeSpec& spec, const RunControls& controls) {
    const DiscreteModel model = build_discrete(spec, controls.discretize);
    const RatePrediction pred = predict_rates(spec);
    const double t_rec = recurrence_time(model);

    const double dt = controls.dt > 0.0 ? controls.dt : default_time_step(model, pred.gamma2_modified);

    double t_max = controls.t_max;
    if (t_max <= 0.0) {
        if (controls.window) {
            t_max = controls.window->t_hi;
        } else if (pred.gamma2_modified > 0.0) {
            t_max = 1.05 * default_window(pred.gamma2_modified, t_rec).t_hi;
        } else {
            t_max = 0.25 * t_rec;
        }
        if (!controls.allow_past_recurrence) t_max = std::min(t_max, kRecurrenceFraction * t_rec);
    }

    auto steps = static_cast<std::size_t>(std::ceil(t_max / dt - 1e-9));
    std::size_t every = controls.sample_every;
    if (every == 0) every = std::max<std::size_t>(1, steps / kTargetSamples);
    // Round up to whole sampling intervals so the last sample reaches t_max.
    steps = (steps + every - 1) / every * every;
    t_max = static_cast<double>(steps) * dt;

    IntegrateOptions opts;
    opts.norm_tolerance = controls.norm_tolerance;
    opts.allow_past_recurrence = controls.allow_past_recurrence;

    RunResult out;
    out.trajectory = integrate(model, t_max, dt, every, opts);
    out.report = compare(spec, out.trajectory, controls.window);
    return out;
}

std::vector<RateReport> convergence_study(const CascadeSpec& spec, std::size_t refinements,
                                          const RunControls& controls) {
    if (refinements < 2) throw std::invalid_argument("convergence study needs at least 2 refinements");
    std::vector<RateReport> reports;
    std::size_t factor = 1;
    for (std::size_t i = 0; i < refinements; ++i, factor *= 2) {
        CascadeSpec level = factor == 1 ? spec : spec.refined(factor);
        reports.push_back(run_scenario(level, controls).report);
    }
    const double a = reports[reports.size() - 2].fit.rate;
    const double b = reports.back().fit.rate;
    reports.back().convergence_flag = b > 0.0 && std::abs(b - a) / b < 0.01;
    return reports;
}

double estimate_gamma1(const RateReport& report) {
    return report.prediction.n_factor * report.prediction.gamma2_modified;
}

}  // namespace cascade
