#include "cascade/series.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

namespace cascade::series {

namespace {

constexpr cplx minus_i{0.0, -1.0};
constexpr double kUnderflow = 1e-13;

// p[i][k] = exp(i (e_k - E2) t_i), q[i][j] = exp(i (e'_j - E2) t_i)
struct PhaseTable {
    std::vector<std::vector<cplx>> p, q;

    PhaseTable(const DiscreteModel& m, const std::vector<double>& times) {
        p.resize(times.size());
        q.resize(times.size());
        for (std::size_t i = 0; i < times.size(); ++i) {
            p[i] = phases(m.band1_energies(), m.e2(), times[i]);
            q[i] = phases(m.band0_energies(), m.e2(), times[i]);
        }
    }

    static std::vector<cplx> phases(const std::vector<double>& e, double e2, double t) {
        std::vector<cplx> out(e.size());
        for (std::size_t k = 0; k < e.size(); ++k) {
            double ph = (e[k] - e2) * t;
            out[k] = {std::cos(ph), std::sin(ph)};
        }
        return out;
    }
};

void check_grid(const DiscreteModel& model, const std::vector<double>& times) {
    if (times.size() < 3 || (times.size() - 1) % 2 != 0)
        throw QuadratureError(
            fmt::format("sub-grid needs an even number of intervals, got {} nodes", times.size()));
    if (times.front() != 0.0) throw QuadratureError("sub-grid must start at t = 0");
    const double h = times[1] - times[0];
    if (!(h > 0.0)) throw QuadratureError("sub-grid step must be positive");
    for (std::size_t i = 1; i < times.size(); ++i)
        if (std::abs((times[i] - times[i - 1]) - h) > 1e-9 * h)
            throw QuadratureError("sub-grid must be uniform");
    const double omega = fastest_phase(model);
    if (omega > 0.0) {
        const double per_period = 2.0 * std::numbers::pi / (omega * h);
        if (per_period < QuadratureOptions::kMinPointsPerPeriod)
            throw QuadratureError(fmt::format(
                "quadrature sub-grid too coarse: {:.1f} points per fastest phase period, need {}",
                per_period, QuadratureOptions::kMinPointsPerPeriod));
    }
}

// Integrand of channel `ch` at node i: the vector V_kl(t_i) f(t_i).
void integrand(const DiscreteModel& m, Channel ch, const PhaseTable& ph, std::size_t i,
               const std::vector<cplx>& f, std::vector<cplx>& out) {
    const std::size_t n1 = m.n1(), n0 = m.n0();
    const auto& p = ph.p[i];
    const auto& q = ph.q[i];
    switch (ch) {
        case Channel::I12: {
            const auto& g = m.band1_couplings();
            out.resize(n1);
            for (std::size_t k = 0; k < n1; ++k) out[k] = g[k] * p[k] * f[0];
            return;
        }
        case Channel::I01: {
            out.assign(n0, cplx{0.0, 0.0});
            if (m.separable()) {
                const auto& w = m.band1_weights();
                const auto& u = m.band0_weights();
                cplx s{0.0, 0.0};
                for (std::size_t k = 0; k < n1; ++k) s += w[k] * std::conj(p[k]) * f[k];
                for (std::size_t j = 0; j < n0; ++j) out[j] = m.separable_strength() * u[j] * q[j] * s;
                return;
            }
            const auto& h = m.stored_kernel();
            for (std::size_t k = 0; k < n1; ++k) {
                const cplx x = std::conj(p[k]) * f[k];
                const double* row = h.data() + k * n0;
                for (std::size_t j = 0; j < n0; ++j) out[j] += row[j] * x;
            }
            for (std::size_t j = 0; j < n0; ++j) out[j] *= q[j];
            return;
        }
        case Channel::I10: {
            out.assign(n1, cplx{0.0, 0.0});
            if (m.separable()) {
                const auto& w = m.band1_weights();
                const auto& u = m.band0_weights();
                cplx r{0.0, 0.0};
                for (std::size_t j = 0; j < n0; ++j) r += u[j] * std::conj(q[j]) * f[j];
                for (std::size_t k = 0; k < n1; ++k) out[k] = m.separable_strength() * w[k] * p[k] * r;
                return;
            }
            const auto& h = m.stored_kernel();
            for (std::size_t k = 0; k < n1; ++k) {
                const double* row = h.data() + k * n0;
                cplx acc{0.0, 0.0};
                for (std::size_t j = 0; j < n0; ++j) acc += row[j] * std::conj(q[j]) * f[j];
                out[k] = p[k] * acc;
            }
            return;
        }
    }
}

std::size_t input_width(const DiscreteModel& m, Channel ch) {
    switch (ch) {
        case Channel::I12: return 1;
        case Channel::I01: return m.n1();
        case Channel::I10: return m.n0();
    }
    return 0;
}

BandHistory cumulative(const DiscreteModel& m, Channel ch, const BandHistory& f, const PhaseTable& ph) {
    if (f.width() != input_width(m, ch))
        throw SeriesError(fmt::format("band function width {} does not match the channel input width {}",
                                      f.width(), input_width(m, ch)));
    const std::size_t nodes = f.nodes();
    const double h = f.times[1] - f.times[0];

    std::vector<std::vector<cplx>> g(nodes);
    for (std::size_t i = 0; i < nodes; ++i) integrand(m, ch, ph, i, f.values[i], g[i]);
    const std::size_t width = g[0].size();

    BandHistory out;
    out.times = f.times;
    out.values.assign(nodes, std::vector<cplx>(width, cplx{0.0, 0.0}));
    // Simpson on each pair of intervals; the midpoint value uses the
    // three-point rule for the first half interval.
    for (std::size_t i = 0; i + 2 < nodes; i += 2) {
        const auto& f0 = g[i];
        const auto& f1 = g[i + 1];
        const auto& f2 = g[i + 2];
        const auto& base = out.values[i];
        auto& mid = out.values[i + 1];
        auto& end = out.values[i + 2];
        for (std::size_t c = 0; c < width; ++c) {
            mid[c] = base[c] + (h / 12.0) * (5.0 * f0[c] + 8.0 * f1[c] - f2[c]);
            end[c] = base[c] + (h / 3.0) * (f0[c] + 4.0 * f1[c] + f2[c]);
        }
    }
    for (auto& row : out.values)
        for (auto& v : row) v *= minus_i;
    return out;
}

// V21(t) . a1(t) = sum_k g_k conj(p_k(t)) a1_k(t)
cplx contract_v21(const DiscreteModel& m, const std::vector<cplx>& p_last, const std::vector<cplx>& a1) {
    const auto& g = m.band1_couplings();
    cplx s{0.0, 0.0};
    for (std::size_t k = 0; k < a1.size(); ++k) s += g[k] * std::conj(p_last[k]) * a1[k];
    return s;
}

std::size_t nearest_index(const std::vector<double>& e, double target) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < e.size(); ++k)
        if (std::abs(e[k] - target) < std::abs(e[best] - target)) best = k;
    return best;
}

}  // namespace

BandFunction two_level_closed_form(const DiscreteModel& model, double gamma2, double t) {
    if (!(gamma2 > 0.0)) throw SeriesError("two-level closed form needs gamma2 > 0");
    BandFunction out;
    out.t = t;
    out.values.resize(model.n1());
    const cplx i{0.0, 1.0};
    for (std::size_t k = 0; k < model.n1(); ++k) {
        const cplx z = (model.band1_energies()[k] - model.e2()) + i * gamma2;
        out.values[k] = model.band1_couplings()[k] / z * (1.0 - std::exp(i * z * t));
    }
    return out;
}

double fastest_phase(const DiscreteModel& model) {
    double m1 = 0.0, m0 = 0.0;
    for (double e : model.band1_energies()) m1 = std::max(m1, std::abs(e - model.e2()));
    for (double e : model.band0_energies()) m0 = std::max(m0, std::abs(e - model.e2()));
    return model.n0() > 0 ? m1 + m0 : m1;
}

std::vector<double> make_subgrid(const DiscreteModel& model, double t, const QuadratureOptions& opts) {
    if (!(t > 0.0)) throw QuadratureError("sub-grid end time must be positive");
    if (!(opts.points_per_period >= QuadratureOptions::kMinPointsPerPeriod))
        throw QuadratureError(fmt::format("points_per_period = {} is below the minimum {}", opts.points_per_period,
                                          QuadratureOptions::kMinPointsPerPeriod));
    const double omega = fastest_phase(model);
    std::size_t intervals = 2;
    if (omega > 0.0) {
        const double h_target = 2.0 * std::numbers::pi / (omega * opts.points_per_period);
        intervals = std::max<std::size_t>(2, static_cast<std::size_t>(std::ceil(t / h_target)));
    }
    if (intervals % 2 != 0) ++intervals;
    std::vector<double> times(intervals + 1);
    const double h = t / static_cast<double>(intervals);
    for (std::size_t i = 0; i <= intervals; ++i) times[i] = h * static_cast<double>(i);
    times.back() = t;
    return times;
}

BandHistory sample_scalar(const std::vector<double>& times, const std::function<cplx(double)>& f) {
    BandHistory h;
    h.times = times;
    h.values.reserve(times.size());
    for (double t : times) h.values.push_back({f(t)});
    return h;
}

BandHistory apply_I_history(const DiscreteModel& model, Channel channel, const BandHistory& f) {
    check_grid(model, f.times);
    PhaseTable ph(model, f.times);
    return cumulative(model, channel, f, ph);
}

BandFunction apply_I(const DiscreteModel& model, Channel channel, const BandHistory& f) {
    BandHistory h = apply_I_history(model, channel, f);
    return h.at(h.nodes() - 1);
}

std::vector<cplx> neumann_terms(const DiscreteModel& model, double gamma_trial, std::size_t max_order,
                                double t, const QuadratureOptions& opts) {
    const std::vector<double> times = make_subgrid(model, t, opts);
    check_grid(model, times);
    PhaseTable ph(model, times);

    BandHistory a2 = sample_scalar(times, [gamma_trial](double s) { return cplx{std::exp(-gamma_trial * s), 0.0}; });
    BandHistory a1 = cumulative(model, Channel::I12, a2, ph);

    std::vector<cplx> terms;
    terms.reserve(max_order + 1);
    terms.push_back(contract_v21(model, ph.p.back(), a1.values.back()));
    for (std::size_t n = 1; n <= max_order; ++n) {
        BandHistory a0 = cumulative(model, Channel::I01, a1, ph);
        a1 = cumulative(model, Channel::I10, a0, ph);
        terms.push_back(contract_v21(model, ph.p.back(), a1.values.back()));
    }
    return terms;
}

cplx neumann_term_ratio(const DiscreteModel& model, double gamma_trial, std::size_t n, double t,
                        const QuadratureOptions& opts) {
    if (n < 1) throw SeriesError("term ratio needs order n >= 1");
    const auto terms = neumann_terms(model, gamma_trial, n, t, opts);
    if (std::abs(terms[n - 1]) <= kUnderflow * std::abs(terms[0]) || terms[0] == cplx{0.0, 0.0})
        throw SeriesError(fmt::format("term underflow: |T_{}| = {:.3e} is negligible", n - 1,
                                      std::abs(terms[n - 1])));
    return terms[n] / terms[n - 1];
}

double discrete_golden_rule(const DiscreteModel& model) {
    if (model.n1() == 0 || !(model.spacing1() > 0.0)) return 0.0;
    const std::size_t k = nearest_index(model.band1_energies(), model.e2());
    const double g = model.band1_couplings()[k];
    return std::numbers::pi * g * g / model.spacing1();
}

double discrete_zeno_factor(const DiscreteModel& model) {
    if (model.n1() == 0 || model.n0() == 0 || !(model.spacing1() > 0.0) || !(model.spacing0() > 0.0))
        return 0.0;
    const std::size_t k = nearest_index(model.band1_energies(), model.e2());
    const std::size_t j = nearest_index(model.band0_energies(), model.e2());
    const double h = model.kernel(k, j);
    constexpr double pi = std::numbers::pi;
    return pi * pi * h * h / (model.spacing1() * model.spacing0());
}

ResumResult resummed_rate_detailed(const DiscreteModel& model, std::size_t max_order,
                                   const ResumOptions& opts) {
    const double n_est = discrete_zeno_factor(model);
    if (n_est >= 1.0)
        throw SeriesError(fmt::format(
            "estimated N = {:.4g} >= 1: the geometric series does not converge", n_est));
    const double gamma2 = discrete_golden_rule(model);
    ResumResult res;
    // With no 1 -> 0 coupling J annihilates everything and the series stops at order 0.
    const auto& h = model.stored_kernel();
    const bool no_j = model.separable() ? model.separable_strength() == 0.0
                                        : std::all_of(h.begin(), h.end(), [](double x) { return x == 0.0; });
    if (max_order == 0 || no_j || gamma2 <= 0.0) {
        res.rate = gamma2;
        return res;
    }

    auto evaluate = [&](double gamma) {
        const double t = 1.0 / gamma;
        auto terms = neumann_terms(model, gamma, max_order, t, opts.quadrature);
        cplx sum{0.0, 0.0};
        for (const auto& term : terms) sum += term;
        if (opts.tail == TailClosure::Geometric) {
            const cplx prev = terms[max_order - 1];
            if (std::abs(prev) > kUnderflow * std::abs(terms[0])) {
                const cplx r = terms[max_order] / prev;
                if (std::abs(r) < 1.0) sum += terms[max_order] * r / (1.0 - r);
            }
        }
        res.terms = std::move(terms);
        // -i sum = -Gamma exp(-Gamma t)  =>  Gamma = Re(i sum exp(Gamma t))
        return (cplx{0.0, 1.0} * sum * std::exp(gamma * t)).real();
    };

    double gamma = gamma2;
    for (std::size_t it = 1; it <= opts.max_iterations; ++it) {
        const double next = evaluate(gamma);
        if (!(next > 0.0) || !std::isfinite(next))
            throw SeriesError(fmt::format("fixed-point iteration left the physical range: Gamma = {}", next));
        const double updated = (1.0 - opts.damping) * gamma + opts.damping * next;
        res.iterations = it;
        if (std::abs(next - gamma) <= opts.tolerance * gamma) {
            res.rate = next;
            return res;
        }
        gamma = updated;
    }
    throw SeriesError(fmt::format("resummed rate did not converge in {} iterations (last {:.8g})",
                                  opts.max_iterations, gamma));
}

double resummed_rate(const DiscreteModel& model, std::size_t max_order, const ResumOptions& opts) {
    return resummed_rate_detailed(model, max_order, opts).rate;
}

}  // namespace cascade::series
