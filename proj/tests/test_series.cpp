#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "cascade/analysis.hpp"
#include "cascade/dynamics.hpp"
#include "cascade/series.hpp"

using namespace cascade;
using namespace cascade::series;
using doctest::Approx;

namespace {

constexpr double kGamma2 = 0.05;

// Wide, edge-tapered flat band: the regime where the term ratios are geometric.
DiscreteModel tapered(double n_factor) {
    return build_discrete(flat_cascade(kGamma2, n_factor, 80 * kGamma2, 2000), DiscretizeOptions{0.5});
}

// Narrower tapered band (40 gamma2), cheap enough for the iterative resummation.
DiscreteModel compact(double n_factor) {
    return build_discrete(flat_cascade(kGamma2, n_factor, 40 * kGamma2, 800), DiscretizeOptions{0.5});
}

// Same modes as `m` with every kernel entry negated.
DiscreteModel flipped_v10(const DiscreteModel& m) {
    auto h = m.dense_kernel();
    for (double& x : h) x = -x;
    return DiscreteModel::from_modes(m.e2(), m.band1_energies(), m.band1_couplings(), m.band0_energies(), h);
}

// Independent oracle for T_n: integrate the chain x_0' = -i V12 a2,
// y_n' = -i V01 x_{n-1}, x_n' = -i V10 y_n with RK4, then T_n = V21 x_n.
std::vector<cplx> chain_terms(const DiscreteModel& m, double gamma, std::size_t order, double t_end, double dt) {
    const auto& e1 = m.band1_energies();
    const auto& e0 = m.band0_energies();
    const auto& g = m.band1_couplings();
    const auto h = m.dense_kernel();
    const std::size_t n1 = m.n1(), n0 = m.n0(), K = order;
    using Block = std::vector<std::vector<cplx>>;
    const cplx mi{0.0, -1.0};

    auto deriv = [&](double t, const Block& x, const Block& y, Block& dx, Block& dy) {
        std::vector<cplx> p(n1), q(n0);
        for (std::size_t k = 0; k < n1; ++k) p[k] = std::polar(1.0, (e1[k] - m.e2()) * t);
        for (std::size_t j = 0; j < n0; ++j) q[j] = std::polar(1.0, (e0[j] - m.e2()) * t);
        const double a2 = std::exp(-gamma * t);
        for (std::size_t k = 0; k < n1; ++k) dx[0][k] = mi * g[k] * p[k] * a2;
        for (std::size_t o = 1; o <= K; ++o) {
            for (std::size_t j = 0; j < n0; ++j) {
                cplx s{};
                for (std::size_t k = 0; k < n1; ++k) s += h[k * n0 + j] * std::conj(p[k]) * x[o - 1][k];
                dy[o][j] = mi * q[j] * s;
            }
            for (std::size_t k = 0; k < n1; ++k) {
                cplx s{};
                for (std::size_t j = 0; j < n0; ++j) s += h[k * n0 + j] * std::conj(q[j]) * y[o][j];
                dx[o][k] = mi * p[k] * s;
            }
        }
    };
    Block x(K + 1, std::vector<cplx>(n1)), y(K + 1, std::vector<cplx>(n0));
    Block k1 = x, k2 = x, k3 = x, k4 = x, l1 = y, l2 = y, l3 = y, l4 = y, tx = x, ty = y;
    auto combine = [](Block& out, const Block& a, double c, const Block& b) {
        for (std::size_t i = 0; i < a.size(); ++i)
            for (std::size_t k = 0; k < a[i].size(); ++k) out[i][k] = a[i][k] + c * b[i][k];
    };
    const auto steps = static_cast<std::size_t>(std::lround(t_end / dt));
    for (std::size_t s = 0; s < steps; ++s) {
        const double t = s * dt;
        deriv(t, x, y, k1, l1);
        combine(tx, x, dt / 2, k1), combine(ty, y, dt / 2, l1);
        deriv(t + dt / 2, tx, ty, k2, l2);
        combine(tx, x, dt / 2, k2), combine(ty, y, dt / 2, l2);
        deriv(t + dt / 2, tx, ty, k3, l3);
        combine(tx, x, dt, k3), combine(ty, y, dt, l3);
        deriv(t + dt, tx, ty, k4, l4);
        for (std::size_t i = 0; i <= K; ++i) {
            for (std::size_t k = 0; k < n1; ++k)
                x[i][k] += dt / 6 * (k1[i][k] + 2.0 * k2[i][k] + 2.0 * k3[i][k] + k4[i][k]);
            for (std::size_t j = 0; j < n0; ++j)
                y[i][j] += dt / 6 * (l1[i][j] + 2.0 * l2[i][j] + 2.0 * l3[i][j] + l4[i][j]);
        }
    }
    std::vector<cplx> out(K + 1);
    for (std::size_t o = 0; o <= K; ++o)
        for (std::size_t k = 0; k < n1; ++k) out[o] += g[k] * std::polar(1.0, -(e1[k] - m.e2()) * t_end) * x[o][k];
    return out;
}

}  // namespace

TEST_CASE("two-level closed form") {
    auto m = build_discrete(flat_cascade(kGamma2, 0.0, 40 * kGamma2, 1000));
    SUBCASE("vanishes at t = 0") {
        for (auto a : two_level_closed_form(m, kGamma2, 0.0).values) CHECK(std::abs(a) == 0.0);
    }
    SUBCASE("resonant mode saturates at g / gamma2") {
        auto r = DiscreteModel::from_modes(0.0, {0.0}, {0.01}, {}, {});
        CHECK(std::abs(two_level_closed_form(r, kGamma2, 1e4).values[0]) == Approx(0.01 / kGamma2));
    }
    SUBCASE("matches the integrated band amplitudes at t = 1 / gamma2") {
        IntegrateOptions opts;
        opts.snapshot_times = {1.0 / kGamma2};
        auto tr = integrate(m, 1.0 / kGamma2, default_time_step(m, kGamma2), 100, opts);
        const auto& sim = tr.snapshots.at(0).a1;
        const auto cf = two_level_closed_form(m, kGamma2, 1.0 / kGamma2).values;
        double num = 0, den = 0;
        for (std::size_t k = 0; k < sim.size(); ++k) {
            num += std::norm(cf[k] - sim[k]);
            den += std::norm(sim[k]);
        }
        MESSAGE("closed form vs integration, relative RMS: " << std::sqrt(num / den));
        CHECK(std::sqrt(num / den) <= 0.02);
    }
    CHECK_THROWS_AS(two_level_closed_form(m, 0.0, 1.0), SeriesError);
}

TEST_CASE("apply_I: linearity and zero channels") {
    auto m = build_discrete(flat_cascade(kGamma2, 0.25, 0.5, 40));
    auto times = make_subgrid(m, 10.0);
    auto zero = sample_scalar(times, [](double) { return cplx{}; });
    for (auto a : apply_I(m, Channel::I12, zero).values) CHECK(std::abs(a) == 0.0);

    auto uncoupled = build_discrete(flat_cascade(0.0, 0.0, 0.5, 40));
    auto one = sample_scalar(times, [](double) { return cplx{1.0, 0.0}; });
    for (auto a : apply_I(uncoupled, Channel::I12, one).values) CHECK(std::abs(a) == 0.0);

    BandHistory band{times, std::vector<std::vector<cplx>>(times.size(), std::vector<cplx>(40, cplx{1.0, 0.5}))};
    for (auto a : apply_I(uncoupled, Channel::I01, band).values) CHECK(std::abs(a) == 0.0);
    for (auto a : apply_I(uncoupled, Channel::I10, band).values) CHECK(std::abs(a) == 0.0);
}

TEST_CASE("apply_I: I12 against the analytic single-mode integral") {
    auto m = build_discrete(flat_cascade(kGamma2, 0.0, 1.0, 200));
    const double gamma = kGamma2, t = 1.0 / gamma;
    QuadratureOptions fine;
    fine.points_per_period = 400;
    auto f = sample_scalar(make_subgrid(m, t, fine), [&](double s) { return cplx{std::exp(-gamma * s), 0.0}; });
    auto out = apply_I(m, Channel::I12, f);
    double worst = 0.0;
    for (std::size_t k = 0; k < m.n1(); ++k) {
        const cplx z{-gamma, m.band1_energies()[k] - m.e2()};
        const cplx exact = cplx{0.0, -1.0} * m.band1_couplings()[k] * (std::exp(z * t) - 1.0) / z;
        worst = std::max(worst, std::abs(out.values[k] - exact));
    }
    CHECK(worst <= 1e-8);
}

TEST_CASE("apply_I: dense and separable kernels agree") {
    auto m = build_discrete(flat_cascade(kGamma2, 0.3, 0.5, 30));
    auto d = m.as_dense();
    auto times = make_subgrid(m, 5.0);
    BandHistory band{times, {}};
    for (double s : times) {
        std::vector<cplx> v(30);
        for (std::size_t k = 0; k < v.size(); ++k) v[k] = std::polar(1.0, 0.3 * k + s);
        band.values.push_back(v);
    }
    for (auto ch : {Channel::I01, Channel::I10}) {
        auto a = apply_I(m, ch, band).values;
        auto b = apply_I(d, ch, band).values;
        for (std::size_t k = 0; k < a.size(); ++k) CHECK(std::abs(a[k] - b[k]) <= 1e-12 * (1 + std::abs(b[k])));
    }
}

TEST_CASE("apply_I: coarse sub-grids are rejected") {
    auto m = build_discrete(flat_cascade(kGamma2, 0.25, 1.0, 40));
    std::vector<double> coarse{0.0, 1.0, 2.0};
    auto f = sample_scalar(coarse, [](double) { return cplx{1.0, 0.0}; });
    CHECK_THROWS_AS(apply_I(m, Channel::I12, f), QuadratureError);
    std::vector<double> odd{0.0, 0.01, 0.02, 0.03};
    CHECK_THROWS_AS(apply_I(m, Channel::I12, sample_scalar(odd, [](double) { return cplx{1.0, 0.0}; })),
                    QuadratureError);
    QuadratureOptions too_few;
    too_few.points_per_period = 5;
    CHECK_THROWS_AS(make_subgrid(m, 10.0, too_few), QuadratureError);
}

TEST_CASE("neumann terms match the chain-ODE oracle") {
    auto m = build_discrete(flat_cascade(kGamma2, 0.25, 0.5, 40), DiscretizeOptions{0.5});
    const double t = 10.0;
    auto series = neumann_terms(m, kGamma2, 3, t);
    auto oracle = chain_terms(m, kGamma2, 3, t, 0.005);
    for (std::size_t n = 0; n <= 3; ++n) {
        INFO("order " << n);
        CHECK(std::abs(series[n] - oracle[n]) <= 1e-5 * std::abs(oracle[n]));
    }
}

TEST_CASE("term ratio") {
    SUBCASE("v10 = 0: J annihilates") {
        CHECK(std::abs(neumann_term_ratio(tapered(0.0), kGamma2, 1, 1 / kGamma2)) == 0.0);
        CHECK_THROWS_WITH_AS(neumann_term_ratio(tapered(0.0), kGamma2, 2, 1 / kGamma2), doctest::Contains("term underflow"),
                             SeriesError);
    }
    SUBCASE("N = 0.25 gives -N") {
        auto r = neumann_term_ratio(tapered(0.25), kGamma2 / 1.25, 1, 1 / kGamma2);
        CHECK(r.real() == Approx(-0.25).epsilon(0.05));
        CHECK(std::abs(r.imag()) <= 0.05 * 0.25);
    }
    SUBCASE("invariant under a sign flip of v10") {
        auto m = build_discrete(flat_cascade(kGamma2, 0.25, 0.5, 60), DiscretizeOptions{0.5});
        auto a = neumann_term_ratio(m, kGamma2, 1, 10.0);
        auto b = neumann_term_ratio(flipped_v10(m), kGamma2, 1, 10.0);
        CHECK(std::abs(a - b) <= 1e-12 * std::abs(a));
    }
    CHECK_THROWS_AS(neumann_term_ratio(tapered(0.25), kGamma2, 0, 1.0), SeriesError);
}

TEST_CASE("property: geometric term structure") {
    auto m = tapered(0.25);
    auto terms = neumann_terms(m, kGamma2 / 1.25, 3, 1 / kGamma2);
    std::vector<double> mags;
    for (std::size_t n = 1; n <= 3; ++n) mags.push_back(std::abs(terms[n] / terms[n - 1]));
    const auto [lo, hi] = std::minmax_element(mags.begin(), mags.end());
    MESSAGE("|T_n / T_n-1| = " << mags[0] << ", " << mags[1] << ", " << mags[2]);
    CHECK((*hi - *lo) / *hi <= 0.10);
}

TEST_CASE("discrete rates read off the modes") {
    auto m = build_discrete(flat_cascade(kGamma2, 0.5, 1.0, 200));
    CHECK(discrete_golden_rule(m) == Approx(kGamma2));
    CHECK(discrete_zeno_factor(m) == Approx(0.5));
}

TEST_CASE("resummed rate") {
    SUBCASE("N = 0 returns gamma2") {
        CHECK(resummed_rate(compact(0.0), 3) == Approx(kGamma2).epsilon(1e-12));
    }
    SUBCASE("max order 0 returns gamma2 regardless of v10") {
        CHECK(resummed_rate(compact(0.5), 0) == Approx(kGamma2).epsilon(1e-12));
    }
    SUBCASE("N = 0.5, order 3") {
        const auto m = compact(0.5);
        const double closed = resummed_rate(m, 3);
        CHECK(closed == Approx(kGamma2 / 1.5).epsilon(0.05));
        ResumOptions plain;
        plain.tail = TailClosure::None;
        const double truncated = resummed_rate(m, 3, plain);
        // 1 - N + N^2 - N^3 = 0.625 against 1 / (1 + N) = 0.667
        MESSAGE("plain truncation: " << truncated << " vs " << kGamma2 / 1.5);
        CHECK(truncated < closed);
    }
    SUBCASE("N >= 1 is outside the series regime") {
        CHECK_THROWS_AS(resummed_rate(compact(1.2), 3), SeriesError);
    }
}
