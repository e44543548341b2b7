#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "cascade/dynamics.hpp"

using namespace cascade;
using doctest::Approx;

namespace {

constexpr double kPi = std::numbers::pi;

StateVector random_state(const DiscreteModel& m, std::mt19937_64& rng) {
    std::normal_distribution<double> n;
    StateVector s = StateVector::initial(m);
    s.a2 = {n(rng), n(rng)};
    for (auto& a : s.a1) a = {n(rng), n(rng)};
    for (auto& a : s.a0) a = {n(rng), n(rng)};
    s.t = std::abs(n(rng)) * 10.0;
    const double scale = 1.0 / std::sqrt(s.norm());
    s.a2 *= scale;
    for (auto& a : s.a1) a *= scale;
    for (auto& a : s.a0) a *= scale;
    return s;
}

double diff_norm(const StateVector& a, const StateVector& b) {
    double s = std::norm(a.a2 - b.a2);
    for (std::size_t k = 0; k < a.a1.size(); ++k) s += std::norm(a.a1[k] - b.a1[k]);
    for (std::size_t j = 0; j < a.a0.size(); ++j) s += std::norm(a.a0[j] - b.a0[j]);
    return std::sqrt(s);
}

double inner_re(const StateVector& a, const StateVector& b) {
    double s = (std::conj(a.a2) * b.a2).real();
    for (std::size_t k = 0; k < a.a1.size(); ++k) s += (std::conj(a.a1[k]) * b.a1[k]).real();
    for (std::size_t j = 0; j < a.a0.size(); ++j) s += (std::conj(a.a0[j]) * b.a0[j]).real();
    return s;
}

StateVector axpy(const StateVector& a, double h, const StateVector& d) {
    StateVector r = a;
    r.a2 += h * d.a2;
    for (std::size_t k = 0; k < r.a1.size(); ++k) r.a1[k] += h * d.a1[k];
    for (std::size_t j = 0; j < r.a0.size(); ++j) r.a0[j] += h * d.a0[j];
    return r;
}

CascadeSpec small_spec(std::size_t n, CouplingProfile v10, double shift = 0.0) {
    return CascadeSpec(0.013 + shift, EnergyGrid(shift, 1.0, n), EnergyGrid(0.1 + shift, 0.9, n),
                       CouplingProfile::lorentzian(shift, 2.0, 0.4), CouplingProfile::flat(1 / kPi),
                       CouplingProfile::lorentzian(0.2 + shift, 1.5, 0.3), std::move(v10));
}

}  // namespace

TEST_CASE("initial state") {
    auto m = build_discrete(flat_cascade(0.05, 0.25, 1.0, 10));
    auto s = StateVector::initial(m);
    CHECK(s.p2() == 1.0);
    CHECK(s.p1() == 0.0);
    CHECK(s.p0() == 0.0);
    CHECK(s.a1.size() == 10);
    CHECK(s.a0.size() == 10);
}

TEST_CASE("rhs: zero couplings give a zero derivative") {
    auto m = build_discrete(flat_cascade(0.0, 0.0, 1.0, 8));
    std::mt19937_64 rng(1);
    auto d = rhs(random_state(m, rng), m);
    CHECK(std::abs(d.a2) == 0.0);
    for (auto a : d.a1) CHECK(std::abs(a) == 0.0);
    for (auto a : d.a0) CHECK(std::abs(a) == 0.0);
}

TEST_CASE("rhs: resonant Rabi pair") {
    auto m = DiscreteModel::from_modes(0.0, {0.0}, {0.1}, {}, {});
    StateVector s = StateVector::initial(m);
    s.a2 = {0.6, 0.2};
    s.a1 = {{-0.3, 0.7}};
    auto d = rhs(s, m);
    const cplx mi{0.0, -1.0};
    CHECK(std::abs(d.a2 - mi * 0.1 * s.a1[0]) < 1e-15);
    CHECK(std::abs(d.a1[0] - mi * 0.1 * s.a2) < 1e-15);
}

TEST_CASE("rhs: dimension mismatch is rejected") {
    auto m = build_discrete(flat_cascade(0.05, 0.25, 1.0, 8));
    auto s = StateVector::initial(m);
    s.a1.pop_back();
    CHECK_THROWS_AS(rhs(s, m), DynamicsError);
}

TEST_CASE("rhs: rank-1 fast path matches the dense kernel") {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> u(0.05, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        CascadeSpec spec(0.01, EnergyGrid(0.0, u(rng) + 0.5, 7), EnergyGrid(0.05, u(rng) + 0.5, 7),
                         CouplingProfile::lorentzian(0.0, u(rng), u(rng)), CouplingProfile::flat(u(rng)),
                         CouplingProfile::flat(u(rng)), CouplingProfile::flat(u(rng)));
        auto fast = build_discrete(spec);
        REQUIRE(fast.separable());
        auto dense = fast.as_dense();
        auto s = random_state(fast, rng);
        auto a = rhs(s, fast);
        auto b = rhs(s, dense);
        CHECK(diff_norm(a, b) <= 1e-12 * diff_norm(b, StateVector{cplx{}, std::vector<cplx>(7), std::vector<cplx>(7), 0}));
    }
}

TEST_CASE("property: generator is anti-Hermitian (d norm / dt = 0)") {
    std::mt19937_64 rng(7);
    for (auto v10 : {CouplingProfile::flat(0.6), CouplingProfile::lorentzian(0.0, 0.3, 0.8)}) {
        auto m = build_discrete(small_spec(30, v10));
        for (int trial = 0; trial < 10; ++trial) {
            auto s = random_state(m, rng);
            auto d = rhs(s, m);
            const double analytic = 2.0 * inner_re(s, d);
            // The norm is quadratic, so the central difference has no truncation error.
            const double h = 1e-3;
            const double fd = (axpy(s, h, d).norm() - axpy(s, -h, d).norm()) / (2 * h);
            CHECK(std::abs(analytic) <= 1e-10);
            CHECK(std::abs(fd) <= 1e-10);
        }
    }
}

TEST_CASE("integrate: Rabi pair follows cos^2") {
    const double g = 0.1;
    auto m = DiscreteModel::from_modes(0.0, {0.0}, {g}, {}, {});
    auto tr = integrate(m, 10.0, 0.01, 1);
    CHECK(std::abs(tr.p2.back() - std::pow(std::cos(g * 10.0), 2)) <= 1e-8);
    auto longer = integrate(m, 10.0 / g, 0.01, 10);
    for (std::size_t i = 0; i < longer.size(); ++i)
        CHECK(std::abs(longer.p2[i] - std::pow(std::cos(g * longer.t[i]), 2)) <= 1e-8);
}

TEST_CASE("integrate: zero coupling stays on level 2") {
    auto m = build_discrete(flat_cascade(0.0, 0.0, 1.0, 50));
    auto tr = integrate(m, 70.0, 0.05, 20);
    for (double p : tr.p2) CHECK(p == 1.0);
}

TEST_CASE("integrate: samples, bookkeeping and initial condition") {
    auto m = build_discrete(flat_cascade(0.05, 0.25, 1.0, 100));
    auto tr = integrate(m, 10.0, 0.05, 10);
    REQUIRE(tr.size() == 21);
    CHECK(tr.t.front() == 0.0);
    CHECK(tr.t.back() == Approx(10.0));
    CHECK(tr.p2.front() == 1.0);
    CHECK(tr.p1.front() == 0.0);
    CHECK(tr.p0.front() == 0.0);
    for (std::size_t i = 0; i < tr.size(); ++i)
        CHECK(tr.p2[i] + tr.p1[i] + tr.p0[i] == Approx(tr.norm[i]).epsilon(1e-14));
    CHECK(tr.max_norm_drift <= 1e-6);
}

TEST_CASE("integrate: precondition and tolerance errors") {
    auto m = build_discrete(flat_cascade(0.05, 0.25, 1.0, 100));
    CHECK(max_time_step(m) == Approx(0.1 * 2 * kPi / (2 * m.max_detuning())));
    CHECK_THROWS_AS(integrate(m, 10.0, 2.0 * max_time_step(m), 1), DynamicsError);
    CHECK_THROWS_AS(integrate(m, 0.6 * recurrence_time(m), 0.05, 100), DynamicsError);

    IntegrateOptions past;
    past.allow_past_recurrence = true;
    CHECK_NOTHROW(integrate(m, 0.6 * recurrence_time(m), 0.1, 100, past));

    IntegrateOptions coarse;
    coarse.allow_large_step = true;
    CHECK_THROWS_AS(integrate(m, 20.0, 1.5, 1, coarse), NormDriftError);
}

TEST_CASE("integrate: snapshots at requested times") {
    auto m = build_discrete(flat_cascade(0.05, 0.25, 1.0, 40));
    IntegrateOptions opts;
    opts.snapshot_times = {0.0, 5.0};
    auto tr = integrate(m, 10.0, 0.05, 50, opts);
    REQUIRE(tr.snapshots.size() == 2);
    CHECK(tr.snapshots[0].p2() == 1.0);
    CHECK(tr.snapshots[1].t == Approx(5.0));
    CHECK(tr.snapshots[1].a1.size() == 40);
}

TEST_CASE("property: gauge shift of all energies leaves populations unchanged") {
    for (auto v10 : {CouplingProfile::flat(0.5), CouplingProfile::lorentzian(0.0, 0.4, 0.6)}) {
        auto a = integrate(build_discrete(small_spec(60, v10)), 20.0, 0.02, 50);
        auto b = integrate(build_discrete(small_spec(60, v10, 3.7)), 20.0, 0.02, 50);
        REQUIRE(a.size() == b.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            CHECK(a.p2[i] == Approx(b.p2[i]).epsilon(1e-9));
            CHECK(a.p1[i] == Approx(b.p1[i]).epsilon(1e-9));
            CHECK(a.p0[i] == Approx(b.p0[i]).epsilon(1e-9));
        }
    }
}

// RK4 applied to a skew-Hermitian system loses norm at O(dt^6) per step, so the
// accumulated drift falls by 2^5 per halving (the amplitudes themselves are O(dt^4)).
TEST_CASE("property: norm drift scales as dt^5, amplitude error as dt^4") {
    auto m = build_discrete(flat_cascade(0.05, 0.25, 1.0, 100));
    IntegrateOptions opts;
    opts.allow_large_step = true;
    opts.norm_tolerance = std::numeric_limits<double>::infinity();
    const double t = 20.0;
    const double d1 = integrate(m, t, 0.4, 1, opts).max_norm_drift;
    const double d2 = integrate(m, t, 0.2, 1, opts).max_norm_drift;
    const double d3 = integrate(m, t, 0.1, 1, opts).max_norm_drift;
    MESSAGE("drift ratios under dt halving: " << d1 / d2 << ", " << d2 / d3);
    CHECK(d1 / d2 == Approx(32.0).epsilon(0.1));
    CHECK(d2 / d3 == Approx(32.0).epsilon(0.1));

    opts.snapshot_times = {t};
    const StateVector exact = integrate(m, t, 0.0125, 1, opts).snapshots.at(0);
    auto err = [&](double dt) {
        const StateVector s = integrate(m, t, dt, 1, opts).snapshots.at(0);
        double e = std::norm(s.a2 - exact.a2);
        for (std::size_t k = 0; k < s.a1.size(); ++k) e += std::norm(s.a1[k] - exact.a1[k]);
        for (std::size_t j = 0; j < s.a0.size(); ++j) e += std::norm(s.a0[j] - exact.a0[j]);
        return std::sqrt(e);
    };
    const double e1 = err(0.2), e2 = err(0.1);
    MESSAGE("amplitude error ratio under dt halving: " << e1 / e2);
    CHECK(e1 / e2 == Approx(16.0).epsilon(0.15));
}

TEST_CASE("property: early-time quadratic loss") {
    auto m = build_discrete(flat_cascade(0.05, 0.25, 1.0, 400));
    const double s = m.total_coupling_sq();
    auto tr = integrate(m, 0.01 / 0.05, 0.001, 10);
    for (std::size_t i = 1; i < tr.size(); ++i) {
        const double q = s * tr.t[i] * tr.t[i];
        CHECK(std::abs((1.0 - tr.p2[i]) - q) <= 0.05 * q);
    }
}

TEST_CASE("default time step") {
    auto m = build_discrete(flat_cascade(0.05, 0.0, 1.0, 100));
    CHECK(default_time_step(m, 0.05) == Approx(std::min(0.05 / m.max_detuning(), 0.01 / 0.05)));
    CHECK(default_time_step(m, 100.0) == Approx(0.01 / 100.0));
}
