#include "cascade/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

namespace cascade {

namespace {

constexpr cplx minus_i{0.0, -1.0};

// p_k = exp(i (e_k - E2) t), q_j = exp(i (e'_j - E2) t)
struct Phases {
    std::vector<cplx> p, q;

    void evaluate(const DiscreteModel& m, double t) {
        const auto& e1 = m.band1_energies();
        const auto& e0 = m.band0_energies();
        p.resize(e1.size());
        q.resize(e0.size());
        for (std::size_t k = 0; k < e1.size(); ++k) {
            double ph = (e1[k] - m.e2()) * t;
            p[k] = {std::cos(ph), std::sin(ph)};
        }
        for (std::size_t j = 0; j < e0.size(); ++j) {
            double ph = (e0[j] - m.e2()) * t;
            q[j] = {std::cos(ph), std::sin(ph)};
        }
    }
};

// Scratch buffers reused across stages of one trajectory.
struct Workspace {
    std::vector<cplx> x, y;
};

void evaluate_rhs(const StateVector& s, const DiscreteModel& m, const Phases& ph, Workspace& ws,
                  StateVector& out) {
    const std::size_t n1 = m.n1();
    const std::size_t n0 = m.n0();
    const auto& g = m.band1_couplings();
    out.a1.resize(n1);
    out.a0.resize(n0);
    out.t = s.t;

    // x_k = conj(p_k) a1_k, y_j = conj(q_j) a0_j
    ws.x.resize(n1);
    ws.y.resize(n0);
    cplx to2{0.0, 0.0};
    for (std::size_t k = 0; k < n1; ++k) {
        ws.x[k] = std::conj(ph.p[k]) * s.a1[k];
        to2 += g[k] * ws.x[k];
    }
    for (std::size_t j = 0; j < n0; ++j) ws.y[j] = std::conj(ph.q[j]) * s.a0[j];
    out.a2 = minus_i * to2;

    if (m.separable()) {
        const double v = m.separable_strength();
        const auto& w = m.band1_weights();
        const auto& u = m.band0_weights();
        cplx r{0.0, 0.0};
        for (std::size_t j = 0; j < n0; ++j) r += u[j] * ws.y[j];
        cplx sw{0.0, 0.0};
        for (std::size_t k = 0; k < n1; ++k) sw += w[k] * ws.x[k];
        for (std::size_t k = 0; k < n1; ++k)
            out.a1[k] = minus_i * ph.p[k] * (g[k] * s.a2 + v * w[k] * r);
        for (std::size_t j = 0; j < n0; ++j) out.a0[j] = minus_i * ph.q[j] * (v * u[j] * sw);
        return;
    }

    const std::vector<double>& h = m.stored_kernel();
    std::fill(out.a0.begin(), out.a0.end(), cplx{0.0, 0.0});
    for (std::size_t k = 0; k < n1; ++k) {
        const double* row = h.data() + k * n0;
        double re = 0.0, im = 0.0;
        for (std::size_t j = 0; j < n0; ++j) {
            re += row[j] * ws.y[j].real();
            im += row[j] * ws.y[j].imag();
        }
        out.a1[k] = minus_i * ph.p[k] * (g[k] * s.a2 + cplx{re, im});
        const double xr = ws.x[k].real();
        const double xi = ws.x[k].imag();
        for (std::size_t j = 0; j < n0; ++j) out.a0[j] += cplx{row[j] * xr, row[j] * xi};
    }
    for (std::size_t j = 0; j < n0; ++j) out.a0[j] *= minus_i * ph.q[j];
}

// out = s + c * d
void axpy(const StateVector& s, double c, const StateVector& d, StateVector& out) {
    out.a2 = s.a2 + c * d.a2;
    out.a1.resize(s.a1.size());
    out.a0.resize(s.a0.size());
    for (std::size_t k = 0; k < s.a1.size(); ++k) out.a1[k] = s.a1[k] + c * d.a1[k];
    for (std::size_t j = 0; j < s.a0.size(); ++j) out.a0[j] = s.a0[j] + c * d.a0[j];
}

void check_dimensions(const StateVector& s, const DiscreteModel& m) {
    if (s.a1.size() != m.n1() || s.a0.size() != m.n0())
        throw DynamicsError(fmt::format("state dimensions ({}, {}) do not match model ({}, {})",
                                        s.a1.size(), s.a0.size(), m.n1(), m.n0()));
}

}  // namespace

StateVector StateVector::initial(const DiscreteModel& model) {
    StateVector s;
    s.a2 = {1.0, 0.0};
    s.a1.assign(model.n1(), cplx{0.0, 0.0});
    s.a0.assign(model.n0(), cplx{0.0, 0.0});
    s.t = 0.0;
    return s;
}

double StateVector::p1() const {
    double s = 0.0;
    for (const auto& a : a1) s += std::norm(a);
    return s;
}

double StateVector::p0() const {
    double s = 0.0;
    for (const auto& a : a0) s += std::norm(a);
    return s;
}

NormDriftError::NormDriftError(double t, double drift, double tolerance)
    : DynamicsError(fmt::format("norm drift {:.3e} exceeds tolerance {:.3e} at t = {:.6g}", drift,
                                tolerance, t)),
      t_(t),
      drift_(drift) {}

StateVector rhs(const StateVector& state, const DiscreteModel& model) {
    check_dimensions(state, model);
    Phases ph;
    ph.evaluate(model, state.t);
    Workspace ws;
    StateVector out;
    evaluate_rhs(state, model, ph, ws, out);
    return out;
}

double max_time_step(const DiscreteModel& model) {
    double det = model.max_detuning();
    if (det <= 0.0) return std::numeric_limits<double>::infinity();
    return 0.1 * 2.0 * std::numbers::pi / (2.0 * det);
}

double default_time_step(const DiscreteModel& model, double gamma_predicted) {
    double dt = std::numeric_limits<double>::infinity();
    double det = model.max_detuning();
    if (det > 0.0) dt = std::min(dt, 0.05 / det);
    if (gamma_predicted > 0.0) dt = std::min(dt, 0.01 / gamma_predicted);
    if (!std::isfinite(dt)) dt = 0.01;
    return dt;
}

Trajectory integrate(const DiscreteModel& model, double t_max, double dt, std::size_t sample_every,
                     const IntegrateOptions& options) {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw DynamicsError("time step must be positive");
    if (!(t_max > 0.0) || !std::isfinite(t_max)) throw DynamicsError("t_max must be positive");
    if (sample_every == 0) throw DynamicsError("sample_every must be at least 1");
    if (!options.allow_large_step && dt > max_time_step(model))
        throw DynamicsError(fmt::format(
            "time step too large: dt = {:.6g} exceeds {:.6g} needed to resolve the fastest phase",
            dt, max_time_step(model)));
    const double t_rec = recurrence_time(model);
    if (!options.allow_past_recurrence && t_max >= 0.5 * t_rec)
        throw DynamicsError(fmt::format(
            "t_max = {:.6g} reaches half the recurrence time {:.6g}; refine the grids", t_max,
            0.5 * t_rec));

    const auto n_steps = static_cast<std::size_t>(std::ceil(t_max / dt - 1e-9));

    std::vector<std::size_t> snapshot_steps;
    for (double ts : options.snapshot_times)
        snapshot_steps.push_back(static_cast<std::size_t>(std::llround(std::max(0.0, ts) / dt)));

    Trajectory traj;
    traj.dt = dt;
    traj.recurrence_time = t_rec;

    StateVector s = StateVector::initial(model);
    StateVector k1, k2, k3, k4, tmp;
    Phases ph_start, ph_mid, ph_end;
    Workspace ws;

    auto record = [&]() {
        double p2 = s.p2(), p1 = s.p1(), p0 = s.p0();
        double nrm = p2 + p1 + p0;
        traj.t.push_back(s.t);
        traj.p2.push_back(p2);
        traj.p1.push_back(p1);
        traj.p0.push_back(p0);
        traj.norm.push_back(nrm);
        double drift = std::abs(nrm - 1.0);
        traj.max_norm_drift = std::max(traj.max_norm_drift, drift);
        if (drift > options.norm_tolerance)
            throw NormDriftError(s.t, drift, options.norm_tolerance);
    };
    auto maybe_snapshot = [&](std::size_t step) {
        for (std::size_t want : snapshot_steps)
            if (want == step) traj.snapshots.push_back(s);
    };

    record();
    maybe_snapshot(0);
    ph_start.evaluate(model, 0.0);
    for (std::size_t step = 1; step <= n_steps; ++step) {
        const double t0 = static_cast<double>(step - 1) * dt;
        const double t1 = static_cast<double>(step) * dt;
        ph_mid.evaluate(model, t0 + 0.5 * dt);
        ph_end.evaluate(model, t1);

        s.t = t0;
        evaluate_rhs(s, model, ph_start, ws, k1);
        axpy(s, 0.5 * dt, k1, tmp);
        tmp.t = t0 + 0.5 * dt;
        evaluate_rhs(tmp, model, ph_mid, ws, k2);
        axpy(s, 0.5 * dt, k2, tmp);
        evaluate_rhs(tmp, model, ph_mid, ws, k3);
        axpy(s, dt, k3, tmp);
        tmp.t = t1;
        evaluate_rhs(tmp, model, ph_end, ws, k4);

        const double c = dt / 6.0;
        s.a2 += c * (k1.a2 + 2.0 * k2.a2 + 2.0 * k3.a2 + k4.a2);
        for (std::size_t k = 0; k < s.a1.size(); ++k)
            s.a1[k] += c * (k1.a1[k] + 2.0 * k2.a1[k] + 2.0 * k3.a1[k] + k4.a1[k]);
        for (std::size_t j = 0; j < s.a0.size(); ++j)
            s.a0[j] += c * (k1.a0[j] + 2.0 * k2.a0[j] + 2.0 * k3.a0[j] + k4.a0[j]);
        s.t = t1;

        std::swap(ph_start, ph_end);
        if (step % sample_every == 0) record();
        maybe_snapshot(step);
    }
    return traj;
}

}  // namespace cascade
