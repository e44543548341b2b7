// dynamics.hpp - interaction-picture coefficient equations and their RK4 integration
//
// State amplitudes carry only the slow dynamics; the free-evolution phases
// exp(+-i (e - E2) t) appear explicitly in the couplings and are evaluated by
// direct trigonometry at every stage time.

#pragma once

#include <complex>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "cascade/discretize.hpp"

namespace cascade {

using cplx = std::complex<double>;

struct StateVector {
    cplx a2{1.0, 0.0};
    std::vector<cplx> a1;
    std::vector<cplx> a0;
    double t{0.0};

    /// Level 2 occupied, both bands empty, t = 0.
    static StateVector initial(const DiscreteModel& model);

    double p2() const { return std::norm(a2); }
    double p1() const;
    double p0() const;
    double norm() const { return p2() + p1() + p0(); }
};

class DynamicsError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NormDriftError : public DynamicsError {
public:
    NormDriftError(double t, double drift, double tolerance);
    double time() const { return t_; }
    double drift() const { return drift_; }

private:
    double t_;
    double drift_;
};

/// d/dt of `state` at time state.t. The returned vector's `t` is left at state.t.
/// Uses the rank-1 contraction when model.separable(), the dense kernel otherwise.
StateVector rhs(const StateVector& state, const DiscreteModel& model);

struct Trajectory {
    std::vector<double> t;
    std::vector<double> p2, p1, p0, norm;
    std::vector<StateVector> snapshots;  ///< at IntegrateOptions::snapshot_times
    double max_norm_drift{0.0};
    double dt{0.0};
    double recurrence_time{std::numeric_limits<double>::infinity()};

    std::size_t size() const { return t.size(); }
};

struct IntegrateOptions {
    double norm_tolerance{1e-6};
    bool allow_past_recurrence{false};  ///< permit t_max >= 0.5 * recurrence time
    bool allow_large_step{false};       ///< skip the phase-resolution check on dt
    std::vector<double> snapshot_times;  ///< rounded to the nearest step
};

/// Largest dt accepted by integrate(): 0.1 * 2 pi / (2 * max detuning).
double max_time_step(const DiscreteModel& model);

/// min(0.05 / max detuning, 0.01 / gamma_predicted).
double default_time_step(const DiscreteModel& model, double gamma_predicted);

/// Fixed-step classical RK4 from StateVector::initial. Samples every
/// `sample_every` steps, always including t = 0. Throws DynamicsError on a
/// step that under-resolves the phases or a horizon past half the recurrence
/// time, NormDriftError when |norm - 1| exceeds the tolerance at a sample.
Trajectory integrate(const DiscreteModel& model, double t_max, double dt, std::size_t sample_every,
                     const IntegrateOptions& options = {});

}  // namespace cascade
