// series.hpp - integral-operator form of the cascade equations
//
// The band equations are rewritten as a1 = I12 a2 + I10 a0, a0 = I01 a1 with
//
//     (I_kl f)(t) = -i * integral_0^t V_kl(s) f(s) ds,
//
// where V_kl carries the interaction-picture phases. Eliminating a0 gives the
// Neumann series a1 = sum_n J^n I12 a2 with J = I10 I01, and substituting into
// the level-2 equation gives a scalar condition for the decay rate. This module
// evaluates those operators by composite Simpson quadrature on a uniform time
// sub-grid, independently of the ODE integrator in dynamics.hpp.

#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <vector>

#include "cascade/discretize.hpp"

namespace cascade::series {

using cplx = std::complex<double>;

enum class Channel {
    I12,  ///< level 2 (scalar) -> band 1
    I10,  ///< band 0 -> band 1
    I01,  ///< band 1 -> band 0
};

/// Values of a band vector (a1 or a0, or the scalar a2 as a length-1 band) at one time.
struct BandFunction {
    std::vector<cplx> values;
    double t{0.0};
};

/// A band vector sampled on a uniform grid 0 = t_0 < ... < t_M, M even.
struct BandHistory {
    std::vector<double> times;
    std::vector<std::vector<cplx>> values;  ///< values[i] is the band vector at times[i]

    std::size_t nodes() const { return times.size(); }
    std::size_t width() const { return values.empty() ? 0 : values.front().size(); }
    BandFunction at(std::size_t i) const { return {values[i], times[i]}; }
};

class QuadratureError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class SeriesError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct QuadratureOptions {
    /// Sub-grid nodes per period of the fastest phase exp(i (e'_j - e_k) t).
    double points_per_period{40.0};
    /// Below this the sub-grid is rejected as phase under-resolved.
    static constexpr double kMinPointsPerPeriod = 20.0;
};

/// v10 = 0 band amplitudes for a2(t) = exp(-gamma2 t):
///     a1_k(t) = g_k / (e_k - E2 + i gamma2) * (1 - exp(i (e_k - E2 + i gamma2) t)).
BandFunction two_level_closed_form(const DiscreteModel& model, double gamma2, double t);

/// Fastest angular frequency appearing in any V_kl phase of `model`.
double fastest_phase(const DiscreteModel& model);

/// Uniform grid on [0, t] with an even number of intervals and at least
/// `opts.points_per_period` nodes per fastest phase period.
std::vector<double> make_subgrid(const DiscreteModel& model, double t, const QuadratureOptions& opts = {});

/// Samples a scalar function of time (e.g. a2(t) = exp(-Gamma t)) as a width-1 history.
BandHistory sample_scalar(const std::vector<double>& times, const std::function<cplx(double)>& f);

/// (I_kl f)(s) at every node s of f's grid (cumulative Simpson).
BandHistory apply_I_history(const DiscreteModel& model, Channel channel, const BandHistory& f);

/// (I_kl f)(t) at the final node t = f.times.back().
BandFunction apply_I(const DiscreteModel& model, Channel channel, const BandHistory& f);

/// T_n(t) = V21(t) . J^n I12 exp(-Gamma s), for n = 0 .. max_order, evaluated at time t.
/// Intermediate histories are built innermost-first and reused across orders.
std::vector<cplx> neumann_terms(const DiscreteModel& model, double gamma_trial, std::size_t max_order,
                                double t, const QuadratureOptions& opts = {});

/// T_n(t) / T_{n-1}(t). Throws SeriesError("term underflow") when T_{n-1} is
/// negligible relative to T_0.
cplx neumann_term_ratio(const DiscreteModel& model, double gamma_trial, std::size_t n, double t,
                        const QuadratureOptions& opts = {});

/// Golden-rule rate read off the discrete couplings at the mode nearest E2:
/// pi g_k^2 / d1.
double discrete_golden_rule(const DiscreteModel& model);

/// Zeno factor read off the discrete kernel at the modes nearest E2:
/// pi^2 h(k, j)^2 / (d1 d0).
double discrete_zeno_factor(const DiscreteModel& model);

enum class TailClosure {
    None,       ///< plain truncation at max_order
    Geometric,  ///< close the remainder with the ratio of the last two terms
};

struct ResumOptions {
    TailClosure tail{TailClosure::Geometric};
    double damping{0.5};
    double tolerance{1e-6};  ///< relative change in Gamma between iterations
    std::size_t max_iterations{200};
    QuadratureOptions quadrature{};
};

struct ResumResult {
    double rate{0.0};
    std::size_t iterations{0};
    std::vector<cplx> terms;  ///< T_n at the converged rate, evaluated at t = 1 / rate
};

/// Self-consistent Gamma2 from the truncated rate condition
///     -i sum_n T_n(t) = -Gamma2 exp(-Gamma2 t),  t = 1 / Gamma2,
/// solved by damped fixed-point iteration starting from the golden-rule rate.
/// Throws SeriesError when the estimated N is >= 1 or the iteration does not converge.
ResumResult resummed_rate_detailed(const DiscreteModel& model, std::size_t max_order,
                                   const ResumOptions& opts = {});

double resummed_rate(const DiscreteModel& model, std::size_t max_order, const ResumOptions& opts = {});

}  // namespace cascade::series
