#include "cascade/discretize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace cascade {

double DiscreteModel::kernel(std::size_t k, std::size_t j) const {
    if (separable_) return v10_flat_ * w_[k] * u_[j];
    return dense_[k * n0() + j];
}

std::vector<double> DiscreteModel::dense_kernel() const {
    if (!separable_) return dense_;
    std::vector<double> out(n1() * n0());
    for (std::size_t k = 0; k < n1(); ++k)
        for (std::size_t j = 0; j < n0(); ++j) out[k * n0() + j] = v10_flat_ * w_[k] * u_[j];
    return out;
}

DiscreteModel DiscreteModel::as_dense() const {
    DiscreteModel m = *this;
    m.dense_ = dense_kernel();
    m.separable_ = false;
    return m;
}

double DiscreteModel::max_detuning() const {
    double m = 0.0;
    for (double e : e1_) m = std::max(m, std::abs(e - e2_));
    for (double e : e0_) m = std::max(m, std::abs(e - e2_));
    return m;
}

double DiscreteModel::total_coupling_sq() const {
    double s = 0.0;
    for (double g : g_) s += g * g;
    return s;
}

DiscreteModel DiscreteModel::from_modes(double e2, std::vector<double> e1, std::vector<double> g,
                                        std::vector<double> e0, std::vector<double> kernel) {
    if (e1.size() != g.size()) throw SpecError("from_modes: band-1 energies and couplings differ in length");
    if (kernel.size() != e1.size() * e0.size()) throw SpecError("from_modes: kernel must be n1 x n0");
    auto min_gap = [](const std::vector<double>& e) {
        double d = 0.0;
        for (std::size_t i = 1; i < e.size(); ++i) {
            double gap = std::abs(e[i] - e[i - 1]);
            d = (d == 0.0) ? gap : std::min(d, gap);
        }
        return d;
    };
    DiscreteModel m;
    m.e2_ = e2;
    m.d1_ = min_gap(e1);
    m.d0_ = min_gap(e0);
    m.w_.assign(e1.size(), 0.0);
    m.u_.assign(e0.size(), 0.0);
    m.e1_ = std::move(e1);
    m.g_ = std::move(g);
    m.e0_ = std::move(e0);
    m.dense_ = std::move(kernel);
    m.separable_ = false;
    return m;
}

double taper_factor(const EnergyGrid& grid, double energy, double edge_taper) {
    if (edge_taper <= 0.0) return 1.0;
    const double x = std::abs(energy - grid.center()) / grid.halfwidth();
    const double inner = 1.0 - edge_taper;
    if (x <= inner) return 1.0;
    const double s = std::min(1.0, (x - inner) / edge_taper);
    return std::cos(0.5 * std::numbers::pi * s);
}

DiscreteModel build_discrete(const CascadeSpec& spec, const DiscretizeOptions& opts) {
    if (!(opts.edge_taper >= 0.0 && opts.edge_taper <= 1.0))
        throw SpecError("edge_taper must lie in [0, 1]");
    const EnergyGrid& g1 = spec.grid1();
    const EnergyGrid& g0 = spec.grid0();

    DiscreteModel m;
    m.e2_ = spec.e2();
    m.d1_ = g1.spacing();
    m.d0_ = g0.spacing();
    m.e1_ = g1.points();
    m.e0_ = g0.points();

    m.w_.resize(g1.count());
    m.g_.resize(g1.count());
    for (std::size_t k = 0; k < g1.count(); ++k) {
        double e = g1[k];
        m.w_[k] = std::sqrt(spec.rho1()(e) * m.d1_) * taper_factor(g1, e, opts.edge_taper);
        m.g_[k] = spec.v12()(e) * m.w_[k];
    }
    m.u_.resize(g0.count());
    for (std::size_t j = 0; j < g0.count(); ++j)
        m.u_[j] = std::sqrt(spec.rho0()(g0[j]) * m.d0_) * taper_factor(g0, g0[j], opts.edge_taper);

    if (spec.v10().is_flat()) {
        m.separable_ = true;
        m.v10_flat_ = spec.v10()(0.0);
    } else {
        m.dense_.resize(g1.count() * g0.count());
        for (std::size_t k = 0; k < g1.count(); ++k)
            for (std::size_t j = 0; j < g0.count(); ++j)
                m.dense_[k * g0.count() + j] = spec.v10()(g0[j] - g1[k]) * m.w_[k] * m.u_[j];
    }
    return m;
}

double recurrence_time(const DiscreteModel& model) {
    double d = std::numeric_limits<double>::infinity();
    if (model.spacing1() > 0.0) d = std::min(d, model.spacing1());
    if (model.spacing0() > 0.0) d = std::min(d, model.spacing0());
    if (!std::isfinite(d)) return std::numeric_limits<double>::infinity();
    return 2.0 * std::numbers::pi / d;
}

}  // namespace cascade
