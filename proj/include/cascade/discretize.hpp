// discretize.hpp - finite-mode surrogate of the continuum cascade
//
// Each continuum state |1E> / |0E> becomes one mode per grid point, with the
// sqrt(rho * dE) weight folded into the couplings so that modes are orthonormal
// and the norm is a plain sum of |amplitude|^2.

#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "cascade/model.hpp"

namespace cascade {

/// Optional smooth roll-off of the band weights. With `edge_taper` = f > 0 the
/// sqrt(rho dE) weight of a mode at relative offset x = |e - center| / halfwidth
/// is multiplied by cos(pi/2 * (x - (1 - f)) / f) for x > 1 - f, so the
/// effective density falls to zero as cos^2 instead of stopping at a hard edge.
/// The interior 1 - f of each band is untouched, so rates evaluated at E2 are
/// unchanged. Hard edges make the principal-value part of the band sums
/// logarithmically singular, which dominates high orders of the operator series.
struct DiscretizeOptions {
    double edge_taper{0.0};
};

class DiscreteModel {
public:
    double e2() const { return e2_; }

    std::size_t n1() const { return e1_.size(); }
    std::size_t n0() const { return e0_.size(); }

    /// 1-band mode energies e_k and couplings g_k = V12(e_k) sqrt(rho1(e_k) d1).
    const std::vector<double>& band1_energies() const { return e1_; }
    const std::vector<double>& band1_couplings() const { return g_; }
    /// sqrt(rho1(e_k) d1)
    const std::vector<double>& band1_weights() const { return w_; }

    const std::vector<double>& band0_energies() const { return e0_; }
    /// sqrt(rho0(e'_j) d0)
    const std::vector<double>& band0_weights() const { return u_; }

    double spacing1() const { return d1_; }
    double spacing0() const { return d0_; }

    /// True when V10 is flat; then h(k, j) = v10 * w_k * u_j and no matrix is stored.
    bool separable() const { return separable_; }
    double separable_strength() const { return v10_flat_; }

    /// Kernel h(k, j) = V10(e'_j - e_k) w_k u_j.
    double kernel(std::size_t k, std::size_t j) const;

    /// Row-major n1 x n0 kernel. For a separable model this materializes it.
    std::vector<double> dense_kernel() const;

    /// Stored row-major kernel; empty when separable().
    const std::vector<double>& stored_kernel() const { return dense_; }

    /// Copy of this model that always takes the dense-kernel path.
    DiscreteModel as_dense() const;

    /// Largest |e_k - E2| over band 1 and |e'_j - E2| over band 0.
    double max_detuning() const;

    /// Sum over k of g_k^2.
    double total_coupling_sq() const;

    friend DiscreteModel build_discrete(const CascadeSpec& spec, const DiscretizeOptions& opts);

    /// Builds a model from explicit mode data. `kernel` must be n1 x n0 row-major.
    static DiscreteModel from_modes(double e2, std::vector<double> e1, std::vector<double> g,
                                    std::vector<double> e0, std::vector<double> kernel);

private:
    DiscreteModel() = default;

    double e2_{0.0};
    std::vector<double> e1_, g_, w_;
    std::vector<double> e0_, u_;
    double d1_{0.0}, d0_{0.0};
    bool separable_{false};
    double v10_flat_{0.0};
    std::vector<double> dense_;  // n1 x n0, only when !separable_
};

DiscreteModel build_discrete(const CascadeSpec& spec, const DiscretizeOptions& opts = {});

/// Weight multiplier applied by `edge_taper` to a mode at `energy` in `grid`.
double taper_factor(const EnergyGrid& grid, double energy, double edge_taper);

/// 2 pi / min(d1, d0): revival time of the finite surrogate.
double recurrence_time(const DiscreteModel& model);

}  // namespace cascade
