#pragma once

#include "hyperlab/foliation.hpp"

#include <vector>

namespace hyperlab {

struct IntegrandStats {
    double min = 0.0; ///< min over nodes of trchi * trchib
    double max = 0.0;
};

struct MassReport {
    double t = 0.0;
    double rho = 0.0;
    double area = 0.0;
    double area_radius = 0.0; ///< sqrt(area / 4 pi)
    double mass = 0.0;
    IntegrandStats integrand{};
};

/// Hawking mass (r/2)(1 + (1/16 pi) sum trchi trchib dmu) of a slice with null forms.
/// Throws ValidationError("MissingNullForms").
MassReport hawking_mass(const LeafSlice& slice);

struct BondiFit {
    double m_inf = 0.0;
    double c = 0.0;        ///< coefficient of 1/t
    double residual = 0.0; ///< root mean square of m(t) - m_inf - c/t over the fitted points
    int points = 0;
};

struct BondiTrace {
    std::vector<MassReport> reports;
    BondiFit fit;
};

/// Least-squares fit m = m_inf + c/t over the last half (rounded up) of `reports`.
BondiFit fit_bondi_limit(const std::vector<MassReport>& reports);

/// Hawking masses of S_{t,rho} for every t of the increasing `t_grid`, and the fitted
/// large-t limit.  Second fundamental form transport is switched on regardless of
/// `opts.trace`.  Throws ValidationError("BadGrid") for a non-increasing grid.
BondiTrace bondi_trace(const MetricModel& model, const Vec4& origin, double rho, const std::vector<double>& t_grid,
                       const OmegaGrid& omega, const SphereOptions& opts = {});

} // namespace hyperlab
