#include "hyperlab/mass.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace hyperlab {

MassReport hawking_mass(const LeafSlice& slice)
{
    if (!slice.has_null_forms) throw ValidationError("MissingNullForms", "slice null forms have not been computed");
    MassReport m;
    m.t = slice.t;
    m.rho = slice.rho;
    m.area = slice.area;
    m.area_radius = slice.area_radius;
    double integral = 0.0;
    m.integrand.min = std::numeric_limits<double>::infinity();
    m.integrand.max = -std::numeric_limits<double>::infinity();
    for (const SphereNode& n : slice.nodes) {
        const double p = n.trchi * n.trchib;
        integral += p * n.weight;
        m.integrand.min = std::min(m.integrand.min, p);
        m.integrand.max = std::max(m.integrand.max, p);
    }
    m.mass = 0.5 * m.area_radius * (1.0 + integral / (16.0 * std::numbers::pi));
    return m;
}

BondiFit fit_bondi_limit(const std::vector<MassReport>& reports)
{
    const std::size_t n = reports.size();
    if (n == 0) throw ValidationError("BadGrid", "no mass reports to fit");
    const std::size_t first = n / 2;
    const std::size_t count = n - first;
    BondiFit fit;
    fit.points = int(count);
    if (count == 1) {
        fit.m_inf = reports.back().mass;
        return fit;
    }
    Eigen::MatrixXd A(count, 2);
    Eigen::VectorXd y(count);
    for (std::size_t i = 0; i < count; ++i) {
        A(i, 0) = 1.0;
        A(i, 1) = 1.0 / reports[first + i].t;
        y(i) = reports[first + i].mass;
    }
    const Eigen::Vector2d coef = A.colPivHouseholderQr().solve(y);
    fit.m_inf = coef(0);
    fit.c = coef(1);
    fit.residual = std::sqrt((A * coef - y).squaredNorm() / double(count));
    return fit;
}

BondiTrace bondi_trace(const MetricModel& model, const Vec4& origin, double rho, const std::vector<double>& t_grid,
                       const OmegaGrid& omega, const SphereOptions& opts)
{
    if (t_grid.empty()) throw ValidationError("BadGrid", "empty time grid");
    for (std::size_t i = 1; i < t_grid.size(); ++i)
        if (!(t_grid[i] > t_grid[i - 1])) throw ValidationError("BadGrid", "time grid must be strictly increasing");
    SphereOptions sopts = opts;
    sopts.trace.jacobi = true;
    sopts.trace.transport_k = true;
    BondiTrace out;
    for (double t : t_grid) {
        LeafSlice slice = leaf_slice(model, origin, t, rho, omega, sopts);
        slice_null_forms(model, slice);
        out.reports.push_back(hawking_mass(slice));
    }
    out.fit = fit_bondi_limit(out.reports);
    return out;
}

} // namespace hyperlab
