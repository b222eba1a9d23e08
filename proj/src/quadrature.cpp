#include "hyperlab/quadrature.hpp"

#include "hyperlab/types.hpp"

#include <cmath>
#include <numbers>

namespace hyperlab {

void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights)
{
    if (n < 1) throw ValidationError("InvalidQuadrature", "Gauss-Legendre needs at least one node");
    nodes.assign(std::size_t(n), 0.0);
    weights.assign(std::size_t(n), 0.0);
    if (n == 1) {
        weights[0] = 2.0;
        return;
    }
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        // Recompute derivative at the converged node for the weight.
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= n; ++k) {
            const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        dp = n * (x * p1 - p0) / (x * x - 1.0);
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[std::size_t(i)] = -x;
        nodes[std::size_t(n - 1 - i)] = x;
        weights[std::size_t(i)] = w;
        weights[std::size_t(n - 1 - i)] = w;
    }
    if (n % 2 == 1) nodes[std::size_t(n / 2)] = 0.0;
}

OmegaGrid OmegaGrid::gauss_legendre(int n_theta, int n_phi)
{
    if (n_theta < 1 || n_phi < 1) throw ValidationError("InvalidQuadrature", "angular grid sizes must be positive");
    std::vector<double> x, w;
    hyperlab::gauss_legendre(n_theta, x, w);
    OmegaGrid g;
    // theta increasing <=> cos(theta) decreasing
    for (int i = n_theta - 1; i >= 0; --i) g.theta.push_back(std::acos(x[std::size_t(i)]));
    for (int j = 0; j < n_phi; ++j) g.phi.push_back(2.0 * std::numbers::pi * j / n_phi);
    for (int i = n_theta - 1; i >= 0; --i)
        for (int j = 0; j < n_phi; ++j) g.weight.push_back(w[std::size_t(i)] * 2.0 * std::numbers::pi / n_phi);
    return g;
}

OmegaGrid OmegaGrid::single(double theta, double phi)
{
    OmegaGrid g;
    g.theta = {theta};
    g.phi = {phi};
    g.weight = {4.0 * std::numbers::pi};
    return g;
}

OmegaGrid OmegaGrid::product(std::vector<double> theta, std::vector<double> phi)
{
    OmegaGrid g;
    g.theta = std::move(theta);
    g.phi = std::move(phi);
    g.weight.assign(g.theta.size() * g.phi.size(), 0.0);
    return g;
}

} // namespace hyperlab
