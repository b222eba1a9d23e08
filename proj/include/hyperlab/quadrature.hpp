#pragma once

#include <vector>

namespace hyperlab {

/// Gauss-Legendre nodes and weights on [-1, 1] (Newton iteration on P_n).
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights);

/// Angular node set on S^2 stored as a (theta x phi) product grid.  Node i has
/// theta index i / phi.size() and phi index i % phi.size().  `weight` holds the
/// solid-angle quadrature weight of each node (sums to 4 pi for full-sphere rules).
struct OmegaGrid {
    std::vector<double> theta;
    std::vector<double> phi;
    std::vector<double> weight;

    std::size_t size() const { return theta.size() * phi.size(); }
    double theta_of(std::size_t i) const { return theta[i / phi.size()]; }
    double phi_of(std::size_t i) const { return phi[i % phi.size()]; }

    /// Gauss-Legendre in cos(theta) times the uniform trapezoid rule in phi.
    static OmegaGrid gauss_legendre(int n_theta, int n_phi);
    /// One node carrying the whole sphere (weight 4 pi), for exactly centered configurations.
    static OmegaGrid single(double theta, double phi);
    /// Arbitrary product grid without quadrature meaning (weights zero).
    static OmegaGrid product(std::vector<double> theta, std::vector<double> phi);
};

} // namespace hyperlab
