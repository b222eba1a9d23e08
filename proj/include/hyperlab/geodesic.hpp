#pragma once

#include "hyperlab/metric.hpp"
#include "hyperlab/ode.hpp"
#include "hyperlab/quadrature.hpp"

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace hyperlab {

/// Unit timelike direction at the origin: V = (cosh zeta, sinh zeta * omega) in
/// the orthonormal frame {e_mu} fixed at O.
struct Direction {
    double zeta = 0.0;
    double theta = 0.0;
    double phi = 0.0;

    static Direction spherical(double zeta, double theta, double phi) { return {zeta, theta, phi}; }
    /// Builds a direction from a (not necessarily unit) spatial vector.
    static Direction from_omega(double zeta, const Vec3& omega);

    Vec3 omega() const;
    /// Frame components (V^0, V^1, V^2, V^3).
    Vec4 velocity() const;
    /// d V / d zeta, d V / d theta, d V / d phi in frame components.
    std::array<Vec4, 3> velocity_derivatives() const;
};

/// Orthonormal frame at a point of a static metric: e_0 = n^-1 d_t and a
/// Gram-Schmidt orthonormalisation of d_1, d_2, d_3.  Columns are e_0..e_3.
Mat4 static_orthonormal_frame(const MetricModel& model, const Vec4& x);

/// Leaf scalars of the intrinsic foliation at one geodesic sample.
struct LeafScalars {
    double rho = 0.0;
    double t = 0.0;
    double tau = 0.0;
    double b = 1.0;      ///< foliation lapse: <B,T> = -b^-1 t / rho
    double n = 1.0;      ///< static lapse sqrt(-g_tt)
    double rtilde = 0.0; ///< sqrt(b^-2 t^2 - rho^2)
    double u = 0.0;      ///< b^-1 t - rtilde
    double ubar = 0.0;   ///< b^-1 t + rtilde
    double a = 0.0;      ///< rho / rtilde (infinite on the central line)
};

/// One sample of a rho-parametrised geodesic from the origin.
struct GeodesicSample {
    double rho = 0.0;
    Vec4 x = Vec4::Zero();
    Vec4 B = Vec4::Zero();       ///< velocity dx/drho (unit, future timelike)
    std::array<Vec4, 3> J{};     ///< boost Jacobi fields
    std::array<Vec4, 3> Jdot{};  ///< coordinate derivatives dJ/drho
    std::array<Vec4, 3> Jp{};    ///< covariant derivatives DJ/drho
    Mat4 K = Mat4::Zero();       ///< second fundamental form K_ab = nabla_a B_b (coordinate components)
    Mat3 k = Mat3::Zero();       ///< k in the leaf basis {Nbar, e_1, e_2} (filled by the foliation module)
    LeafScalars scalars{};       ///< filled by the foliation module
    bool has_leaf_data = false;
};

struct GeodesicRecord {
    Vec4 origin = Vec4::Zero();
    Direction direction{};
    std::vector<GeodesicSample> samples;
    bool has_jacobi = false;
    bool has_k = false;
    bool truncated = false;        ///< integration stopped before the last requested rho
    std::string truncation_reason;
    double rho_seed = 0.0;         ///< largest rho for which the geodesic lies in the flat region
    long steps = 0;
};

/// Options shared by all geodesic traces.
struct TraceOptions {
    OdeOptions ode{};
    bool jacobi = true;        ///< integrate the three boost Jacobi fields
    bool transport_k = false;  ///< integrate the second fundamental form (implies jacobi)
    double rho_seed_min = 1e-3;
};

/// Geodesic (and optionally Jacobi fields and k) from `origin` in direction `dir`,
/// sampled at the strictly increasing, non-negative `rho_grid`.
GeodesicRecord trace_geodesic(const MetricModel& model, const Vec4& origin, const Direction& dir,
                              const std::vector<double>& rho_grid, const TraceOptions& opts);

/// Exponential map: the geodesic alone, sampled at rho_grid.
GeodesicRecord exp_map(const MetricModel& model, const Vec4& origin, const Direction& dir,
                       const std::vector<double>& rho_grid, double ode_tol = 1e-10);

/// Exponential map sampled only at rho_max.
GeodesicRecord exp_map(const MetricModel& model, const Vec4& origin, const Direction& dir, double rho_max,
                       double ode_tol = 1e-10);

/// Re-integrates `rec` together with its boost Jacobi fields J_i (J(0) = 0,
/// DJ_i/drho(0) = V^i e_0 + V^0 e_i).
GeodesicRecord jacobi_boosts(const MetricModel& model, const GeodesicRecord& rec, double ode_tol = 1e-10);

/// Largest rho for which the straight segment O + rho V stays inside the flat region
/// (infinity when it never leaves).
double flat_exit_rho(const MetricModel& model, const Vec4& origin, const Direction& dir);

/// Checks the origin precondition for glued models: |x_O| + buffer < r_in.
void validate_origin(const MetricModel& model, const Vec4& origin, double buffer = 0.1);

/// Gram matrix K_ij = <DJ_i/drho, J_j> of a sample.
Mat3 boost_gram(const MetricModel& model, const GeodesicSample& s);

/// Fan of geodesics over a zeta grid times an angular product grid.
struct FanGrid {
    Vec4 origin = Vec4::Zero();
    std::vector<double> zeta;
    OmegaGrid omega;
    std::vector<double> rho;
    std::vector<GeodesicRecord> records; ///< index = zeta_index * omega.size() + omega_index
    std::vector<std::pair<std::size_t, std::string>> failures;

    const GeodesicRecord& at(std::size_t iz, std::size_t iw) const { return records[iz * omega.size() + iw]; }
    GeodesicRecord& at(std::size_t iz, std::size_t iw) { return records[iz * omega.size() + iw]; }
    /// Throws NumericalError listing every failed record index.
    void throw_if_failed() const;
};

/// Integrates every (zeta, omega) record (in parallel; results are independent of
/// the thread count).  Per-record failures are collected in FanGrid::failures.
FanGrid fan_build(const MetricModel& model, const Vec4& origin, const std::vector<double>& zeta_grid,
                  const OmegaGrid& omega_grid, const std::vector<double>& rho_grid, const TraceOptions& opts,
                  int threads = 0);

/// E_ac = R_abcd u^b u^d evaluated directly from a level-2 jet.
Mat4 riemann_uu(const MetricJet& jet, const Vec4& u);

/// Covariant derivative along B of a vector field known by its coordinate
/// derivative: D V = dV/drho + Gamma(B, V).
Vec4 covariant_along(const MetricJet& jet, const Vec4& B, const Vec4& V, const Vec4& Vdot);

} // namespace hyperlab
