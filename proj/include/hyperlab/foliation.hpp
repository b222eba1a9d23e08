#pragma once

#include "hyperlab/geodesic.hpp"

#include <functional>
#include <string>
#include <vector>

namespace hyperlab {

/// Intrinsic frames at a point of a leaf S_{t,rho} (coordinate components).
struct FrameSet {
    Vec4 T = Vec4::Zero();    ///< static unit normal n^-1 d_t
    Vec4 N = Vec4::Zero();    ///< unit normal of S_{t,rho} inside the t-slice
    Vec4 Nbar = Vec4::Zero(); ///< unit normal of S_{t,rho} inside H_rho
    Vec4 B = Vec4::Zero();    ///< unit normal of H_rho
    Vec4 L = Vec4::Zero();    ///< T + N
    Vec4 Lb = Vec4::Zero();   ///< T - N
    std::array<Vec4, 2> e{};  ///< orthonormal tangent frame of S_{t,rho}
};

/// Lapse-type scalars at a geodesic sample.  `t` is measured from the origin time.
LeafScalars leaf_scalars(const MetricModel& model, const GeodesicRecord& rec, const GeodesicSample& s);

/// Leaf scalars of `rec` at `rho`; re-integrates when rho is inside the record range
/// but not one of its sample points.  Throws ValidationError("OutOfRange").
LeafScalars leaf_scalars(const MetricModel& model, const GeodesicRecord& rec, double rho);

/// Frames at a sample.  Throws NumericalError("CentralLineDegenerate") when
/// rtilde <= frame_floor.
FrameSet frames_at(const MetricModel& model, const GeodesicRecord& rec, const GeodesicSample& s,
                   double frame_floor = 1e-6);
FrameSet frames_at(const MetricModel& model, const GeodesicRecord& rec, double rho, double frame_floor = 1e-6);

/// Residuals of the frame decompositions: B = (b^-1 t/rho) T + (rtilde/rho) N,
/// Nbar = (rtilde/rho) T + (b^-1 t/rho) N, 2 rho B = ubar L + u Lb, plus the
/// normalisation and orthogonality pattern.  Returns the maximum absolute residual.
double frame_residual(const MetricModel& model, const FrameSet& f, const LeafScalars& s, const Vec4& x);

/// Second fundamental form of H_rho in the orthonormal leaf basis {Nbar, e_1, e_2}
/// (central-line samples use an arbitrary orthonormal basis orthogonal to B).
Mat3 leaf_k(const MetricModel& model, const GeodesicRecord& rec, const GeodesicSample& s);

/// Splits k into trace and trace-free part.
struct SecondFundamental {
    Mat3 k = Mat3::Zero();
    double trk = 0.0;
    Mat3 khat = Mat3::Zero();
    double khat_nn() const { return khat(0, 0); }
    double khat_na_max() const { return std::max(std::abs(khat(0, 1)), std::abs(khat(0, 2))); }
    static SecondFundamental from(const Mat3& k);
};

/// Integrates (or re-integrates) `rec` with k transport and fills k and the leaf
/// scalars of every sample with rho > 0.  Throws NumericalError("SeedRegionTooSmall").
GeodesicRecord second_fundamental_transport(const MetricModel& model, const GeodesicRecord& rec,
                                            const TraceOptions& opts = {});

/// Position of a record inside a fan.
struct FanIndex {
    std::size_t zeta = 0;
    std::size_t omega = 0;
};

/// Builds a product fan around (zeta0, theta0, phi0) with `points` nodes per
/// dimension and the given spacings (used by the finite-difference oracles).
FanGrid local_fan(const MetricModel& model, const Vec4& origin, double zeta0, double theta0, double phi0,
                  const std::vector<double>& rho_grid, double dzeta, double dangle, int points,
                  const TraceOptions& opts, int threads = 0);

/// Brute-force k in the leaf basis at fan node `index` and fan rho `rho`, from
/// finite differences of x and B across neighbouring fan geodesics:
///   k(X_q, X_p) = <d_q B + Gamma(X_q, B), X_p>.
/// Throws NumericalError("FanTooCoarse") for singleton dimensions or dzeta > 1e-2.
Mat3 second_fundamental_fd_oracle(const MetricModel& model, const FanGrid& fan, FanIndex index, double rho);

/// Codazzi residual |div k - d trk - Ric(B, .)| on H_rho (fan finite differences),
/// maximised over a tangent basis; the second value is the size of Ric(B, .).
std::pair<double, double> codazzi_residual(const MetricModel& model, const FanGrid& fan, FanIndex index, double rho);

struct DeformationReport {
    double pi_BB = 0.0;         ///< max over records, fields, samples of |2 <DJ/drho, B>|
    double pi_BR = 0.0;         ///< max |K_ij - K_ji| (Gram asymmetry)
    double pi_BR_scale = 0.0;   ///< max |K_ij| used to scale pi_BR
    double trpr_residual = 0.0; ///< max |B(tr pi) - 2 R(trk - 3/rho)| at interior fan nodes
    double trpr_scale = 0.0;    ///< max of the two sides
    std::size_t trpr_points = 0;
};

/// Deformation tensors of the boost fields along the fan.  The first two entries use
/// every sample; the trace identity is checked at interior fan nodes at `rho`.
DeformationReport deformation_boost(const MetricModel& model, const FanGrid& fan, double rho);

/// One node of a sphere cut out of H_rho by a level function.
struct SphereNode {
    double theta = 0.0, phi = 0.0;
    double zeta = 0.0;
    double weight = 0.0;         ///< quadrature weight including the induced area element
    double area_element = 0.0;   ///< sqrt(det G) / sin(theta) in (theta, phi) coordinates
    GeodesicSample sample;       ///< geodesic data at rho (J, Jp, K, k, scalars)
    FrameSet frames;
    std::array<Vec4, 2> tangents{}; ///< d/dtheta, d/dphi of the node position along the sphere
    Mat2 induced = Mat2::Zero();    ///< induced metric in (theta, phi)
    double trchi = 0.0, trchib = 0.0;
    Mat2 chihat = Mat2::Zero(), chibhat = Mat2::Zero(); ///< in the frame {e_1, e_2}
};

struct LeafSlice {
    double t = 0.0;     ///< slice time (origin time = 0), or the level value for general spheres
    double rho = 0.0;
    Vec4 origin = Vec4::Zero();
    std::vector<SphereNode> nodes;
    double area = 0.0;
    double area_radius = 0.0;
    bool has_null_forms = false;
};

/// Scalar level function f(x) and its coordinate gradient.
struct LevelFunction {
    std::function<double(const Vec4& x)> value;
    std::function<Vec4(const Vec4& x)> gradient;
};

/// Options for sphere construction.
struct SphereOptions {
    TraceOptions trace{};
    double zeta_max = 6.0;
    double bracket_width = 1e-3; ///< bisection phase ends at this zeta width
    double root_tol = 1e-10;     ///< |f - target| <= root_tol * max(1, |target|)
    int threads = 0;
};

/// Sphere {f = target} inside H_rho, one node per angular direction of `omega`.
/// Throws NumericalError("Unreachable") when the target lies outside f([0, zeta_max])
/// and NumericalError("BracketFailure") when f is not monotone on the bracket.
LeafSlice level_sphere(const MetricModel& model, const Vec4& origin, double rho, const OmegaGrid& omega,
                       const LevelFunction& f, double target, const SphereOptions& opts = {});

/// S_{t,rho}: the sphere of H_rho at time t (measured from the origin time).
LeafSlice leaf_slice(const MetricModel& model, const Vec4& origin, double t, double rho, const OmegaGrid& omega,
                     const SphereOptions& opts = {});

/// Fills trchi, trchib, chihat, chibhat on every node (maximal slices are totally
/// geodesic here, so the maximal-slice second fundamental form is zero).
void slice_null_forms(const MetricModel& model, LeafSlice& slice);

/// Residual table entry: max |lhs - rhs| over samples and the size of the terms.
struct ResidualEntry {
    std::string name;
    double max_abs = 0.0;
    double scale = 0.0;
    std::size_t samples = 0;
    double relative() const { return scale > 0.0 ? max_abs / scale : max_abs; }
};

/// Re-traces `rec` (with Jacobi fields and k, at `ode_tol`) on a grid holding a
/// five-point stencil of spacing min(1e-3 max(1, rho), gap / 5) around every sample
/// with rho > 0.  Sample 5 m + 2 of the result is the centre of stencil m.
GeodesicRecord stencil_trace(const MetricModel& model, const GeodesicRecord& rec, double ode_tol = 1e-12);

/// Structure-equation residuals at the samples of a record carrying k.  The record is
/// re-traced with stencil_trace; rho-derivatives are Lagrange
/// differences on that stencil and off-geodesic derivatives come from the Jacobi
/// fields.  Stencils straddling a blend radius are skipped.  Entries: Bb1, ctt, s1,
/// trk_reg, khat, Tu, Nbinv, zeta_bar.
std::vector<ResidualEntry> structure_residuals(const MetricModel& model, const GeodesicRecord& rec,
                                               double frame_floor = 1e-3, double ode_tol = 1e-12);

/// Derivative weights of the Lagrange interpolant through `nodes` evaluated at x0.
std::vector<double> lagrange_derivative_weights(double x0, const std::vector<double>& nodes);

/// Indices of up to `width` grid points around `i` (centered when possible).
std::vector<std::size_t> stencil_indices(std::size_t i, std::size_t n, std::size_t width);

/// Lie-derivative style variation of the leaf scalars along a first-order change
/// (drho, dx, dB) of the geodesic state.  Returns d(b^-1 t), d(rtilde), d(b^-1).
struct ScalarVariation {
    double binv_t = 0.0, rtilde = 0.0, binv = 0.0;
    double u() const { return binv_t - rtilde; }
};
ScalarVariation scalar_variation(const MetricModel& model, const Vec4& origin, double rho, const Vec4& x,
                                 const Vec4& B, double drho, const Vec4& dx, const Vec4& dB);

} // namespace hyperlab
