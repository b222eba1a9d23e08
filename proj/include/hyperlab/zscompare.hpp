#pragma once

#include "hyperlab/foliation.hpp"
#include "hyperlab/nullgeom.hpp"

#include <vector>

namespace hyperlab {

/// Schwarzschild optical function uhat = t - r - 4M ln(r - 2M) and its null generator.
struct SchwOptical {
    double uhat = 0.0;
    Vec4 Lhat = Vec4::Zero();  ///< d_t + n^2 d_r (Cartesian components)
    double eikonal = 0.0;      ///< <d uhat, d uhat>
};

/// Evaluated at the Cartesian point (t, r, 0, 0).  Throws ValidationError("Horizon").
SchwOptical schw_optical(double M, double t, double r);

/// uhat at a point of a model (t measured from `t0`).
double uhat_at(const MetricModel& model, const Vec4& x, double t0 = 0.0);

/// Radial decomposition of the leaf normal N = SigmaN + varpi d_r.
struct VarpiData {
    double r = 0.0;
    double n = 1.0;
    double varpi = 0.0;          ///< N(r)
    Vec4 SigmaN = Vec4::Zero();  ///< Euclidean projection of N tangent to the coordinate sphere
    Vec2 snr = Vec2::Zero();     ///< e_A(r)
    double identity_residual() const { return n * n - varpi * varpi - snr.squaredNorm(); }
};

VarpiData varpi_at(const MetricModel& model, const GeodesicRecord& rec, const GeodesicSample& s);
/// Throws NumericalError("CentralLineDegenerate") on the central line.
VarpiData varpi_at(const MetricModel& model, const GeodesicRecord& rec, double rho);

struct ComparisonRow {
    double rho = 0.0, t = 0.0, r = 0.0, n = 1.0, varpi = 0.0;
    double n_minus_varpi = 0.0;
    double rt_over_r_minus_ninv = 0.0; ///< rtilde / r - 1 / n
    double u = 0.0, uhat = 0.0, u_minus_uhat = 0.0;
    double SigmaN_norm = 0.0;          ///< |SigmaN|_g
    double snr_norm = 0.0;             ///< |e_A(r)|
};

struct ComparisonSeries {
    std::vector<ComparisonRow> rows;
    double min_n_minus_varpi = 0.0;        ///< over all rows
    double max_n_minus_varpi_tail = 0.0;   ///< over the last half of the rows
    double u_minus_uhat_drift = 0.0;       ///< sup |u - uhat| - |u - uhat| at the first row
    double max_t_rt_defect = 0.0;          ///< max of t |rtilde / r - 1 / n|
    double max_t_rt_defect_tail = 0.0;     ///< same over the last half of the rows
};

/// Rows for every sample of `rec` with r >= r_out (sorted by rho).
ComparisonSeries radial_comparison_series(const MetricModel& model, const GeodesicRecord& rec);

/// Residuals of the transport equations for n - varpi and rtilde / r - 1 / n along a
/// record, at samples whose stencils lie in r >= r_out + 0.1.  Entries: bvarpi, cmr_1 and
/// bvarpi_printed, a diagnostic variant with focusing coefficient 2 (r - M) / (r + 2M)^2.
std::vector<ResidualEntry> transport_residuals_zs(const MetricModel& model, const GeodesicRecord& rec,
                                                  double ode_tol = 1e-12);

/// Geometry at one node of S_{rho, uhat}.
struct ConeNode {
    double dag_a_inv = 0.0;          ///< -<B, L^s>
    double dag_a_inv_formula = 0.0;  ///< -a^-1 n^-2 (varpi - n) + n^-1 u / rho
    double dag_Nb_t = 0.0;           ///< daggered Nbar applied to t
    double dag_Nb_t_trend = 0.0;     ///< n^-1 rtilde / rho
    double trchi = 0.0, trchib = 0.0;
    double chihat_norm = 0.0;        ///< trace-free part of the daggered chi
    double W_LLbLLb = 0.0;
    double K = 0.0;                  ///< Gauss curvature from the daggered tetrad
    double K_leading = 0.0;          ///< n^2 / (r + 2M)^2
};

struct ConeSphereReport {
    double rho = 0.0;
    double uhat = 0.0;
    LeafSlice slice;
    std::vector<ConeNode> nodes;
    double dag_a_min = 0.0, dag_a_max = 0.0; ///< daggered lapse
    double dag_a_formula_residual = 0.0;     ///< max |formula - definition| of the inverse lapse
    double osc_t = 0.0;                      ///< max |t - tbar| with tbar the area mean
    double t_min = 0.0, t_max = 0.0;
    double K_min = 0.0, K_max = 0.0, K_mean = 0.0;
    double diam_bound = 0.0;                 ///< pi / sqrt(K_min) (Bonnet-Myers)
};

/// S_{rho, uhat} = H_rho cut by the level set of uhat.  Throws
/// NumericalError("SphereExitsZone") when a node lies at r < r_out.
ConeSphereReport cone_sphere_geometry(const MetricModel& model, const Vec4& origin, double rho, double uhat,
                                      const OmegaGrid& omega, const SphereOptions& opts = {});

} // namespace hyperlab
