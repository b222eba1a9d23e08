#pragma once

#include "hyperlab/foliation.hpp"
#include "hyperlab/metric.hpp"

#include <array>

namespace hyperlab {

/// Canonical null tetrad {e4, e3, e_A}: <e4, e3> = -2, e3 and e4 null, e_A orthonormal
/// and orthogonal to both.
struct NullTetrad {
    Vec4 e4 = Vec4::Zero();
    Vec4 e3 = Vec4::Zero();
    std::array<Vec4, 2> e{};

    /// Largest deviation from the normalisation pattern.
    double residual(const Mat4& g) const;
    /// Throws ValidationError("BadTetrad") when residual(g) > tol.
    void validate(const Mat4& g, double tol = 1e-9) const;
    /// Rotates {e_1, e_2} by `angle` inside their plane.
    NullTetrad rotated(double angle) const;
};

/// Intrinsic tetrad {L, Lb, e_A} of a leaf frame.
NullTetrad intrinsic_tetrad(const FrameSet& f);

/// Static radial tetrad {n^-1 Lhat, n^-1 Lhatb, ehat_A} with Lhat = d_t + n^2 d_r and
/// ehat_A an orthonormal frame of the coordinate sphere through x.
/// Throws NumericalError("CentralLineDegenerate") at the spatial origin.
NullTetrad hat_tetrad(const MetricModel& model, const Vec4& x);

/// Metric volume form with eps_{0123} = +sqrt|det g|.
Tensor4 volume_form(const Mat4& g);
/// Left dual (1/2) eps_{ab mn} W^{mn}_{cd}.
Tensor4 left_dual(const Mat4& g, const Tensor4& W);
/// Right dual (1/2) W_{ab}^{mn} eps_{mncd}.
Tensor4 right_dual(const Mat4& g, const Tensor4& W);

/// Null components of a Weyl tensor relative to a canonical null tetrad.
struct WeylNull {
    Mat2 alpha = Mat2::Zero();
    Vec2 beta = Vec2::Zero();
    double varrho = 0.0;
    double sigma = 0.0;
    Vec2 betab = Vec2::Zero();
    Mat2 alphab = Mat2::Zero();
};

/// Throws ValidationError("BadTetrad") when the tetrad is not normalised.
WeylNull null_decompose(const Mat4& g, const Tensor4& W, const NullTetrad& tet);

enum class Observer { T, B };

/// Electric and magnetic parts in an orthonormal spatial triad.
struct EMParts {
    Mat3 E = Mat3::Zero();
    Mat3 H = Mat3::Zero();
};

/// E_ij = W(U, e_i, U, e_j), H_ij = *W(U, e_i, U, e_j) with U = T and triad {N, e_1, e_2},
/// or U = B and triad {Nbar, e_1, e_2}.  Throws ValidationError("BadFrame") when the
/// frame is not orthonormal to 1e-8.
EMParts em_decompose(const Mat4& g, const Tensor4& W, const FrameSet& frame, Observer which);

/// Bel-Robinson tensor Q(W)(X, Y, Z, U).
double bel_robinson_scalar(const Mat4& g, const Tensor4& W, const Vec4& X, const Vec4& Y, const Vec4& Z,
                           const Vec4& U);

/// Geometric data of a sphere entering the Gauss equation.
struct GaussTerms {
    double K = 0.0;
    double trchi = 0.0;
    double trchib = 0.0;
    Mat2 chihat = Mat2::Zero();
    Mat2 chibhat = Mat2::Zero();
};

/// K + (1/4) trchi trchib - (1/2) chihat.chibhat + (1/4) W(L, Lb, L, Lb) - (1/2) gamma^{AC} S_AC.
double gauss_residual(const GaussTerms& terms, double W_LLbLLb, double schouten_trace);

struct SchwarzschildClosedForms {
    double varrho_hat_n4 = 0.0; ///< n^-4 varrho_hat = -4M / (r + 2M)^3
    double trchi_s = 0.0;       ///< 2 / (r + 2M)
    double trchib_s = 0.0;      ///< -2 / (r + 2M)
    double K_sphere = 0.0;      ///< (r + 2M)^-2
    double gamma_r = 0.0;       ///< r + 4M ln(r - 2M)
};

/// Throws ValidationError("Horizon") for r <= 2M.
SchwarzschildClosedForms schwarzschild_closed_forms(double M, double r);

/// Two computations of varrho and betab in the Schwarzschild zone.
struct VarrhoConsistency {
    double n = 1.0;
    double varpi = 0.0;           ///< N(r)
    Vec2 snr = Vec2::Zero();      ///< e_A(r)
    double varrho_direct = 0.0;   ///< from null_decompose in the intrinsic tetrad
    double varrho_formula = 0.0;  ///< n^-4 varrho_hat (1 + (3/2)(n^-2 varpi^2 - 1))
    Vec2 betab_direct = Vec2::Zero();
    Vec2 betab_formula = Vec2::Zero(); ///< -(3/2) n^-6 varpi varrho_hat e_A(r)
};

/// Throws ValidationError("OutsideZs") when x is not in the Schwarzschild zone.
VarrhoConsistency varrho_consistency(const MetricModel& model, const Vec4& x, const FrameSet& frames);

/// Weyl current J_{bcd} = (1/2)(D_c S_bd - D_d S_bc), returned as J[b](c, d), from the
/// Schouten tensor S and its coordinate derivatives dS[l](a, b) = d_l S_ab.
Tensor3 weyl_current(const MetricJet& jet, const Mat4& S, const Tensor3& dS);

/// Riemannian auxiliary metric g + 2 T_flat T_flat for a unit timelike T.
Mat4 riemannian_aux_metric(const Mat4& g, const Vec4& T);

} // namespace hyperlab
