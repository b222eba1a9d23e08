#include "hyperlab/nullgeom.hpp"

#include <algorithm>
#include <cmath>

namespace hyperlab {

namespace {

/// T^{mn}_{cd} = g^{ma} g^{nb} T_{abcd}.
Tensor4 raise_first_pair(const Mat4& g_inv, const Tensor4& W)
{
    Tensor4 half, out;
    for (int m = 0; m < 4; ++m)
        for (int b = 0; b < 4; ++b)
            for (int c = 0; c < 4; ++c)
                for (int d = 0; d < 4; ++d) {
                    double v = 0.0;
                    for (int a = 0; a < 4; ++a) v += g_inv(m, a) * W(a, b, c, d);
                    half(m, b, c, d) = v;
                }
    for (int m = 0; m < 4; ++m)
        for (int n = 0; n < 4; ++n)
            for (int c = 0; c < 4; ++c)
                for (int d = 0; d < 4; ++d) {
                    double v = 0.0;
                    for (int b = 0; b < 4; ++b) v += g_inv(n, b) * half(m, b, c, d);
                    out(m, n, c, d) = v;
                }
    return out;
}

int permutation_sign(int a, int b, int c, int d)
{
    const int p[4] = {a, b, c, d};
    for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j)
            if (p[i] == p[j]) return 0;
    int inversions = 0;
    for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j)
            if (p[i] > p[j]) ++inversions;
    return inversions % 2 == 0 ? 1 : -1;
}

/// W(X, ., Z, .) contracted with W'(Y, ., U, .) over both free slots.
double pair_contraction(const Mat4& g_inv, const Tensor4& W, const Vec4& X, const Vec4& Z, const Vec4& Y,
                        const Vec4& U)
{
    const Mat4 A = contract_bd(W, X, Z); // W(., X, ., Z) = W(X, ., Z, .)
    const Mat4 B = contract_bd(W, Y, U);
    return (g_inv * A * g_inv).cwiseProduct(B).sum();
}

} // namespace

double NullTetrad::residual(const Mat4& g) const
{
    double r = 0.0;
    auto upd = [&r](double v) { r = std::max(r, std::abs(v)); };
    upd(dot(g, e4, e3) + 2.0);
    upd(dot(g, e4, e4));
    upd(dot(g, e3, e3));
    for (int A = 0; A < 2; ++A) {
        upd(dot(g, e[A], e[A]) - 1.0);
        upd(dot(g, e[A], e3));
        upd(dot(g, e[A], e4));
    }
    upd(dot(g, e[0], e[1]));
    return r;
}

void NullTetrad::validate(const Mat4& g, double tol) const
{
    const double r = residual(g);
    if (!(r <= tol))
        throw ValidationError("BadTetrad", "null tetrad normalisation residual " + std::to_string(r) + " exceeds " +
                                               std::to_string(tol));
}

NullTetrad NullTetrad::rotated(double angle) const
{
    NullTetrad t = *this;
    const double c = std::cos(angle), s = std::sin(angle);
    t.e[0] = c * e[0] + s * e[1];
    t.e[1] = -s * e[0] + c * e[1];
    return t;
}

NullTetrad intrinsic_tetrad(const FrameSet& f) { return {f.L, f.Lb, f.e}; }

NullTetrad hat_tetrad(const MetricModel& model, const Vec4& x)
{
    const Vec3 p = x.tail<3>();
    const double r = p.norm();
    if (!(r > 0.0)) throw NumericalError("CentralLineDegenerate", "the radial tetrad is undefined at r = 0");
    const MetricJet jet = metric_at(model, x, 0);
    const double n2 = -jet.g(0, 0);
    const double n = std::sqrt(n2);
    const Vec3 nu = p / r;
    NullTetrad t;
    t.e4 << 1.0, n2 * nu;
    t.e3 << 1.0, -n2 * nu;
    t.e4 /= n;
    t.e3 /= n;
    int axis = 0;
    nu.cwiseAbs().minCoeff(&axis);
    const Vec3 v1 = nu.cross(Vec3::Unit(axis)).normalized();
    const Vec3 v2 = nu.cross(v1);
    for (int A = 0; A < 2; ++A) {
        Vec4 e;
        e << 0.0, (A == 0 ? v1 : v2);
        t.e[A] = e / std::sqrt(dot(jet.g, e, e));
    }
    return t;
}

Tensor4 volume_form(const Mat4& g)
{
    const double vol = std::sqrt(std::abs(g.determinant()));
    Tensor4 eps;
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b)
            for (int c = 0; c < 4; ++c)
                for (int d = 0; d < 4; ++d) eps(a, b, c, d) = vol * permutation_sign(a, b, c, d);
    return eps;
}

Tensor4 left_dual(const Mat4& g, const Tensor4& W)
{
    const Tensor4 eps = volume_form(g);
    const Tensor4 up = raise_first_pair(g.inverse(), W);
    Tensor4 out;
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b)
            for (int c = 0; c < 4; ++c)
                for (int d = 0; d < 4; ++d) {
                    double v = 0.0;
                    for (int m = 0; m < 4; ++m)
                        for (int n = 0; n < 4; ++n) v += eps(a, b, m, n) * up(m, n, c, d);
                    out(a, b, c, d) = 0.5 * v;
                }
    return out;
}

Tensor4 right_dual(const Mat4& g, const Tensor4& W)
{
    const Tensor4 eps = volume_form(g);
    const Mat4 gi = g.inverse();
    // Raise the second pair by swapping pairs, raising the first and swapping back.
    Tensor4 swapped;
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b)
            for (int c = 0; c < 4; ++c)
                for (int d = 0; d < 4; ++d) swapped(c, d, a, b) = W(a, b, c, d);
    const Tensor4 up = raise_first_pair(gi, swapped); // up(m, n, a, b) = W_ab^mn
    Tensor4 out;
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b)
            for (int c = 0; c < 4; ++c)
                for (int d = 0; d < 4; ++d) {
                    double v = 0.0;
                    for (int m = 0; m < 4; ++m)
                        for (int n = 0; n < 4; ++n) v += up(m, n, a, b) * eps(m, n, c, d);
                    out(a, b, c, d) = 0.5 * v;
                }
    return out;
}

WeylNull null_decompose(const Mat4& g, const Tensor4& W, const NullTetrad& tet)
{
    tet.validate(g);
    const Tensor4 dual = left_dual(g, W);
    WeylNull w;
    for (int A = 0; A < 2; ++A) {
        for (int B = 0; B < 2; ++B) {
            w.alpha(A, B) = contract4(W, tet.e[A], tet.e4, tet.e[B], tet.e4);
            w.alphab(A, B) = contract4(W, tet.e[A], tet.e3, tet.e[B], tet.e3);
        }
        w.beta(A) = 0.5 * contract4(W, tet.e[A], tet.e4, tet.e3, tet.e4);
        w.betab(A) = 0.5 * contract4(W, tet.e[A], tet.e3, tet.e3, tet.e4);
    }
    w.varrho = 0.25 * contract4(W, tet.e3, tet.e4, tet.e3, tet.e4);
    w.sigma = 0.25 * contract4(dual, tet.e3, tet.e4, tet.e3, tet.e4);
    return w;
}

EMParts em_decompose(const Mat4& g, const Tensor4& W, const FrameSet& frame, Observer which)
{
    const Vec4 U = which == Observer::T ? frame.T : frame.B;
    const std::array<Vec4, 4> basis{U, which == Observer::T ? frame.N : frame.Nbar, frame.e[0], frame.e[1]};
    for (int a = 0; a < 4; ++a)
        for (int b = a; b < 4; ++b) {
            const double expect = a != b ? 0.0 : (a == 0 ? -1.0 : 1.0);
            if (std::abs(dot(g, basis[a], basis[b]) - expect) > 1e-8)
                throw ValidationError("BadFrame", "observer frame is not orthonormal");
        }
    const Tensor4 dual = left_dual(g, W);
    EMParts em;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            em.E(i, j) = contract4(W, U, basis[i + 1], U, basis[j + 1]);
            em.H(i, j) = contract4(dual, U, basis[i + 1], U, basis[j + 1]);
        }
    return em;
}

double bel_robinson_scalar(const Mat4& g, const Tensor4& W, const Vec4& X, const Vec4& Y, const Vec4& Z, const Vec4& U)
{
    const Mat4 gi = g.inverse();
    const Tensor4 dual = left_dual(g, W);
    return pair_contraction(gi, W, X, Z, Y, U) + pair_contraction(gi, dual, X, Z, Y, U);
}

double gauss_residual(const GaussTerms& t, double W_LLbLLb, double schouten_trace)
{
    return t.K + 0.25 * t.trchi * t.trchib - 0.5 * t.chihat.cwiseProduct(t.chibhat).sum() + 0.25 * W_LLbLLb -
           0.5 * schouten_trace;
}

SchwarzschildClosedForms schwarzschild_closed_forms(double M, double r)
{
    if (!(M >= 0.0)) throw ValidationError("BadModel", "mass parameter must be non-negative");
    if (!(r > 2.0 * M)) throw ValidationError("Horizon", "r = " + std::to_string(r) + " is not outside r = 2M");
    SchwarzschildClosedForms c;
    const double R = r + 2.0 * M;
    c.varrho_hat_n4 = -4.0 * M / (R * R * R);
    c.trchi_s = 2.0 / R;
    c.trchib_s = -2.0 / R;
    c.K_sphere = 1.0 / (R * R);
    c.gamma_r = M == 0.0 ? r : r + 4.0 * M * std::log(r - 2.0 * M);
    return c;
}

VarrhoConsistency varrho_consistency(const MetricModel& model, const Vec4& x, const FrameSet& frames)
{
    const double r = x.tail<3>().norm();
    if (!model.schwarzschild_zone(r))
        throw ValidationError("OutsideZs", "r = " + std::to_string(r) + " is not in the Schwarzschild zone");
    const MetricJet jet = curvature_at(model, x);
    const Vec3 nu = x.tail<3>() / r;
    VarrhoConsistency v;
    v.n = std::sqrt(-jet.g(0, 0));
    v.varpi = frames.N.tail<3>().dot(nu);
    for (int A = 0; A < 2; ++A) v.snr(A) = frames.e[A].tail<3>().dot(nu);
    const double w = schwarzschild_closed_forms(model.M, r).varrho_hat_n4;
    const double ratio = v.varpi * v.varpi / (v.n * v.n);
    v.varrho_formula = w * (1.0 + 1.5 * (ratio - 1.0));
    v.betab_formula = -1.5 * (v.varpi / (v.n * v.n)) * w * v.snr;
    const WeylNull wn = null_decompose(jet.g, jet.Weyl, intrinsic_tetrad(frames));
    v.varrho_direct = wn.varrho;
    v.betab_direct = wn.betab;
    return v;
}

Tensor3 weyl_current(const MetricJet& jet, const Mat4& S, const Tensor3& dS)
{
    // DS[c](b, d) = D_c S_bd
    Tensor3 DS;
    for (int c = 0; c < 4; ++c)
        for (int b = 0; b < 4; ++b)
            for (int d = 0; d < 4; ++d) {
                double v = dS[c](b, d);
                for (int l = 0; l < 4; ++l) v -= jet.Gamma[l](c, b) * S(l, d) + jet.Gamma[l](c, d) * S(b, l);
                DS[c](b, d) = v;
            }
    Tensor3 J;
    for (int b = 0; b < 4; ++b)
        for (int c = 0; c < 4; ++c)
            for (int d = 0; d < 4; ++d) J[b](c, d) = 0.5 * (DS[c](b, d) - DS[d](b, c));
    return J;
}

Mat4 riemannian_aux_metric(const Mat4& g, const Vec4& T)
{
    const Vec4 Tl = g * T;
    return g + 2.0 * Tl * Tl.transpose();
}

} // namespace hyperlab
