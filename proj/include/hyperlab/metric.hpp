#pragma once

#include "hyperlab/types.hpp"

#include <cmath>
#include <string>

namespace hyperlab {

/// Which closed-form spacetime a MetricModel describes.
enum class MetricKind { Minkowski, Schwarzschild, GluedSchwarzschild };

/// Static, spherically symmetric metric in Cartesian coordinates (t, x1, x2, x3):
///   g = -F(r) dt^2 + P(r) dx.dx + W(r) (x.dx)^2.
/// Schwarzschild kinds use -n^2 dt^2 + n^-2 dr^2 + (r+2M)^2 dOmega^2 with
/// n^2 = (r-2M)/(r+2M), so the ADM mass of the model is 2M.
struct MetricModel {
    MetricKind kind = MetricKind::Minkowski;
    double M = 0.0;
    double r_in = 1.0;
    double r_out = 2.0;
    double kg_mass = 1.0;

    static MetricModel minkowski() { return {}; }
    static MetricModel schwarzschild(double M) { return {MetricKind::Schwarzschild, M, 1.0, 2.0, 1.0}; }
    static MetricModel glued(double M, double r_in = 1.0, double r_out = 2.0)
    {
        return {MetricKind::GluedSchwarzschild, M, r_in, r_out, 1.0};
    }

    /// Throws ValidationError when the parameters violate the model invariants.
    void validate() const;

    /// True where the metric coincides exactly with Minkowski space.
    bool flat_at(double r) const
    {
        return kind == MetricKind::Minkowski || M == 0.0 ||
               (kind == MetricKind::GluedSchwarzschild && r <= r_in);
    }

    /// True where the metric coincides exactly with a vacuum solution.
    bool vacuum_at(double r) const { return kind != MetricKind::GluedSchwarzschild || r <= r_in || r >= r_out; }

    /// True where the Schwarzschild closed forms hold exactly (Minkowski counts with M = 0).
    bool schwarzschild_zone(double r) const
    {
        return kind == MetricKind::Minkowski || kind == MetricKind::Schwarzschild || r >= r_out;
    }

    /// Smallest admissible coordinate radius (horizon guard).
    double horizon_guard() const { return kind == MetricKind::Minkowski ? 0.0 : 2.0 * M * (1.0 + 1e-6); }

    std::string describe() const;
};

/// Value together with first and second derivative with respect to one variable.
template <class Scalar> struct Dual2 {
    Scalar v{0}, d{0}, dd{0};

    static Dual2 constant(Scalar c) { return {c, Scalar(0), Scalar(0)}; }
    static Dual2 variable(Scalar x) { return {x, Scalar(1), Scalar(0)}; }

    friend Dual2 operator+(const Dual2& a, const Dual2& b) { return {a.v + b.v, a.d + b.d, a.dd + b.dd}; }
    friend Dual2 operator-(const Dual2& a, const Dual2& b) { return {a.v - b.v, a.d - b.d, a.dd - b.dd}; }
    friend Dual2 operator*(const Dual2& a, const Dual2& b)
    {
        return {a.v * b.v, a.d * b.v + a.v * b.d, a.dd * b.v + Scalar(2) * a.d * b.d + a.v * b.dd};
    }
    friend Dual2 operator/(const Dual2& a, const Dual2& b)
    {
        const Scalar q = a.v / b.v;
        const Scalar qd = (a.d - q * b.d) / b.v;
        const Scalar qdd = (a.dd - Scalar(2) * qd * b.d - q * b.dd) / b.v;
        return {q, qd, qdd};
    }
    friend Dual2 operator+(const Dual2& a, Scalar c) { return {a.v + c, a.d, a.dd}; }
    friend Dual2 operator+(Scalar c, const Dual2& a) { return {a.v + c, a.d, a.dd}; }
    friend Dual2 operator-(const Dual2& a, Scalar c) { return {a.v - c, a.d, a.dd}; }
    friend Dual2 operator-(Scalar c, const Dual2& a) { return {c - a.v, -a.d, -a.dd}; }
    friend Dual2 operator*(const Dual2& a, Scalar c) { return {a.v * c, a.d * c, a.dd * c}; }
    friend Dual2 operator*(Scalar c, const Dual2& a) { return {a.v * c, a.d * c, a.dd * c}; }
};

/// Radial profiles (F, P, W) with their first two r-derivatives.
template <class Scalar> struct RadialProfiles {
    Dual2<Scalar> F, P, W;
};

/// Quintic smoothstep 6x^5 - 15x^4 + 10x^3 (C^2 transition from 0 to 1).
template <class Scalar> Dual2<Scalar> smoothstep(const Dual2<Scalar>& x)
{
    if (x.v <= Scalar(0)) return Dual2<Scalar>::constant(Scalar(0));
    if (x.v >= Scalar(1)) return Dual2<Scalar>::constant(Scalar(1));
    const Dual2<Scalar> x3 = x * x * x;
    return x3 * (Scalar(10) + x * (Scalar(-15) + x * Scalar(6)));
}

template <class Scalar> RadialProfiles<Scalar> schwarzschild_profiles(Scalar M, Scalar r)
{
    using D = Dual2<Scalar>;
    const D rr = D::variable(r);
    const D F = Scalar(1) - D::constant(Scalar(4) * M) / (rr + Scalar(2) * M);
    const D H = Scalar(1) + D::constant(Scalar(4) * M) / (rr - Scalar(2) * M);
    const D q = Scalar(1) + D::constant(Scalar(2) * M) / rr;
    const D P = q * q;
    const D W = (H - P) / (rr * rr);
    return {F, P, W};
}

/// Radial profiles of a model at coordinate radius r (r > horizon guard).
template <class Scalar> RadialProfiles<Scalar> radial_profiles(const MetricModel& model, Scalar r)
{
    using D = Dual2<Scalar>;
    if (model.flat_at(double(r))) return {D::constant(Scalar(1)), D::constant(Scalar(1)), D::constant(Scalar(0))};
    const Scalar M = Scalar(model.M);
    RadialProfiles<Scalar> s = schwarzschild_profiles<Scalar>(M, r);
    if (model.kind != MetricKind::GluedSchwarzschild || r >= Scalar(model.r_out)) return s;
    const D x = (D::variable(r) - Scalar(model.r_in)) * (Scalar(1) / Scalar(model.r_out - model.r_in));
    const D b = smoothstep(x);
    return {Scalar(1) + b * (s.F - Scalar(1)), Scalar(1) + b * (s.P - Scalar(1)), b * s.W};
}

/// Pointwise metric data.  Index conventions:
///   dg[m](a,b)          = d_m g_ab
///   ddg(m,n,a,b)        = d_m d_n g_ab
///   Gamma[l](m,n)       = Gamma^l_mn
///   dGamma(s,l,m,n)     = d_s Gamma^l_mn
///   Riemann(a,b,c,d)    = R_abcd with R_abab > 0 on round spheres; the Jacobi
///                         equation reads D^2 J^a = -R^a_bcd B^b J^c B^d.
template <class Scalar> struct MetricJetT {
    int level = 0;
    Mat4T<Scalar> g = Mat4T<Scalar>::Zero();
    Mat4T<Scalar> g_inv = Mat4T<Scalar>::Zero();
    Tensor3T<Scalar> dg{};
    Tensor4T<Scalar> ddg{};
    Tensor3T<Scalar> Gamma{};
    Tensor4T<Scalar> dGamma{};
    bool has_curvature = false;
    Tensor4T<Scalar> Riemann{};
    Mat4T<Scalar> Ricci = Mat4T<Scalar>::Zero();
    Scalar scalar{0};
    Tensor4T<Scalar> Weyl{};
    Mat4T<Scalar> Schouten = Mat4T<Scalar>::Zero();
};

using MetricJet = MetricJetT<double>;

namespace detail {

template <class Scalar> void zero_tensor3(Tensor3T<Scalar>& t)
{
    for (auto& m : t) m.setZero();
}

/// Fills g, g_inv and the requested derivative layers from radial profiles.
template <class Scalar>
void fill_metric_jet(MetricJetT<Scalar>& jet, const RadialProfiles<Scalar>& p, const Vec3T<Scalar>& x, Scalar r,
                     bool flat, int level)
{
    jet.level = level;
    jet.g.setZero();
    if (flat) {
        jet.g.diagonal() << Scalar(-1), Scalar(1), Scalar(1), Scalar(1);
        jet.g_inv = jet.g;
        zero_tensor3(jet.dg);
        jet.ddg.setZero();
        zero_tensor3(jet.Gamma);
        jet.dGamma.setZero();
        return;
    }
    jet.g(0, 0) = -p.F.v;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) jet.g(i + 1, j + 1) = (i == j ? p.P.v : Scalar(0)) + p.W.v * x(i) * x(j);
    jet.g_inv = jet.g.inverse();
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < a; ++b) {
            jet.g_inv(a, b) = (jet.g_inv(a, b) + jet.g_inv(b, a)) / Scalar(2);
            jet.g_inv(b, a) = jet.g_inv(a, b);
        }
    if (level < 1) return;

    const Vec3T<Scalar> xh = x / r;
    auto grad = [&](const Dual2<Scalar>& f) { return Vec3T<Scalar>(f.d * xh); };
    auto hess = [&](const Dual2<Scalar>& f) {
        Mat3T<Scalar> h = f.dd * xh * xh.transpose() + (f.d / r) * (Mat3T<Scalar>::Identity() - xh * xh.transpose());
        return h;
    };
    const Vec3T<Scalar> dF = grad(p.F), dP = grad(p.P), dW = grad(p.W);
    auto delta = [](int i, int j) { return i == j ? Scalar(1) : Scalar(0); };

    zero_tensor3(jet.dg);
    for (int k = 0; k < 3; ++k) {
        Mat4T<Scalar>& d = jet.dg[k + 1];
        d(0, 0) = -dF(k);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                d(i + 1, j + 1) = dP(k) * delta(i, j) + dW(k) * x(i) * x(j) +
                                  p.W.v * (delta(i, k) * x(j) + x(i) * delta(j, k));
    }

    // Lowered Christoffels Gamma_kmn and raised Gamma^l_mn.
    Tensor3T<Scalar> low{};
    for (int k = 0; k < 4; ++k) {
        low[k].setZero();
        for (int m = 0; m < 4; ++m)
            for (int n = m; n < 4; ++n) {
                const Scalar v = (jet.dg[m](k, n) + jet.dg[n](k, m) - jet.dg[k](m, n)) / Scalar(2);
                low[k](m, n) = v;
                low[k](n, m) = v;
            }
    }
    for (int l = 0; l < 4; ++l) {
        jet.Gamma[l].setZero();
        for (int m = 0; m < 4; ++m)
            for (int n = m; n < 4; ++n) {
                Scalar s(0);
                for (int k = 0; k < 4; ++k) s += jet.g_inv(l, k) * low[k](m, n);
                jet.Gamma[l](m, n) = s;
                jet.Gamma[l](n, m) = s;
            }
    }
    if (level < 2) return;

    const Mat3T<Scalar> hF = hess(p.F), hP = hess(p.P), hW = hess(p.W);
    jet.ddg.setZero();
    for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l) {
            jet.ddg(k + 1, l + 1, 0, 0) = -hF(k, l);
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j)
                    jet.ddg(k + 1, l + 1, i + 1, j + 1) =
                        hP(k, l) * delta(i, j) + hW(k, l) * x(i) * x(j) +
                        dW(k) * (delta(i, l) * x(j) + x(i) * delta(j, l)) +
                        dW(l) * (delta(i, k) * x(j) + x(i) * delta(j, k)) +
                        p.W.v * (delta(i, k) * delta(j, l) + delta(i, l) * delta(j, k));
        }

    // d_s g^{lk} = -g^{la} d_s g_ab g^{bk}
    Tensor3T<Scalar> dginv{};
    for (int s = 0; s < 4; ++s) dginv[s] = -jet.g_inv * jet.dg[s] * jet.g_inv;
    jet.dGamma.setZero();
    for (int s = 0; s < 4; ++s)
        for (int m = 0; m < 4; ++m)
            for (int n = m; n < 4; ++n) {
                Vec4T<Scalar> dlow;
                for (int k = 0; k < 4; ++k)
                    dlow(k) = (jet.ddg(s, m, k, n) + jet.ddg(s, n, k, m) - jet.ddg(s, k, m, n)) / Scalar(2);
                for (int l = 0; l < 4; ++l) {
                    Scalar v(0);
                    for (int k = 0; k < 4; ++k) v += dginv[s](l, k) * low[k](m, n) + jet.g_inv(l, k) * dlow(k);
                    jet.dGamma(s, l, m, n) = v;
                    jet.dGamma(s, l, n, m) = v;
                }
            }
}

} // namespace detail

/// Metric jet of `model` at Cartesian point (t, x1, x2, x3).  Level 0 fills g and
/// g_inv, level 1 adds dg and Gamma, level 2 adds ddg and dGamma.  Radial
/// derivatives are exact (forward-mode second-order duals), including the
/// smoothstep transition annulus of the glued model.
template <class Scalar> MetricJetT<Scalar> metric_at_t(const MetricModel& model, const Vec4T<Scalar>& X, int level)
{
    if (level < 0 || level > 2) throw ValidationError("UnsupportedLevel", "metric_at level must be 0, 1 or 2");
    const Vec3T<Scalar> x = X.template tail<3>();
    const Scalar r = x.norm();
    if (!model.flat_at(double(r)) && double(r) <= model.horizon_guard())
        throw NumericalError("CoordinateSingularity", "radius " + std::to_string(double(r)) +
                                                          " is inside the horizon guard " +
                                                          std::to_string(model.horizon_guard()));
    MetricJetT<Scalar> jet;
    const bool flat = model.flat_at(double(r));
    const RadialProfiles<Scalar> p = radial_profiles<Scalar>(model, flat ? Scalar(1) : r);
    detail::fill_metric_jet<Scalar>(jet, p, x, r, flat, level);
    return jet;
}

/// Fills Riemann, Ricci, scalar curvature, Schouten and Weyl from a level-2 jet.
template <class Scalar> void fill_curvature(MetricJetT<Scalar>& jet)
{
    const Mat4T<Scalar>& g = jet.g;
    Tensor3T<Scalar> low{};
    for (int k = 0; k < 4; ++k) {
        low[k].setZero();
        for (int l = 0; l < 4; ++l) low[k] += g(k, l) * jet.Gamma[l];
    }
    Tensor4T<Scalar>& R = jet.Riemann;
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b)
            for (int c = 0; c < 4; ++c)
                for (int d = 0; d < 4; ++d) {
                    Scalar v = (jet.ddg(b, c, a, d) + jet.ddg(a, d, b, c) - jet.ddg(b, d, a, c) -
                                jet.ddg(a, c, b, d)) /
                               Scalar(2);
                    for (int e = 0; e < 4; ++e)
                        v += low[e](a, d) * jet.Gamma[e](b, c) - low[e](a, c) * jet.Gamma[e](b, d);
                    R(a, b, c, d) = v;
                }
    jet.Ricci.setZero();
    for (int b = 0; b < 4; ++b)
        for (int d = 0; d < 4; ++d) {
            Scalar v(0);
            for (int a = 0; a < 4; ++a)
                for (int c = 0; c < 4; ++c) v += jet.g_inv(a, c) * R(a, b, c, d);
            jet.Ricci(b, d) = v;
        }
    jet.scalar = (jet.g_inv.cwiseProduct(jet.Ricci)).sum();
    jet.Schouten = jet.Ricci - (jet.scalar / Scalar(6)) * g;
    const Mat4T<Scalar>& S = jet.Schouten;
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b)
            for (int c = 0; c < 4; ++c)
                for (int d = 0; d < 4; ++d)
                    jet.Weyl(a, b, c, d) =
                        R(a, b, c, d) -
                        (g(a, c) * S(b, d) + g(b, d) * S(a, c) - g(a, d) * S(b, c) - g(b, c) * S(a, d)) / Scalar(2);
    jet.has_curvature = true;
}

/// Double-precision metric jet (see metric_at_t).
MetricJet metric_at(const MetricModel& model, const Vec4& x, int level);

/// Level-2 jet with Riemann, Ricci, scalar curvature, Weyl and Schouten populated.
MetricJet curvature_at(const MetricModel& model, const Vec4& x);

/// Schouten-type tensor of a scalar field:
///   S_ab = d_a phi d_b phi - (1/6) g_ab (g^{mn} d_m phi d_n phi - m phi^2).
Mat4 schouten_scalar_field(const MetricJet& jet, const Vec4& dphi, double phi, double kg_mass = 1.0);

/// Riemann tensor rebuilt from d Gamma and Gamma (independent of the second-derivative
/// formula used by fill_curvature); used for consistency checks.
Tensor4 riemann_from_christoffel(const MetricJet& jet);

/// Maximum residuals of the algebraic Riemann symmetries (antisymmetry in each pair,
/// pair symmetry, first Bianchi identity).
double riemann_symmetry_residual(const Tensor4& R);

/// max |g^{ac} W_abcd| over (b, d).
double weyl_trace_residual(const MetricJet& jet);

/// Contraction R(., u, ., v) as a 4x4 matrix: E_ac = R_abcd u^b v^d.
Mat4 contract_bd(const Tensor4& R, const Vec4& u, const Vec4& v);

/// Full contraction R(a, b, c, d) with four vectors.
double contract4(const Tensor4& R, const Vec4& a, const Vec4& b, const Vec4& c, const Vec4& d);

/// Static lapse n = sqrt(F(r)) = sqrt(-g_tt) at a point.
double static_lapse(const MetricModel& model, const Vec4& x);

} // namespace hyperlab
