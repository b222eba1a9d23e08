#include "doctest.h"

#include "hyperlab/nullgeom.hpp"

#include <cmath>
#include <numbers>

using namespace hyperlab;

namespace {

TraceOptions k_opts(double tol = 1e-12)
{
    TraceOptions o;
    o.ode.rel_tol = o.ode.abs_tol = tol;
    o.jacobi = true;
    o.transport_k = true;
    return o;
}

template <class Derived> double max_abs(const Eigen::MatrixBase<Derived>& m) { return m.cwiseAbs().maxCoeff(); }

double weyl_max(const WeylNull& w)
{
    return std::max({max_abs(w.alpha), max_abs(w.alphab), max_abs(w.beta), max_abs(w.betab), std::abs(w.varrho),
                     std::abs(w.sigma)});
}

/// Static frame built from the radial tetrad: T = (e4 + e3)/2, N = (e4 - e3)/2.
FrameSet static_frame(const NullTetrad& t)
{
    FrameSet f;
    f.T = 0.5 * (t.e4 + t.e3);
    f.N = 0.5 * (t.e4 - t.e3);
    f.B = f.T;
    f.Nbar = f.N;
    f.L = t.e4;
    f.Lb = t.e3;
    f.e = t.e;
    return f;
}

/// Leaf sample and frame at (zeta, theta, phi, rho) from an origin.
std::pair<GeodesicSample, FrameSet> leaf_point(const MetricModel& model, const Vec4& origin, const Direction& d,
                                               double rho)
{
    const GeodesicRecord rec = trace_geodesic(model, origin, d, {rho}, k_opts());
    return {rec.samples[0], frames_at(model, rec, rec.samples[0])};
}

} // namespace

TEST_CASE("schwarzschild closed forms")
{
    const SchwarzschildClosedForms c = schwarzschild_closed_forms(0.05, 5.0);
    CHECK(c.varrho_hat_n4 == doctest::Approx(-0.001507712).epsilon(1e-7));
    CHECK(c.trchi_s == doctest::Approx(0.39215686).epsilon(1e-8));
    CHECK(c.trchib_s == doctest::Approx(-0.39215686).epsilon(1e-8));
    CHECK(c.K_sphere == doctest::Approx(0.03844675).epsilon(1e-7));
    CHECK(c.gamma_r == doctest::Approx(5.3178470).epsilon(1e-7));
    const SchwarzschildClosedForms f = schwarzschild_closed_forms(0.0, 3.0);
    CHECK(f.varrho_hat_n4 == 0.0);
    CHECK(f.trchi_s == doctest::Approx(2.0 / 3.0));
    CHECK(f.K_sphere == doctest::Approx(1.0 / 9.0));
    CHECK(f.gamma_r == 3.0);
    CHECK_THROWS_AS(schwarzschild_closed_forms(0.05, 0.1), ValidationError);
}

TEST_CASE("volume form and duals")
{
    const MetricModel model = MetricModel::glued(0.05);
    const MetricJet jet = curvature_at(model, Vec4(0.0, 1.1, 0.6, -0.4));
    const Tensor4 eps = volume_form(jet.g);
    CHECK(eps(0, 1, 2, 3) == doctest::Approx(std::sqrt(-jet.g.determinant())));
    CHECK(eps(1, 0, 2, 3) == doctest::Approx(-std::sqrt(-jet.g.determinant())));
    CHECK(eps(0, 0, 2, 3) == 0.0);
    const Tensor4 l = left_dual(jet.g, jet.Weyl), r = right_dual(jet.g, jet.Weyl);
    double diff = 0.0;
    for (std::size_t i = 0; i < l.a.size(); ++i) diff = std::max(diff, std::abs(l.a[i] - r.a[i]));
    CHECK(diff <= 1e-8 * jet.Weyl.max_abs());
    CHECK(jet.Weyl.max_abs() > 1e-3);
    // The double dual of a Weyl tensor is minus the tensor.
    const Tensor4 dd = left_dual(jet.g, l);
    double dd_err = 0.0;
    for (std::size_t i = 0; i < dd.a.size(); ++i) dd_err = std::max(dd_err, std::abs(dd.a[i] + jet.Weyl.a[i]));
    CHECK(dd_err <= 1e-10 * jet.Weyl.max_abs());
}

TEST_CASE("minkowski weyl components vanish")
{
    const MetricModel eta = MetricModel::minkowski();
    const Vec4 x(0.0, 1.0, 2.0, 0.5);
    const MetricJet jet = curvature_at(eta, x);
    const NullTetrad t = hat_tetrad(eta, x);
    CHECK(weyl_max(null_decompose(jet.g, jet.Weyl, t)) == 0.0);
    const EMParts em = em_decompose(jet.g, jet.Weyl, static_frame(t), Observer::T);
    CHECK(em.E.cwiseAbs().maxCoeff() == 0.0);
    CHECK(em.H.cwiseAbs().maxCoeff() == 0.0);
    CHECK(bel_robinson_scalar(jet.g, jet.Weyl, t.e4, t.e3, t.e4, t.e3) == 0.0);
}

TEST_CASE("schwarzschild hat tetrad has only varrho")
{
    const MetricModel model = MetricModel::schwarzschild(0.05);
    for (double r : {3.0, 5.0, 10.0}) {
        const Vec4 x(0.0, 0.6 * r, 0.0, 0.8 * r);
        const MetricJet jet = curvature_at(model, x);
        const NullTetrad t = hat_tetrad(model, x);
        CHECK(t.residual(jet.g) < 1e-12);
        WeylNull w = null_decompose(jet.g, jet.Weyl, t);
        const double expected = schwarzschild_closed_forms(0.05, r).varrho_hat_n4;
        CHECK(w.varrho == doctest::Approx(expected).epsilon(1e-10));
        w.varrho = 0.0;
        CHECK(weyl_max(w) <= 1e-6 * std::abs(expected));
        if (r == 5.0) {
            CHECK(null_decompose(jet.g, jet.Weyl, t).varrho == doctest::Approx(-0.001507712).epsilon(1e-7));
            CHECK(weyl_max(w) <= 1e-9);
        }
    }
}

TEST_CASE("electric and magnetic parts in the static frame")
{
    const MetricModel model = MetricModel::schwarzschild(0.05);
    const Vec4 x(0.0, 0.0, 5.0, 0.0);
    const MetricJet jet = curvature_at(model, x);
    const FrameSet f = static_frame(hat_tetrad(model, x));
    const EMParts em = em_decompose(jet.g, jet.Weyl, f, Observer::T);
    CHECK(em.E(0, 0) == doctest::Approx(-0.001507712).epsilon(1e-7));
    CHECK(em.E(1, 1) == doctest::Approx(0.000753856).epsilon(1e-7));
    CHECK(em.E(2, 2) == doctest::Approx(0.000753856).epsilon(1e-7));
    CHECK(em.H.cwiseAbs().maxCoeff() < 1e-12);
    CHECK(std::abs(em.E.trace()) <= 1e-9 * em.E.norm());

    FrameSet bad = f;
    bad.N *= 1.1;
    CHECK_THROWS_AS(em_decompose(jet.g, jet.Weyl, bad, Observer::T), ValidationError);
}

TEST_CASE("electric and magnetic parts on a boosted leaf frame are trace-free and symmetric")
{
    const MetricModel model = MetricModel::glued(0.05);
    const auto [s, f] = leaf_point(model, Vec4(0.0, 0.3, 0.0, 0.0), Direction::spherical(1.0, 1.1, 0.4), 1.2);
    const MetricJet jet = curvature_at(model, s.x);
    for (Observer o : {Observer::T, Observer::B}) {
        const EMParts em = em_decompose(jet.g, jet.Weyl, f, o);
        const double scale = std::max(em.E.norm(), em.H.norm());
        CHECK(scale > 0.0);
        CHECK(std::abs(em.E.trace()) <= 1e-9 * scale);
        CHECK(std::abs(em.H.trace()) <= 1e-9 * scale);
        CHECK((em.E - em.E.transpose()).norm() <= 1e-9 * scale);
        CHECK((em.H - em.H.transpose()).norm() <= 1e-9 * scale);
        // The T-observer sees no magnetic part in a static metric.
        if (o == Observer::T) CHECK(em.H.norm() <= 1e-10 * scale);
        else CHECK(em.H.norm() > 1e-6 * scale);
        // Bel-Robinson energy density of the observer equals |E|^2 + |H|^2.
        const Vec4 U = o == Observer::T ? f.T : f.B;
        const double Q = bel_robinson_scalar(jet.g, jet.Weyl, U, U, U, U);
        const double EH = em.E.squaredNorm() + em.H.squaredNorm();
        CHECK(Q == doctest::Approx(EH).epsilon(1e-10));
    }
}

TEST_CASE("bel-robinson is non-negative on future causal vectors")
{
    const MetricModel model = MetricModel::glued(0.05);
    const Vec4 x(0.0, 0.9, 1.0, -0.2);
    const MetricJet jet = curvature_at(model, x);
    const Mat4 frame = static_orthonormal_frame(model, x);
    for (int k = 0; k < 20; ++k) {
        const double z = 0.15 * k, th = 0.3 + 0.13 * k, ph = 0.7 * k;
        const Vec3 dir(std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th));
        const Vec4 timelike = frame.col(0) * std::cosh(z) +
                              std::sinh(z) * (dir(0) * frame.col(1) + dir(1) * frame.col(2) + dir(2) * frame.col(3));
        const Vec4 null = frame.col(0) + dir(0) * frame.col(1) + dir(1) * frame.col(2) + dir(2) * frame.col(3);
        CHECK(bel_robinson_scalar(jet.g, jet.Weyl, timelike, timelike, timelike, timelike) >= 0.0);
        CHECK(bel_robinson_scalar(jet.g, jet.Weyl, null, null, null, null) >= -1e-15);
        CHECK(bel_robinson_scalar(jet.g, jet.Weyl, timelike, null, timelike, null) >= -1e-15);
    }
}

TEST_CASE("null decomposition rotates as spin-2 under frame rotation")
{
    const MetricModel model = MetricModel::glued(0.05);
    const auto [s, f] = leaf_point(model, Vec4(0.0, 0.3, 0.0, 0.0), Direction::spherical(1.0, 1.1, 0.4), 1.2);
    const MetricJet jet = curvature_at(model, s.x);
    const NullTetrad t = intrinsic_tetrad(f);
    const WeylNull w = null_decompose(jet.g, jet.Weyl, t);
    const double th = std::numbers::pi / 4;
    const WeylNull wr = null_decompose(jet.g, jet.Weyl, t.rotated(th));
    Mat2 R;
    R << std::cos(th), std::sin(th), -std::sin(th), std::cos(th);
    CHECK(max_abs(w.alpha) > 1e-6);
    CHECK(max_abs(wr.alpha - R * w.alpha * R.transpose()) <= 1e-9 * max_abs(w.alpha));
    CHECK(max_abs(wr.alphab - R * w.alphab * R.transpose()) <= 1e-9 * max_abs(w.alpha));
    CHECK(max_abs(wr.beta - R * w.beta) <= 1e-9 * max_abs(w.alpha));
    CHECK(wr.varrho == doctest::Approx(w.varrho).epsilon(1e-12));
    CHECK(std::abs(w.alpha.trace()) <= 1e-9 * max_abs(w.alpha));
    CHECK(std::abs(w.alphab.trace()) <= 1e-9 * max_abs(w.alpha));
    NullTetrad bad = t;
    bad.e3 *= 2.0;
    CHECK_THROWS_AS(null_decompose(jet.g, jet.Weyl, bad), ValidationError);
}

TEST_CASE("intrinsic tetrad in the schwarzschild zone: alpha = alphab, beta = betab, sigma = 0")
{
    const MetricModel model = MetricModel::glued(0.05);
    const auto [s, f] = leaf_point(model, Vec4(0.0, 0.4, 0.0, 0.0), Direction::spherical(1.3, 1.0, 2.0), 8.0);
    REQUIRE(s.x.tail<3>().norm() > 2.0);
    const MetricJet jet = curvature_at(model, s.x);
    const WeylNull w = null_decompose(jet.g, jet.Weyl, intrinsic_tetrad(f));
    CHECK(std::abs(w.sigma) <= 1e-8);
    CHECK(max_abs(w.alpha - w.alphab) <= 1e-8);
    CHECK(max_abs(w.beta - w.betab) <= 1e-8);
    CHECK(max_abs(w.beta) > 1e-7);
}

TEST_CASE("varrho and betab formulas in the schwarzschild zone")
{
    SUBCASE("centered")
    {
        const MetricModel model = MetricModel::glued(0.05);
        const auto [s, f] = leaf_point(model, Vec4::Zero(), Direction::spherical(1.0, 0.7, 0.3), 6.0);
        const VarrhoConsistency v = varrho_consistency(model, s.x, f);
        CHECK(v.varpi == doctest::Approx(v.n).epsilon(1e-10));
        CHECK(std::abs(v.varrho_direct - v.varrho_formula) <= 1e-8 * std::abs(v.varrho_formula));
        CHECK(max_abs(v.betab_direct) < 1e-12);
        CHECK(max_abs(v.betab_formula) < 1e-12);
    }
    SUBCASE("offset, r = 10, M = 0.01")
    {
        const MetricModel model = MetricModel::glued(0.01);
        const Vec4 origin(0.0, 0.5, 0.2, 0.0);
        const Direction d = Direction::spherical(1.0, 2.0, 1.0);
        // Choose rho so that the point lies at coordinate radius 10.
        double lo = 1.0, hi = 20.0;
        for (int i = 0; i < 60; ++i) {
            const double mid = 0.5 * (lo + hi);
            const double r = exp_map(model, origin, d, mid, 1e-12).samples[0].x.tail<3>().norm();
            (r < 10.0 ? lo : hi) = mid;
        }
        const auto [s, f] = leaf_point(model, origin, d, 0.5 * (lo + hi));
        CHECK(s.x.tail<3>().norm() == doctest::Approx(10.0).epsilon(1e-8));
        const VarrhoConsistency v = varrho_consistency(model, s.x, f);
        CHECK(std::abs(v.varrho_direct - v.varrho_formula) <= 1e-6 * std::abs(v.varrho_formula));
        CHECK(max_abs(v.betab_formula) > 1e-9);
        CHECK(max_abs(v.betab_direct - v.betab_formula) <= 1e-6 * max_abs(v.betab_formula));
    }
    SUBCASE("minkowski")
    {
        const MetricModel eta = MetricModel::minkowski();
        const auto [s, f] = leaf_point(eta, Vec4::Zero(), Direction::spherical(1.0, 0.7, 0.3), 3.0);
        const VarrhoConsistency v = varrho_consistency(eta, s.x, f);
        CHECK(v.varrho_direct == 0.0);
        CHECK(v.varrho_formula == 0.0);
    }
    SUBCASE("outside the zone")
    {
        const MetricModel model = MetricModel::glued(0.05);
        const auto [s, f] = leaf_point(model, Vec4::Zero(), Direction::spherical(1.0, 0.7, 0.3), 1.0);
        CHECK_THROWS_AS(varrho_consistency(model, s.x, f), ValidationError);
    }
}

TEST_CASE("gauss equation on round spheres")
{
    SUBCASE("minkowski")
    {
        const double r = 4.0;
        GaussTerms g{1.0 / (r * r), 2.0 / r, -2.0 / r, Mat2::Zero(), Mat2::Zero()};
        CHECK(gauss_residual(g, 0.0, 0.0) == 0.0);
    }
    SUBCASE("schwarzschild t-sphere, r = 5")
    {
        const double M = 0.05, r = 5.0;
        const SchwarzschildClosedForms c = schwarzschild_closed_forms(M, r);
        const MetricModel model = MetricModel::schwarzschild(M);
        const Vec4 x(0.0, r, 0.0, 0.0);
        const MetricJet jet = curvature_at(model, x);
        const NullTetrad t = hat_tetrad(model, x);
        const double n = std::sqrt(-jet.g(0, 0));
        CHECK(c.K_sphere - (r - 2 * M) / std::pow(r + 2 * M, 3) == doctest::Approx(0.0015077).epsilon(1e-4));
        CHECK(c.K_sphere - (r - 2 * M) / std::pow(r + 2 * M, 3) == doctest::Approx(-c.varrho_hat_n4).epsilon(1e-10));
        // The static pair L = T + N spans n times the closed-form traces.
        GaussTerms g{c.K_sphere, n * c.trchi_s, n * c.trchib_s, Mat2::Zero(), Mat2::Zero()};
        const double W = contract4(jet.Weyl, t.e4, t.e3, t.e4, t.e3);
        const double S = t.e[0].dot(jet.Schouten * t.e[0]) + t.e[1].dot(jet.Schouten * t.e[1]);
        CHECK(std::abs(S) < 1e-12);
        CHECK(std::abs(gauss_residual(g, W, S)) <= 1e-8);
    }
}

TEST_CASE("gauss equation on an offset glued slice against an induced-metric curvature oracle")
{
    const MetricModel model = MetricModel::glued(0.05);
    const Vec4 origin(0.0, 0.3, 0.1, 0.0);
    SphereOptions opts;
    opts.trace = k_opts(1e-13);
    opts.root_tol = 1e-13;
    const double h = 2e-3, th0 = 1.1, ph0 = 0.5;
    std::vector<double> th, ph;
    for (int i = -2; i <= 2; ++i) {
        th.push_back(th0 + i * h);
        ph.push_back(ph0 + i * h);
    }
    for (double t : {2.2, 6.0}) {
        LeafSlice slice = leaf_slice(model, origin, t, 1.6, OmegaGrid::product(th, ph), opts);
        slice_null_forms(model, slice);
        const auto G = [&](int i, int j) { return slice.nodes[(i + 2) * 5 + (j + 2)].induced; };
        // First and second derivatives of the induced metric by central differences.
        std::array<Mat2, 2> d1;
        std::array<std::array<Mat2, 2>, 2> d2;
        d1[0] = (G(-2, 0) - 8 * G(-1, 0) + 8 * G(1, 0) - G(2, 0)) / (12 * h);
        d1[1] = (G(0, -2) - 8 * G(0, -1) + 8 * G(0, 1) - G(0, 2)) / (12 * h);
        d2[0][0] = (-G(-2, 0) + 16 * G(-1, 0) - 30 * G(0, 0) + 16 * G(1, 0) - G(2, 0)) / (12 * h * h);
        d2[1][1] = (-G(0, -2) + 16 * G(0, -1) - 30 * G(0, 0) + 16 * G(0, 1) - G(0, 2)) / (12 * h * h);
        d2[0][1] = d2[1][0] = (G(1, 1) - G(1, -1) - G(-1, 1) + G(-1, -1)) / (4 * h * h);
        const Mat2 g = G(0, 0), gi = g.inverse();
        // Christoffel symbols Gam[p](a, b) of the 2-metric.
        std::array<Mat2, 2> Gam;
        for (int p = 0; p < 2; ++p)
            for (int a = 0; a < 2; ++a)
                for (int b = 0; b < 2; ++b) {
                    double v = 0.0;
                    for (int q = 0; q < 2; ++q) v += 0.5 * gi(p, q) * (d1[a](q, b) + d1[b](q, a) - d1[q](a, b));
                    Gam[p](a, b) = v;
                }
        double R1212 = -0.5 * (d2[0][0](1, 1) + d2[1][1](0, 0) - 2.0 * d2[0][1](0, 1));
        for (int p = 0; p < 2; ++p)
            for (int q = 0; q < 2; ++q) R1212 += g(p, q) * (Gam[p](0, 1) * Gam[q](0, 1) - Gam[p](0, 0) * Gam[q](1, 1));
        const double K = R1212 / g.determinant();

        const SphereNode& c = slice.nodes[12];
        const MetricJet jet = curvature_at(model, c.sample.x);
        const double W = contract4(jet.Weyl, c.frames.L, c.frames.Lb, c.frames.L, c.frames.Lb);
        const double S = c.frames.e[0].dot(jet.Schouten * c.frames.e[0]) + c.frames.e[1].dot(jet.Schouten * c.frames.e[1]);
        const GaussTerms terms{K, c.trchi, c.trchib, c.chihat, c.chibhat};
        const double res = gauss_residual(terms, W, S);
        MESSAGE("t=" << t << " K=" << K << " residual " << res);
        CHECK(std::abs(res) <= 1e-4 * K);
    }
}

TEST_CASE("weyl current")
{
    SUBCASE("vacuum and constant sources")
    {
        const MetricModel eta = MetricModel::minkowski();
        const MetricJet jet = metric_at(eta, Vec4(0, 1, 2, 3), 1);
        Tensor3 zero;
        for (auto& m : zero) m.setZero();
        Mat4 S = Mat4::Zero();
        for (const auto& m : weyl_current(jet, S, zero)) CHECK(m.cwiseAbs().maxCoeff() == 0.0);
        S << 1, 2, 3, 4, 2, 5, 6, 7, 3, 6, 8, 9, 4, 7, 9, 10;
        for (const auto& m : weyl_current(jet, S, zero)) CHECK(m.cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("metric-compatible source has no current in a curved metric")
    {
        const MetricModel model = MetricModel::glued(0.05);
        const MetricJet jet = metric_at(model, Vec4(0.0, 1.2, 0.5, 0.3), 1);
        for (const auto& m : weyl_current(jet, 0.7 * jet.g, Tensor3{0.7 * jet.dg[0], 0.7 * jet.dg[1], 0.7 * jet.dg[2],
                                                                     0.7 * jet.dg[3]}))
            CHECK(m.cwiseAbs().maxCoeff() < 1e-14);
    }
    SUBCASE("scalar-field source against symbolic differentiation")
    {
        const MetricModel eta = MetricModel::minkowski();
        const double m = 1.0, w = 0.8;
        const Vec4 c(0.1, 0.2, -0.3, 0.4);
        const Mat4 eta_m = Vec4(-1, 1, 1, 1).asDiagonal();
        // phi = exp(-|x - c|_E^2 / w^2) with the Euclidean norm on (t, x).
        auto phi = [&](const Vec4& x) { return std::exp(-(x - c).squaredNorm() / (w * w)); };
        auto dphi = [&](const Vec4& x) { return Vec4(-2.0 * (x - c) / (w * w) * phi(x)); };
        auto ddphi = [&](const Vec4& x) {
            const Vec4 y = x - c;
            return Mat4((4.0 * y * y.transpose() / std::pow(w, 4) - 2.0 / (w * w) * Mat4::Identity()) * phi(x));
        };
        for (const Vec4& x : {Vec4(0.0, 0.0, 0.0, 0.0), Vec4(0.3, -0.5, 0.2, 0.9), Vec4(-0.4, 0.7, 0.1, -0.2)}) {
            const MetricJet jet = metric_at(eta, x, 1);
            const Mat4 S = schouten_scalar_field(jet, dphi(x), phi(x), m);
            // d_l S_ab by finite differences of the library Schouten tensor.
            Tensor3 dS;
            const double hh = 1e-3;
            for (int l = 0; l < 4; ++l) {
                auto at = [&](double s) {
                    const Vec4 y = x + s * Vec4::Unit(l);
                    return schouten_scalar_field(metric_at(eta, y, 1), dphi(y), phi(y), m);
                };
                dS[l] = (at(-2 * hh) - 8 * at(-hh) + 8 * at(hh) - at(2 * hh)) / (12 * hh);
            }
            const Tensor3 J = weyl_current(jet, S, dS);
            // Symbolic derivative of S_bd = d_b phi d_d phi - (1/6) eta_bd (eta^{mn} d_m phi d_n phi - m phi^2).
            const Vec4 p1 = dphi(x);
            const Mat4 p2 = ddphi(x);
            auto dS_sym = [&](int cc, int b, int d) {
                const double dkin = 2.0 * p2.row(cc).dot(eta_m * p1) - 2.0 * m * phi(x) * p1(cc);
                return p2(cc, b) * p1(d) + p1(b) * p2(cc, d) - eta_m(b, d) * dkin / 6.0;
            };
            double err = 0.0, scale = 0.0;
            for (int b = 0; b < 4; ++b)
                for (int cc = 0; cc < 4; ++cc)
                    for (int d = 0; d < 4; ++d) {
                        const double ref = 0.5 * (dS_sym(cc, b, d) - dS_sym(d, b, cc));
                        err = std::max(err, std::abs(J[b](cc, d) - ref));
                        scale = std::max(scale, std::abs(ref));
                        CHECK(J[b](cc, d) == doctest::Approx(-J[b](d, cc)).epsilon(1e-12));
                    }
            CHECK(err <= 1e-6 * scale);
        }
    }
}

TEST_CASE("riemannian auxiliary metric is positive definite")
{
    const MetricModel model = MetricModel::glued(0.05);
    const Vec4 x(0.0, 1.3, 0.2, 0.0);
    const Mat4 g = metric_at(model, x, 0).g;
    const Mat4 h = riemannian_aux_metric(g, static_orthonormal_frame(model, x).col(0));
    const Eigen::SelfAdjointEigenSolver<Mat4> es(h);
    CHECK(es.eigenvalues().minCoeff() > 0.0);
}
