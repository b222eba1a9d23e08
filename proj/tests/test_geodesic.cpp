#include "doctest.h"

#include "geodesic_oracle.hpp"
#include "hyperlab/geodesic.hpp"

#include <cmath>
#include <numbers>

using namespace hyperlab;

namespace {

std::vector<double> linspace(double a, double b, int n)
{
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i) v[i] = a + (b - a) * i / (n - 1);
    return v;
}

TraceOptions jacobi_opts(double tol = 1e-10)
{
    TraceOptions o;
    o.ode.rel_tol = o.ode.abs_tol = tol;
    o.jacobi = true;
    return o;
}

} // namespace

TEST_CASE("direction lies on the unit hyperboloid")
{
    for (double z : {0.0, 0.5, 2.0, 6.0}) {
        const Vec4 V = Direction::spherical(z, 1.1, -0.7).velocity();
        CHECK(std::abs((V(0) * V(0) - V.tail<3>().squaredNorm()) - 1.0) < 1e-14 * V(0) * V(0));
    }
    const Direction d = Direction::from_omega(1.0, Vec3(0.0, 2.0, 0.0));
    CHECK((d.omega() - Vec3(0, 1, 0)).norm() < 1e-15);
}

TEST_CASE("minkowski geodesics are straight lines")
{
    const MetricModel eta = MetricModel::minkowski();
    GeodesicRecord rec = exp_map(eta, Vec4::Zero(), Direction::spherical(0.0, 0.3, 0.2), 2.5);
    REQUIRE(rec.samples.size() == 1);
    CHECK((rec.samples[0].x - Vec4(2.5, 0, 0, 0)).norm() < 1e-14);
    CHECK((rec.samples[0].B - Vec4(1, 0, 0, 0)).norm() < 1e-14);

    rec = exp_map(eta, Vec4::Zero(), Direction::from_omega(0.5, Vec3::UnitX()), 3.0);
    CHECK(rec.samples[0].x(0) == doctest::Approx(3.3828780).epsilon(1e-7));
    CHECK(rec.samples[0].x(1) == doctest::Approx(1.5632859).epsilon(1e-7));
    CHECK(rec.samples[0].B(0) == doctest::Approx(1.1276260).epsilon(1e-7));
    CHECK(rec.samples[0].B(1) == doctest::Approx(0.5210953).epsilon(1e-7));

    // Exact at large rho.
    const Direction d = Direction::spherical(2.0, 0.4, 2.0);
    rec = exp_map(eta, Vec4::Zero(), d, 100.0);
    CHECK((rec.samples[0].x - 100.0 * d.velocity()).norm() < 1e-10);
}

TEST_CASE("minkowski boost fields are exact Lorentz boosts")
{
    const MetricModel eta = MetricModel::minkowski();
    const GeodesicRecord rec =
        trace_geodesic(eta, Vec4::Zero(), Direction::from_omega(0.5, Vec3::UnitX()), {1.0, 3.0}, jacobi_opts());
    const GeodesicSample& s = rec.samples.back();
    CHECK(s.J[0](0) == doctest::Approx(1.5632859).epsilon(1e-7));
    CHECK(s.J[0](1) == doctest::Approx(3.3828780).epsilon(1e-7));
    for (int i = 0; i < 3; ++i) {
        // Boost i: x^i d_t + t d_i evaluated at x.
        Vec4 expect = Vec4::Zero();
        expect(0) = s.x(i + 1);
        expect(i + 1) = s.x(0);
        CHECK((s.J[i] - expect).norm() < 1e-12);
    }
}

TEST_CASE("glued centered geodesic matches the extrapolation oracle")
{
    const MetricModel model = MetricModel::glued(0.01);
    const Direction d = Direction::from_omega(0.5, Vec3::UnitX());
    TraceOptions opts;
    opts.ode.rel_tol = opts.ode.abs_tol = 1e-12;
    opts.jacobi = false;
    const GeodesicRecord rec = trace_geodesic(model, Vec4::Zero(), d, {30.0}, opts);
    const oracle::State ref = oracle::integrate(model, Vec4::Zero(), d.velocity(), 30.0, 1200);
    double err = 0.0;
    for (int a = 0; a < 4; ++a) {
        err = std::max(err, std::abs(rec.samples[0].x(a) - double(ref[a])));
        err = std::max(err, std::abs(rec.samples[0].B(a) - double(ref[4 + a])));
    }
    CHECK(err < 1e-8);
    // The endpoint differs from the flat-space line, so the comparison is not vacuous.
    CHECK((rec.samples[0].x - 30.0 * d.velocity()).norm() > 1e-3);
}

TEST_CASE("geodesic and Jacobi invariants along glued offset geodesics")
{
    const MetricModel model = MetricModel::glued(0.05);
    const Vec4 origin(0.0, 0.2, 0.0, 0.0);
    const auto grid = linspace(0.0, 40.0, 81);
    for (const Direction& d : {Direction::spherical(0.8, 1.0, 0.3), Direction::spherical(2.5, 2.0, 4.0),
                               Direction::spherical(0.1, 0.5, 1.0)}) {
        const GeodesicRecord rec = trace_geodesic(model, origin, d, grid, jacobi_opts());
        REQUIRE_FALSE(rec.truncated);
        REQUIRE(rec.samples.size() == grid.size());
        for (const GeodesicSample& s : rec.samples) {
            const MetricJet jet = metric_at(model, s.x, 1);
            CHECK(std::abs(dot(jet.g, s.B, s.B) + 1.0) < 1e-9);
            double scale = 1.0;
            for (int i = 0; i < 3; ++i) scale = std::max({scale, s.J[i].norm(), s.Jp[i].norm()});
            for (int i = 0; i < 3; ++i) {
                CHECK(std::abs(dot(jet.g, s.J[i], s.B)) < 1e-8 * scale);
                CHECK(std::abs(dot(jet.g, s.Jp[i], s.B)) < 1e-8 * scale);
            }
            const Mat3 K = boost_gram(model, s);
            CHECK((K - K.transpose()).cwiseAbs().maxCoeff() <= 1e-7 * std::max(1.0, K.cwiseAbs().maxCoeff()));
        }
    }
}

TEST_CASE("Jacobi fields solve the Riemann-form deviation equation")
{
    const MetricModel model = MetricModel::glued(0.05);
    const Vec4 origin(0.0, 0.2, 0.0, 0.0);
    const Direction d = Direction::spherical(1.0, 1.2, 0.4);
    const double h = 1e-2;
    std::vector<double> grid;
    for (double c : {3.0, 8.0, 20.0})
        for (int j = -2; j <= 2; ++j) grid.push_back(c + j * h);
    const GeodesicRecord rec = trace_geodesic(model, origin, d, grid, jacobi_opts(1e-12));
    for (int c = 0; c < 3; ++c) {
        const GeodesicSample& s = rec.samples[5 * c + 2];
        const MetricJet jet = curvature_at(model, s.x);
        for (int i = 0; i < 3; ++i) {
            Vec4 dJp = Vec4::Zero();
            const double w[5] = {1.0, -8.0, 0.0, 8.0, -1.0};
            for (int j = 0; j < 5; ++j) dJp += w[j] * rec.samples[5 * c + j].Jp[i];
            dJp /= 12.0 * h;
            Vec4 lhs = dJp;
            for (int l = 0; l < 4; ++l) lhs(l) += s.B.dot(jet.Gamma[l] * s.Jp[i]);
            // R^a_bcd B^b J^c B^d with the first index raised.
            const Mat4 E = contract_bd(jet.Riemann, s.B, s.B); // E_ac = R_abcd B^b B^d
            const Vec4 rhs = -jet.g_inv * (E * s.J[i]);
            CHECK((lhs - rhs).norm() < 1e-7 * std::max(1.0, s.J[i].norm()));
        }
    }
}

TEST_CASE("Jacobi fields match neighbouring geodesics")
{
    const MetricModel model = MetricModel::glued(0.05);
    const Vec4 origin(0.0, 0.2, 0.0, 0.0);
    const Direction d = Direction::spherical(1.0, 1.2, 0.4);
    const Mat4 frame = static_orthonormal_frame(model, origin);
    const double rho = 25.0, eps = 1e-5;
    const GeodesicRecord rec = trace_geodesic(model, origin, d, {rho}, jacobi_opts(1e-12));
    const Vec4 V = d.velocity();
    for (int i = 0; i < 3; ++i) {
        // The boost generator acting on V: dV = V^i e_0 + V^0 e_i; move V along the
        // hyperboloid by the corresponding rapidity and difference the endpoints.
        auto endpoint = [&](double s) {
            Vec4 W = V;
            W(0) = V(0) * std::cosh(s) + V(i + 1) * std::sinh(s);
            W(i + 1) = V(i + 1) * std::cosh(s) + V(0) * std::sinh(s);
            const Vec3 spatial = W.tail<3>();
            const Direction dd = Direction::from_omega(std::asinh(spatial.norm()), spatial);
            return exp_map(model, origin, dd, rho, 1e-12).samples[0].x;
        };
        const Vec4 fd = (endpoint(eps) - endpoint(-eps)) / (2 * eps);
        // Directions are taken in the frame at O, which is the identity in the flat core.
        CHECK(frame.isIdentity(1e-15));
        CHECK((fd - rec.samples[0].J[i]).norm() < 1e-4 * rec.samples[0].J[i].norm());
    }
}

TEST_CASE("fan construction")
{
    SUBCASE("minkowski closed form")
    {
        const auto zeta = linspace(0.2, 1.8, 3);
        const OmegaGrid omega = OmegaGrid::gauss_legendre(2, 3);
        const auto rho = linspace(1.0, 10.0, 10);
        const FanGrid fan = fan_build(MetricModel::minkowski(), Vec4::Zero(), zeta, omega, rho, jacobi_opts(), 4);
        CHECK(fan.records.size() == 18);
        CHECK(fan.failures.empty());
        for (const GeodesicRecord& rec : fan.records)
            for (const GeodesicSample& s : rec.samples)
                CHECK((s.x - s.rho * rec.direction.velocity()).norm() < 1e-10);
    }
    SUBCASE("centered glued fan is spherically symmetric")
    {
        const std::vector<double> zeta{0.5, 1.5};
        const OmegaGrid omega = OmegaGrid::gauss_legendre(3, 4);
        const auto rho = linspace(5.0, 30.0, 6);
        const FanGrid fan = fan_build(MetricModel::glued(0.05), Vec4::Zero(), zeta, omega, rho, jacobi_opts(1e-12), 3);
        for (std::size_t iz = 0; iz < zeta.size(); ++iz)
            for (std::size_t iw = 1; iw < omega.size(); ++iw)
                for (std::size_t k = 0; k < rho.size(); ++k) {
                    const GeodesicSample& a = fan.at(iz, 0).samples[k];
                    const GeodesicSample& b = fan.at(iz, iw).samples[k];
                    CHECK(std::abs(a.x(0) - b.x(0)) < 1e-10);
                    CHECK(std::abs(a.x.tail<3>().norm() - b.x.tail<3>().norm()) < 1e-10);
                }
    }
    SUBCASE("offset fan records stay in their plane and agree with the oracle")
    {
        const MetricModel model = MetricModel::glued(0.05);
        const Vec4 origin(0.0, 0.2, 0.0, 0.0);
        const OmegaGrid omega = OmegaGrid::product({std::numbers::pi / 2}, {0.0, 1.0, 2.5, 4.0});
        const FanGrid fan = fan_build(model, origin, {1.0}, omega, {20.0}, jacobi_opts(1e-12), 2);
        for (const GeodesicRecord& rec : fan.records) {
            const GeodesicSample& s = rec.samples[0];
            CHECK(std::abs(s.x(3)) < 1e-8);
            const oracle::State ref = oracle::integrate(model, origin, rec.direction.velocity(), 20.0, 800);
            for (int a = 0; a < 3; ++a) CHECK(std::abs(s.x(a) - double(ref[a])) < 1e-8);
        }
    }
    SUBCASE("results do not depend on the thread count")
    {
        const OmegaGrid omega = OmegaGrid::gauss_legendre(2, 3);
        const FanGrid a = fan_build(MetricModel::glued(0.05), Vec4(0, 0.1, 0.1, 0), {0.5, 1.0}, omega, {10.0, 20.0},
                                    jacobi_opts(), 1);
        const FanGrid b = fan_build(MetricModel::glued(0.05), Vec4(0, 0.1, 0.1, 0), {0.5, 1.0}, omega, {10.0, 20.0},
                                    jacobi_opts(), 5);
        for (std::size_t i = 0; i < a.records.size(); ++i)
            for (std::size_t k = 0; k < 2; ++k) {
                CHECK(a.records[i].samples[k].x == b.records[i].samples[k].x);
                CHECK(a.records[i].samples[k].J[1] == b.records[i].samples[k].J[1]);
            }
    }
}

TEST_CASE("geodesic error paths")
{
    const MetricModel model = MetricModel::glued(0.05);
    CHECK_THROWS_AS(exp_map(model, Vec4(0, 0.95, 0, 0), Direction{}, 1.0), ValidationError);
    CHECK_THROWS_AS(exp_map(model, Vec4::Zero(), Direction{}, -1.0), ValidationError);
    TraceOptions o;
    o.transport_k = true;
    // Pure Schwarzschild has no flat region to seed k in.
    CHECK_THROWS_AS(trace_geodesic(MetricModel::schwarzschild(0.05), Vec4(0, 3, 0, 0), Direction{}, {1.0}, o),
                    NumericalError);
}
