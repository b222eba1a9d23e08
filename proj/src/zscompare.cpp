#include "hyperlab/zscompare.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace hyperlab {

namespace {

double gamma_of(double M, double r) { return M == 0.0 ? r : r + 4.0 * M * std::log(r - 2.0 * M); }

/// Radius below which the optical function is continued linearly (only used to keep
/// the level function monotone while bracketing roots that lie outside it).
double continuation_radius(const MetricModel& model)
{
    if (model.M == 0.0 || model.kind == MetricKind::Minkowski) return 0.0;
    return model.kind == MetricKind::GluedSchwarzschild ? model.r_out : 4.0 * model.M;
}

double gamma_continued(const MetricModel& model, double r, double* slope)
{
    const double M = model.kind == MetricKind::Minkowski ? 0.0 : model.M;
    const double rc = continuation_radius(model);
    if (r >= rc) {
        if (slope) *slope = M == 0.0 ? 1.0 : 1.0 + 4.0 * M / (r - 2.0 * M);
        return gamma_of(M, r);
    }
    const double s = 1.0 + 4.0 * M / (rc - 2.0 * M);
    if (slope) *slope = s;
    return gamma_of(M, rc) + s * (r - rc);
}

bool in_zone(const MetricModel& model, double r, double margin)
{
    switch (model.kind) {
    case MetricKind::Minkowski: return true;
    case MetricKind::Schwarzschild: return r > model.horizon_guard();
    case MetricKind::GluedSchwarzschild: return model.M == 0.0 || r >= model.r_out + margin;
    }
    return false;
}

/// Orthonormal pair orthogonal to the unit timelike u and unit spacelike v.
std::array<Vec4, 2> complement_pair(const Mat4& g, const Vec4& u, const Vec4& v)
{
    std::array<Vec4, 3> w;
    std::array<double, 3> norms;
    for (int i = 0; i < 3; ++i) {
        w[i] = Vec4::Unit(i + 1);
        w[i] += dot(g, w[i], u) * u;
        w[i] -= dot(g, w[i], v) * v;
        norms[i] = dot(g, w[i], w[i]);
    }
    const int i1 = int(std::max_element(norms.begin(), norms.end()) - norms.begin());
    std::array<Vec4, 2> e;
    e[0] = w[i1] / std::sqrt(norms[i1]);
    double best = -1.0;
    for (int i = 0; i < 3; ++i) {
        if (i == i1) continue;
        const Vec4 y = w[i] - dot(g, w[i], e[0]) * e[0];
        const double ny = dot(g, y, y);
        if (ny > best) {
            best = ny;
            e[1] = y / std::sqrt(ny);
        }
    }
    return e;
}

} // namespace

SchwOptical schw_optical(double M, double t, double r)
{
    if (!(M >= 0.0)) throw ValidationError("BadModel", "mass parameter must be non-negative");
    if (!(r > 2.0 * M)) throw ValidationError("Horizon", "r = " + std::to_string(r) + " is not outside r = 2M");
    const MetricModel model = M == 0.0 ? MetricModel::minkowski() : MetricModel::schwarzschild(M);
    const Vec4 x(t, r, 0.0, 0.0);
    const MetricJet jet = metric_at(model, x, 0);
    const double n2 = -jet.g(0, 0);
    SchwOptical o;
    o.uhat = t - gamma_of(M, r);
    o.Lhat = Vec4(1.0, n2, 0.0, 0.0);
    const Vec4 du(1.0, -(M == 0.0 ? 1.0 : 1.0 + 4.0 * M / (r - 2.0 * M)), 0.0, 0.0);
    o.eikonal = du.dot(jet.g_inv * du);
    return o;
}

double uhat_at(const MetricModel& model, const Vec4& x, double t0)
{
    const double r = x.tail<3>().norm();
    const double M = model.kind == MetricKind::Minkowski ? 0.0 : model.M;
    if (!(r > 2.0 * M)) throw ValidationError("Horizon", "r = " + std::to_string(r) + " is not outside r = 2M");
    return x(0) - t0 - gamma_of(M, r);
}

VarpiData varpi_at(const MetricModel& model, const GeodesicRecord& rec, const GeodesicSample& s)
{
    const FrameSet f = frames_at(model, rec, s);
    VarpiData v;
    v.r = s.x.tail<3>().norm();
    if (!(v.r > 0.0)) throw NumericalError("CentralLineDegenerate", "varpi is undefined at r = 0");
    v.n = static_lapse(model, s.x);
    const Vec3 nu = s.x.tail<3>() / v.r;
    v.varpi = f.N.tail<3>().dot(nu);
    v.SigmaN.tail<3>() = f.N.tail<3>() - v.varpi * nu;
    for (int A = 0; A < 2; ++A) v.snr(A) = f.e[A].tail<3>().dot(nu);
    return v;
}

VarpiData varpi_at(const MetricModel& model, const GeodesicRecord& rec, double rho)
{
    for (const GeodesicSample& s : rec.samples)
        if (std::abs(s.rho - rho) <= 1e-12 * std::max(1.0, rho)) return varpi_at(model, rec, s);
    if (rec.samples.empty() || rho < 0.0 || rho > rec.samples.back().rho)
        throw ValidationError("OutOfRange", "rho = " + std::to_string(rho) + " is outside the record range");
    const GeodesicRecord one = exp_map(model, rec.origin, rec.direction, std::vector<double>{rho});
    return varpi_at(model, rec, one.samples.at(0));
}

ComparisonSeries radial_comparison_series(const MetricModel& model, const GeodesicRecord& rec)
{
    ComparisonSeries out;
    for (const GeodesicSample& s : rec.samples) {
        const double r = s.x.tail<3>().norm();
        if (s.rho <= 0.0 || !in_zone(model, r, 0.0)) continue;
        const LeafScalars ls = leaf_scalars(model, rec, s);
        if (!(ls.rtilde > 1e-6)) continue;
        const VarpiData v = varpi_at(model, rec, s);
        const MetricJet jet = metric_at(model, s.x, 0);
        ComparisonRow row;
        row.rho = s.rho;
        row.t = ls.t;
        row.r = r;
        row.n = v.n;
        row.varpi = v.varpi;
        row.n_minus_varpi = v.n - v.varpi;
        row.rt_over_r_minus_ninv = ls.rtilde / r - 1.0 / v.n;
        row.u = ls.u;
        row.uhat = uhat_at(model, s.x, rec.origin(0));
        row.u_minus_uhat = row.u - row.uhat;
        row.SigmaN_norm = std::sqrt(std::max(0.0, dot(jet.g, v.SigmaN, v.SigmaN)));
        row.snr_norm = v.snr.norm();
        out.rows.push_back(row);
    }
    if (out.rows.empty()) return out;
    const std::size_t half = out.rows.size() / 2;
    const double first = std::abs(out.rows.front().u_minus_uhat);
    double sup = first;
    out.min_n_minus_varpi = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < out.rows.size(); ++i) {
        const ComparisonRow& r = out.rows[i];
        out.min_n_minus_varpi = std::min(out.min_n_minus_varpi, r.n_minus_varpi);
        sup = std::max(sup, std::abs(r.u_minus_uhat));
        const double defect = r.t * std::abs(r.rt_over_r_minus_ninv);
        out.max_t_rt_defect = std::max(out.max_t_rt_defect, defect);
        if (i >= half) {
            out.max_n_minus_varpi_tail = std::max(out.max_n_minus_varpi_tail, r.n_minus_varpi);
            out.max_t_rt_defect_tail = std::max(out.max_t_rt_defect_tail, defect);
        }
    }
    out.u_minus_uhat_drift = sup - first;
    return out;
}

std::vector<ResidualEntry> transport_residuals_zs(const MetricModel& model, const GeodesicRecord& rec, double ode_tol)
{
    const GeodesicRecord aug = stencil_trace(model, rec, ode_tol);
    const double M = model.kind == MetricKind::Minkowski ? 0.0 : model.M;

    struct Row {
        bool ok = false;
        double rho = 0, r = 0, n = 1, varpi = 0, rtilde = 0, binv_t = 0, X = 0;
    };
    std::vector<Row> rows(aug.samples.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const GeodesicSample& s = aug.samples[i];
        Row& row = rows[i];
        row.r = s.x.tail<3>().norm();
        if (!in_zone(model, row.r, 0.1)) continue;
        const LeafScalars ls = leaf_scalars(model, aug, s);
        if (!(ls.rtilde > 1e-3)) continue;
        const VarpiData v = varpi_at(model, aug, s);
        row.ok = true;
        row.rho = s.rho;
        row.n = v.n;
        row.varpi = v.varpi;
        row.rtilde = ls.rtilde;
        row.binv_t = ls.ubar - ls.rtilde;
        row.X = ls.rtilde / row.r - 1.0 / v.n;
    }

    ResidualEntry bv{"bvarpi"}, bp{"bvarpi_printed"}, cm{"cmr_1"};
    auto record = [](ResidualEntry& e, double res, std::initializer_list<double> terms) {
        e.max_abs = std::max(e.max_abs, std::abs(res));
        for (double t : terms) e.scale = std::max(e.scale, std::abs(t));
        ++e.samples;
    };
    for (std::size_t i = 2; i + 2 < rows.size(); i += 5) {
        bool ok = true;
        for (std::size_t j = i - 2; j <= i + 2; ++j) ok = ok && rows[j].ok;
        if (!ok) continue;
        std::vector<double> nodes;
        for (std::size_t j = i - 2; j <= i + 2; ++j) nodes.push_back(rows[j].rho);
        const auto w = lagrange_derivative_weights(rows[i].rho, nodes);
        auto d = [&](auto get) {
            double acc = 0.0;
            for (std::size_t j = 0; j < 5; ++j) acc += w[j] * get(rows[i - 2 + j]);
            return acc;
        };
        const Row& x = rows[i];
        const double R = x.r + 2.0 * M;
        const double n2 = x.n * x.n;
        const double nmv = x.n - x.varpi;
        // B(n - varpi) + (rtilde/rho) (r - 2M)/(r + 2M)^2 (1 - varpi^2/n^2)
        //   = 2M / (n^2 (r + 2M)^2) ((rtilde/rho) varpi + (b^-1 t)^2 / (rho rtilde) (n + varpi)) (n - varpi)
        {
            const double dn = d([](const Row& y) { return y.n - y.varpi; });
            const double focus = (x.rtilde / x.rho) * (x.r - 2.0 * M) / (R * R) * (1.0 - x.varpi * x.varpi / n2);
            const double rhs = 2.0 * M / (n2 * R * R) *
                               ((x.rtilde / x.rho) * x.varpi + x.binv_t * x.binv_t / (x.rho * x.rtilde) * (x.n + x.varpi)) *
                               nmv;
            record(bv, dn + focus - rhs, {dn, focus, rhs});
            // Same identity with the focusing coefficient 2 (r - M) in place of r - 2M.  The
            // Euclidean difference tensor then double counts the flat polar Christoffel
            // symbols, so this entry is nonzero even in Minkowski with an offset origin.
            const double focus_printed = 2.0 * (x.rtilde / x.rho) * (x.r - M) / (R * R) * (1.0 - x.varpi * x.varpi / n2);
            record(bp, dn + focus_printed - rhs, {dn, focus_printed, rhs});
        }
        // B(X) + X / rho = -((n/rho) X + (rtilde/rho) N(log n)) X + rtilde^2/(r^2 rho) (n - varpi) - (rho/r) N(log n)
        {
            const double N_log_n = 2.0 * x.varpi * M / (n2 * R * R);
            const double dX = d([](const Row& y) { return y.X; });
            const double lhs = dX + x.X / x.rho;
            const double quad = -((x.n / x.rho) * x.X + (x.rtilde / x.rho) * N_log_n) * x.X;
            const double lin = x.rtilde * x.rtilde / (x.r * x.r * x.rho) * nmv;
            const double drift = -(x.rho / x.r) * N_log_n;
            record(cm, lhs - (quad + lin + drift), {dX, x.X / x.rho, quad, lin, drift});
        }
    }
    return {bv, cm, bp};
}

ConeSphereReport cone_sphere_geometry(const MetricModel& model, const Vec4& origin, double rho, double uhat,
                                      const OmegaGrid& omega, const SphereOptions& opts)
{
    const double M = model.kind == MetricKind::Minkowski ? 0.0 : model.M;
    LevelFunction f;
    const double t0 = origin(0);
    f.value = [&model, t0](const Vec4& x) { return x(0) - t0 - gamma_continued(model, x.tail<3>().norm(), nullptr); };
    f.gradient = [&model](const Vec4& x) {
        const double r = x.tail<3>().norm();
        double slope = 1.0;
        gamma_continued(model, r, &slope);
        Vec4 g;
        g << 1.0, -slope * x.tail<3>() / r;
        return g;
    };
    SphereOptions o = opts;
    o.trace.jacobi = true;
    o.trace.transport_k = true;

    ConeSphereReport rep;
    rep.rho = rho;
    rep.uhat = uhat;
    rep.slice = level_sphere(model, origin, rho, omega, f, uhat, o);
    for (const SphereNode& node : rep.slice.nodes) {
        const double r = node.sample.x.tail<3>().norm();
        if (!in_zone(model, r, 0.0))
            throw NumericalError("SphereExitsZone",
                                 "node at r = " + std::to_string(r) + " lies outside the Schwarzschild zone");
    }

    rep.nodes.resize(rep.slice.nodes.size());
    double wsum = 0.0, tsum = 0.0;
    rep.dag_a_min = rep.K_min = std::numeric_limits<double>::infinity();
    rep.dag_a_max = rep.K_max = -std::numeric_limits<double>::infinity();
    rep.t_min = std::numeric_limits<double>::infinity();
    rep.t_max = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < rep.slice.nodes.size(); ++i) {
        const SphereNode& node = rep.slice.nodes[i];
        const GeodesicSample& s = node.sample;
        ConeNode& c = rep.nodes[i];
        const MetricJet jet = curvature_at(model, s.x);
        const Mat4& g = jet.g;
        const double r = s.x.tail<3>().norm();
        const Vec3 nu = s.x.tail<3>() / r;
        const RadialProfiles<double> prof = radial_profiles(model, r);
        const double F = prof.F.v, dF = prof.F.d;
        const double n = std::sqrt(F);
        Vec4 Ls;
        Ls << 1.0 / F, nu;

        const LeafScalars& ls = s.scalars;
        const double varpi = node.frames.N.tail<3>().dot(nu);
        c.dag_a_inv = -dot(g, s.B, Ls);
        c.dag_a_inv_formula = -(ls.rtilde / rho) / (n * n) * (varpi - n) + ls.u / (n * rho);
        const double dag_a = 1.0 / c.dag_a_inv;
        const Vec4 dagNb = dag_a * Ls - s.B;
        c.dag_Nb_t = dagNb(0);
        c.dag_Nb_t_trend = ls.rtilde / (n * rho);

        const Vec4 dagL = dag_a * Ls;
        const Vec4 dagLb = 2.0 * s.B - dagL;
        const std::array<Vec4, 2> e = complement_pair(g, s.B, dagNb);
        // Coordinate derivatives dLs(mu, j) = d_j Ls^mu.
        Mat4 dLs = Mat4::Zero();
        for (int j = 0; j < 3; ++j) {
            dLs(0, j + 1) = -dF / (F * F) * nu(j);
            for (int k = 0; k < 3; ++k) dLs(k + 1, j + 1) = ((j == k ? 1.0 : 0.0) - nu(k) * nu(j)) / r;
        }
        Mat2 chi, chib;
        for (int A = 0; A < 2; ++A) {
            Vec4 DLs = dLs * e[A];
            for (int l = 0; l < 4; ++l) DLs(l) += e[A].dot(jet.Gamma[l] * Ls);
            for (int C = 0; C < 2; ++C) {
                chi(A, C) = dag_a * dot(g, DLs, e[C]);
                chib(A, C) = 2.0 * e[A].dot(s.K * e[C]) - chi(A, C);
            }
        }
        chi = 0.5 * (chi + chi.transpose());
        chib = 0.5 * (chib + chib.transpose());
        c.trchi = chi.trace();
        c.trchib = chib.trace();
        const Mat2 chihat = chi - 0.5 * c.trchi * Mat2::Identity();
        const Mat2 chibhat = chib - 0.5 * c.trchib * Mat2::Identity();
        c.chihat_norm = chihat.norm();
        c.W_LLbLLb = contract4(jet.Weyl, dagL, dagLb, dagL, dagLb);
        const double S = e[0].dot(jet.Schouten * e[0]) + e[1].dot(jet.Schouten * e[1]);
        const GaussTerms terms{0.0, c.trchi, c.trchib, chihat, chibhat};
        c.K = -gauss_residual(terms, c.W_LLbLLb, S);
        c.K_leading = F / ((r + 2.0 * M) * (r + 2.0 * M));

        rep.dag_a_min = std::min(rep.dag_a_min, dag_a);
        rep.dag_a_max = std::max(rep.dag_a_max, dag_a);
        rep.dag_a_formula_residual = std::max(rep.dag_a_formula_residual, std::abs(c.dag_a_inv - c.dag_a_inv_formula));
        rep.K_min = std::min(rep.K_min, c.K);
        rep.K_max = std::max(rep.K_max, c.K);
        const double t = ls.t;
        rep.t_min = std::min(rep.t_min, t);
        rep.t_max = std::max(rep.t_max, t);
        const double w = node.weight > 0.0 ? node.weight : 1.0;
        wsum += w;
        tsum += w * t;
        rep.K_mean += w * c.K;
    }
    rep.K_mean /= wsum;
    const double tbar = tsum / wsum;
    for (const SphereNode& node : rep.slice.nodes)
        rep.osc_t = std::max(rep.osc_t, std::abs(node.sample.scalars.t - tbar));
    rep.diam_bound = rep.K_min > 0.0 ? std::numbers::pi / std::sqrt(rep.K_min) : std::numeric_limits<double>::infinity();
    return rep;
}

} // namespace hyperlab
