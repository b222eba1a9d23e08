#include "hyperlab/geodesic.hpp"

#include "hyperlab/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace hyperlab {

namespace {

constexpr int kX = 0;
constexpr int kB = 4;
constexpr int kJ = 8;       // J_i at kJ + 8 i, Jdot_i at kJ + 8 i + 4
constexpr int kK = 32;      // regularised second fundamental form, 16 entries (row-major)
constexpr int kGeoDim = 8;
constexpr int kJacobiDim = 32;
constexpr int kFullDim = 48;
constexpr double kMinTolerance = 1e-14;

Vec4 seg(const Eigen::VectorXd& y, int off) { return y.segment<4>(off); }

Mat4 mat_at(const Eigen::VectorXd& y, int off)
{
    Mat4 m;
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) m(a, b) = y(off + 4 * a + b);
    return m;
}

void put_mat(Eigen::VectorXd& y, int off, const Mat4& m)
{
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) y(off + 4 * a + b) = m(a, b);
}

Vec4 gamma_contract(const MetricJet& jet, const Vec4& u, const Vec4& v)
{
    Vec4 out;
    for (int l = 0; l < 4; ++l) out(l) = u.dot(jet.Gamma[l] * v);
    return out;
}

/// Sign changes at the blend radii, where the glued metric is only C^2.
OdeBreakpoint blend_breakpoint(const MetricModel& model)
{
    if (model.kind != MetricKind::GluedSchwarzschild || model.M == 0.0) return nullptr;
    return [r_in = model.r_in, r_out = model.r_out](double, const Eigen::VectorXd& y) {
        const double r = y.segment<3>(1).norm();
        return (r - r_in) * (r - r_out);
    };
}

void check_grid(const std::vector<double>& rho_grid)
{
    if (rho_grid.empty()) throw ValidationError("BadGrid", "rho grid is empty");
    for (std::size_t i = 0; i < rho_grid.size(); ++i) {
        if (!std::isfinite(rho_grid[i]) || rho_grid[i] < 0.0)
            throw ValidationError("BadGrid", "rho grid values must be finite and non-negative");
        if (i > 0 && !(rho_grid[i] > rho_grid[i - 1]))
            throw ValidationError("BadGrid", "rho grid must be strictly increasing");
    }
}

} // namespace

Direction Direction::from_omega(double zeta, const Vec3& omega)
{
    const double n = omega.norm();
    if (!(n > 0.0)) throw ValidationError("BadDirection", "direction vector must be non-zero");
    const Vec3 w = omega / n;
    return {zeta, std::acos(std::clamp(w(2), -1.0, 1.0)), std::atan2(w(1), w(0))};
}

Vec3 Direction::omega() const
{
    return {std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta)};
}

Vec4 Direction::velocity() const
{
    Vec4 v;
    v(0) = std::cosh(zeta);
    v.tail<3>() = std::sinh(zeta) * omega();
    return v;
}

std::array<Vec4, 3> Direction::velocity_derivatives() const
{
    const double sh = std::sinh(zeta), ch = std::cosh(zeta);
    const Vec3 w = omega();
    const Vec3 w_theta(std::cos(theta) * std::cos(phi), std::cos(theta) * std::sin(phi), -std::sin(theta));
    const Vec3 w_phi(-std::sin(theta) * std::sin(phi), std::sin(theta) * std::cos(phi), 0.0);
    std::array<Vec4, 3> d;
    d[0] << sh, ch * w;
    d[1] << 0.0, sh * w_theta;
    d[2] << 0.0, sh * w_phi;
    return d;
}

Mat4 static_orthonormal_frame(const MetricModel& model, const Vec4& x)
{
    const MetricJet jet = metric_at(model, x, 0);
    Mat4 e = Mat4::Zero();
    e(0, 0) = 1.0 / std::sqrt(-jet.g(0, 0));
    for (int i = 1; i < 4; ++i) {
        Vec4 v = Vec4::Unit(i);
        for (int j = 1; j < i; ++j) v -= dot(jet.g, v, e.col(j)) * e.col(j);
        e.col(i) = v / std::sqrt(dot(jet.g, v, v));
    }
    return e;
}

Mat4 riemann_uu(const MetricJet& jet, const Vec4& u)
{
    // E_ac = R_abcd u^b u^d with R from second derivatives of g and Gamma-Gamma terms.
    Tensor3 low{};
    for (int k = 0; k < 4; ++k) {
        low[k].setZero();
        for (int l = 0; l < 4; ++l) low[k] += jet.g(k, l) * jet.Gamma[l];
    }
    Mat4 E = Mat4::Zero();
    for (int a = 0; a < 4; ++a)
        for (int c = a; c < 4; ++c) {
            double v = 0.0;
            for (int b = 0; b < 4; ++b)
                for (int d = 0; d < 4; ++d) {
                    const double w = u(b) * u(d);
                    if (w == 0.0) continue;
                    double r = 0.5 * (jet.ddg(b, c, a, d) + jet.ddg(a, d, b, c) - jet.ddg(b, d, a, c) -
                                      jet.ddg(a, c, b, d));
                    for (int e = 0; e < 4; ++e)
                        r += low[e](a, d) * jet.Gamma[e](b, c) - low[e](a, c) * jet.Gamma[e](b, d);
                    v += r * w;
                }
            E(a, c) = v;
            E(c, a) = v;
        }
    return E;
}

Vec4 covariant_along(const MetricJet& jet, const Vec4& B, const Vec4& V, const Vec4& Vdot)
{
    return Vdot + gamma_contract(jet, B, V);
}

void validate_origin(const MetricModel& model, const Vec4& origin, double buffer)
{
    if (!origin.allFinite()) throw ValidationError("BadOrigin", "origin coordinates must be finite");
    const double r = origin.tail<3>().norm();
    if (model.kind == MetricKind::GluedSchwarzschild && !(r + buffer < model.r_in)) {
        std::ostringstream os;
        os << "origin offset " << r << " + buffer " << buffer << " must be < r_in = " << model.r_in;
        throw ValidationError("OriginOutsideCore", os.str());
    }
    if (model.kind == MetricKind::Schwarzschild && !(r > model.horizon_guard()))
        throw ValidationError("OriginInsideHorizon", "origin lies inside the horizon guard");
}

double flat_exit_rho(const MetricModel& model, const Vec4& origin, const Direction& dir)
{
    if (model.kind == MetricKind::Minkowski || model.M == 0.0) return std::numeric_limits<double>::infinity();
    if (model.kind != MetricKind::GluedSchwarzschild) return 0.0;
    const Vec3 x0 = origin.tail<3>();
    if (!(x0.norm() < model.r_in)) return 0.0;
    // In the flat core the static frame is the identity, so the geodesic is x0 + rho V.
    const Vec3 v = dir.velocity().tail<3>();
    const double a = v.squaredNorm();
    if (a == 0.0) return std::numeric_limits<double>::infinity();
    const double bq = x0.dot(v);
    const double c = x0.squaredNorm() - model.r_in * model.r_in;
    return (-bq + std::sqrt(bq * bq - a * c)) / a;
}

Mat3 boost_gram(const MetricModel& model, const GeodesicSample& s)
{
    const MetricJet jet = metric_at(model, s.x, 0);
    Mat3 K;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) K(i, j) = dot(jet.g, s.Jp[i], s.J[j]);
    return K;
}

GeodesicRecord trace_geodesic(const MetricModel& model, const Vec4& origin, const Direction& dir,
                              const std::vector<double>& rho_grid, const TraceOptions& opts)
{
    model.validate();
    validate_origin(model, origin);
    check_grid(rho_grid);
    if (!(dir.zeta >= 0.0) || !std::isfinite(dir.zeta))
        throw ValidationError("BadDirection", "rapidity must be finite and non-negative");

    const bool with_k = opts.transport_k;
    const bool with_j = opts.jacobi || with_k;
    const int dim = with_k ? kFullDim : (with_j ? kJacobiDim : kGeoDim);

    GeodesicRecord rec;
    rec.origin = origin;
    rec.direction = dir;
    rec.has_jacobi = with_j;
    rec.has_k = with_k;
    rec.rho_seed = flat_exit_rho(model, origin, dir);
    if (with_k && rec.rho_seed < opts.rho_seed_min) {
        std::ostringstream os;
        os << "geodesic leaves the flat region at rho = " << rec.rho_seed << " < rho_seed_min = " << opts.rho_seed_min;
        throw NumericalError("SeedRegionTooSmall", os.str());
    }

    const Mat4 frame = static_orthonormal_frame(model, origin);
    const Vec4 V = dir.velocity();
    Eigen::VectorXd y0 = Eigen::VectorXd::Zero(dim);
    y0.segment<4>(kX) = origin;
    y0.segment<4>(kB) = frame * V;
    if (with_j)
        for (int i = 0; i < 3; ++i) y0.segment<4>(kJ + 8 * i + 4) = V(i + 1) * frame.col(0) + V(0) * frame.col(i + 1);

    const int level = with_j ? 2 : 1;
    OdeRhs rhs = [&](double rho, const Eigen::VectorXd& y, Eigen::VectorXd& dy) {
        const Vec4 x = seg(y, kX), B = seg(y, kB);
        const MetricJet jet = metric_at(model, x, level);
        dy.segment<4>(kX) = B;
        dy.segment<4>(kB) = -gamma_contract(jet, B, B);
        if (!with_j) return;
        Mat4 Q; // Q(s, a) = d_s Gamma^a_mn B^m B^n
        for (int s = 0; s < 4; ++s)
            for (int a = 0; a < 4; ++a) {
                double v = 0.0;
                for (int m = 0; m < 4; ++m)
                    for (int n = 0; n < 4; ++n) v += jet.dGamma(s, a, m, n) * B(m) * B(n);
                Q(s, a) = v;
            }
        for (int i = 0; i < 3; ++i) {
            const Vec4 J = seg(y, kJ + 8 * i), Jd = seg(y, kJ + 8 * i + 4);
            dy.segment<4>(kJ + 8 * i) = Jd;
            dy.segment<4>(kJ + 8 * i + 4) = -Q.transpose() * J - 2.0 * gamma_contract(jet, B, Jd);
        }
        if (!with_k) return;
        const Mat4 Kc = mat_at(y, kK);
        Mat4 G; // G(c, a) = Gamma^c_da B^d
        for (int c = 0; c < 4; ++c) G.row(c) = B.transpose() * jet.Gamma[c];
        Mat4 dK = -riemann_uu(jet, B) - Kc * jet.g_inv * Kc + G.transpose() * Kc + Kc * G;
        if (rho > 0.0) dK -= (2.0 / rho) * Kc;
        put_mat(dy, kK, dK);
    };

    rec.samples.reserve(rho_grid.size());
    OdeObserver observer = [&](std::size_t, double rho, const Eigen::VectorXd& y) {
        GeodesicSample s;
        s.rho = rho;
        s.x = seg(y, kX);
        s.B = seg(y, kB);
        if (with_j) {
            const MetricJet jet = metric_at(model, s.x, 1);
            for (int i = 0; i < 3; ++i) {
                s.J[i] = seg(y, kJ + 8 * i);
                s.Jdot[i] = seg(y, kJ + 8 * i + 4);
                s.Jp[i] = covariant_along(jet, s.B, s.J[i], s.Jdot[i]);
            }
            if (with_k && rho > 0.0) {
                const Vec4 Bl = jet.g * s.B;
                s.K = mat_at(y, kK) + (jet.g + Bl * Bl.transpose()) / rho;
            }
        }
        rec.samples.push_back(std::move(s));
    };

    // Invariants such as <B,B> = -1 carry errors of order (V^0)^2 times the componentwise
    // tolerance, so the componentwise tolerance is tightened accordingly.
    OdeOptions ode = opts.ode;
    const double scale = 1.0 / (V(0) * V(0));
    ode.rel_tol = std::max(opts.ode.rel_tol * scale, kMinTolerance);
    ode.abs_tol = std::max(opts.ode.abs_tol * scale, kMinTolerance);
    try {
        const OdeResult res = integrate_dop853(rhs, 0.0, y0, rho_grid, ode, observer, nullptr, blend_breakpoint(model));
        rec.steps = res.accepted;
    } catch (const NumericalError& e) {
        if (e.kind() != "CoordinateSingularity") throw;
        rec.truncated = true;
        rec.truncation_reason = e.what();
    }
    if (rec.samples.size() < rho_grid.size() && !rec.truncated) {
        rec.truncated = true;
        rec.truncation_reason = "integration ended before the last requested rho";
    }
    return rec;
}

GeodesicRecord exp_map(const MetricModel& model, const Vec4& origin, const Direction& dir,
                       const std::vector<double>& rho_grid, double ode_tol)
{
    TraceOptions opts;
    opts.ode.rel_tol = ode_tol;
    opts.ode.abs_tol = ode_tol;
    opts.jacobi = false;
    return trace_geodesic(model, origin, dir, rho_grid, opts);
}

GeodesicRecord exp_map(const MetricModel& model, const Vec4& origin, const Direction& dir, double rho_max,
                       double ode_tol)
{
    if (!(rho_max > 0.0)) throw ValidationError("BadGrid", "rho_max must be positive");
    return exp_map(model, origin, dir, std::vector<double>{rho_max}, ode_tol);
}

GeodesicRecord jacobi_boosts(const MetricModel& model, const GeodesicRecord& rec, double ode_tol)
{
    std::vector<double> grid;
    grid.reserve(rec.samples.size());
    for (const auto& s : rec.samples) grid.push_back(s.rho);
    TraceOptions opts;
    opts.ode.rel_tol = ode_tol;
    opts.ode.abs_tol = ode_tol;
    opts.jacobi = true;
    return trace_geodesic(model, rec.origin, rec.direction, grid, opts);
}

void FanGrid::throw_if_failed() const
{
    if (failures.empty()) return;
    std::ostringstream os;
    os << failures.size() << " fan record(s) failed:";
    for (const auto& [idx, msg] : failures) os << " [" << idx << "] " << msg << ";";
    throw NumericalError("FanFailure", os.str());
}

FanGrid fan_build(const MetricModel& model, const Vec4& origin, const std::vector<double>& zeta_grid,
                  const OmegaGrid& omega_grid, const std::vector<double>& rho_grid, const TraceOptions& opts,
                  int threads)
{
    model.validate();
    validate_origin(model, origin);
    check_grid(rho_grid);
    if (zeta_grid.empty() || omega_grid.size() == 0)
        throw ValidationError("BadGrid", "fan grids must be non-empty");
    for (std::size_t i = 1; i < zeta_grid.size(); ++i)
        if (!(zeta_grid[i] > zeta_grid[i - 1])) throw ValidationError("BadGrid", "zeta grid must be strictly increasing");

    FanGrid fan;
    fan.origin = origin;
    fan.zeta = zeta_grid;
    fan.omega = omega_grid;
    fan.rho = rho_grid;
    const std::size_t nw = omega_grid.size();
    const std::size_t n = zeta_grid.size() * nw;
    fan.records.resize(n);
    std::vector<std::string> errors(n);
    parallel_for(n, threads, [&](std::size_t idx) {
        const Direction dir{zeta_grid[idx / nw], omega_grid.theta_of(idx % nw), omega_grid.phi_of(idx % nw)};
        try {
            fan.records[idx] = trace_geodesic(model, origin, dir, rho_grid, opts);
        } catch (const Error& e) {
            errors[idx] = e.what();
            fan.records[idx].origin = origin;
            fan.records[idx].direction = dir;
        }
    });
    for (std::size_t i = 0; i < n; ++i)
        if (!errors[i].empty()) fan.failures.emplace_back(i, errors[i]);
    return fan;
}

} // namespace hyperlab
