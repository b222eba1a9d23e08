#include "hyperlab/foliation.hpp"

#include "hyperlab/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <type_traits>

namespace hyperlab {

namespace {

double lapse_of(const MetricJet& jet) { return std::sqrt(-jet.g(0, 0)); }

/// sqrt(g_ij B^i B^j): the spatial speed of B (static metrics have no shift).
double spatial_speed(const MetricJet& jet, const Vec4& B)
{
    const Vec3 b = B.tail<3>();
    return std::sqrt(std::max(0.0, b.dot(jet.g.block<3, 3>(1, 1) * b)));
}

/// Acceleration of the static observers: nabla_T T = n^-2 Gamma^a_tt d_a.
Vec4 static_acceleration(const MetricJet& jet)
{
    const double n2 = -jet.g(0, 0);
    Vec4 a;
    for (int l = 0; l < 4; ++l) a(l) = jet.Gamma[l](0, 0) / n2;
    return a;
}

/// Coordinate gradient of the static lapse.
Vec4 lapse_gradient(const MetricJet& jet)
{
    const double n = lapse_of(jet);
    Vec4 d;
    for (int m = 0; m < 4; ++m) d(m) = -jet.dg[m](0, 0) / (2.0 * n);
    return d;
}

std::size_t find_sample(const GeodesicRecord& rec, double rho)
{
    for (std::size_t i = 0; i < rec.samples.size(); ++i)
        if (std::abs(rec.samples[i].rho - rho) <= 1e-12 * std::max(1.0, rho)) return i;
    return rec.samples.size();
}

std::size_t find_rho(const std::vector<double>& grid, double rho)
{
    for (std::size_t i = 0; i < grid.size(); ++i)
        if (std::abs(grid[i] - rho) <= 1e-12 * std::max(1.0, rho)) return i;
    throw ValidationError("OutOfRange", "rho = " + std::to_string(rho) + " is not on the fan rho grid");
}

/// Orthonormal basis of the h-orthogonal complement of B built from the coordinate
/// spatial directions (used where the leaf frame is undefined).
std::array<Vec4, 3> complement_basis(const MetricJet& jet, const Vec4& B)
{
    std::array<Vec4, 3> e;
    int count = 0;
    for (int i = 1; i < 4 && count < 3; ++i) {
        Vec4 v = Vec4::Unit(i);
        v += dot(jet.g, v, B) * B;
        for (int j = 0; j < count; ++j) v -= dot(jet.g, v, e[j]) * e[j];
        const double nv = dot(jet.g, v, v);
        if (nv > 1e-20) e[count++] = v / std::sqrt(nv);
    }
    if (count < 3) throw NumericalError("DegenerateBasis", "could not complete a basis orthogonal to B");
    return e;
}

/// Tangent frame {e_1, e_2} orthogonal to T and N, positively oriented with N.
std::array<Vec4, 2> sphere_frame(const MetricJet& jet, const Vec4& N)
{
    std::array<Vec4, 3> v;
    std::array<double, 3> norms;
    for (int i = 0; i < 3; ++i) {
        v[i] = Vec4::Unit(i + 1);
        v[i] -= dot(jet.g, v[i], N) * N;
        norms[i] = dot(jet.g, v[i], v[i]);
    }
    const int i1 = int(std::max_element(norms.begin(), norms.end()) - norms.begin());
    std::array<Vec4, 2> e;
    e[0] = v[i1] / std::sqrt(norms[i1]);
    double best = -1.0;
    for (int i = 0; i < 3; ++i) {
        if (i == i1) continue;
        Vec4 w = v[i] - dot(jet.g, v[i], e[0]) * e[0];
        const double nw = dot(jet.g, w, w);
        if (nw > best) {
            best = nw;
            e[1] = w / std::sqrt(nw);
        }
    }
    Mat3 m;
    m << N.tail<3>(), e[0].tail<3>(), e[1].tail<3>();
    if (m.determinant() < 0.0) e[1] = -e[1];
    return e;
}

double h_norm(const Mat4& X, const Mat4& h_inv) { return std::sqrt(std::max(0.0, (h_inv * X * h_inv * X.transpose()).trace())); }

Mat4 gamma_matrix(const MetricJet& jet, const Vec4& v)
{
    // G(c, a) = Gamma^c_da v^d
    Mat4 G;
    for (int c = 0; c < 4; ++c) G.row(c) = v.transpose() * jet.Gamma[c];
    return G;
}

Vec4 gamma_contract(const MetricJet& jet, const Vec4& u, const Vec4& v)
{
    Vec4 out;
    for (int l = 0; l < 4; ++l) out(l) = u.dot(jet.Gamma[l] * v);
    return out;
}

/// Finite-difference machinery on a fan at fixed rho index.
struct FanStencil {
    const FanGrid& fan;
    std::size_t nz, nth, nph;

    explicit FanStencil(const FanGrid& f)
        : fan(f), nz(f.zeta.size()), nth(f.omega.theta.size()), nph(f.omega.phi.size())
    {
    }

    std::size_t record(std::size_t iz, std::size_t ith, std::size_t iph) const { return iz * nth * nph + ith * nph + iph; }

    bool usable() const { return nz >= 3 && nth >= 3 && nph >= 3; }

    /// (record index, weight) pairs for d/dq at node (iz, ith, iph); q = 0 zeta, 1 theta, 2 phi.
    std::vector<std::pair<std::size_t, double>> weights(int q, std::size_t iz, std::size_t ith, std::size_t iph,
                                                        std::size_t width = 5) const
    {
        const std::vector<double>& grid = q == 0 ? fan.zeta : (q == 1 ? fan.omega.theta : fan.omega.phi);
        const std::size_t i = q == 0 ? iz : (q == 1 ? ith : iph);
        const auto idx = stencil_indices(i, grid.size(), width);
        std::vector<double> nodes;
        for (std::size_t j : idx) nodes.push_back(grid[j]);
        const auto w = lagrange_derivative_weights(grid[i], nodes);
        std::vector<std::pair<std::size_t, double>> out;
        for (std::size_t j = 0; j < idx.size(); ++j) {
            std::size_t a = iz, b = ith, c = iph;
            (q == 0 ? a : (q == 1 ? b : c)) = idx[j];
            out.emplace_back(record(a, b, c), w[j]);
        }
        return out;
    }

    template <class Get> auto derivative(int q, std::size_t iz, std::size_t ith, std::size_t iph, std::size_t k,
                                         Get get) const
    {
        const auto w = weights(q, iz, ith, iph);
        auto acc = get(fan.records[w[0].first].samples.at(k));
        acc *= w[0].second;
        for (std::size_t j = 1; j < w.size(); ++j) acc += w[j].second * get(fan.records[w[j].first].samples.at(k));
        return acc;
    }
};

void check_fan_sample_count(const FanGrid& fan)
{
    for (std::size_t i = 0; i < fan.records.size(); ++i)
        if (fan.records[i].samples.size() != fan.rho.size())
            throw NumericalError("IncompleteFan", "fan record " + std::to_string(i) + " is missing samples");
}

/// Tangent vectors X_q = d x / d q of H_rho at a fan node, q = zeta, theta, phi.
Eigen::Matrix<double, 4, 3> fan_tangents(const FanStencil& st, std::size_t iz, std::size_t ith, std::size_t iph,
                                         std::size_t k)
{
    Eigen::Matrix<double, 4, 3> X;
    for (int q = 0; q < 3; ++q) X.col(q) = st.derivative(q, iz, ith, iph, k, [](const GeodesicSample& s) { return Vec4(s.x); });
    return X;
}

/// Coefficients c with X c = v (v tangent to H_rho).
Vec3 tangent_coefficients(const Eigen::Matrix<double, 4, 3>& X, const Vec4& v) { return X.colPivHouseholderQr().solve(v); }

double trace_k(const MetricJet& jet, const Mat4& K) { return (jet.g_inv * K).trace(); }

} // namespace

std::vector<double> lagrange_derivative_weights(double x0, const std::vector<double>& nodes)
{
    const std::size_t n = nodes.size();
    std::vector<double> w(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        double sum = 0.0;
        for (std::size_t m = 0; m < n; ++m) {
            if (m == j) continue;
            double prod = 1.0 / (nodes[j] - nodes[m]);
            for (std::size_t l = 0; l < n; ++l) {
                if (l == j || l == m) continue;
                prod *= (x0 - nodes[l]) / (nodes[j] - nodes[l]);
            }
            sum += prod;
        }
        w[j] = sum;
    }
    return w;
}

std::vector<std::size_t> stencil_indices(std::size_t i, std::size_t n, std::size_t width)
{
    width = std::min(width, n);
    const std::size_t half = width / 2;
    std::size_t start = i > half ? i - half : 0;
    start = std::min(start, n - width);
    std::vector<std::size_t> out(width);
    for (std::size_t j = 0; j < width; ++j) out[j] = start + j;
    return out;
}

LeafScalars leaf_scalars(const MetricModel& model, const GeodesicRecord& rec, const GeodesicSample& s)
{
    const MetricJet jet = metric_at(model, s.x, 0);
    LeafScalars ls;
    ls.rho = s.rho;
    ls.n = lapse_of(jet);
    ls.t = s.x(0) - rec.origin(0);
    ls.tau = s.rho * rec.direction.velocity()(0);
    if (s.rho == 0.0) {
        ls.b = 1.0 / ls.n;
        ls.a = std::numeric_limits<double>::infinity();
        return ls;
    }
    const double binv_t = s.rho * ls.n * s.B(0);
    ls.rtilde = s.rho * spatial_speed(jet, s.B);
    ls.ubar = binv_t + ls.rtilde;
    ls.u = s.rho * s.rho / ls.ubar;
    ls.b = ls.t / binv_t;
    ls.a = ls.rtilde > 0.0 ? s.rho / ls.rtilde : std::numeric_limits<double>::infinity();
    return ls;
}

LeafScalars leaf_scalars(const MetricModel& model, const GeodesicRecord& rec, double rho)
{
    const std::size_t i = find_sample(rec, rho);
    if (i < rec.samples.size()) return leaf_scalars(model, rec, rec.samples[i]);
    if (rec.samples.empty() || rho < 0.0 || rho > rec.samples.back().rho)
        throw ValidationError("OutOfRange", "rho = " + std::to_string(rho) + " is outside the record range");
    const GeodesicRecord one = exp_map(model, rec.origin, rec.direction, std::vector<double>{rho});
    return leaf_scalars(model, rec, one.samples.at(0));
}

FrameSet frames_at(const MetricModel& model, const GeodesicRecord& rec, const GeodesicSample& s, double frame_floor)
{
    (void)rec;
    const MetricJet jet = metric_at(model, s.x, 0);
    const double n = lapse_of(jet);
    const double speed = spatial_speed(jet, s.B);
    if (!(s.rho * speed > frame_floor))
        throw NumericalError("CentralLineDegenerate", "rtilde = " + std::to_string(s.rho * speed) +
                                                          " is below the frame floor; N is undefined on the central line");
    FrameSet f;
    f.B = s.B;
    f.T = Vec4(1.0 / n, 0.0, 0.0, 0.0);
    f.N = Vec4(0.0, s.B(1), s.B(2), s.B(3)) / speed;
    f.Nbar = speed * f.T + n * s.B(0) * f.N;
    f.L = f.T + f.N;
    f.Lb = f.T - f.N;
    f.e = sphere_frame(jet, f.N);
    return f;
}

FrameSet frames_at(const MetricModel& model, const GeodesicRecord& rec, double rho, double frame_floor)
{
    const std::size_t i = find_sample(rec, rho);
    if (i < rec.samples.size()) return frames_at(model, rec, rec.samples[i], frame_floor);
    if (rec.samples.empty() || rho < 0.0 || rho > rec.samples.back().rho)
        throw ValidationError("OutOfRange", "rho = " + std::to_string(rho) + " is outside the record range");
    const GeodesicRecord one = exp_map(model, rec.origin, rec.direction, std::vector<double>{rho});
    return frames_at(model, rec, one.samples.at(0), frame_floor);
}

double frame_residual(const MetricModel& model, const FrameSet& f, const LeafScalars& s, const Vec4& x)
{
    const MetricJet jet = metric_at(model, x, 0);
    const Mat4& g = jet.g;
    const double binv_t = s.ubar - s.rtilde;
    double r = 0.0;
    auto upd = [&r](double v) { r = std::max(r, std::abs(v)); };
    upd((f.B - (binv_t / s.rho) * f.T - (s.rtilde / s.rho) * f.N).cwiseAbs().maxCoeff());
    upd((f.Nbar - (s.rtilde / s.rho) * f.T - (binv_t / s.rho) * f.N).cwiseAbs().maxCoeff());
    upd((2.0 * s.rho * f.B - s.ubar * f.L - s.u * f.Lb).cwiseAbs().maxCoeff() / std::max(1.0, s.rho));
    upd(dot(g, f.T, f.T) + 1.0);
    upd(dot(g, f.B, f.B) + 1.0);
    upd(dot(g, f.N, f.N) - 1.0);
    upd(dot(g, f.Nbar, f.Nbar) - 1.0);
    upd(dot(g, f.L, f.Lb) + 2.0);
    upd(dot(g, f.L, f.L));
    upd(dot(g, f.Lb, f.Lb));
    upd(dot(g, f.T, f.N));
    upd(dot(g, f.B, f.Nbar));
    for (int A = 0; A < 2; ++A) {
        upd(dot(g, f.e[A], f.e[A]) - 1.0);
        upd(dot(g, f.e[A], f.T));
        upd(dot(g, f.e[A], f.N));
        upd(dot(g, f.e[A], f.B));
        upd(dot(g, f.e[A], f.Nbar));
    }
    upd(dot(g, f.e[0], f.e[1]));
    return r;
}

Mat3 leaf_k(const MetricModel& model, const GeodesicRecord& rec, const GeodesicSample& s)
{
    const MetricJet jet = metric_at(model, s.x, 0);
    std::array<Vec4, 3> basis;
    if (s.rho * spatial_speed(jet, s.B) > 1e-12) {
        const FrameSet f = frames_at(model, rec, s, 0.0);
        basis = {f.Nbar, f.e[0], f.e[1]};
    } else {
        basis = complement_basis(jet, s.B);
    }
    Mat3 k;
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) k(a, b) = basis[a].dot(s.K * basis[b]);
    return 0.5 * (k + k.transpose());
}

SecondFundamental SecondFundamental::from(const Mat3& k)
{
    SecondFundamental s;
    s.k = k;
    s.trk = k.trace();
    s.khat = k - (s.trk / 3.0) * Mat3::Identity();
    return s;
}

GeodesicRecord second_fundamental_transport(const MetricModel& model, const GeodesicRecord& rec, const TraceOptions& opts)
{
    GeodesicRecord out = rec;
    if (!rec.has_k) {
        std::vector<double> grid;
        for (const auto& s : rec.samples) grid.push_back(s.rho);
        TraceOptions o = opts;
        o.jacobi = true;
        o.transport_k = true;
        out = trace_geodesic(model, rec.origin, rec.direction, grid, o);
    }
    for (GeodesicSample& s : out.samples) {
        if (s.rho <= 0.0) continue;
        s.scalars = leaf_scalars(model, out, s);
        s.k = leaf_k(model, out, s);
        s.has_leaf_data = true;
    }
    return out;
}

FanGrid local_fan(const MetricModel& model, const Vec4& origin, double zeta0, double theta0, double phi0,
                  const std::vector<double>& rho_grid, double dzeta, double dangle, int points,
                  const TraceOptions& opts, int threads)
{
    if (points < 1) throw ValidationError("BadGrid", "local fan needs at least one point per dimension");
    const double c = 0.5 * (points - 1);
    std::vector<double> zeta, theta, phi;
    for (int j = 0; j < points; ++j) {
        zeta.push_back(zeta0 + (j - c) * dzeta);
        theta.push_back(theta0 + (j - c) * dangle);
        phi.push_back(phi0 + (j - c) * dangle);
    }
    if (zeta.front() < 0.0) throw ValidationError("BadGrid", "local fan reaches negative rapidity");
    return fan_build(model, origin, zeta, OmegaGrid::product(theta, phi), rho_grid, opts, threads);
}

Mat3 second_fundamental_fd_oracle(const MetricModel& model, const FanGrid& fan, FanIndex index, double rho)
{
    FanStencil st(fan);
    if (!st.usable())
        throw NumericalError("FanTooCoarse", "finite-difference oracle needs at least 3 nodes in zeta, theta and phi");
    check_fan_sample_count(fan);
    const std::size_t k = find_rho(fan.rho, rho);
    const std::size_t ith = index.omega / st.nph, iph = index.omega % st.nph;
    for (const std::size_t j : stencil_indices(index.zeta, st.nz, 5))
        if (j + 1 < st.nz && fan.zeta[j + 1] - fan.zeta[j] > 1e-2 + 1e-15)
            throw NumericalError("FanTooCoarse", "zeta spacing exceeds 1e-2");
    const GeodesicRecord& rec = fan.at(index.zeta, index.omega);
    const GeodesicSample& s = rec.samples.at(k);
    const MetricJet jet = metric_at(model, s.x, 1);
    const Eigen::Matrix<double, 4, 3> X = fan_tangents(st, index.zeta, ith, iph, k);
    Mat3 kq;
    for (int q = 0; q < 3; ++q) {
        const Vec4 dB = st.derivative(q, index.zeta, ith, iph, k, [](const GeodesicSample& x) { return Vec4(x.B); });
        const Vec4 DB = dB + gamma_contract(jet, X.col(q), s.B);
        for (int p = 0; p < 3; ++p) kq(q, p) = dot(jet.g, DB, X.col(p));
    }
    const FrameSet f = frames_at(model, rec, s, 0.0);
    Mat3 C;
    C.col(0) = tangent_coefficients(X, f.Nbar);
    C.col(1) = tangent_coefficients(X, f.e[0]);
    C.col(2) = tangent_coefficients(X, f.e[1]);
    return C.transpose() * kq * C;
}

std::pair<double, double> codazzi_residual(const MetricModel& model, const FanGrid& fan, FanIndex index, double rho)
{
    FanStencil st(fan);
    if (!st.usable()) throw NumericalError("FanTooCoarse", "Codazzi residual needs at least 3 nodes per dimension");
    check_fan_sample_count(fan);
    const std::size_t k = find_rho(fan.rho, rho);
    const std::size_t ith = index.omega / st.nph, iph = index.omega % st.nph;
    const GeodesicRecord& rec = fan.at(index.zeta, index.omega);
    if (!rec.has_k) throw ValidationError("MissingK", "fan records carry no second fundamental form");
    const GeodesicSample& s = rec.samples.at(k);
    const MetricJet jet = curvature_at(model, s.x);
    const Eigen::Matrix<double, 4, 3> X = fan_tangents(st, index.zeta, ith, iph, k);
    Mat3 G;
    for (int p = 0; p < 3; ++p)
        for (int q = 0; q < 3; ++q) G(p, q) = dot(jet.g, X.col(p), X.col(q));
    const Mat3 Ginv = G.inverse();
    // trk as a field; K_ab components are differenced across the fan.
    auto trk_of = [&model](const GeodesicSample& x) {
        const MetricJet j = metric_at(model, x.x, 0);
        return Eigen::Matrix<double, 1, 1>(trace_k(j, x.K));
    };
    std::array<Mat4, 3> DK;
    Vec3 dtrk;
    for (int q = 0; q < 3; ++q) {
        const Mat4 dK = st.derivative(q, index.zeta, ith, iph, k, [](const GeodesicSample& x) { return Mat4(x.K); });
        const Mat4 Gq = gamma_matrix(jet, X.col(q));
        DK[q] = dK - Gq.transpose() * s.K - s.K * Gq;
        dtrk(q) = st.derivative(q, index.zeta, ith, iph, k, trk_of)(0, 0);
    }
    const Vec4 ricB = jet.Ricci * s.B;
    Vec3 res;
    for (int r = 0; r < 3; ++r) {
        double div = 0.0;
        for (int p = 0; p < 3; ++p)
            for (int q = 0; q < 3; ++q) div += Ginv(p, q) * X.col(q).dot(DK[p] * X.col(r));
        res(r) = div - dtrk(r) - ricB.dot(X.col(r));
    }
    // Express in an orthonormal basis of H_rho.
    const std::array<Vec4, 3> basis = complement_basis(jet, s.B);
    double worst = 0.0, scale = 0.0;
    for (const Vec4& e : basis) {
        const Vec3 c = tangent_coefficients(X, e);
        worst = std::max(worst, std::abs(res.dot(c)));
        scale = std::max(scale, std::abs(ricB.dot(e)));
    }
    return {worst, scale};
}

DeformationReport deformation_boost(const MetricModel& model, const FanGrid& fan, double rho)
{
    DeformationReport rep;
    for (const GeodesicRecord& rec : fan.records) {
        if (!rec.has_jacobi) throw ValidationError("MissingJacobi", "fan records carry no boost fields");
        for (const GeodesicSample& s : rec.samples) {
            if (s.rho <= 0.0) continue;
            const MetricJet jet = metric_at(model, s.x, 0);
            for (int i = 0; i < 3; ++i) rep.pi_BB = std::max(rep.pi_BB, std::abs(2.0 * dot(jet.g, s.Jp[i], s.B)));
            Mat3 K;
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) K(i, j) = dot(jet.g, s.Jp[i], s.J[j]);
            rep.pi_BR = std::max(rep.pi_BR, (K - K.transpose()).cwiseAbs().maxCoeff());
            rep.pi_BR_scale = std::max(rep.pi_BR_scale, K.cwiseAbs().maxCoeff());
        }
    }
    FanStencil st(fan);
    if (!st.usable() || fan.records.empty() || !fan.records[0].has_k || fan.rho.size() < 5) return rep;
    check_fan_sample_count(fan);
    const std::size_t k0 = find_rho(fan.rho, rho);
    const auto kidx = stencil_indices(k0, fan.rho.size(), 5);
    std::vector<double> rnodes;
    for (std::size_t k : kidx) rnodes.push_back(fan.rho[k]);
    const auto wr = lagrange_derivative_weights(rho, rnodes);

    auto trk_of = [&model](const GeodesicSample& x) {
        const MetricJet j = metric_at(model, x.x, 0);
        return Eigen::Matrix<double, 1, 1>(trace_k(j, x.K));
    };
    for (std::size_t iz = 0; iz < st.nz; ++iz)
        for (std::size_t ith = 0; ith < st.nth; ++ith)
            for (std::size_t iph = 0; iph < st.nph; ++iph) {
                const std::size_t ir = st.record(iz, ith, iph);
                // tr pi^(R_i) on H_rho at each rho of the stencil.
                Eigen::Matrix<double, 3, Eigen::Dynamic> trpi(3, kidx.size());
                for (std::size_t m = 0; m < kidx.size(); ++m) {
                    const std::size_t k = kidx[m];
                    const GeodesicSample& s = fan.records[ir].samples[k];
                    const MetricJet jet = metric_at(model, s.x, 1);
                    const Eigen::Matrix<double, 4, 3> X = fan_tangents(st, iz, ith, iph, k);
                    Mat3 G;
                    for (int p = 0; p < 3; ++p)
                        for (int q = 0; q < 3; ++q) G(p, q) = dot(jet.g, X.col(p), X.col(q));
                    const Mat3 Ginv = G.inverse();
                    for (int i = 0; i < 3; ++i) {
                        double tr = 0.0;
                        for (int p = 0; p < 3; ++p) {
                            const Vec4 dJ = st.derivative(p, iz, ith, iph, k,
                                                          [i](const GeodesicSample& x) { return Vec4(x.J[i]); });
                            const Vec4 DJ = dJ + gamma_contract(jet, X.col(p), s.J[i]);
                            for (int q = 0; q < 3; ++q) tr += Ginv(p, q) * dot(jet.g, DJ, X.col(q));
                        }
                        trpi(i, m) = 2.0 * tr;
                    }
                }
                const GeodesicSample& s = fan.records[ir].samples[k0];
                const Eigen::Matrix<double, 4, 3> X = fan_tangents(st, iz, ith, iph, k0);
                Vec3 dtrk;
                for (int q = 0; q < 3; ++q) dtrk(q) = st.derivative(q, iz, ith, iph, k0, trk_of)(0, 0);
                for (int i = 0; i < 3; ++i) {
                    double lhs = 0.0;
                    for (std::size_t m = 0; m < kidx.size(); ++m) lhs += wr[m] * trpi(i, m);
                    const double rhs = 2.0 * tangent_coefficients(X, s.J[i]).dot(dtrk);
                    rep.trpr_residual = std::max(rep.trpr_residual, std::abs(lhs - rhs));
                    rep.trpr_scale = std::max({rep.trpr_scale, std::abs(lhs), std::abs(rhs)});
                }
                ++rep.trpr_points;
            }
    return rep;
}

LeafSlice level_sphere(const MetricModel& model, const Vec4& origin, double rho, const OmegaGrid& omega,
                       const LevelFunction& f, double target, const SphereOptions& opts)
{
    if (!(rho > 0.0)) throw ValidationError("BadGrid", "sphere rho must be positive");
    if (omega.size() == 0) throw ValidationError("BadGrid", "sphere needs at least one angular node");
    validate_origin(model, origin);
    LeafSlice slice;
    slice.t = target;
    slice.rho = rho;
    slice.origin = origin;
    slice.nodes.resize(omega.size());
    const double tol = opts.root_tol * std::max(1.0, std::abs(target));

    parallel_for(omega.size(), opts.threads, [&](std::size_t i) {
        const double th = omega.theta_of(i), ph = omega.phi_of(i);
        auto level_at = [&](double z) {
            const GeodesicRecord r = exp_map(model, origin, Direction{z, th, ph}, std::vector<double>{rho},
                                             opts.trace.ode.rel_tol);
            if (r.truncated) throw NumericalError("Unreachable", "geodesic truncated: " + r.truncation_reason);
            return f.value(r.samples[0].x) - target;
        };
        double lo = 0.0, hi = opts.zeta_max;
        double flo = level_at(lo), fhi = level_at(hi);
        if (flo == 0.0) hi = lo;
        else if (fhi == 0.0) lo = hi;
        else if ((flo < 0.0) == (fhi < 0.0)) {
            std::ostringstream os;
            os << "level " << target << " not attained on H_rho (rho = " << rho << ") for zeta in [0, " << opts.zeta_max
               << "]";
            throw NumericalError("Unreachable", os.str());
        }
        const bool increasing = fhi > flo;
        double z = lo, fz = flo;
        if (lo != hi) {
            while (hi - lo > opts.bracket_width) {
                const double mid = 0.5 * (lo + hi);
                const double fm = level_at(mid);
                if (!(fm > std::min(flo, fhi) && fm < std::max(flo, fhi)) && fm != 0.0)
                    throw NumericalError("BracketFailure", "level function is not monotone in zeta on the bracket");
                if ((fm < 0.0) == (flo < 0.0)) {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                    fhi = fm;
                }
            }
            // Illinois-modified regula falsi inside the bracket.
            int side = 0;
            z = lo;
            fz = flo;
            for (int it = 0; it < 100; ++it) {
                z = (lo * fhi - hi * flo) / (fhi - flo);
                fz = level_at(z);
                if (std::abs(fz) <= tol) break;
                if ((fz < 0.0) == (flo < 0.0)) {
                    lo = z;
                    flo = fz;
                    if (side == -1) fhi *= 0.5;
                    side = -1;
                } else {
                    hi = z;
                    fhi = fz;
                    if (side == 1) flo *= 0.5;
                    side = 1;
                }
                if (hi - lo < 1e-15) break;
            }
            if (std::abs(fz) > tol)
                throw NumericalError("BracketFailure", "root finding did not reach the level tolerance");
        }
        (void)increasing;

        SphereNode& node = slice.nodes[i];
        node.theta = th;
        node.phi = ph;
        node.zeta = z;
        TraceOptions topts = opts.trace;
        topts.jacobi = true;
        GeodesicRecord rec = trace_geodesic(model, origin, Direction{z, th, ph}, {rho}, topts);
        if (rec.samples.empty()) throw NumericalError("Unreachable", "geodesic truncated before rho");
        if (rec.has_k) rec = second_fundamental_transport(model, rec);
        node.sample = rec.samples[0];
        if (!rec.has_k) node.sample.scalars = leaf_scalars(model, rec, node.sample);
        node.frames = frames_at(model, rec, node.sample, 0.0);

        const MetricJet jet = metric_at(model, node.sample.x, 0);
        const Direction d{z, th, ph};
        const Vec4 V = d.velocity();
        const auto dV = d.velocity_derivatives();
        std::array<Vec4, 3> dp;
        for (int q = 0; q < 3; ++q) {
            dp[q].setZero();
            for (int j = 0; j < 3; ++j) dp[q] += (dV[q](j + 1) / V(0)) * node.sample.J[j];
        }
        const Vec4 df = f.gradient(node.sample.x);
        const double fz_ = df.dot(dp[0]);
        for (int a = 0; a < 2; ++a) node.tangents[a] = dp[a + 1] - (df.dot(dp[a + 1]) / fz_) * dp[0];
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b) node.induced(a, b) = dot(jet.g, node.tangents[a], node.tangents[b]);
        node.area_element = std::sqrt(std::max(0.0, node.induced.determinant())) / std::sin(th);
        node.weight = omega.weight[i] * node.area_element;
    });

    for (const SphereNode& n : slice.nodes) slice.area += n.weight;
    slice.area_radius = std::sqrt(slice.area / (4.0 * std::numbers::pi));
    return slice;
}

LeafSlice leaf_slice(const MetricModel& model, const Vec4& origin, double t, double rho, const OmegaGrid& omega,
                     const SphereOptions& opts)
{
    if (!(t > rho)) throw NumericalError("Unreachable", "slice time must exceed rho");
    LevelFunction f;
    const double t0 = origin(0);
    f.value = [t0](const Vec4& x) { return x(0) - t0; };
    f.gradient = [](const Vec4&) { return Vec4(1.0, 0.0, 0.0, 0.0); };
    return level_sphere(model, origin, rho, omega, f, t, opts);
}

void slice_null_forms(const MetricModel& model, LeafSlice& slice)
{
    (void)model;
    for (SphereNode& n : slice.nodes) {
        if (!n.sample.has_leaf_data)
            throw ValidationError("MissingK", "slice nodes carry no second fundamental form");
        const LeafScalars& s = n.sample.scalars;
        const double factor = slice.rho / s.rtilde;
        const Mat2 chi = factor * n.sample.k.block<2, 2>(1, 1);
        n.trchi = chi.trace();
        n.chihat = chi - 0.5 * n.trchi * Mat2::Identity();
        n.trchib = -n.trchi;
        n.chibhat = -n.chihat;
    }
    slice.has_null_forms = true;
}

ScalarVariation scalar_variation(const MetricModel& model, const Vec4& origin, double rho, const Vec4& x,
                                 const Vec4& B, double drho, const Vec4& dx, const Vec4& dB)
{
    const MetricJet jet = metric_at(model, x, 1);
    const double n = lapse_of(jet);
    const double dn = lapse_gradient(jet).dot(dx);
    const double speed = spatial_speed(jet, B);
    const Vec3 b = B.tail<3>();
    double dgbb = 0.0;
    for (int m = 0; m < 4; ++m) dgbb += dx(m) * b.dot(jet.dg[m].block<3, 3>(1, 1) * b);
    const double dspeed = (0.5 * dgbb + b.dot(jet.g.block<3, 3>(1, 1) * dB.tail<3>())) / speed;
    ScalarVariation v;
    const double P = rho * n * B(0);
    v.binv_t = drho * n * B(0) + rho * (dn * B(0) + n * dB(0));
    v.rtilde = drho * speed + rho * dspeed;
    const double t = x(0) - origin(0);
    v.binv = v.binv_t / t - P * dx(0) / (t * t);
    return v;
}

GeodesicRecord stencil_trace(const MetricModel& model, const GeodesicRecord& rec, double ode_tol)
{
    if (rec.samples.empty()) throw ValidationError("BadGrid", "stencil trace needs at least one sample");
    std::vector<double> grid;
    for (std::size_t i = 0; i < rec.samples.size(); ++i) {
        const double rho = rec.samples[i].rho;
        double gap = rho;
        if (i > 0) gap = std::min(gap, rho - rec.samples[i - 1].rho);
        if (i + 1 < rec.samples.size()) gap = std::min(gap, rec.samples[i + 1].rho - rho);
        const double delta = std::min(1e-3 * std::max(1.0, rho), 0.2 * gap);
        if (!(delta > 0.0)) continue;
        for (int j = -2; j <= 2; ++j) grid.push_back(rho + j * delta);
    }
    TraceOptions topts;
    topts.ode.rel_tol = topts.ode.abs_tol = ode_tol;
    topts.jacobi = true;
    topts.transport_k = true;
    return trace_geodesic(model, rec.origin, rec.direction, grid, topts);
}

std::vector<ResidualEntry> structure_residuals(const MetricModel& model, const GeodesicRecord& rec, double frame_floor,
                                               double ode_tol)
{
    if (!rec.has_k) throw ValidationError("MissingK", "structure residuals need the transported second fundamental form");
    const GeodesicRecord aug = stencil_trace(model, rec, ode_tol);
    const std::size_t n = aug.samples.size();

    struct Row {
        bool valid = false;
        double rho = 0, n = 1, binv = 1, log_t_tau = 0, trk_reg = 0, t = 0, rtilde = 0, u = 0;
        Mat4 Khat = Mat4::Zero();
        Vec4 Nbar = Vec4::Zero();
        double side = 0; // (r - r_in)(r - r_out) for the glued model
    };
    std::vector<Row> rows(n);
    for (std::size_t i = 0; i < n; ++i) {
        const GeodesicSample& s = aug.samples[i];
        Row& r = rows[i];
        const MetricJet jet = metric_at(model, s.x, 0);
        const LeafScalars ls = leaf_scalars(model, aug, s);
        r.valid = true;
        r.rho = s.rho;
        r.n = ls.n;
        r.t = ls.t;
        r.binv = 1.0 / ls.b;
        r.log_t_tau = std::log(ls.t / ls.tau);
        r.rtilde = ls.rtilde;
        r.u = ls.u;
        const Vec4 Bl = jet.g * s.B;
        const Mat4 h = jet.g + Bl * Bl.transpose();
        const Mat4 Kc = s.K - h / s.rho;
        const double trKc = trace_k(jet, Kc);
        r.trk_reg = trKc;
        r.Khat = Kc - (trKc / 3.0) * h;
        if (ls.rtilde > frame_floor) r.Nbar = frames_at(model, aug, s, 0.0).Nbar;
        const double rr = s.x.tail<3>().norm();
        r.side = model.kind == MetricKind::GluedSchwarzschild ? (rr - model.r_in) * (rr - model.r_out) : 1.0;
    }

    ResidualEntry bb1{"Bb1"}, ctt{"ctt"}, s1{"s1"}, reg{"trk_reg"}, khat{"khat"}, tu{"Tu"}, nb{"Nbinv"},
        zb{"zeta_bar"};
    auto record = [](ResidualEntry& e, double res, std::initializer_list<double> terms) {
        e.max_abs = std::max(e.max_abs, std::abs(res));
        for (double t : terms) e.scale = std::max(e.scale, std::abs(t));
        ++e.samples;
    };

    for (std::size_t i = 2; i + 2 < n; i += 5) {
        // Skip stencils straddling a blend radius, where the metric is only C^2.
        bool straddle = false;
        for (std::size_t j = i - 2; j <= i + 2; ++j) straddle = straddle || ((rows[j].side < 0.0) != (rows[i].side < 0.0));
        if (straddle) continue;

        const GeodesicSample& s = aug.samples[i];
        const Row& r = rows[i];
        std::vector<double> nodes;
        for (std::size_t j = i - 2; j <= i + 2; ++j) nodes.push_back(rows[j].rho);
        const auto w = lagrange_derivative_weights(r.rho, nodes);
        auto d = [&](auto get) {
            using Value = std::decay_t<decltype(get(rows[i - 2]))>;
            Value acc = get(rows[i - 2]) * w[0];
            for (std::size_t j = 1; j < 5; ++j) acc += get(rows[i - 2 + j]) * w[j];
            return acc;
        };

        const MetricJet jet = curvature_at(model, s.x);
        const Vec4 acc = static_acceleration(jet);
        const double Bn = lapse_gradient(jet).dot(s.B);
        const double accB = dot(jet.g, acc, s.B);

        // (Bb1): (B + n^-1 b^-1 / rho)(n - b^-1) = (rtilde b^-1 / rho) <D_T T, N> + B(n)
        {
            const double lhs = d([](const Row& x) { return x.n - x.binv; }) + r.binv / (r.n * r.rho) * (r.n - r.binv);
            const double rhs = r.binv * accB + Bn;
            record(bb1, lhs - rhs, {lhs, r.binv * accB, Bn});
        }
        // (ctt): B(log t/tau) = (b^-1 n^-1 - 1) / rho
        {
            const double lhs = d([](const Row& x) { return x.log_t_tau; });
            const double rhs = (r.binv / r.n - 1.0) / r.rho;
            record(ctt, lhs - rhs, {lhs, rhs});
        }
        const Mat4 E = contract_bd(jet.Riemann, s.B, s.B);
        const double RBB = s.B.dot(jet.Ricci * s.B);
        const Mat4 gi = jet.g_inv;
        const double khat2 = (gi * r.Khat * gi * r.Khat).trace();
        const double trk = r.trk_reg + 3.0 / r.rho;
        // (s1): B(trk) + trk^2 / 3 = -Ric(B,B) - |khat|^2
        {
            const double dtrk = d([](const Row& x) { return x.trk_reg; }) - 3.0 / (r.rho * r.rho);
            const double lhs = dtrk + trk * trk / 3.0;
            record(s1, lhs + RBB + khat2, {r.trk_reg, RBB, khat2, d([](const Row& x) { return x.trk_reg; })});
        }
        // Regularised trace: B(trk - 3/rho) + (2/rho)(trk - 3/rho) = -(1/3)(trk - 3/rho)^2 - Ric(B,B) - |khat|^2
        {
            const double dreg = d([](const Row& x) { return x.trk_reg; });
            const double lhs = dreg + 2.0 * r.trk_reg / r.rho;
            const double rhs = -r.trk_reg * r.trk_reg / 3.0 - RBB - khat2;
            record(reg, lhs - rhs, {dreg, 2.0 * r.trk_reg / r.rho, RBB, khat2});
        }
        // (s1.1): D_B khat + (2/3) trk khat = -Rhat_BiBj - khat (x) khat
        {
            const Vec4 Bl = jet.g * s.B;
            const Mat4 h = jet.g + Bl * Bl.transpose();
            const Mat4 hinv = gi + s.B * s.B.transpose();
            const Mat4 G = gamma_matrix(jet, s.B);
            const Mat4 dK = d([](const Row& x) { return Mat4(x.Khat); });
            const Mat4 DK = dK - G.transpose() * r.Khat - r.Khat * G;
            const Mat4 Ehat = E - (RBB / 3.0) * h;
            const Mat4 kk = r.Khat * gi * r.Khat - (khat2 / 3.0) * h;
            const Mat4 res = DK + (2.0 / 3.0) * trk * r.Khat + Ehat + kk;
            record(khat, h_norm(res, hinv),
                   {h_norm(DK, hinv), (2.0 / 3.0) * trk * h_norm(r.Khat, hinv), h_norm(Ehat, hinv), h_norm(kk, hinv)});
        }
        if (r.rtilde <= frame_floor) continue;
        const FrameSet f = frames_at(model, rec, s, 0.0);
        const double a_inv = r.rtilde / r.rho;
        const double kcheck_nn = s.k.size() ? f.Nbar.dot(s.K * f.Nbar) - 1.0 / r.rho : 0.0;
        const double accN = dot(jet.g, acc, f.N);
        // Off-geodesic derivatives: write X = alpha B + sum c_i J_i and vary the state.
        Mat4 basis;
        basis << s.B, s.J[0], s.J[1], s.J[2];
        const Eigen::PartialPivLU<Mat4> lu(basis);
        const Vec4 geo_dB = -gamma_contract(jet, s.B, s.B);
        auto along = [&](const Vec4& X) {
            const Vec4 c = lu.solve(X);
            ScalarVariation v = scalar_variation(model, rec.origin, s.rho, s.x, s.B, 1.0, s.B, geo_dB);
            v.binv_t *= c(0);
            v.rtilde *= c(0);
            v.binv *= c(0);
            for (int j = 0; j < 3; ++j) {
                const ScalarVariation vj =
                    scalar_variation(model, rec.origin, s.rho, s.x, s.B, 0.0, s.J[j], s.Jdot[j]);
                v.binv_t += c(j + 1) * vj.binv_t;
                v.rtilde += c(j + 1) * vj.rtilde;
                v.binv += c(j + 1) * vj.binv;
            }
            return v;
        };
        // T(u) = 1 + u (a^-1 kcheck_NbNb + <D_T T, N>)
        {
            const double lhs = along(f.T).u();
            const double rhs = 1.0 + r.u * (a_inv * kcheck_nn + accN);
            record(tu, lhs - rhs, {lhs, 1.0, r.u * a_inv * kcheck_nn, r.u * accN});
        }
        // N(b^-1) = (rtilde / t)(b^-1 t / rho) kcheck_NbNb
        {
            const double lhs = along(f.N).binv;
            const double rhs = (r.rtilde / r.t) * (r.binv * r.t / r.rho) * kcheck_nn;
            record(nb, lhs - rhs, {lhs, rhs});
        }
        // zeta_bar_A = <D_B Nbar, e_A> = -(b^-1 t / rtilde) <D_T T, e_A> on static slices.
        bool nb_ok = true;
        for (std::size_t j = i - 2; j <= i + 2; ++j) nb_ok = nb_ok && rows[j].rtilde > frame_floor;
        if (nb_ok) {
            const Vec4 dN = d([](const Row& x) { return Vec4(x.Nbar); });
            const Vec4 DN = dN + gamma_contract(jet, s.B, f.Nbar);
            for (int A = 0; A < 2; ++A) {
                const double lhs = dot(jet.g, DN, f.e[A]);
                const double rhs = -(r.binv * r.t / r.rtilde) * dot(jet.g, acc, f.e[A]);
                record(zb, lhs - rhs, {lhs, rhs});
            }
        }
    }
    return {bb1, ctt, s1, reg, khat, tu, nb, zb};
}

} // namespace hyperlab
