#include "hyperlab/metric.hpp"

#include <algorithm>
#include <sstream>

namespace hyperlab {

void MetricModel::validate() const
{
    if (!std::isfinite(M) || !std::isfinite(r_in) || !std::isfinite(r_out))
        throw ValidationError("InvalidModel", "metric parameters must be finite");
    if (M < 0.0) throw ValidationError("InvalidModel", "mass parameter M must be non-negative");
    if (kind == MetricKind::GluedSchwarzschild) {
        if (!(2.0 * M < r_in)) throw ValidationError("InvalidModel", "glued model requires 2M < r_in");
        if (!(r_in < r_out)) throw ValidationError("InvalidModel", "glued model requires r_in < r_out");
    }
}

std::string MetricModel::describe() const
{
    std::ostringstream os;
    switch (kind) {
    case MetricKind::Minkowski: os << "minkowski"; break;
    case MetricKind::Schwarzschild: os << "schwarzschild(M=" << M << ")"; break;
    case MetricKind::GluedSchwarzschild:
        os << "glued(M=" << M << ", r_in=" << r_in << ", r_out=" << r_out << ")";
        break;
    }
    return os.str();
}

MetricJet metric_at(const MetricModel& model, const Vec4& x, int level)
{
    return metric_at_t<double>(model, x, level);
}

MetricJet curvature_at(const MetricModel& model, const Vec4& x)
{
    MetricJet jet = metric_at_t<double>(model, x, 2);
    fill_curvature(jet);
    return jet;
}

Mat4 schouten_scalar_field(const MetricJet& jet, const Vec4& dphi, double phi, double kg_mass)
{
    const double kinetic = dphi.dot(jet.g_inv * dphi);
    return dphi * dphi.transpose() - (kinetic - kg_mass * phi * phi) / 6.0 * jet.g;
}

Tensor4 riemann_from_christoffel(const MetricJet& jet)
{
    // R^r_smn = d_m Gamma^r_ns - d_n Gamma^r_ms + Gamma^r_ml Gamma^l_ns - Gamma^r_nl Gamma^l_ms
    Tensor4 up;
    for (int r = 0; r < 4; ++r)
        for (int s = 0; s < 4; ++s)
            for (int m = 0; m < 4; ++m)
                for (int n = 0; n < 4; ++n) {
                    double v = jet.dGamma(m, r, n, s) - jet.dGamma(n, r, m, s);
                    for (int l = 0; l < 4; ++l)
                        v += jet.Gamma[r](m, l) * jet.Gamma[l](n, s) - jet.Gamma[r](n, l) * jet.Gamma[l](m, s);
                    up(r, s, m, n) = v;
                }
    Tensor4 low;
    for (int a = 0; a < 4; ++a)
        for (int s = 0; s < 4; ++s)
            for (int m = 0; m < 4; ++m)
                for (int n = 0; n < 4; ++n) {
                    double v = 0.0;
                    for (int r = 0; r < 4; ++r) v += jet.g(a, r) * up(r, s, m, n);
                    low(a, s, m, n) = v;
                }
    return low;
}

double riemann_symmetry_residual(const Tensor4& R)
{
    double res = 0.0;
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b)
            for (int c = 0; c < 4; ++c)
                for (int d = 0; d < 4; ++d) {
                    res = std::max(res, std::abs(R(a, b, c, d) + R(b, a, c, d)));
                    res = std::max(res, std::abs(R(a, b, c, d) + R(a, b, d, c)));
                    res = std::max(res, std::abs(R(a, b, c, d) - R(c, d, a, b)));
                    res = std::max(res, std::abs(R(a, b, c, d) + R(a, c, d, b) + R(a, d, b, c)));
                }
    return res;
}

double weyl_trace_residual(const MetricJet& jet)
{
    double res = 0.0;
    for (int b = 0; b < 4; ++b)
        for (int d = 0; d < 4; ++d) {
            double v = 0.0;
            for (int a = 0; a < 4; ++a)
                for (int c = 0; c < 4; ++c) v += jet.g_inv(a, c) * jet.Weyl(a, b, c, d);
            res = std::max(res, std::abs(v));
        }
    return res;
}

Mat4 contract_bd(const Tensor4& R, const Vec4& u, const Vec4& v)
{
    Mat4 E = Mat4::Zero();
    for (int a = 0; a < 4; ++a)
        for (int c = 0; c < 4; ++c) {
            double s = 0.0;
            for (int b = 0; b < 4; ++b) {
                if (u(b) == 0.0) continue;
                for (int d = 0; d < 4; ++d) s += R(a, b, c, d) * u(b) * v(d);
            }
            E(a, c) = s;
        }
    return E;
}

double contract4(const Tensor4& R, const Vec4& a, const Vec4& b, const Vec4& c, const Vec4& d)
{
    double s = 0.0;
    for (int i = 0; i < 4; ++i) {
        if (a(i) == 0.0) continue;
        for (int j = 0; j < 4; ++j) {
            if (b(j) == 0.0) continue;
            for (int k = 0; k < 4; ++k) {
                if (c(k) == 0.0) continue;
                for (int l = 0; l < 4; ++l) s += R(i, j, k, l) * a(i) * b(j) * c(k) * d(l);
            }
        }
    }
    return s;
}

double static_lapse(const MetricModel& model, const Vec4& x)
{
    const double r = x.tail<3>().norm();
    if (model.flat_at(r)) return 1.0;
    return std::sqrt(radial_profiles<double>(model, r).F.v);
}

} // namespace hyperlab
