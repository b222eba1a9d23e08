#include "hyperlab/kgflat.hpp"

#include "hyperlab/quadrature.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace hyperlab {

namespace {

constexpr double four_pi = 4.0 * std::numbers::pi;

/// Grid value with a parity extension across r = 0 (index i < 0 maps to -i - 1) and
/// zero beyond the outer edge.
template <class V> double ext(const V& f, long i, double parity)
{
    const long n = long(f.size());
    if (i < 0) return parity * f[std::size_t(-i - 1)];
    if (i >= n) return 0.0;
    return f[std::size_t(i)];
}

/// psi_rr - m2 psi for psi = r phi (odd in r), fourth-order centered.
void kg_rhs(const Eigen::ArrayXd& psi, double dr, double m2, Eigen::ArrayXd& out)
{
    const long n = psi.size();
    const double c = 1.0 / (12.0 * dr * dr);
    out.resize(n);
    auto at = [&](long i) {
        if (i < 0) return -psi(-i - 1);
        if (i >= n) return 0.0;
        return psi(i);
    };
    for (long j = 0; j < n; ++j)
        out(j) = c * (-at(j - 2) + 16.0 * at(j - 1) - 30.0 * psi(j) + 16.0 * at(j + 1) - at(j + 2)) - m2 * psi(j);
}

std::array<double, 4> lagrange4(const std::array<double, 4>& x, double t)
{
    std::array<double, 4> w{};
    for (int i = 0; i < 4; ++i) {
        double p = 1.0;
        for (int j = 0; j < 4; ++j)
            if (j != i) p *= (t - x[j]) / (x[i] - x[j]);
        w[i] = p;
    }
    return w;
}

/// Cubic interpolation of a grid function at radius r (parity extension at the origin).
double interp_r(const std::vector<double>& f, double dr, double r, double parity)
{
    const long j = long(std::floor(r / dr - 0.5));
    std::array<double, 4> x{};
    for (int k = 0; k < 4; ++k) x[k] = (double(j - 1 + k) + 0.5) * dr;
    const auto w = lagrange4(x, r);
    double v = 0.0;
    for (int k = 0; k < 4; ++k) v += w[k] * ext(f, j - 1 + k, parity);
    return v;
}

double l2_norm(const std::vector<double>& f, double dr, std::size_t n)
{
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        const double r = (double(j) + 0.5) * dr;
        s += f[j] * f[j] * four_pi * r * r * dr;
    }
    return std::sqrt(s);
}

} // namespace

double kg_support_radius(const KGConfig& cfg)
{
    const double A = std::abs(cfg.amplitude);
    if (A <= 1e-16) return 0.0;
    return std::max(0.0, cfg.center + cfg.width * std::sqrt(std::log(A / 1e-16)));
}

void validate(const KGConfig& cfg)
{
    const double vals[] = {cfg.r_max, cfg.dr, cfg.t_max, cfg.cfl, cfg.amplitude, cfg.width, cfg.center, cfg.m2,
                           cfg.output_dt};
    for (double v : vals)
        if (!std::isfinite(v)) throw ValidationError("BadConfig", "kg configuration values must be finite");
    if (!(cfg.cfl > 0.0 && cfg.cfl <= 0.5))
        throw ValidationError("CFLViolation", "cfl = " + std::to_string(cfg.cfl) + " must lie in (0, 0.5]");
    if (!(cfg.dr > 0.0) || !(cfg.t_max > 0.0) || !(cfg.width > 0.0) || !(cfg.output_dt > 0.0) || cfg.m2 < 0.0 ||
        cfg.center < 0.0)
        throw ValidationError("BadConfig", "dr, t_max, width and output_dt must be positive; m2 and center non-negative");
    const double need = cfg.t_max + 1.0 + kg_support_radius(cfg);
    if (!(cfg.r_max > need))
        throw ValidationError("BadConfig", "r_max = " + std::to_string(cfg.r_max) + " must exceed t_max + 1 + support = " +
                                               std::to_string(need));
    for (std::size_t i = 0; i < cfg.output_times.size(); ++i) {
        const double t = cfg.output_times[i];
        if (!(t > 0.0 && t <= cfg.t_max) || (i > 0 && !(t > cfg.output_times[i - 1])))
            throw ValidationError("BadConfig", "output times must be strictly increasing within (0, t_max]");
    }
}

std::vector<double> KGState::phir() const
{
    const long n = long(phi.size());
    std::vector<double> out(phi.size());
    const double c = 1.0 / (12.0 * dr);
    for (long j = 0; j < n; ++j)
        out[std::size_t(j)] =
            c * (ext(phi, j - 2, 1.0) - 8.0 * ext(phi, j - 1, 1.0) + 8.0 * ext(phi, j + 1, 1.0) - ext(phi, j + 2, 1.0));
    return out;
}

double KGState::energy() const
{
    // psi = r phi: E = 2 pi sum (pi^2 - psi D2 psi + m2 psi^2) dr with the fourth-order
    // D2 of the evolution, which the semi-discrete scheme conserves exactly.
    const long n = long(phi.size());
    std::vector<double> psi(phi.size());
    for (std::size_t j = 0; j < phi.size(); ++j) psi[j] = r(j) * phi[j];
    const double c = 1.0 / (12.0 * dr * dr);
    double e = 0.0;
    for (long j = 0; j < n; ++j) {
        const std::size_t k = std::size_t(j);
        const double d2 = c * (-ext(psi, j - 2, -1.0) + 16.0 * ext(psi, j - 1, -1.0) - 30.0 * psi[k] +
                               16.0 * ext(psi, j + 1, -1.0) - ext(psi, j + 2, -1.0));
        const double p = r(k) * phit[k];
        e += p * p - psi[k] * d2 + m2 * psi[k] * psi[k];
    }
    return 2.0 * std::numbers::pi * dr * e;
}

KGState kg_initial_state(const KGConfig& cfg)
{
    validate(cfg);
    const std::size_t n = std::size_t(std::ceil(cfg.r_max / cfg.dr));
    KGState s;
    s.dr = cfg.dr;
    s.m2 = cfg.m2;
    s.phi.assign(n, 0.0);
    s.phit.assign(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        const double z = (s.r(j) - cfg.center) / cfg.width;
        const double v = cfg.amplitude * std::exp(-z * z);
        s.phi[j] = std::abs(v) < 1e-16 ? 0.0 : v;
    }
    return s;
}

void evolve_kg_stream(const KGConfig& cfg, const KGState& start, const std::vector<double>& output_times,
                      const std::function<void(const KGState&)>& observer)
{
    validate(cfg);
    const std::size_t n = start.phi.size();
    if (start.phit.size() != n || !(start.dr > 0.0)) throw ValidationError("BadConfig", "malformed initial state");
    Eigen::ArrayXd psi(n), pi(n);
    for (std::size_t j = 0; j < n; ++j) {
        psi(Eigen::Index(j)) = start.r(j) * start.phi[j];
        pi(Eigen::Index(j)) = start.r(j) * start.phit[j];
    }
    Eigen::ArrayXd r(n);
    for (std::size_t j = 0; j < n; ++j) r(Eigen::Index(j)) = start.r(j);

    observer(start);
    const double e0 = start.energy();
    const double h_max = cfg.cfl * start.dr;
    double t = start.t;
    Eigen::ArrayXd k1p, k2p, k3p, k4p, k1q, k2q, k3q, k4q, tmp;
    for (double t_out : output_times) {
        if (!(t_out > t)) throw ValidationError("BadConfig", "output times must increase past the start time");
        const long steps = std::max(1L, long(std::ceil((t_out - t) / h_max - 1e-9)));
        const double h = (t_out - t) / double(steps);
        for (long s = 0; s < steps; ++s) {
            k1p = pi;
            kg_rhs(psi, start.dr, cfg.m2, k1q);
            tmp = psi + 0.5 * h * k1p;
            k2p = pi + 0.5 * h * k1q;
            kg_rhs(tmp, start.dr, cfg.m2, k2q);
            tmp = psi + 0.5 * h * k2p;
            k3p = pi + 0.5 * h * k2q;
            kg_rhs(tmp, start.dr, cfg.m2, k3q);
            tmp = psi + h * k3p;
            k4p = pi + h * k3q;
            kg_rhs(tmp, start.dr, cfg.m2, k4q);
            psi += (h / 6.0) * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
            pi += (h / 6.0) * (k1q + 2.0 * k2q + 2.0 * k3q + k4q);
        }
        t = t_out;
        KGState s;
        s.t = t;
        s.dr = start.dr;
        s.m2 = cfg.m2;
        s.phi.resize(n);
        s.phit.resize(n);
        for (std::size_t j = 0; j < n; ++j) {
            s.phi[j] = psi(Eigen::Index(j)) / r(Eigen::Index(j));
            s.phit[j] = pi(Eigen::Index(j)) / r(Eigen::Index(j));
        }
        const double e = s.energy();
        if (!std::isfinite(e) || e > e0 * (1.0 + 1e-3) + 1e-300)
            throw NumericalError("UnstableDetected", "energy grew from " + std::to_string(e0) + " to " +
                                                         std::to_string(e) + " at t = " + std::to_string(t));
        observer(s);
    }
}

std::vector<KGState> evolve_kg(const KGConfig& cfg, const KGState& start, const std::vector<double>& output_times)
{
    std::vector<KGState> out;
    evolve_kg_stream(cfg, start, output_times, [&out](const KGState& s) { out.push_back(s); });
    return out;
}

std::vector<double> kg_output_times(const KGConfig& cfg)
{
    std::vector<double> times = cfg.output_times;
    if (times.empty()) {
        const long m = long(std::floor(cfg.t_max / cfg.output_dt + 1e-9));
        for (long k = 1; k <= m; ++k) times.push_back(double(k) * cfg.output_dt);
        if (times.empty() || times.back() < cfg.t_max - 1e-12) times.push_back(cfg.t_max);
    }
    return times;
}

std::vector<KGState> evolve_kg(const KGConfig& cfg) { return evolve_kg(cfg, kg_initial_state(cfg), kg_output_times(cfg)); }

HyperboloidDensity hyperboloid_density(double t, double r, double rho, double f, double ft, double fr, double m2)
{
    const double u = t - r, ub = t + r;
    const double Lf = ft + fr, Lbf = ft - fr;
    HyperboloidDensity d;
    d.Q = (u * Lbf * Lbf + ub * Lf * Lf) / (4.0 * rho) + (t / (2.0 * rho)) * m2 * f * f;
    const double Bf = (t * ft + r * fr) / rho;
    const double Nbf = (r * ft + t * fr) / rho;
    d.margin = d.Q - ((rho / (2.0 * ub)) * (Bf * Bf + Nbf * Nbf) + (t / (2.0 * rho)) * m2 * f * f);
    return d;
}

HyperboloidAccumulator::HyperboloidAccumulator(double rho, double t_end, double dr, double m2)
    : rho_(rho), t_end_(t_end), dr_(dr), m2_(m2)
{
    if (!(rho > 0.0) || !(dr > 0.0)) throw ValidationError("BadRange", "rho and dr must be positive");
    if (!(t_end > rho)) throw ValidationError("InsufficientStates", "states must extend past t = rho");
    result_.r_extent = std::sqrt(t_end * t_end - rho * rho);
    result_.lower_bound_check = std::numeric_limits<double>::infinity();
    std::vector<double> gx, gw;
    gauss_legendre(4, gx, gw);
    const long panels = std::max(1L, long(std::ceil(result_.r_extent / (2.0 * dr))));
    const double width = result_.r_extent / double(panels);
    for (long p = 0; p < panels; ++p)
        for (std::size_t q = 0; q < gx.size(); ++q) {
            const double r = width * (double(p) + 0.5 * (gx[q] + 1.0));
            nodes_.push_back({std::sqrt(rho * rho + r * r), r, 0.5 * width * gw[q]});
        }
}

void HyperboloidAccumulator::evaluate(const Node& node)
{
    std::array<double, 4> tx{};
    for (int i = 0; i < 4; ++i) tx[i] = window_[std::size_t(i)].state.t;
    const auto lw = lagrange4(tx, node.t);
    double f = 0.0, ft = 0.0, fr = 0.0;
    for (int i = 0; i < 4; ++i) {
        const Held& h = window_[std::size_t(i)];
        f += lw[i] * interp_r(h.state.phi, dr_, node.r, 1.0);
        ft += lw[i] * interp_r(h.state.phit, dr_, node.r, 1.0);
        fr += lw[i] * interp_r(h.phir, dr_, node.r, -1.0);
    }
    const HyperboloidDensity d = hyperboloid_density(node.t, node.r, rho_, f, ft, fr, m2_);
    result_.E_B += node.weight * d.Q * (rho_ / node.t) * four_pi * node.r * node.r;
    result_.lower_bound_check = std::min(result_.lower_bound_check, d.margin);
    ++result_.nodes;
}

void HyperboloidAccumulator::push(const KGState& state)
{
    if (!window_.empty() && !(state.t > window_.back().state.t))
        throw ValidationError("BadRange", "states must be pushed in increasing time");
    window_.push_back({state, state.phir()});
    ++pushed_;
    if (window_.size() > 4) window_.pop_front();
    if (window_.size() < 4) return;
    // Nodes before the second newest state have their interpolation window complete.
    const double t_ready = window_[2].state.t;
    while (next_ < nodes_.size() && nodes_[next_].t < t_ready) evaluate(nodes_[next_++]);
}

HyperboloidEnergy HyperboloidAccumulator::finish()
{
    if (window_.size() < 4) throw ValidationError("InsufficientStates", "cubic time interpolation needs four states");
    if (window_.back().state.t < t_end_ * (1.0 - 1e-12))
        throw ValidationError("InsufficientStates", "states end before the hyperboloid time range");
    while (next_ < nodes_.size()) evaluate(nodes_[next_++]);
    return result_;
}

HyperboloidEnergy hyperboloid_energy(const std::vector<KGState>& states, double rho)
{
    if (states.size() < 4) throw ValidationError("InsufficientStates", "cubic time interpolation needs four states");
    if (states.front().t > rho) throw ValidationError("InsufficientStates", "states must start before t = rho");
    HyperboloidAccumulator acc(rho, states.back().t, states.front().dr, states.front().m2);
    for (const KGState& s : states) acc.push(s);
    return acc.finish();
}

DecayReport decay_report(const std::vector<KGState>& states)
{
    DecayReport rep;
    for (const KGState& s : states) {
        if (s.t < 10.0) continue;
        const std::vector<double> pr = s.phir();
        DecayRow row;
        row.t = s.t;
        for (std::size_t j = 0; j < s.phi.size(); ++j) {
            row.sup_phi = std::max(row.sup_phi, std::abs(s.phi[j]));
            row.sup_Lphi = std::max(row.sup_Lphi, std::abs(s.phit[j] + pr[j]));
            row.sup_Lbphi = std::max(row.sup_Lbphi, std::abs(s.phit[j] - pr[j]));
        }
        const double w = std::pow(s.t, 1.5);
        row.t32_sup_phi = w * row.sup_phi;
        row.t32_sup_Lphi = w * row.sup_Lphi;
        row.t32_sup_Lbphi = w * row.sup_Lbphi;
        rep.rows.push_back(row);
    }
    const std::size_t n = rep.rows.size();
    for (std::size_t i = n / 4; i < (3 * n) / 4; ++i) rep.mid_max = std::max(rep.mid_max, rep.rows[i].t32_sup_phi);
    for (std::size_t i = (3 * n) / 4; i < n; ++i)
        rep.last_quarter_max = std::max(rep.last_quarter_max, rep.rows[i].t32_sup_phi);
    rep.non_diverging = rep.last_quarter_max <= 1.3 * rep.mid_max;
    return rep;
}

double decay_slope(const DecayReport& report, double t0, double t1)
{
    std::vector<double> x, y;
    for (const DecayRow& r : report.rows)
        if (r.t >= t0 && r.t <= t1 && r.sup_phi > 0.0) {
            x.push_back(std::log(r.t));
            y.push_back(std::log(r.sup_phi));
        }
    if (x.size() < 2) throw ValidationError("BadRange", "fewer than two decay rows in the fit range");
    Eigen::MatrixXd A(x.size(), 2);
    Eigen::VectorXd b(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        A(Eigen::Index(i), 0) = 1.0;
        A(Eigen::Index(i), 1) = x[i];
        b(Eigen::Index(i)) = y[i];
    }
    return A.colPivHouseholderQr().solve(b)(1);
}

std::vector<CommutationRow> commutation_residual(const std::vector<KGState>& states, CommutingField field)
{
    std::vector<CommutationRow> out;
    for (std::size_t i = 1; i + 1 < states.size(); ++i) {
        const KGState& a = states[i - 1];
        const KGState& b = states[i];
        const KGState& c = states[i + 1];
        const double h = b.t - a.t;
        if (!(h > 0.0) || std::abs((c.t - b.t) - h) > 1e-9 * h) continue;
        const std::size_t n = b.phi.size();
        const double dr = b.dr;
        const double m2 = b.m2;
        const double parity = field == CommutingField::S ? 1.0 : -1.0;
        auto channel = [&](const KGState& s) {
            const std::vector<double> pr = s.phir();
            std::vector<double> g(n);
            for (std::size_t j = 0; j < n; ++j) {
                const double r = s.r(j);
                g[j] = field == CommutingField::S ? s.t * s.phit[j] + r * pr[j] : r * s.phit[j] + s.t * pr[j];
            }
            return g;
        };
        const std::vector<double> ga = channel(a), gb = channel(b), gc = channel(c);
        std::vector<double> res(n, 0.0);
        for (std::size_t j = 0; j + 1 < n; ++j) {
            const long jj = long(j);
            const double r = b.r(j);
            const double gtt = (ga[j] - 2.0 * gb[j] + gc[j]) / (h * h);
            const double gm = ext(gb, jj - 1, parity), gp = ext(gb, jj + 1, parity);
            const double grr = (gm - 2.0 * gb[j] + gp) / (dr * dr);
            const double gr = (gp - gm) / (2.0 * dr);
            double box = -gtt + grr + 2.0 * gr / r;
            if (field == CommutingField::S)
                res[j] = box - m2 * gb[j] - 2.0 * m2 * b.phi[j];
            else
                res[j] = box - 2.0 * gb[j] / (r * r) - m2 * gb[j];
        }
        const double scale = l2_norm(field == CommutingField::S ? b.phi : gb, dr, n);
        CommutationRow row;
        row.t = b.t;
        row.residual = scale > 0.0 ? l2_norm(res, dr, n - 1) / scale : l2_norm(res, dr, n - 1);
        out.push_back(row);
    }
    if (out.empty()) throw NumericalError("InsufficientResolution", "no equally spaced triple of states to difference");
    return out;
}

std::vector<double> stencil_output_times(const KGConfig& cfg, const std::vector<double>& centers)
{
    const double h = cfg.cfl * cfg.dr;
    std::vector<double> t;
    for (double c : centers) {
        t.push_back(c - h);
        t.push_back(c);
        t.push_back(c + h);
    }
    std::sort(t.begin(), t.end());
    t.erase(std::unique(t.begin(), t.end(), [](double x, double y) { return std::abs(x - y) < 1e-12; }), t.end());
    return t;
}

} // namespace hyperlab
