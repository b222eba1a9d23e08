#include "experiments.hpp"

#include "hyperlab/kgflat.hpp"
#include "hyperlab/mass.hpp"
#include "hyperlab/nullgeom.hpp"
#include "hyperlab/parallel.hpp"
#include "hyperlab/zscompare.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <tuple>

namespace hyperlab::cli {

namespace {

constexpr double nan_v = std::numeric_limits<double>::quiet_NaN();

std::vector<double> linspace(double a, double b, int n)
{
    if (n == 1) return {b};
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i) v[i] = a + (b - a) * i / (n - 1);
    return v;
}

/// "Kind: message" -> "Kind".
std::string kind_of(const std::string& what)
{
    const auto p = what.find(':');
    return p == std::string::npos ? what : what.substr(0, p);
}

std::string within(double relative, double tol) { return relative <= tol ? "ok" : "exceeds_tolerance"; }

/// The model used for leaf and sphere constructions.  A pure Schwarzschild model has no
/// regular origin, so constructions that start at an origin use the glued model with the
/// same mass, which coincides with it for r >= r_out.
MetricModel geometry_model(const Context& ctx)
{
    if (ctx.model.kind != MetricKind::Schwarzschild) return ctx.model;
    return MetricModel::glued(ctx.model.M, ctx.cfg.metric.r_in, ctx.cfg.metric.r_out);
}

OmegaGrid omega_grid(const RunConfig& cfg)
{
    return OmegaGrid::gauss_legendre(cfg.foliation.theta_nodes, cfg.foliation.phi_nodes);
}

FanGrid build_fan(const Context& ctx)
{
    validate_origin(ctx.model, ctx.origin);
    const auto& f = ctx.cfg.foliation;
    return fan_build(ctx.model, ctx.origin, linspace(0.0, f.zeta_max, f.zeta_samples), omega_grid(ctx.cfg),
                     linspace(f.rho_min, f.rho_max, f.rho_samples), ctx.cfg.trace_options(true), ctx.threads);
}

Table foliate_table(const Context& ctx, const FanGrid& fan)
{
    Table t("foliate", {"rho", "zeta", "t", "r", "tau", "b", "rtilde", "u", "ubar", "trk_minus_3_over_rho", "khat_nn",
                        "khat_na_max"});
    std::vector<std::string> failure(fan.records.size());
    for (const auto& [idx, msg] : fan.failures) failure[idx] = kind_of(msg);

    // Leaf data per record, in parallel into per-record slots.
    std::vector<GeodesicRecord> recs(fan.records.size());
    std::vector<std::string> leaf_failure(fan.records.size());
    parallel_for(fan.records.size(), ctx.threads, [&](std::size_t i) {
        if (!failure[i].empty()) return;
        try {
            recs[i] = second_fundamental_transport(ctx.model, fan.records[i], ctx.cfg.trace_options(true));
        } catch (const Error& e) {
            leaf_failure[i] = e.kind();
        }
    });

    for (std::size_t i = 0; i < fan.records.size(); ++i) {
        const double zeta = fan.zeta[i / fan.omega.size()];
        const std::string& fail = !failure[i].empty() ? failure[i] : leaf_failure[i];
        for (std::size_t k = 0; k < fan.rho.size(); ++k) {
            if (!fail.empty() || k >= recs[i].samples.size()) {
                std::vector<Cell> row(t.columns.size(), nan_v);
                row[0] = fan.rho[k];
                row[1] = zeta;
                t.add(std::move(row), fail.empty() ? "Truncated" : fail, true);
                continue;
            }
            const GeodesicSample& s = recs[i].samples[k];
            const LeafScalars& l = s.scalars;
            const SecondFundamental sf = SecondFundamental::from(s.k);
            t.add({s.rho, zeta, l.t, s.x.tail<3>().norm(), l.tau, l.b, l.rtilde, l.u, l.ubar, sf.trk - 3.0 / s.rho,
                   sf.khat_nn(), sf.khat_na_max()});
        }
    }
    nlohmann::ordered_json nodes = nlohmann::ordered_json::array();
    for (std::size_t w = 0; w < fan.omega.size(); ++w) nodes.push_back({fan.omega.theta_of(w), fan.omega.phi_of(w)});
    t.meta["row_order"] = "zeta index, angular node index, rho index";
    t.meta["angular_nodes"] = nodes;
    t.plot = PlotSpec{"rho", {"trk_minus_3_over_rho", "khat_nn"}, false, true};
    return t;
}

Table foliate_residual_table(const Context& ctx, const FanGrid& fan)
{
    Table t("foliate_residuals", {"name", "zeta", "theta", "phi", "max_abs", "scale", "relative", "samples"});
    const double tol = 1e-5;
    // Structure equations along the first angular node of every non-central zeta.
    std::vector<std::vector<ResidualEntry>> entries(fan.zeta.size());
    std::vector<std::string> errors(fan.zeta.size());
    parallel_for(fan.zeta.size(), ctx.threads, [&](std::size_t iz) {
        if (fan.zeta[iz] <= 0.0) return;
        const std::size_t idx = iz * fan.omega.size();
        for (const auto& f : fan.failures)
            if (f.first == idx) {
                errors[iz] = kind_of(f.second);
                return;
            }
        try {
            entries[iz] = structure_residuals(ctx.model, second_fundamental_transport(ctx.model, fan.records[idx]));
        } catch (const Error& e) {
            errors[iz] = e.kind();
        }
    });
    for (std::size_t iz = 0; iz < fan.zeta.size(); ++iz) {
        if (fan.zeta[iz] <= 0.0) continue;
        const double th = fan.omega.theta_of(0), ph = fan.omega.phi_of(0);
        if (!errors[iz].empty()) {
            t.add({std::string("structure"), fan.zeta[iz], th, ph, nan_v, nan_v, nan_v, 0.0}, errors[iz], true);
            continue;
        }
        for (const ResidualEntry& e : entries[iz])
            t.add({e.name, fan.zeta[iz], th, ph, e.max_abs, e.scale, e.relative(), double(e.samples)},
                  e.samples == 0 ? "no_samples" : within(e.relative(), tol));
    }

    if (fan.failures.empty()) {
        const DeformationReport d = deformation_boost(ctx.model, fan, fan.rho.back());
        const double rel = d.pi_BR_scale > 0.0 ? d.pi_BR / d.pi_BR_scale : d.pi_BR;
        t.add({std::string("pi_BB"), nan_v, nan_v, nan_v, d.pi_BB, 1.0, d.pi_BB, double(fan.records.size())},
              within(d.pi_BB, 1e-8));
        t.add({std::string("pi_BR_asymmetry"), nan_v, nan_v, nan_v, d.pi_BR, d.pi_BR_scale, rel,
               double(fan.records.size())},
              within(rel, 1e-7));
    }
    t.meta["tolerance_structure_relative"] = tol;
    t.meta["tolerance_pi_BB_absolute"] = 1e-8;
    t.meta["tolerance_pi_BR_relative"] = 1e-7;
    return t;
}

struct ClosedFormRow {
    double christoffel = nan_v, K = nan_v, trchi_s = nan_v, trchib_s = nan_v, varrho = nan_v, other = nan_v;
    std::string status = "ok";
    bool failed = false;
};

/// Round coordinate sphere |x| = r inside H_rho from a centered origin, with its null
/// expansions and the Gauss curvature obtained from the Gauss equation.
void sphere_pipeline(const Context& ctx, double r, ClosedFormRow& row)
{
    const MetricModel geo = geometry_model(ctx);
    if (!geo.schwarzschild_zone(r)) {
        row.status = "OutsideZs";
        row.failed = true;
        return;
    }
    const Vec4 centre(ctx.cfg.origin.t, 0.0, 0.0, 0.0);
    LevelFunction radius{[](const Vec4& x) { return x.tail<3>().norm(); },
                         [](const Vec4& x) {
                             Vec4 g = Vec4::Zero();
                             g.tail<3>() = x.tail<3>() / x.tail<3>().norm();
                             return g;
                         }};
    SphereOptions opts;
    opts.trace = ctx.cfg.trace_options(true);
    opts.root_tol = 1e-12;
    opts.threads = ctx.threads;
    LeafSlice s = level_sphere(geo, centre, ctx.cfg.weyl.sphere_rho, OmegaGrid::gauss_legendre(2, 2), radius, r, opts);
    slice_null_forms(geo, s);
    double K = 0.0, tc = 0.0, tcb = 0.0;
    for (const SphereNode& n : s.nodes) {
        const MetricJet jet = curvature_at(geo, n.sample.x);
        const double lapse = std::sqrt(-jet.g(0, 0));
        const double W = contract4(jet.Weyl, n.frames.L, n.frames.Lb, n.frames.L, n.frames.Lb);
        const double S =
            n.frames.e[0].dot(jet.Schouten * n.frames.e[0]) + n.frames.e[1].dot(jet.Schouten * n.frames.e[1]);
        K -= gauss_residual({0.0, n.trchi, n.trchib, n.chihat, n.chibhat}, W, S);
        tc += n.trchi / lapse;
        tcb += n.trchib / lapse;
    }
    const double m = double(s.nodes.size());
    row.K = K / m;
    row.trchi_s = tc / m;
    row.trchib_s = tcb / m;
}

Table closed_forms_table(const Context& ctx)
{
    Table t("closed_forms", {"r", "christoffel_r_tt", "K", "trchi_s", "trchib_s", "varrho_hat_n4", "gauss_closure",
                             "hat_other_over_varrho", "christoffel_r_tt_closed", "K_closed", "trchi_s_closed",
                             "varrho_hat_n4_closed"});
    const double M = ctx.model.kind == MetricKind::Minkowski ? 0.0 : ctx.model.M;
    const double tol = 1e-7;
    for (double r : ctx.cfg.weyl.radii) {
        ClosedFormRow row;
        SchwarzschildClosedForms c;
        try {
            c = schwarzschild_closed_forms(M, r);
            const Vec4 x(ctx.cfg.origin.t, r, 0.0, 0.0);
            const MetricJet jet = curvature_at(ctx.model, x);
            row.christoffel = jet.Gamma[1](0, 0);
            const WeylNull w = null_decompose(jet.g, jet.Weyl, hat_tetrad(ctx.model, x));
            row.varrho = w.varrho;
            row.other = std::max({w.alpha.cwiseAbs().maxCoeff(), w.alphab.cwiseAbs().maxCoeff(),
                                  w.beta.cwiseAbs().maxCoeff(), w.betab.cwiseAbs().maxCoeff(), std::abs(w.sigma)});
            if (row.varrho != 0.0) row.other /= std::abs(row.varrho);
            sphere_pipeline(ctx, r, row);
        } catch (const Error& e) {
            row.status = e.kind();
            row.failed = true;
        }
        const double R = r + 2.0 * M;
        const double gamma_closed = 2.0 * M * (r - 2.0 * M) / (R * R * R);
        const double closure = row.K - (r - 2.0 * M) / (R * R * R) + row.varrho;
        if (!row.failed) {
            const auto rel = [](double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); };
            const bool ok = std::abs(row.christoffel - gamma_closed) <= tol * std::max(gamma_closed, 1e-300) &&
                            rel(row.K, c.K_sphere) <= tol && rel(row.trchi_s, c.trchi_s) <= tol &&
                            rel(row.trchib_s, c.trchib_s) <= tol &&
                            std::abs(row.varrho - c.varrho_hat_n4) <= tol * std::max(std::abs(c.varrho_hat_n4), 1e-300) &&
                            std::abs(closure) <= 1e-8;
            row.status = ok ? "ok" : "mismatch";
        }
        t.add({r, row.christoffel, row.K, row.trchi_s, row.trchib_s, row.varrho, closure, row.other, gamma_closed,
               c.K_sphere, c.trchi_s, c.varrho_hat_n4},
              row.status, row.failed);
    }
    t.meta["tolerance_relative"] = tol;
    t.meta["tolerance_gauss_closure"] = 1e-8;
    t.meta["sphere"] = "coordinate sphere |x| = r inside H_rho from the centered origin, rho = weyl.sphere_rho";
    t.meta["sphere_model"] = geometry_model(ctx).describe();
    return t;
}

Table weyl_identity_table(const Context& ctx)
{
    Table t("weyl_identities", {"name", "r", "value", "scale", "relative", "tolerance"});
    const double tol = 1e-6;
    const auto add = [&](const std::string& name, double r, double value, double scale) {
        const double rel = scale > 0.0 ? value / scale : value;
        t.add({name, r, value, scale, rel, tol}, within(rel, tol));
    };
    for (double r : ctx.cfg.weyl.radii) {
        try {
            const Vec4 x(ctx.cfg.origin.t, 0.6 * r, 0.0, 0.8 * r);
            const MetricJet jet = curvature_at(ctx.model, x);
            const WeylNull w = null_decompose(jet.g, jet.Weyl, hat_tetrad(ctx.model, x));
            const double other = std::max({w.alpha.cwiseAbs().maxCoeff(), w.alphab.cwiseAbs().maxCoeff(),
                                           w.beta.cwiseAbs().maxCoeff(), w.betab.cwiseAbs().maxCoeff(),
                                           std::abs(w.sigma)});
            add("hat_non_varrho", r, other, std::abs(w.varrho));
        } catch (const Error& e) {
            t.add({std::string("hat_non_varrho"), r, nan_v, nan_v, nan_v, tol}, e.kind(), true);
        }
    }

    // Intrinsic tetrad at leaf points deep in the Schwarzschild zone.
    const MetricModel geo = geometry_model(ctx);
    const std::vector<Direction> dirs{Direction::spherical(1.3, 1.0, 2.0), Direction::spherical(1.0, 2.0, 1.0),
                                      Direction::spherical(1.6, 0.5, 4.0)};
    TraceOptions opts = ctx.cfg.trace_options(true);
    for (const Direction& d : dirs) {
        try {
            const GeodesicRecord rec = trace_geodesic(geo, ctx.origin, d, {8.0}, opts);
            const GeodesicSample& s = rec.samples.at(0);
            const double r = s.x.tail<3>().norm();
            if (!geo.schwarzschild_zone(r)) continue;
            const FrameSet f = frames_at(geo, rec, s);
            const MetricJet jet = curvature_at(geo, s.x);
            const WeylNull w = null_decompose(jet.g, jet.Weyl, intrinsic_tetrad(f));
            const double scale = std::abs(w.varrho);
            add("alpha_minus_alphab", r, (w.alpha - w.alphab).norm(), scale);
            add("beta_minus_betab", r, (w.beta - w.betab).norm(), scale);
            add("sigma", r, std::abs(w.sigma), scale);
            const VarrhoConsistency v = varrho_consistency(geo, s.x, f);
            add("varrho_two_paths", r, std::abs(v.varrho_direct - v.varrho_formula), std::abs(v.varrho_formula));
            add("betab_two_paths", r, (v.betab_direct - v.betab_formula).norm(), scale);
        } catch (const Error& e) {
            t.add({std::string("intrinsic"), nan_v, nan_v, nan_v, nan_v, tol}, e.kind(), true);
        }
    }
    t.meta["leaf_rho"] = 8.0;
    return t;
}

GeodesicRecord compare_record(const Context& ctx)
{
    validate_origin(ctx.model, ctx.origin);
    const auto& c = ctx.cfg.compare;
    const Direction d = Direction::spherical(c.zeta, c.theta, c.phi);
    const double ch = d.velocity()(0);
    return trace_geodesic(ctx.model, ctx.origin, d, linspace(c.t_min / ch, c.t_max / ch, c.samples),
                          ctx.cfg.trace_options(true));
}

Table compare_table(const Context& ctx, const GeodesicRecord& rec)
{
    Table t("compare", {"rho", "t", "r", "n", "varpi", "n_minus_varpi", "u", "uhat", "u_minus_uhat",
                        "rt_over_r_minus_ninv"});
    const ComparisonSeries s = radial_comparison_series(ctx.model, rec);
    for (const ComparisonRow& r : s.rows)
        t.add({r.rho, r.t, r.r, r.n, r.varpi, r.n_minus_varpi, r.u, r.uhat, r.u_minus_uhat, r.rt_over_r_minus_ninv},
              r.n_minus_varpi >= -1e-8 ? "ok" : "n_below_varpi");
    t.meta["min_n_minus_varpi"] = s.min_n_minus_varpi;
    t.meta["u_minus_uhat_drift"] = s.u_minus_uhat_drift;
    t.meta["max_t_rt_defect"] = s.max_t_rt_defect;
    if (rec.truncated) t.meta["truncation"] = rec.truncation_reason;
    t.plot = PlotSpec{"t", {"n_minus_varpi", "u_minus_uhat"}, false, false};
    return t;
}

Table compare_residual_table(const Context& ctx, const GeodesicRecord& rec)
{
    Table t("compare_residuals", {"name", "max_abs", "scale", "relative", "samples"});
    const double tol = 1e-5;
    for (const ResidualEntry& e : transport_residuals_zs(ctx.model, rec)) {
        std::string status = e.samples == 0 ? "no_samples" : within(e.relative(), tol);
        if (e.name == "bvarpi_printed") status = "diagnostic";
        t.add({e.name, e.max_abs, e.scale, e.relative(), double(e.samples)}, status);
    }
    t.meta["tolerance_relative"] = tol;
    return t;
}

Table cone_table(const Context& ctx)
{
    Table t("cone", {"rho", "uhat", "t_mean", "osc_t", "dag_a_min", "dag_a_max", "dag_a_formula_residual", "K_min",
                     "K_max", "K_mean", "K_leading_mean"});
    SphereOptions opts;
    opts.trace = ctx.cfg.trace_options(true);
    opts.threads = ctx.threads;
    for (double rho : ctx.cfg.compare.cone_rho) {
        try {
            const ConeSphereReport rep =
                cone_sphere_geometry(ctx.model, ctx.origin, rho, ctx.cfg.compare.cone_uhat, omega_grid(ctx.cfg), opts);
            double wsum = 0.0, tsum = 0.0, lead = 0.0;
            for (const SphereNode& n : rep.slice.nodes) {
                wsum += n.weight;
                tsum += n.weight * n.sample.scalars.t;
            }
            for (const ConeNode& n : rep.nodes) lead += n.K_leading;
            t.add({rho, rep.uhat, tsum / wsum, rep.osc_t, rep.dag_a_min, rep.dag_a_max, rep.dag_a_formula_residual,
                   rep.K_min, rep.K_max, rep.K_mean, lead / double(rep.nodes.size())});
        } catch (const Error& e) {
            std::vector<Cell> row(t.columns.size(), nan_v);
            row[0] = rho;
            row[1] = ctx.cfg.compare.cone_uhat;
            t.add(std::move(row), e.kind(), true);
        }
    }
    t.meta["t_mean"] = "area-weighted mean of the raw leaf time t over the sphere";
    return t;
}

KGState nearest_state(const std::vector<KGState>& states, double t)
{
    return *std::min_element(states.begin(), states.end(), [t](const KGState& a, const KGState& b) {
        return std::abs(a.t - t) < std::abs(b.t - t);
    });
}

Table kg_commutation_table(const Context& ctx)
{
    Table t("kg_commutation", {"field", "t", "dr", "residual", "residual_half_dr", "observed_order"});
    const auto residuals = [&](double dr) {
        KGConfig c = ctx.cfg.kg;
        c.dr = dr;
        c.output_times = stencil_output_times(c, {0.25 * c.t_max, 0.5 * c.t_max, 0.75 * c.t_max});
        const std::vector<KGState> states = evolve_kg(c);
        return std::pair{commutation_residual(states, CommutingField::S),
                         commutation_residual(states, CommutingField::R1)};
    };
    const double dr = ctx.cfg.kg.dr;
    const auto coarse = residuals(dr), fine = residuals(0.5 * dr);
    for (const auto& [name, c, f] : {std::tuple{"S", coarse.first, fine.first}, std::tuple{"R1", coarse.second, fine.second}})
        for (std::size_t i = 0; i < c.size() && i < f.size(); ++i) {
            const double order = std::log2(c[i].residual / f[i].residual);
            t.add({std::string(name), c[i].t, dr, c[i].residual, f[i].residual, order},
                  std::abs(order - 2.0) <= 0.5 ? "ok" : "not_second_order");
        }
    t.meta["note"] = "second-order differences in r and t; residuals are relative to |phi| (S) or |g| (R1)";
    return t;
}

} // namespace

Context make_context(const RunConfig& cfg, int threads)
{
    Context ctx;
    ctx.cfg = cfg;
    ctx.model = cfg.model();
    ctx.origin = cfg.origin_point();
    ctx.threads = threads;
    return ctx;
}

std::vector<Table> run_foliate(const Context& ctx)
{
    const FanGrid fan = build_fan(ctx);
    return {foliate_table(ctx, fan), foliate_residual_table(ctx, fan)};
}

std::vector<Table> run_weyl_check(const Context& ctx) { return {closed_forms_table(ctx), weyl_identity_table(ctx)}; }

std::vector<Table> run_zs_compare(const Context& ctx)
{
    const GeodesicRecord rec = compare_record(ctx);
    return {compare_table(ctx, rec), compare_residual_table(ctx, rec), cone_table(ctx)};
}

std::vector<Table> run_mass(const Context& ctx)
{
    validate_origin(ctx.model, ctx.origin);
    Table masses("masses", {"t", "rho", "area_radius", "mass"});
    Table fits("masses_fit", {"rho", "m_inf", "c", "residual", "points"});
    SphereOptions opts;
    opts.trace = ctx.cfg.trace_options(true);
    opts.threads = ctx.threads;
    const OmegaGrid omega = omega_grid(ctx.cfg);
    for (double rho : ctx.cfg.mass.rho) {
        std::vector<MassReport> ok;
        for (double t : ctx.cfg.mass.t) {
            try {
                LeafSlice s = leaf_slice(ctx.model, ctx.origin, t, rho, omega, opts);
                slice_null_forms(ctx.model, s);
                const MassReport m = hawking_mass(s);
                ok.push_back(m);
                masses.add({t, rho, m.area_radius, m.mass});
            } catch (const Error& e) {
                masses.add({t, rho, nan_v, nan_v}, e.kind(), true);
            }
        }
        if (ok.empty()) {
            fits.add({rho, nan_v, nan_v, nan_v, 0.0}, "NoMasses", true);
            continue;
        }
        const BondiFit f = fit_bondi_limit(ok);
        fits.add({rho, f.m_inf, f.c, f.residual, double(f.points)});
    }
    masses.meta["null_pair"] = "static pair L = T + N, Lb = T - N restricted to S_{t,rho}";
    masses.plot = PlotSpec{"t", {"mass"}, false, true};
    fits.meta["fit"] = "least squares m = m_inf + c / t over the last half (rounded up) of the t grid";
    return {masses, fits};
}

std::vector<Table> run_kg(const Context& ctx)
{
    const KGConfig& c = ctx.cfg.kg;
    const std::vector<KGState> states = evolve_kg(c);
    const double e0 = states.front().energy();
    const double drift_tol = 1e-6;

    Table decay("kg_decay", {"t", "sup_phi", "t32_sup_phi", "energy"});
    double drift = 0.0;
    for (const KGState& s : states) {
        double sup = 0.0;
        for (double v : s.phi) sup = std::max(sup, std::abs(v));
        const double e = s.energy();
        const double d = e0 > 0.0 ? std::abs(e / e0 - 1.0) : std::abs(e);
        drift = std::max(drift, d);
        decay.add({s.t, sup, std::pow(s.t, 1.5) * sup, e}, d <= drift_tol ? "ok" : "energy_drift");
    }
    decay.meta["energy_drift_tolerance"] = drift_tol;
    decay.plot = PlotSpec{"t", {"t32_sup_phi"}, false, false};

    Table summary("kg_summary", {"name", "value"});
    summary.add({std::string("energy_initial"), e0});
    summary.add({std::string("energy_drift_max"), drift}, within(drift, drift_tol));
    const auto sup_at = [&](double t) {
        const KGState s = nearest_state(states, t);
        if (std::abs(s.t - t) > 1e-9) return nan_v;
        double sup = 0.0;
        for (double v : s.phi) sup = std::max(sup, std::abs(v));
        return sup;
    };
    const double ratio = sup_at(40.0) / sup_at(80.0);
    summary.add({std::string("sup_ratio_40_80"), ratio}, std::isfinite(ratio) ? "ok" : "not_sampled");
    const DecayReport rep = decay_report(states);
    try {
        summary.add({std::string("decay_slope"), decay_slope(rep, 0.25 * c.t_max, c.t_max)});
    } catch (const ValidationError& e) {
        summary.add({std::string("decay_slope"), nan_v}, e.kind());
    }
    summary.add({std::string("t32_sup_mid_max"), rep.mid_max});
    summary.add({std::string("t32_sup_last_quarter_max"), rep.last_quarter_max},
                rep.non_diverging ? "ok" : "diverging");
    summary.meta["decay_slope_window"] = {0.25 * c.t_max, c.t_max};
    return {decay, summary};
}

std::vector<Table> run_residuals(const Context& ctx)
{
    const FanGrid fan = build_fan(ctx);
    const GeodesicRecord rec = compare_record(ctx);
    return {foliate_residual_table(ctx, fan), weyl_identity_table(ctx), compare_residual_table(ctx, rec),
            kg_commutation_table(ctx)};
}

} // namespace hyperlab::cli
