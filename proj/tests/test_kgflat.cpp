#include "doctest.h"

#include "hyperlab/kgflat.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

using namespace hyperlab;

namespace {

/// Exact spherically symmetric solution for Gaussian data A exp(-r^2 / w^2), phi_t = 0:
/// phi = (1 / (2 pi^2 r)) int k sin(k r) phihat(k) cos(omega t) dk with
/// phihat = A pi^{3/2} w^3 exp(-k^2 w^2 / 4) and omega^2 = k^2 + m2 (Simpson in k).
double exact_phi(double t, double r, double w, double m2, double A = 1.0)
{
    const double kmax = 13.0 / w;
    const int n = 40000;
    const double h = kmax / n;
    double s = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double k = i * h;
        const double f = k * std::sin(k * r) * std::exp(-k * k * w * w / 4.0) * std::cos(std::sqrt(k * k + m2) * t);
        s += f * (i == 0 || i == n ? 1.0 : (i % 2 ? 4.0 : 2.0));
    }
    s *= h / 3.0;
    return A * std::pow(std::numbers::pi, 1.5) * w * w * w * s / (2.0 * std::numbers::pi * std::numbers::pi * r);
}

const KGState& state_at(const std::vector<KGState>& states, double t)
{
    return *std::min_element(states.begin(), states.end(),
                             [t](const KGState& a, const KGState& b) { return std::abs(a.t - t) < std::abs(b.t - t); });
}

} // namespace

TEST_CASE("kg configuration validation")
{
    KGConfig c;
    c.cfl = 0.6;
    try {
        validate(c);
        FAIL("expected a CFL violation");
    } catch (const ValidationError& e) {
        CHECK(e.kind() == "CFLViolation");
    }
    KGConfig d;
    d.r_max = 81.0;
    CHECK_THROWS_AS(validate(d), ValidationError);
    KGConfig e;
    e.output_times = {1.0, 0.5};
    CHECK_THROWS_AS(validate(e), ValidationError);
    CHECK(kg_support_radius(KGConfig{}) == doctest::Approx(0.25 * std::sqrt(std::log(1e16))));
}

TEST_CASE("zero data stays zero")
{
    KGConfig c;
    c.amplitude = 0.0;
    c.t_max = 12.0;
    c.r_max = 15.0;
    c.output_times = stencil_output_times(c, {4.0, 8.0, 11.0});
    c.output_times.push_back(12.0);
    const std::vector<KGState> states = evolve_kg(c);
    for (const KGState& s : states)
        for (std::size_t j = 0; j < s.phi.size(); ++j) {
            CHECK(s.phi[j] == 0.0);
            CHECK(s.phit[j] == 0.0);
        }
    CHECK(hyperboloid_energy(states, 2.0).E_B == 0.0);
    const DecayReport rep = decay_report(states);
    REQUIRE(!rep.rows.empty());
    for (const DecayRow& r : rep.rows) CHECK(r.t32_sup_phi == 0.0);
    for (const CommutationRow& r : commutation_residual(states, CommutingField::S)) CHECK(r.residual == 0.0);
}

TEST_CASE("evolution matches the exact Fourier-Bessel solution")
{
    for (double m2 : {1.0, 0.0}) {
        KGConfig c;
        c.m2 = m2;
        c.t_max = 10.0;
        c.r_max = 13.0;
        c.output_times = {3.0, 10.0};
        const std::vector<KGState> states = evolve_kg(c);
        for (double t : {3.0, 10.0}) {
            const KGState& s = state_at(states, t);
            double scale = 0.0, err = 0.0;
            for (std::size_t j = 0; j < s.phi.size(); j += 7) {
                const double ex = exact_phi(t, s.r(j), c.width, m2);
                scale = std::max(scale, std::abs(ex));
                err = std::max(err, std::abs(s.phi[j] - ex));
            }
            MESSAGE("m2 " << m2 << " t " << t << " max error " << err << " / " << scale);
            CHECK(err <= 1e-3 * scale);
        }
    }
}

TEST_CASE("standard klein-gordon run: energy, decay and the wave contrast")
{
    KGConfig c;
    c.output_dt = 0.1;
    const std::vector<KGState> states = evolve_kg(c);
    const double e0 = states.front().energy();
    for (const KGState& s : states) CHECK(std::abs(s.energy() / e0 - 1.0) <= 1e-6);

    const DecayReport rep = decay_report(states);
    CHECK(rep.non_diverging);
    double s40 = 0.0, s80 = 0.0;
    for (const DecayRow& r : rep.rows) {
        if (std::abs(r.t - 40.0) < 1e-9) s40 = r.sup_phi;
        if (std::abs(r.t - 80.0) < 1e-9) s80 = r.sup_phi;
    }
    const double ratio = s40 / s80;
    CHECK(ratio >= 0.75 * 2.8284271);
    CHECK(ratio <= 1.25 * 2.8284271);

    // The sup sits near the light cone; compare it there with the exact solution.
    for (double t : {20.0, 40.0, 80.0}) {
        const KGState& s = state_at(states, t);
        std::size_t jm = 0;
        for (std::size_t j = 0; j < s.phi.size(); ++j)
            if (std::abs(s.phi[j]) > std::abs(s.phi[jm])) jm = j;
        CHECK(s.r(jm) / t > 0.95);
        const double ex = exact_phi(t, s.r(jm), c.width, 1.0);
        CHECK(s.phi[jm] == doctest::Approx(ex).epsilon(1e-2));
    }

    KGConfig w = c;
    w.m2 = 0.0;
    const std::vector<KGState> wave = evolve_kg(w);
    const DecayReport wrep = decay_report(wave);
    const double slope = decay_slope(wrep, 20.0, 80.0);
    CHECK(slope >= -1.2);
    CHECK(slope <= -0.8);
    double lo = 1e300, hi = 0.0;
    for (const DecayRow& r : wrep.rows)
        if (r.t >= 20.0) {
            lo = std::min(lo, r.t * r.sup_phi);
            hi = std::max(hi, r.t * r.sup_phi);
        }
    CHECK(hi <= 1.1 * lo);
}

TEST_CASE("hyperboloid energy density")
{
    const HyperboloidDensity flat = hyperboloid_density(2.0, std::sqrt(3.0), 1.0, 1.0, 0.0, 0.0, 1.0);
    CHECK(flat.Q == doctest::Approx(1.0).epsilon(1e-15));
    // Q(d_t, B) = T(d_t, B) from the stress tensor, and the lower-bound margin equals
    // r u (Lb f)^2 / (2 rho ubar).
    const double rho = 1.7;
    for (double r : {0.0, 0.4, 3.0, 11.0}) {
        const double t = std::sqrt(rho * rho + r * r);
        const double f = 0.3, ft = -0.8, fr = 0.45, m2 = 1.0;
        const HyperboloidDensity d = hyperboloid_density(t, r, rho, f, ft, fr, m2);
        const double T = (t / (2.0 * rho)) * (ft * ft + fr * fr + m2 * f * f) + (r / rho) * ft * fr;
        CHECK(d.Q == doctest::Approx(T).epsilon(1e-13));
        const double margin = r * (t - r) * (ft - fr) * (ft - fr) / (2.0 * rho * (t + r));
        CHECK(d.margin == doctest::Approx(margin).epsilon(1e-12).scale(1.0));
        CHECK(d.margin >= -1e-12);
    }
}

TEST_CASE("hyperboloid energy through H_rho")
{
    KGConfig c;
    c.width = 0.5;
    c.dr = 0.04;
    c.cfl = 0.5;
    c.t_max = 60.0;
    c.r_max = 66.0;
    c.output_dt = 0.025;
    const KGState s0 = kg_initial_state(c);
    const double e0 = s0.energy();
    std::vector<KGState> kept;
    std::vector<HyperboloidAccumulator> acc;
    for (double rho : {2.0, 4.0}) acc.emplace_back(rho, c.t_max, c.dr, c.m2);
    evolve_kg_stream(c, s0, kg_output_times(c), [&](const KGState& s) {
        for (auto& a : acc) a.push(s);
        if (s.t <= 20.0 + 1e-9) kept.push_back(s);
    });
    const HyperboloidEnergy h2 = acc[0].finish(), h4 = acc[1].finish();
    MESSAGE("E0 " << e0 << " E_B(2) " << h2.E_B << " E_B(4) " << h4.E_B);
    // Energy below H_rho leaves only through null infinity, so E_B <= E(0) and E_B is
    // non-increasing in rho.
    CHECK(h2.E_B <= e0 * (1.0 + 1e-6));
    CHECK(h4.E_B <= h2.E_B * (1.0 + 1e-6));
    CHECK(h4.E_B >= 0.9 * e0);
    CHECK(std::max(h2.E_B, h4.E_B) / std::min(h2.E_B, h4.E_B) <= 1.5);
    CHECK(h2.lower_bound_check >= -1e-12);
    CHECK(h4.lower_bound_check >= -1e-12);

    // The batch form agrees with streaming over the same states.
    HyperboloidAccumulator a(2.0, 20.0, c.dr, c.m2);
    for (const KGState& s : kept) a.push(s);
    CHECK(hyperboloid_energy(kept, 2.0).E_B == doctest::Approx(a.finish().E_B).epsilon(1e-14));
    CHECK_THROWS_AS(hyperboloid_energy({kept.begin(), kept.begin() + 3}, 2.0), ValidationError);
}

TEST_CASE("commutation residuals converge at second order")
{
    double prev_s = 0.0, prev_r = 0.0;
    for (double dr : {0.02, 0.01}) {
        KGConfig c;
        c.dr = dr;
        c.t_max = 12.0;
        c.r_max = 15.0;
        c.output_times = stencil_output_times(c, {10.0});
        const std::vector<KGState> states = evolve_kg(c);
        const auto S = commutation_residual(states, CommutingField::S);
        const auto R = commutation_residual(states, CommutingField::R1);
        REQUIRE(S.size() == 1);
        CHECK(S[0].t == doctest::Approx(10.0));
        if (prev_s > 0.0) {
            MESSAGE("S factor " << prev_s / S[0].residual << " R factor " << prev_r / R[0].residual);
            CHECK(prev_s / S[0].residual == doctest::Approx(4.0).epsilon(0.3));
            CHECK(prev_r / R[0].residual == doctest::Approx(4.0).epsilon(0.3));
        }
        prev_s = S[0].residual;
        prev_r = R[0].residual;
    }
    KGConfig c;
    c.t_max = 2.5;
    c.r_max = 6.0;
    c.output_times = {1.0, 2.5};
    CHECK_THROWS_AS(commutation_residual(evolve_kg(c), CommutingField::S), NumericalError);
}

TEST_CASE("time reversal recovers the data")
{
    KGConfig c;
    c.t_max = 10.0;
    c.r_max = 15.0;
    const KGState s0 = kg_initial_state(c);
    KGState mid = evolve_kg(c, s0, {5.0}).back();
    for (double& v : mid.phit) v = -v;
    const KGState back = evolve_kg(c, mid, {10.0}).back();
    double err = 0.0;
    for (std::size_t j = 0; j < s0.phi.size(); ++j) err = std::max(err, std::abs(back.phi[j] - s0.phi[j]));
    CHECK(err <= 1e-8);
}
