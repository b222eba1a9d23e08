#pragma once

#include "hyperlab/types.hpp"

#include <deque>
#include <functional>
#include <vector>

namespace hyperlab {

/// Spherically symmetric field on flat space obeying box phi = m2 phi with
/// box = -d_t^2 + Laplacian.  m2 = 1 is the Klein-Gordon equation, m2 = 0 the wave equation.
/// Initial data phi = A exp(-(r - r_c)^2 / w^2) (values below 1e-16 set to zero), phi_t = 0.
struct KGConfig {
    double r_max = 85.0;
    double dr = 0.02;
    double t_max = 80.0;
    double cfl = 0.1;
    double amplitude = 1.0;
    double width = 0.25;
    double center = 0.0;
    double m2 = 1.0;
    double output_dt = 0.5;           ///< output spacing used when output_times is empty
    std::vector<double> output_times; ///< strictly increasing, in (0, t_max]
};

/// Radius beyond which the truncated initial data vanishes.
double kg_support_radius(const KGConfig& cfg);

/// Throws ValidationError("CFLViolation") for cfl outside (0, 0.5] and
/// ValidationError("BadConfig") for the other invariants (including
/// r_max > t_max + 1 + support radius).
void validate(const KGConfig& cfg);

/// Field on the cell-centered grid r_j = (j + 1/2) dr.
struct KGState {
    double t = 0.0;
    double dr = 0.0;
    double m2 = 1.0;
    std::vector<double> phi, phit;

    double r(std::size_t j) const { return (double(j) + 0.5) * dr; }
    /// Fourth-order centered d phi / dr (even extension at r = 0, zero beyond the grid).
    std::vector<double> phir() const;
    /// E = (1/2) int (phi_t^2 + phi_r^2 + m2 phi^2) 4 pi r^2 dr, discretized as the
    /// energy that the semi-discrete scheme conserves exactly (fourth-order accurate).
    double energy() const;
};

KGState kg_initial_state(const KGConfig& cfg);

/// Evolves `start` to every output time after start.t (RK4, fourth-order stencils on
/// psi = r phi, steps of at most cfl dr adjusted to land on each output time).  The
/// returned sequence starts with `start`.  Throws NumericalError("UnstableDetected")
/// when the energy grows by more than 1e-3 relative.
std::vector<KGState> evolve_kg(const KGConfig& cfg, const KGState& start, const std::vector<double>& output_times);

/// Evolves the configured initial data to cfg.output_times (or a uniform output_dt grid).
std::vector<KGState> evolve_kg(const KGConfig& cfg);

/// The configured output times: cfg.output_times, or multiples of output_dt up to t_max.
std::vector<double> kg_output_times(const KGConfig& cfg);

/// Same evolution as evolve_kg, handing `start` and every output state to `observer`
/// instead of storing them.
void evolve_kg_stream(const KGConfig& cfg, const KGState& start, const std::vector<double>& output_times,
                      const std::function<void(const KGState&)>& observer);

/// Energy density Q(d_t, B) on H_rho at (t, r) and the margin of the lower bound
/// Q - [(rho / 2 ubar)((B f)^2 + (Nbar f)^2) + (t / 2 rho) m2 f^2].
struct HyperboloidDensity {
    double Q = 0.0;
    double margin = 0.0;
};
HyperboloidDensity hyperboloid_density(double t, double r, double rho, double f, double ft, double fr, double m2);

struct HyperboloidEnergy {
    double E_B = 0.0;              ///< integral of Q (rho / t) over H_rho, t <= last state time
    double lower_bound_check = 0.0; ///< min over nodes of the lower bound margin
    double r_extent = 0.0;          ///< radius where H_rho leaves the covered time range
    int nodes = 0;
};

/// Hyperboloidal energy through the part of H_rho with t <= t_end, accumulated from a
/// stream of states in increasing time (cubic interpolation in t over the last four
/// states and in r on the grid).  Only four states are held at a time.
class HyperboloidAccumulator {
public:
    HyperboloidAccumulator(double rho, double t_end, double dr, double m2);
    void push(const KGState& state);
    /// Throws ValidationError("InsufficientStates") when fewer than four states were
    /// pushed or the last one ends before t_end.
    HyperboloidEnergy finish();

private:
    struct Node {
        double t, r, weight;
    };
    struct Held {
        KGState state;
        std::vector<double> phir;
    };
    void evaluate(const Node& node);

    double rho_, t_end_, dr_, m2_;
    std::vector<Node> nodes_;
    std::size_t next_ = 0;
    std::deque<Held> window_;
    std::size_t pushed_ = 0;
    HyperboloidEnergy result_;
};

/// Hyperboloidal energy through H_rho up to the last state time.  Throws
/// ValidationError("InsufficientStates") when fewer than four states are given or the
/// states end before t = rho.
HyperboloidEnergy hyperboloid_energy(const std::vector<KGState>& states, double rho);

struct DecayRow {
    double t = 0.0;
    double sup_phi = 0.0;
    double t32_sup_phi = 0.0;
    double sup_Lphi = 0.0;  ///< sup |(d_t + d_r) phi|
    double sup_Lbphi = 0.0; ///< sup |(d_t - d_r) phi|
    double t32_sup_Lphi = 0.0;
    double t32_sup_Lbphi = 0.0;
};

struct DecayReport {
    std::vector<DecayRow> rows; ///< states with t >= 10
    double mid_max = 0.0;          ///< max of t^{3/2} sup|phi| over the middle half of the rows
    double last_quarter_max = 0.0; ///< same over the last quarter
    bool non_diverging = true;     ///< last_quarter_max <= 1.3 mid_max
};

DecayReport decay_report(const std::vector<KGState>& states);

/// Least-squares slope of log sup|phi| against log t over rows with t in [t0, t1].
/// Throws ValidationError("BadRange") with fewer than two rows in range.
double decay_slope(const DecayReport& report, double t0, double t1);

enum class CommutingField { S, R1 };

struct CommutationRow {
    double t = 0.0;
    double residual = 0.0; ///< relative L^2 norm of the commutation defect
};

/// For S = t d_t + r d_r: |(box - m2)(S phi) - 2 m2 phi| / |phi|.  For the boost channel,
/// R_i phi = (x_i / r) g with g = r phi_t + t phi_r, and the defect is the l = 1 radial
/// operator (box - m2) applied to g, normalized by |g|.  Second-order differences in r
/// and in t across consecutive equally spaced states.  Throws
/// NumericalError("InsufficientResolution") when no such triple of states exists.
std::vector<CommutationRow> commutation_residual(const std::vector<KGState>& states, CommutingField field);

/// Output times {t - h, t, t + h} for each t, with h = cfl dr (one time step).
std::vector<double> stencil_output_times(const KGConfig& cfg, const std::vector<double>& centers);

} // namespace hyperlab
