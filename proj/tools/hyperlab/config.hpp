#pragma once

#include "hyperlab/geodesic.hpp"
#include "hyperlab/kgflat.hpp"
#include "hyperlab/metric.hpp"

#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace hyperlab::cli {

/// Experiment description loaded from an INI file.  Every key is optional; unknown
/// sections or keys are rejected.
struct RunConfig {
    struct Metric {
        std::string kind = "glued"; ///< minkowski | schwarzschild | glued
        double mass = 0.01;
        double r_in = 1.0;
        double r_out = 2.0;
    } metric;

    struct Origin {
        double t = 0.0;
        Vec3 offset = Vec3::Zero();
    } origin;

    struct Foliation {
        double rho_min = 1.0;
        double rho_max = 20.0;
        int rho_samples = 20;
        double zeta_max = 2.0;
        int zeta_samples = 5;
        int theta_nodes = 2;
        int phi_nodes = 4;
    } foliation;

    struct Integrator {
        double rel_tol = 1e-11;
        double abs_tol = 1e-11;
        double max_step = std::numeric_limits<double>::infinity();
    } integrator;

    KGConfig kg{};

    struct Mass {
        std::vector<double> rho{10.0};
        std::vector<double> t{20.0, 40.0, 80.0, 160.0};
    } mass;

    struct Compare {
        double zeta = 2.0;
        double theta = 1.2;
        double phi = 0.4;
        double t_min = 10.0;
        double t_max = 200.0;
        int samples = 60;
        std::vector<double> cone_rho{10.0};
        double cone_uhat = 4.0;
    } compare;

    struct Weyl {
        std::vector<double> radii{3.0, 5.0, 10.0};
        double sphere_rho = 1.0;
    } weyl;

    struct Output {
        std::string dir = "out";
        bool plot = false;
        std::string golden;
        double golden_rel_tol = 1e-9;
        double golden_abs_tol = 1e-12;
    } output;

    MetricModel model() const;
    Vec4 origin_point() const;
    TraceOptions trace_options(bool transport_k) const;

    /// "section.key" / value pairs in a fixed order with shortest round-trip numbers.
    std::vector<std::pair<std::string, std::string>> canonical() const;
    /// FNV-1a 64 hash of the canonical form, as 16 hex digits.
    std::string hash() const;
};

/// Parses an INI file.  Throws ValidationError("ConfigMissing"), ("ConfigParse"),
/// ("UnknownKey") or ("BadValue").
RunConfig load_config(const std::string& path);

/// Checks every invariant of the configuration (finite numbers, model parameters,
/// origin inside the flat core of a glued model, grid sizes, the KG configuration).
/// Throws ValidationError naming the violated invariant.
void validate(const RunConfig& cfg);

/// Shortest decimal string that reads back to the same binary64 value.
std::string format_double(double v);

} // namespace hyperlab::cli
