#pragma once

#include "config.hpp"
#include "table.hpp"

#include <vector>

namespace hyperlab::cli {

struct Context {
    RunConfig cfg;
    MetricModel model;
    Vec4 origin = Vec4::Zero();
    int threads = 0;
};

Context make_context(const RunConfig& cfg, int threads);

/// Fan of geodesics with leaf scalars and k (foliate.csv), plus the structure and
/// deformation residuals (foliate_residuals.csv).
std::vector<Table> run_foliate(const Context& ctx);
/// Closed forms reproduced by the curvature and tetrad pipeline (closed_forms.csv) and
/// the null-decomposition identities (weyl_identities.csv).
std::vector<Table> run_weyl_check(const Context& ctx);
/// Radial comparison series (compare.csv), transport residuals (compare_residuals.csv)
/// and cone spheres (cone.csv).
std::vector<Table> run_zs_compare(const Context& ctx);
/// Hawking masses along H_rho (masses.csv) and the large-t fits (masses_fit.csv).
std::vector<Table> run_mass(const Context& ctx);
/// Klein-Gordon evolution with decay rows (kg_decay.csv) and summary (kg_summary.csv).
std::vector<Table> run_kg(const Context& ctx);
/// Every residual table: foliate_residuals, weyl_identities, compare_residuals and
/// kg_commutation.
std::vector<Table> run_residuals(const Context& ctx);

} // namespace hyperlab::cli
