#include "app.hpp"

#include "config.hpp"
#include "experiments.hpp"
#include "table.hpp"

#include "CLI11.hpp"

#include <filesystem>
#include <functional>
#include <map>
#include <ostream>

namespace hyperlab::cli {

namespace {

using Runner = std::function<std::vector<Table>(const Context&)>;

const std::map<std::string, std::pair<Runner, std::string>>& subcommands()
{
    static const std::map<std::string, std::pair<Runner, std::string>> table{
        {"foliate", {run_foliate, "fan of geodesics with leaf scalars, k and structure residuals"}},
        {"weyl-check", {run_weyl_check, "closed forms and null-decomposition identities"}},
        {"zs-compare", {run_zs_compare, "comparison with the Schwarzschild optical function and cone spheres"}},
        {"mass", {run_mass, "Hawking masses along H_rho and their large-t limit"}},
        {"kg", {run_kg, "Klein-Gordon evolution, energy and decay"}},
        {"residuals", {run_residuals, "every residual table"}},
    };
    return table;
}

RunMeta make_meta(const std::string& sub, const RunConfig& cfg, const MetricModel& model)
{
    RunMeta m;
    m.subcommand = sub;
    m.config_hash = cfg.hash();
    // Output settings are left out so that sidecars depend only on what was computed.
    for (const auto& [k, v] : cfg.canonical())
        if (k.rfind("output.", 0) != 0) m.config[k] = v;
    m.tolerances["integrator_rel_tol"] = cfg.integrator.rel_tol;
    m.tolerances["integrator_abs_tol"] = cfg.integrator.abs_tol;
    m.tolerances["integrator_max_step"] = format_double(cfg.integrator.max_step);
    m.tolerances["golden_rel_tol"] = cfg.output.golden_rel_tol;
    m.tolerances["golden_abs_tol"] = cfg.output.golden_abs_tol;
    m.metric = model.describe();
    return m;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"hyperlab: intrinsic hyperboloidal foliation laboratory"};
    app.require_subcommand(1);
    std::string config_path, out_dir, golden;
    bool plot = false;
    int threads = 0;
    for (const auto& [name, entry] : subcommands()) {
        CLI::App* sub = app.add_subcommand(name, entry.second);
        sub->add_option("--config", config_path, "experiment configuration (INI)")->required();
        sub->add_option("--out", out_dir, "output directory (overrides output.dir)");
        sub->add_flag("--plot", plot, "also write SVG line plots");
        sub->add_option("--threads", threads, "worker threads (0 = hardware concurrency)")->check(CLI::NonNegativeNumber);
        sub->add_option("--golden", golden, "golden CSV file or directory to compare against");
    }

    std::vector<char*> argv;
    std::vector<std::string> storage(args);
    for (std::string& a : storage) argv.push_back(a.data());
    try {
        app.parse(int(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? ExitOk : ExitValidation;
    }
    const std::string sub = app.get_subcommands().front()->get_name();

    try {
        RunConfig cfg = load_config(config_path);
        if (!out_dir.empty()) cfg.output.dir = out_dir;
        if (!golden.empty()) cfg.output.golden = golden;
        cfg.output.plot = cfg.output.plot || plot;
        validate(cfg);

        const Context ctx = make_context(cfg, threads);
        const std::vector<Table> tables = subcommands().at(sub).first(ctx);

        const std::filesystem::path dir(cfg.output.dir);
        std::filesystem::create_directories(dir);
        const RunMeta meta = make_meta(sub, cfg, ctx.model);
        std::size_t failures = 0;
        for (const Table& t : tables) {
            write_table(dir, t, meta, cfg.output.plot);
            failures += t.failures;
            out << "wrote " << (dir / (t.name + ".csv")).string() << " (" << t.rows.size() << " rows)\n";
        }
        if (failures > 0) {
            err << "hyperlab " << sub << ": " << failures << " row(s) failed; see the status column\n";
            return ExitNumerical;
        }

        if (!cfg.output.golden.empty()) {
            std::vector<std::string> issues;
            bool matched = false;
            for (const Table& t : tables) {
                const auto r = compare_golden(t, cfg.output.golden, cfg.output.golden_rel_tol,
                                              cfg.output.golden_abs_tol);
                if (!r) continue;
                matched = true;
                issues.insert(issues.end(), r->begin(), r->end());
            }
            if (!matched) issues.push_back("golden path " + cfg.output.golden + " matches no output table");
            for (const std::string& s : issues) err << "golden mismatch: " << s << "\n";
            if (!issues.empty()) return ExitGoldenMismatch;
            out << "golden comparison passed\n";
        }
        return ExitOk;
    } catch (const ValidationError& e) {
        err << "hyperlab " << sub << ": validation error: " << e.what() << "\n";
        return ExitValidation;
    } catch (const NumericalError& e) {
        err << "hyperlab " << sub << ": numerical failure: " << e.what() << "\n";
        return ExitNumerical;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "hyperlab " << sub << ": " << e.what() << "\n";
        return ExitValidation;
    } catch (const std::exception& e) {
        err << "hyperlab " << sub << ": internal error: " << e.what() << "\n";
        return ExitInternal;
    }
}

} // namespace hyperlab::cli
