#include "doctest.h"

#include "app.hpp"
#include "config.hpp"
#include "table.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

using namespace hyperlab;
using namespace hyperlab::cli;
namespace fs = std::filesystem;

namespace {

/// Fresh scratch directory under the system temp directory.
fs::path scratch(const std::string& name)
{
    static std::mt19937_64 rng{std::random_device{}()};
    const fs::path p = fs::temp_directory_path() / ("hyperlab_cli_" + name + "_" + std::to_string(rng()));
    fs::create_directories(p);
    return p;
}

fs::path write_config(const fs::path& dir, const std::string& text)
{
    const fs::path p = dir / "run.ini";
    std::ofstream(p) << text;
    return p;
}

struct Result {
    int code;
    std::string out, err;
};

Result hyperlab_run(std::vector<std::string> args)
{
    args.insert(args.begin(), "hyperlab");
    std::ostringstream out, err;
    const int code = run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p)
{
    std::vector<std::vector<std::string>> rows;
    std::ifstream in(p);
    for (std::string line; std::getline(in, line);) {
        std::vector<std::string> cells;
        std::stringstream ss(line);
        for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
        rows.push_back(cells);
    }
    return rows;
}

std::size_t column(const std::vector<std::string>& header, const std::string& name)
{
    const auto it = std::find(header.begin(), header.end(), name);
    REQUIRE(it != header.end());
    return std::size_t(it - header.begin());
}

const char* small_glued = R"(
[metric]
kind = "glued"
mass = 0.05
[origin]
offset = [0.2, 0.1, 0.0]
[foliation]
rho_min = 1.0
rho_max = 6.0
rho_samples = 6
zeta_max = 1.2
zeta_samples = 3
theta_nodes = 2
phi_nodes = 2
[integrator]
rel_tol = 1e-10
abs_tol = 1e-10
)";

} // namespace

TEST_CASE("shortest round-trip number format")
{
    for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 5.0, 0.0}) {
        const std::string s = format_double(v);
        CHECK(std::stod(s) == v);
    }
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(5.0) == "5");
    CHECK(format_double(std::numeric_limits<double>::infinity()) == "inf");
}

TEST_CASE("config loading and validation")
{
    const fs::path dir = scratch("config");
    SUBCASE("defaults and overrides")
    {
        const RunConfig c = load_config(write_config(dir, small_glued).string());
        CHECK(c.metric.mass == 0.05);
        CHECK(c.origin.offset(1) == 0.1);
        CHECK(c.foliation.zeta_samples == 3);
        CHECK(c.kg.dr == 0.02);
        CHECK_NOTHROW(validate(c));
        RunConfig d = c;
        d.output.dir = "elsewhere";
        CHECK(d.hash() == c.hash());
        d.metric.mass = 0.04;
        CHECK(d.hash() != c.hash());
    }
    SUBCASE("unknown key")
    {
        try {
            load_config(write_config(dir, "[metric]\nmas = 0.1\n").string());
            FAIL("expected UnknownKey");
        } catch (const ValidationError& e) {
            CHECK(e.kind() == "UnknownKey");
        }
    }
    SUBCASE("bad values")
    {
        CHECK_THROWS_AS(load_config(write_config(dir, "[metric]\nmass = heavy\n").string()), ValidationError);
        CHECK_THROWS_AS(load_config(write_config(dir, "[origin]\noffset = [1, 2]\n").string()), ValidationError);
        CHECK_THROWS_AS(load_config((dir / "missing.ini").string()), ValidationError);
        RunConfig c;
        c.foliation.rho_samples = 1;
        CHECK_THROWS_AS(validate(c), ValidationError);
        RunConfig k;
        k.kg.cfl = 0.9;
        CHECK_THROWS_AS(validate(k), ValidationError);
        RunConfig m;
        m.metric.kind = "kerr";
        CHECK_THROWS_AS(validate(m), ValidationError);
    }
}

TEST_CASE("mass with a minkowski config")
{
    const fs::path dir = scratch("mass");
    const fs::path cfg = write_config(dir, R"(
[metric]
kind = "minkowski"
[mass]
rho = [5.0]
t = [10.0, 20.0, 40.0]
)");
    const Result r = hyperlab_run({"mass", "--config", cfg.string(), "--out", (dir / "out").string()});
    INFO(r.err);
    REQUIRE(r.code == 0);
    const auto rows = read_csv(dir / "out" / "masses.csv");
    REQUIRE(rows.size() == 4);
    CHECK(rows[0] == std::vector<std::string>{"t", "rho", "area_radius", "mass", "status"});
    for (std::size_t i = 1; i < rows.size(); ++i) {
        CHECK(std::abs(std::stod(rows[i][3])) <= 1e-10);
        CHECK(rows[i][4] == "ok");
    }
    const nlohmann::json meta = nlohmann::json::parse(slurp(dir / "out" / "masses.meta.json"));
    CHECK(meta["config_hash"].get<std::string>().size() == 16);
    CHECK(meta.contains("tolerances"));
    CHECK(meta.contains("code_version"));
    CHECK(fs::exists(dir / "out" / "masses_fit.csv"));
}

TEST_CASE("weyl-check reproduces the schwarzschild closed forms")
{
    const fs::path dir = scratch("weyl");
    const fs::path cfg = write_config(dir, "[metric]\nkind = \"schwarzschild\"\nmass = 0.05\n[weyl]\nradii = [3, 5, 10]\n");
    const Result r = hyperlab_run({"weyl-check", "--config", cfg.string(), "--out", dir.string()});
    INFO(r.err);
    REQUIRE(r.code == 0);
    const auto rows = read_csv(dir / "closed_forms.csv");
    REQUIRE(rows.size() == 4);
    const auto& h = rows[0];
    const auto& row5 = rows[2];
    CHECK(std::stod(row5[column(h, "r")]) == 5.0);
    CHECK(std::stod(row5[column(h, "varrho_hat_n4")]) == doctest::Approx(-0.001507712).epsilon(1e-7));
    CHECK(std::stod(row5[column(h, "K")]) == doctest::Approx(0.03844675).epsilon(1e-7));
    CHECK(std::stod(row5[column(h, "trchi_s")]) == doctest::Approx(0.39215686).epsilon(1e-7));
    CHECK(std::stod(row5[column(h, "christoffel_r_tt")]) == doctest::Approx(0.003693904).epsilon(1e-7));
    for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i].back() == "ok");
    for (const auto& row : read_csv(dir / "weyl_identities.csv"))
        if (row[0] != "name") CHECK(row.back() == "ok");
}

TEST_CASE("foliate with the origin outside the flat core is a validation error")
{
    const fs::path dir = scratch("offset");
    const fs::path cfg = write_config(dir, "[metric]\nkind = \"glued\"\n[origin]\noffset = [1.5, 0, 0]\n");
    const Result r = hyperlab_run({"foliate", "--config", cfg.string(), "--out", (dir / "out").string()});
    CHECK(r.code == 2);
    CHECK(r.err.find("OriginOutsideCore") != std::string::npos);
    CHECK(r.err.find("r_in") != std::string::npos);
    CHECK(!fs::exists(dir / "out" / "foliate.csv"));
}

TEST_CASE("command line errors")
{
    CHECK(hyperlab_run({}).code == 2);
    CHECK(hyperlab_run({"foliate"}).code == 2);
    CHECK(hyperlab_run({"bogus", "--config", "x"}).code == 2);
    CHECK(hyperlab_run({"mass", "--config", "/nonexistent/run.ini"}).code == 2);
    CHECK(hyperlab_run({"--help"}).code == 0);
}

TEST_CASE("foliate output is byte-identical across thread counts and matches its golden copy")
{
    const fs::path dir = scratch("foliate");
    const fs::path cfg = write_config(dir, small_glued);
    const Result one = hyperlab_run({"foliate", "--config", cfg.string(), "--out", (dir / "t1").string(),
                                     "--threads", "1", "--plot"});
    INFO(one.err);
    REQUIRE(one.code == 0);
    const Result four =
        hyperlab_run({"foliate", "--config", cfg.string(), "--out", (dir / "t4").string(), "--threads", "4"});
    REQUIRE(four.code == 0);
    for (const char* f : {"foliate.csv", "foliate_residuals.csv", "foliate.meta.json"})
        CHECK(slurp(dir / "t1" / f) == slurp(dir / "t4" / f));
    CHECK(fs::exists(dir / "t1" / "foliate.svg"));
    CHECK(slurp(dir / "t1" / "foliate.svg").rfind("<svg", 0) == 0);
    CHECK(!fs::exists(dir / "t4" / "foliate.svg"));

    const auto rows = read_csv(dir / "t1" / "foliate.csv");
    REQUIRE(rows.size() == 1 + 3 * 4 * 6);
    CHECK(rows[0].size() == 13);
    CHECK(rows[0].back() == "status");
    const std::size_t b = column(rows[0], "b");
    for (std::size_t i = 1; i < rows.size(); ++i) {
        CHECK(rows[i].back() == "ok");
        CHECK(std::stod(rows[i][b]) > 0.0);
    }
    for (const auto& row : read_csv(dir / "t1" / "foliate_residuals.csv"))
        if (row[0] != "name") CHECK(row.back() == "ok");

    // Golden comparison against the first run passes; a perturbed golden value fails.
    const Result same = hyperlab_run({"foliate", "--config", cfg.string(), "--out", (dir / "t5").string(), "--golden",
                                      (dir / "t1").string()});
    CHECK(same.code == 0);
    // Prefix the first rho cell with a digit: 1 becomes 11.
    std::string text = slurp(dir / "t1" / "foliate.csv");
    text.insert(text.find('\n') + 1, "1");
    fs::create_directories(dir / "g");
    std::ofstream(dir / "g" / "foliate.csv", std::ios::binary) << text;
    const Result diff = hyperlab_run({"foliate", "--config", cfg.string(), "--out", (dir / "t6").string(), "--golden",
                                      (dir / "g" / "foliate.csv").string()});
    CHECK(diff.code == 4);
    CHECK(diff.err.find("golden mismatch") != std::string::npos);
}

TEST_CASE("zs-compare and kg on small configurations")
{
    const fs::path dir = scratch("zs");
    const fs::path cfg = write_config(dir, R"(
[metric]
kind = "glued"
mass = 0.01
[origin]
offset = [0.2, 0, 0]
[compare]
zeta = 2.0
t_min = 10
t_max = 60
samples = 12
cone_rho = [10.0]
cone_uhat = 4.0
[foliation]
theta_nodes = 2
phi_nodes = 3
[kg]
t_max = 12
r_max = 15
output_dt = 1.0
)");
    const Result z = hyperlab_run({"zs-compare", "--config", cfg.string(), "--out", dir.string()});
    INFO(z.err);
    REQUIRE(z.code == 0);
    const auto rows = read_csv(dir / "compare.csv");
    REQUIRE(rows.size() == 13);
    CHECK(rows[0] == std::vector<std::string>{"rho", "t", "r", "n", "varpi", "n_minus_varpi", "u", "uhat",
                                              "u_minus_uhat", "rt_over_r_minus_ninv", "status"});
    for (std::size_t i = 1; i < rows.size(); ++i) CHECK(std::stod(rows[i][5]) >= -1e-8);
    for (const auto& row : read_csv(dir / "compare_residuals.csv"))
        if (row[0] == "bvarpi" || row[0] == "cmr_1") CHECK(row.back() == "ok");
    CHECK(read_csv(dir / "cone.csv").size() == 2);

    const Result k = hyperlab_run({"kg", "--config", cfg.string(), "--out", dir.string(), "--plot"});
    REQUIRE(k.code == 0);
    const auto kg = read_csv(dir / "kg_decay.csv");
    CHECK(kg[0] == std::vector<std::string>{"t", "sup_phi", "t32_sup_phi", "energy", "status"});
    CHECK(kg.size() == 14);
    CHECK(fs::exists(dir / "kg_decay.svg"));
}

TEST_CASE("failed rows are annotated and give exit code 3")
{
    const fs::path dir = scratch("fail");
    // Spheres at t <= rho do not exist on H_rho.
    const fs::path cfg = write_config(dir, "[metric]\nkind = \"minkowski\"\n[mass]\nrho = [5.0]\nt = [3.0, 10.0]\n");
    const Result r = hyperlab_run({"mass", "--config", cfg.string(), "--out", dir.string()});
    CHECK(r.code == 3);
    const auto rows = read_csv(dir / "masses.csv");
    REQUIRE(rows.size() == 3);
    CHECK(rows[1].back() != "ok");
    CHECK(rows[2].back() == "ok");
}

TEST_CASE("golden comparison tolerances")
{
    Table t("demo", {"x", "label"});
    t.add({1.0, std::string("a")});
    t.add({2.0, std::string("b, c")});
    const fs::path dir = scratch("golden");
    std::ofstream(dir / "demo.csv") << "x,label,status\n1.0000000001,a,ok\n2,\"b, c\",ok\n";
    CHECK(compare_golden(t, dir, 1e-9, 0.0)->empty());
    CHECK(compare_golden(t, dir, 1e-12, 0.0)->size() == 1);
    CHECK(!compare_golden(t, dir / "other.csv", 1e-9, 0.0).has_value());
    CHECK(compare_golden(t, scratch("empty"), 1e-9, 0.0)->size() == 1);
}
