#include "config.hpp"

#include "CLI11.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>

namespace hyperlab::cli {

namespace {

using Inputs = std::vector<std::string>;

double parse_double(const std::string& key, const std::string& s)
{
    double v = 0.0;
    const char* end = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || ptr != end) throw ValidationError("BadValue", key + ": '" + s + "' is not a number");
    return v;
}

const std::string& single(const std::string& key, const Inputs& in)
{
    if (in.size() != 1) throw ValidationError("BadValue", key + " expects a single value (quote strings with spaces)");
    return in.front();
}

double number(const std::string& key, const Inputs& in) { return parse_double(key, single(key, in)); }

int integer(const std::string& key, const Inputs& in)
{
    const double v = number(key, in);
    if (v != std::floor(v) || std::abs(v) > 1e9) throw ValidationError("BadValue", key + " expects an integer");
    return int(v);
}

bool boolean(const std::string& key, const Inputs& in)
{
    const std::string& s = single(key, in);
    if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
    if (s == "false" || s == "0" || s == "no" || s == "off") return false;
    throw ValidationError("BadValue", key + ": '" + s + "' is not a boolean");
}

std::vector<double> numbers(const std::string& key, const Inputs& in)
{
    std::vector<double> v;
    for (const std::string& s : in) v.push_back(parse_double(key, s));
    return v;
}

std::string join(const std::vector<double>& v)
{
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + format_double(v[i]);
    return s + "]";
}

void require(bool ok, const std::string& kind, const std::string& what)
{
    if (!ok) throw ValidationError(kind, what);
}

bool all_finite(const std::vector<double>& v)
{
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

bool increasing(const std::vector<double>& v)
{
    for (std::size_t i = 1; i < v.size(); ++i)
        if (!(v[i] > v[i - 1])) return false;
    return true;
}

} // namespace

std::string format_double(double v)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

MetricModel RunConfig::model() const
{
    if (metric.kind == "minkowski") return MetricModel::minkowski();
    if (metric.kind == "schwarzschild") {
        MetricModel m = MetricModel::schwarzschild(metric.mass);
        m.r_in = metric.r_in;
        m.r_out = metric.r_out;
        return m;
    }
    if (metric.kind == "glued") return MetricModel::glued(metric.mass, metric.r_in, metric.r_out);
    throw ValidationError("UnknownMetricKind", "metric.kind must be minkowski, schwarzschild or glued, got '" +
                                                   metric.kind + "'");
}

Vec4 RunConfig::origin_point() const { return Vec4(origin.t, origin.offset(0), origin.offset(1), origin.offset(2)); }

TraceOptions RunConfig::trace_options(bool transport_k) const
{
    TraceOptions o;
    o.ode.rel_tol = integrator.rel_tol;
    o.ode.abs_tol = integrator.abs_tol;
    o.ode.max_step = integrator.max_step;
    o.jacobi = true;
    o.transport_k = transport_k;
    return o;
}

std::vector<std::pair<std::string, std::string>> RunConfig::canonical() const
{
    const auto f = format_double;
    return {
        {"metric.kind", metric.kind},
        {"metric.mass", f(metric.mass)},
        {"metric.r_in", f(metric.r_in)},
        {"metric.r_out", f(metric.r_out)},
        {"origin.t", f(origin.t)},
        {"origin.offset", join({origin.offset(0), origin.offset(1), origin.offset(2)})},
        {"foliation.rho_min", f(foliation.rho_min)},
        {"foliation.rho_max", f(foliation.rho_max)},
        {"foliation.rho_samples", std::to_string(foliation.rho_samples)},
        {"foliation.zeta_max", f(foliation.zeta_max)},
        {"foliation.zeta_samples", std::to_string(foliation.zeta_samples)},
        {"foliation.theta_nodes", std::to_string(foliation.theta_nodes)},
        {"foliation.phi_nodes", std::to_string(foliation.phi_nodes)},
        {"integrator.rel_tol", f(integrator.rel_tol)},
        {"integrator.abs_tol", f(integrator.abs_tol)},
        {"integrator.max_step", f(integrator.max_step)},
        {"kg.r_max", f(kg.r_max)},
        {"kg.dr", f(kg.dr)},
        {"kg.t_max", f(kg.t_max)},
        {"kg.cfl", f(kg.cfl)},
        {"kg.amplitude", f(kg.amplitude)},
        {"kg.width", f(kg.width)},
        {"kg.center", f(kg.center)},
        {"kg.m2", f(kg.m2)},
        {"kg.output_dt", f(kg.output_dt)},
        {"kg.output_times", join(kg.output_times)},
        {"mass.rho", join(mass.rho)},
        {"mass.t", join(mass.t)},
        {"compare.zeta", f(compare.zeta)},
        {"compare.theta", f(compare.theta)},
        {"compare.phi", f(compare.phi)},
        {"compare.t_min", f(compare.t_min)},
        {"compare.t_max", f(compare.t_max)},
        {"compare.samples", std::to_string(compare.samples)},
        {"compare.cone_rho", join(compare.cone_rho)},
        {"compare.cone_uhat", f(compare.cone_uhat)},
        {"weyl.radii", join(weyl.radii)},
        {"weyl.sphere_rho", f(weyl.sphere_rho)},
        {"output.dir", output.dir},
        {"output.plot", output.plot ? "true" : "false"},
        {"output.golden", output.golden},
        {"output.golden_rel_tol", f(output.golden_rel_tol)},
        {"output.golden_abs_tol", f(output.golden_abs_tol)},
    };
}

std::string RunConfig::hash() const
{
    std::uint64_t h = 14695981039346656037ull;
    for (const auto& [k, v] : canonical()) {
        // Output location and golden comparison settings do not change the results.
        if (k.rfind("output.", 0) == 0) continue;
        for (char c : k + "=" + v + "\n") {
            h ^= std::uint8_t(c);
            h *= 1099511628211ull;
        }
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

RunConfig load_config(const std::string& path)
{
    std::vector<CLI::ConfigItem> items;
    try {
        items = CLI::ConfigTOML().from_file(path);
    } catch (const CLI::FileError& e) {
        throw ValidationError("ConfigMissing", "cannot read config file '" + path + "'");
    } catch (const CLI::Error& e) {
        throw ValidationError("ConfigParse", path + ": " + e.what());
    }

    RunConfig c;
    using Setter = std::function<void(const std::string&, const Inputs&)>;
    auto num = [](double& d) -> Setter { return [&d](const std::string& k, const Inputs& in) { d = number(k, in); }; };
    auto integ = [](int& d) -> Setter { return [&d](const std::string& k, const Inputs& in) { d = integer(k, in); }; };
    auto list = [](std::vector<double>& d) -> Setter {
        return [&d](const std::string& k, const Inputs& in) { d = numbers(k, in); };
    };
    auto text = [](std::string& d) -> Setter {
        return [&d](const std::string& k, const Inputs& in) { d = single(k, in); };
    };
    const std::map<std::string, Setter> setters{
        {"metric.kind", text(c.metric.kind)},
        {"metric.mass", num(c.metric.mass)},
        {"metric.r_in", num(c.metric.r_in)},
        {"metric.r_out", num(c.metric.r_out)},
        {"origin.t", num(c.origin.t)},
        {"origin.offset",
         [&c](const std::string& k, const Inputs& in) {
             const std::vector<double> v = numbers(k, in);
             if (v.size() != 3) throw ValidationError("BadValue", k + " expects three numbers");
             c.origin.offset = Vec3(v[0], v[1], v[2]);
         }},
        {"foliation.rho_min", num(c.foliation.rho_min)},
        {"foliation.rho_max", num(c.foliation.rho_max)},
        {"foliation.rho_samples", integ(c.foliation.rho_samples)},
        {"foliation.zeta_max", num(c.foliation.zeta_max)},
        {"foliation.zeta_samples", integ(c.foliation.zeta_samples)},
        {"foliation.theta_nodes", integ(c.foliation.theta_nodes)},
        {"foliation.phi_nodes", integ(c.foliation.phi_nodes)},
        {"integrator.rel_tol", num(c.integrator.rel_tol)},
        {"integrator.abs_tol", num(c.integrator.abs_tol)},
        {"integrator.max_step", num(c.integrator.max_step)},
        {"kg.r_max", num(c.kg.r_max)},
        {"kg.dr", num(c.kg.dr)},
        {"kg.t_max", num(c.kg.t_max)},
        {"kg.cfl", num(c.kg.cfl)},
        {"kg.amplitude", num(c.kg.amplitude)},
        {"kg.width", num(c.kg.width)},
        {"kg.center", num(c.kg.center)},
        {"kg.m2", num(c.kg.m2)},
        {"kg.output_dt", num(c.kg.output_dt)},
        {"kg.output_times", list(c.kg.output_times)},
        {"mass.rho", list(c.mass.rho)},
        {"mass.t", list(c.mass.t)},
        {"compare.zeta", num(c.compare.zeta)},
        {"compare.theta", num(c.compare.theta)},
        {"compare.phi", num(c.compare.phi)},
        {"compare.t_min", num(c.compare.t_min)},
        {"compare.t_max", num(c.compare.t_max)},
        {"compare.samples", integ(c.compare.samples)},
        {"compare.cone_rho", list(c.compare.cone_rho)},
        {"compare.cone_uhat", num(c.compare.cone_uhat)},
        {"weyl.radii", list(c.weyl.radii)},
        {"weyl.sphere_rho", num(c.weyl.sphere_rho)},
        {"output.dir", text(c.output.dir)},
        {"output.plot", [&c](const std::string& k, const Inputs& in) { c.output.plot = boolean(k, in); }},
        {"output.golden", text(c.output.golden)},
        {"output.golden_rel_tol", num(c.output.golden_rel_tol)},
        {"output.golden_abs_tol", num(c.output.golden_abs_tol)},
    };

    for (const CLI::ConfigItem& item : items) {
        if (item.name == "++" || item.name == "--") continue;
        const std::string key = item.fullname();
        const auto it = setters.find(key);
        if (it == setters.end()) throw ValidationError("UnknownKey", "unknown config key '" + key + "'");
        it->second(key, item.inputs);
    }
    return c;
}

void validate(const RunConfig& c)
{
    const MetricModel model = c.model();
    model.validate();

    std::vector<double> scalars{c.metric.mass, c.metric.r_in, c.metric.r_out, c.origin.t,
                                c.foliation.rho_min, c.foliation.rho_max, c.foliation.zeta_max,
                                c.integrator.rel_tol, c.integrator.abs_tol,
                                c.compare.zeta, c.compare.theta, c.compare.phi, c.compare.t_min, c.compare.t_max,
                                c.compare.cone_uhat, c.weyl.sphere_rho, c.output.golden_rel_tol,
                                c.output.golden_abs_tol};
    scalars.insert(scalars.end(), c.origin.offset.data(), c.origin.offset.data() + 3);
    for (const auto* v : {&c.mass.rho, &c.mass.t, &c.compare.cone_rho, &c.weyl.radii})
        scalars.insert(scalars.end(), v->begin(), v->end());
    require(all_finite(scalars), "NonFinite", "all numeric fields must be finite");
    require(!std::isnan(c.integrator.max_step) && c.integrator.max_step > 0.0, "BadIntegrator",
            "integrator.max_step must be positive (inf for no limit)");

    // The glued model needs the origin strictly inside the flat core.
    if (model.kind == MetricKind::GluedSchwarzschild) validate_origin(model, c.origin_point());

    const auto& f = c.foliation;
    require(f.rho_min > 0.0 && f.rho_max > f.rho_min, "BadFoliation", "need 0 < foliation.rho_min < foliation.rho_max");
    require(f.rho_samples >= 2, "BadFoliation", "foliation.rho_samples must be at least 2");
    require(f.zeta_max >= 0.0 && f.zeta_samples >= 1, "BadFoliation",
            "need foliation.zeta_max >= 0 and foliation.zeta_samples >= 1");
    require(f.theta_nodes >= 1 && f.phi_nodes >= 1, "BadFoliation", "angular node counts must be positive");
    require(c.integrator.rel_tol > 0.0 && c.integrator.abs_tol > 0.0, "BadIntegrator",
            "integrator tolerances must be positive");

    require(!c.mass.rho.empty() && !c.mass.t.empty(), "BadMassGrid", "mass.rho and mass.t must not be empty");
    for (double r : c.mass.rho) require(r > 0.0, "BadMassGrid", "mass.rho entries must be positive");
    require(increasing(c.mass.t), "BadMassGrid", "mass.t must be strictly increasing");

    const auto& z = c.compare;
    require(z.zeta > 0.0 && z.t_min > 0.0 && z.t_max > z.t_min && z.samples >= 2, "BadCompare",
            "need compare.zeta > 0, 0 < compare.t_min < compare.t_max and compare.samples >= 2");
    for (double r : z.cone_rho) require(r > 0.0, "BadCompare", "compare.cone_rho entries must be positive");

    require(!c.weyl.radii.empty() && c.weyl.sphere_rho > 0.0, "BadWeyl",
            "weyl.radii must not be empty and weyl.sphere_rho must be positive");
    for (double r : c.weyl.radii) require(r > 2.0 * c.metric.mass, "BadWeyl", "weyl.radii must lie outside r = 2M");

    require(!c.output.dir.empty(), "BadOutput", "output.dir must not be empty");
    require(c.output.golden_rel_tol >= 0.0 && c.output.golden_abs_tol >= 0.0, "BadOutput",
            "golden tolerances must be non-negative");

    hyperlab::validate(c.kg);
}

} // namespace hyperlab::cli
