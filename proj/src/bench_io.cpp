#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "compactflow/bench.hpp"
#include "compactflow/errors.hpp"
#include "json.hpp"

namespace compactflow {

using nlohmann::json;

namespace {

constexpr CaseTag kTags[] = {CaseTag::PulseDeform, CaseTag::PulseRandom, CaseTag::Freestream,
                             CaseTag::Taylor,      CaseTag::Cavity,      CaseTag::CavityDeform};

json vec(Vec2 v) { return json::array({v.x, v.y}); }

Vec2 vec_from(const json& j, const char* key) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
        throw InvalidArgument(std::string("config key '") + key + "' needs a pair of numbers");
    return {j[0].get<double>(), j[1].get<double>()};
}

double domain_length(CaseTag kind) {
    switch (kind) {
    case CaseTag::PulseDeform:
    case CaseTag::PulseRandom: return 2.0;
    case CaseTag::Freestream:
    case CaseTag::Taylor: return std::numbers::pi;
    case CaseTag::Cavity:
    case CaseTag::CavityDeform: return 1.0;
    }
    return 1.0;
}

std::string metric_name(MetricMode m) { return m == MetricMode::Conservative ? "conservative" : "differential"; }

json to_json(const CaseConfig& c) {
    return json{{"case", to_string(c.kind)},
                {"grid", c.grid},
                {"dt", c.dt},
                {"dt_rule", c.dt_from_grid ? "h2" : "fixed"},
                {"t_end", c.t_end},
                {"report_times", c.report_times},
                {"re", c.re},
                {"diffusion", c.diffusion},
                {"velocity", vec(c.velocity)},
                {"pulse_width", c.pulse_width},
                {"centre", vec(c.centre)},
                {"taylor_n", c.taylor_n},
                {"moving", c.moving},
                {"amplitude", c.amplitude},
                {"period", c.period},
                {"translation", c.translation},
                {"waves", c.waves},
                {"wave_amplitude", c.wave_amplitude},
                {"omega", c.omega},
                {"stretch_amplitude", c.stretch_amplitude},
                {"bump_amplitude", c.bump_amplitude},
                {"bump_frequency", c.bump_frequency},
                {"random_fraction", c.random_fraction},
                {"frozen_layers", c.frozen_layers},
                {"metric_mode", metric_name(c.metric_mode)},
                {"time_order", c.time_order},
                {"formulation", c.formulation},
                {"picard_tol", c.picard_tol},
                {"max_picard", c.max_picard},
                {"linear_tol", c.linear_tol},
                {"monitor", vec(c.monitor)},
                {"out_dir", c.out_dir},
                {"seed", c.seed},
                {"export_fields", c.export_fields}};
}

template <class T>
T get_as(const json& v, const std::string& key) {
    try {
        return v.get<T>();
    } catch (const json::exception&) {
        throw InvalidArgument("config key '" + key + "' has the wrong type");
    }
}

CaseConfig from_json(const json& j) {
    if (!j.is_object()) throw InvalidArgument("config must be a JSON object");
    if (!j.contains("case")) throw InvalidArgument("config needs a 'case' key");
    CaseConfig c = CaseConfig::defaults(case_tag_from_string(get_as<std::string>(j.at("case"), "case")));
    for (const auto& [key, v] : j.items()) {
        auto num = [&] { return get_as<double>(v, key); };
        auto integer = [&] {
            if (!v.is_number_integer()) throw InvalidArgument("config key '" + key + "' needs an integer");
            return v.get<long long>();
        };
        if (key == "case") continue;
        else if (key == "grid") c.grid = static_cast<int>(integer());
        else if (key == "dt") c.dt = num();
        else if (key == "dt_rule") {
            const auto rule = get_as<std::string>(v, key);
            if (rule != "h2" && rule != "fixed") throw InvalidArgument("dt_rule must be 'fixed' or 'h2'");
            c.dt_from_grid = rule == "h2";
        } else if (key == "t_end") c.t_end = num();
        else if (key == "report_times") c.report_times = get_as<std::vector<double>>(v, key);
        else if (key == "re") c.re = num();
        else if (key == "diffusion") c.diffusion = num();
        else if (key == "velocity") c.velocity = vec_from(v, "velocity");
        else if (key == "pulse_width") c.pulse_width = num();
        else if (key == "centre") c.centre = vec_from(v, "centre");
        else if (key == "taylor_n") c.taylor_n = static_cast<int>(integer());
        else if (key == "moving") c.moving = get_as<bool>(v, key);
        else if (key == "amplitude") c.amplitude = num();
        else if (key == "period") c.period = num();
        else if (key == "translation") c.translation = num();
        else if (key == "waves") c.waves = static_cast<int>(integer());
        else if (key == "wave_amplitude") c.wave_amplitude = num();
        else if (key == "omega") c.omega = num();
        else if (key == "stretch_amplitude") c.stretch_amplitude = num();
        else if (key == "bump_amplitude") c.bump_amplitude = num();
        else if (key == "bump_frequency") c.bump_frequency = num();
        else if (key == "random_fraction") c.random_fraction = num();
        else if (key == "frozen_layers") c.frozen_layers = static_cast<int>(integer());
        else if (key == "metric_mode") {
            const auto m = get_as<std::string>(v, key);
            if (m == "differential") c.metric_mode = MetricMode::Differential;
            else if (m == "conservative") c.metric_mode = MetricMode::Conservative;
            else throw InvalidArgument("metric_mode must be 'differential' or 'conservative'");
        } else if (key == "time_order") c.time_order = static_cast<int>(integer());
        else if (key == "formulation") c.formulation = get_as<std::string>(v, key);
        else if (key == "picard_tol") c.picard_tol = num();
        else if (key == "max_picard") c.max_picard = static_cast<int>(integer());
        else if (key == "linear_tol") c.linear_tol = num();
        else if (key == "monitor") c.monitor = vec_from(v, "monitor");
        else if (key == "out_dir") c.out_dir = get_as<std::string>(v, key);
        else if (key == "seed") {
            if (!v.is_number_unsigned()) throw InvalidArgument("seed must be a nonnegative integer");
            c.seed = v.get<std::uint64_t>();
        } else if (key == "export_fields") c.export_fields = get_as<bool>(v, key);
        else throw InvalidArgument("unknown config key '" + key + "'");
    }
    c.validate();
    return c;
}

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// Shortest text that reads back to the same double.
std::string shortest(double v) {
    char buf[40];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

std::string csv_number(double v) { return std::isfinite(v) ? shortest(v) : ""; }

}  // namespace

std::string to_string(CaseTag c) {
    switch (c) {
    case CaseTag::PulseDeform: return "pulse-deform";
    case CaseTag::PulseRandom: return "pulse-random";
    case CaseTag::Freestream: return "freestream";
    case CaseTag::Taylor: return "taylor";
    case CaseTag::Cavity: return "cavity";
    case CaseTag::CavityDeform: return "cavity-deform";
    }
    return "?";
}

CaseTag case_tag_from_string(const std::string& s) {
    for (CaseTag t : kTags)
        if (to_string(t) == s) return t;
    throw InvalidArgument("unknown case '" + s + "'");
}

CaseConfig CaseConfig::defaults(CaseTag kind) {
    CaseConfig c;
    c.kind = kind;
    switch (kind) {
    case CaseTag::PulseDeform:
        c.grid = 21;
        c.dt_from_grid = true;
        c.t_end = 1.0;
        c.report_times = {0.5, 1.0};
        break;
    case CaseTag::PulseRandom:
        c.grid = 41;
        c.dt = 0.005;
        c.t_end = 0.5;
        c.time_order = 1;  // a fresh random mesh every step has no smooth node path
        break;
    case CaseTag::Freestream:
        c.grid = 25;
        c.dt = 0.025;
        c.t_end = 2.5;
        c.velocity = {1.0, 0.0};
        c.waves = 4;
        c.wave_amplitude = 1.0;
        break;
    case CaseTag::Taylor:
        c.grid = 33;
        c.dt_from_grid = true;
        c.t_end = 5.0;
        c.waves = 6;
        c.wave_amplitude = std::numbers::pi / 64.0;
        break;
    case CaseTag::Cavity:
        c.grid = 65;
        c.dt = 0.0025;
        c.t_end = 20.0;
        c.moving = false;
        c.formulation = "psi-omega";
        break;
    case CaseTag::CavityDeform:
        c.grid = 65;
        c.dt = 0.0025;
        c.t_end = 40.0;
        c.formulation = "psi-omega";
        break;
    }
    return c;
}

double CaseConfig::spacing() const { return domain_length(kind) / (grid - 1); }

double CaseConfig::effective_dt() const { return t_end / steps(); }

int CaseConfig::steps() const {
    const double base = dt_from_grid ? spacing() * spacing() : dt;
    return static_cast<int>(std::ceil(t_end / base - 1e-9));
}

void CaseConfig::validate() const {
    auto need = [](bool ok, const std::string& what) {
        if (!ok) throw InvalidArgument("invalid config: " + what);
    };
    need(grid >= 5, "grid must be at least 5");
    need(dt_from_grid || dt > 0.0, "dt must be positive");
    need(t_end > 0.0, "t_end must be positive");
    need(re > 0.0, "re must be positive");
    need(diffusion > 0.0, "diffusion must be positive");
    need(pulse_width > 0.0, "pulse_width must be positive");
    need(taylor_n >= 1, "taylor_n must be at least 1");
    need(period > 0.0, "period must be positive");
    need(waves >= 1, "waves must be at least 1");
    need(omega >= 0.0, "omega must be nonnegative");
    need(bump_frequency > 0.0, "bump_frequency must be positive");
    need(random_fraction >= 0.0 && random_fraction < 0.5, "random_fraction must lie in [0, 0.5)");
    need(frozen_layers >= 1, "frozen_layers must be at least 1");
    need(time_order == 1 || time_order == 2, "time_order must be 1 or 2");
    need(formulation == "primitive" || formulation == "psi-omega",
         "formulation must be 'primitive' or 'psi-omega'");
    need(picard_tol > 0.0 && max_picard >= 1, "picard settings must be positive");
    need(linear_tol > 0.0, "linear_tol must be positive");
    const double h = effective_dt();
    for (double t : report_times) {
        need(t > 0.0 && t <= t_end * (1.0 + 1e-12), "report times must lie in (0, t_end]");
        need(std::abs(t / h - std::round(t / h)) < 1e-6, "report time " + fmt17(t) + " is not a step time");
    }
}

CaseConfig parse_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw InvalidArgument(std::string("config is not valid JSON: ") + e.what());
    }
    return from_json(j);
}

CaseConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open config '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string serialize_config(const CaseConfig& cfg) { return to_json(cfg).dump(2); }

CaseConfig apply_overrides(const CaseConfig& cfg, const std::vector<std::string>& assignments) {
    json j = to_json(cfg);
    for (const std::string& a : assignments) {
        const auto eq = a.find('=');
        if (eq == std::string::npos || eq == 0) throw InvalidArgument("override must look like key=value");
        const std::string key = a.substr(0, eq), text = a.substr(eq + 1);
        json value = json::parse(text, nullptr, false);
        if (value.is_discarded()) value = text;
        if (!j.contains(key)) throw InvalidArgument("unknown config key '" + key + "'");
        j[key] = value;
    }
    return from_json(j);
}

CaseConfig apply_override(const CaseConfig& cfg, const std::string& assignment) {
    return apply_overrides(cfg, {assignment});
}

std::string report_csv(const std::vector<RunReport>& runs) {
    const auto orders = sweep_orders(runs);
    std::ostringstream out;
    out << "case,grid,dt,time,l1,l2,linf,order_l1,order_l2,order_linf,picard_iters_mean,div_max,seconds\n";
    for (std::size_t r = 0; r < runs.size(); ++r) {
        const RunReport& run = runs[r];
        for (const ErrorSample& e : run.errors) {
            const OrderRow* order = nullptr;
            for (const OrderRow& o : orders)
                if (o.fine == r && o.quantity == e.quantity && o.time == e.time) order = &o;
            const std::string name = e.quantity == "phi" ? run.case_name : run.case_name + "." + e.quantity;
            out << name << ',' << run.grid << ',' << shortest(run.dt) << ',' << shortest(e.time) << ','
                << shortest(e.norms.l1) << ',' << shortest(e.norms.l2) << ',' << shortest(e.norms.linf) << ','
                << (order ? csv_number(order->order.l1) : "") << ','
                << (order ? csv_number(order->order.l2) : "") << ','
                << (order ? csv_number(order->order.linf) : "") << ',' << shortest(run.picard_mean) << ','
                << shortest(run.div_max) << ',' << shortest(run.seconds) << '\n';
        }
    }
    return out.str();
}

void write_report_csv(const std::vector<RunReport>& runs, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path + "'");
    out << report_csv(runs);
    if (!out) throw Error("write to '" + path + "' failed");
}

void export_field(const PhysicalGrid& g, const std::vector<NamedField>& fields, const std::string& path) {
    if (!g.y.same_shape(g.x)) throw InvalidArgument("grid coordinates differ in shape");
    for (const NamedField& f : fields)
        if (!f.values.same_shape(g.x)) throw InvalidArgument("field '" + f.name + "' does not match the grid");
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path + "'");
    out << g.x.nx() << ' ' << g.x.ny() << ' ' << fmt17(g.time) << '\n';
    for (std::size_t n = 0; n < g.x.size(); ++n) {
        out << fmt17(g.x[n]) << ' ' << fmt17(g.y[n]);
        for (const NamedField& f : fields) out << ' ' << fmt17(f.values[n]);
        out << '\n';
    }
    if (!out) throw Error("write to '" + path + "' failed");
}

FieldFile read_field(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open '" + path + "'");
    FieldFile f;
    std::string line;
    if (!std::getline(in, line)) throw Error("'" + path + "' is empty");
    {
        std::istringstream head(line);
        if (!(head >> f.nx >> f.ny >> f.time) || f.nx <= 0 || f.ny <= 0)
            throw Error("'" + path + "' has a malformed header");
    }
    f.x = Field(f.nx, f.ny);
    f.y = Field(f.nx, f.ny);
    const std::size_t count = static_cast<std::size_t>(f.nx) * f.ny;
    for (std::size_t n = 0; n < count; ++n) {
        if (!std::getline(in, line)) throw Error("'" + path + "' ends early");
        std::vector<double> row;
        std::istringstream ls(line);
        for (std::string tok; ls >> tok;) row.push_back(std::strtod(tok.c_str(), nullptr));
        if (row.size() < 2) throw Error("'" + path + "' has a short row");
        if (n == 0) f.fields.assign(row.size() - 2, Field(f.nx, f.ny));
        if (row.size() != f.fields.size() + 2) throw Error("'" + path + "' has ragged rows");
        f.x[n] = row[0];
        f.y[n] = row[1];
        for (std::size_t k = 0; k < f.fields.size(); ++k) f.fields[k][n] = row[k + 2];
    }
    return f;
}

CentrelineReference load_centreline_reference(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open '" + path + "'");
    CentrelineReference ref;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#' || line.rfind("line", 0) == 0) continue;
        std::istringstream ls(line);
        std::string which, s, v;
        if (!std::getline(ls, which, ',') || !std::getline(ls, s, ',') || !std::getline(ls, v, ','))
            throw Error("'" + path + "': malformed row '" + line + "'");
        const std::pair<double, double> pt{std::stod(s), std::stod(v)};
        if (which == "u") ref.u.push_back(pt);
        else if (which == "v") ref.v.push_back(pt);
        else throw Error("'" + path + "': unknown line '" + which + "'");
    }
    if (ref.u.empty() || ref.v.empty()) throw Error("'" + path + "' lacks u or v points");
    return ref;
}

}  // namespace compactflow
