#include "ftla/config.hpp"

#include <array>
#include <fstream>
#include <nlohmann/json.hpp>

#include "ftla/output.hpp"

namespace ftla {

using nlohmann::json;

namespace {

double require_positive(const json& j, const std::string& key, double dflt) {
    double v = j.value(key, dflt);
    if (!(v > 0)) throw Error("config field '" + key + "' must be positive");
    return v;
}

Region region_from_json(const json& j) {
    Region r;
    if (j.contains("points")) {
        for (const auto& p : j.at("points")) {
            VectorXd v(p.size());
            Eigen::Index i = 0;
            for (const auto& c : p) v[i++] = c.get<double>();
            r.explicit_points.push_back(v);
        }
        if (r.explicit_points.empty()) throw Error("region.points must not be empty");
        return r;
    }
    const auto& bounds = j.at("bounds");
    r.bounds.resize(static_cast<Eigen::Index>(bounds.size()), 2);
    Eigen::Index i = 0;
    for (const auto& b : bounds) {
        r.bounds(i, 0) = b.at(0).get<double>();
        r.bounds(i, 1) = b.at(1).get<double>();
        ++i;
    }
    for (const auto& g : j.at("grid")) r.grid.push_back(g.get<int>());
    return r;
}

json region_to_json(const Region& r) {
    json j;
    if (!r.explicit_points.empty()) {
        json pts = json::array();
        for (const auto& p : r.explicit_points) {
            json row = json::array();
            for (Eigen::Index i = 0; i < p.size(); ++i) row.push_back(p[i]);
            pts.push_back(row);
        }
        j["points"] = pts;
        return j;
    }
    json bounds = json::array();
    for (Eigen::Index i = 0; i < r.bounds.rows(); ++i)
        bounds.push_back(json::array({r.bounds(i, 0), r.bounds(i, 1)}));
    j["bounds"] = bounds;
    j["grid"] = r.grid;
    return j;
}

}  // namespace

RunConfig parse_config(const json& j) {
    RunConfig cfg;
    if (!j.contains("system")) throw Error("config requires a 'system' block");
    const json& sys = j.at("system");
    if (sys.contains("builtin")) {
        cfg.system.builtin = sys.at("builtin").get<std::string>();
        if (sys.contains("params"))
            for (const auto& [k, v] : sys.at("params").items())
                cfg.system.overrides[k] = v.get<double>();
    } else if (sys.contains("dsl_file")) {
        cfg.system.dsl_file = sys.at("dsl_file").get<std::string>();
        std::ifstream probe(cfg.system.dsl_file);
        if (!probe) throw Error("config references missing DSL file '" + cfg.system.dsl_file + "'");
    } else {
        throw Error("system block needs 'builtin' or 'dsl_file'");
    }

    if (j.contains("region")) {
        cfg.region = region_from_json(j.at("region"));
        cfg.region_from_config = true;
    }
    cfg.T_bar = j.value("T_bar", 0.0);
    if (j.contains("dims")) {
        const auto& d = j.at("dims");
        if (d.size() != 3) throw Error("dims must be [ns, nc, nu]");
        cfg.dims = std::array<int, 3>{d.at(0).get<int>(), d.at(1).get<int>(), d.at(2).get<int>()};
    }

    cfg.diagnosis.dt = require_positive(j, "dt", cfg.diagnosis.dt);
    cfg.diagnosis.t_samples = j.value("t_samples", cfg.diagnosis.t_samples);
    if (cfg.diagnosis.t_samples < 1) throw Error("t_samples must be >= 1");
    if (j.contains("ode")) {
        cfg.diagnosis.tols.rel = require_positive(j.at("ode"), "rel", cfg.diagnosis.tols.rel);
        cfg.diagnosis.tols.abs = require_positive(j.at("ode"), "abs", cfg.diagnosis.tols.abs);
    }
    if (j.contains("diagnosis")) {
        const json& d = j.at("diagnosis");
        cfg.diagnosis.min_resolvability = d.value("min_resolvability", cfg.diagnosis.min_resolvability);
        cfg.diagnosis.min_delta_mu = d.value("min_delta_mu", cfg.diagnosis.min_delta_mu);
        cfg.diagnosis.cond_limit = require_positive(d, "cond_limit", cfg.diagnosis.cond_limit);
        cfg.diagnosis.cutoff_fraction = require_positive(d, "cutoff_fraction", cfg.diagnosis.cutoff_fraction);
        cfg.diagnosis.trailing_fraction = require_positive(d, "trailing_fraction", cfg.diagnosis.trailing_fraction);
    }
    cfg.diagnosis.workers = j.value("workers", 0);

    if (j.contains("manifold")) {
        const json& m = j.at("manifold");
        for (const auto& i : m.value("independent", json::array())) {
            int idx = i.get<int>();
            if (idx < 1) throw Error("manifold.independent indices are 1-based");
            cfg.manifold.independent.push_back(idx);
        }
        for (const auto& row : m.value("values", json::array())) {
            std::vector<double> v;
            for (const auto& c : row) v.push_back(c.get<double>());
            cfg.manifold.values.push_back(v);
        }
        for (const auto& g : m.value("guess", json::array()))
            cfg.manifold.guess.push_back(g.get<double>());
        if (m.contains("schedule")) {
            const json& s = m.at("schedule");
            cfg.manifold.schedule.T_fwd0 = require_positive(s, "T_fwd0", cfg.manifold.schedule.T_fwd0);
            cfg.manifold.schedule.T_bwd0 = require_positive(s, "T_bwd0", cfg.manifold.schedule.T_bwd0);
            cfg.manifold.schedule.dT_fwd = s.value("dT_fwd", cfg.manifold.schedule.dT_fwd);
            cfg.manifold.schedule.dT_bwd = s.value("dT_bwd", cfg.manifold.schedule.dT_bwd);
            if (cfg.manifold.schedule.dT_fwd < 0 || cfg.manifold.schedule.dT_bwd < 0)
                throw Error("schedule increments must be >= 0");
            cfg.manifold.schedule.max_outer = s.value("max_outer", cfg.manifold.schedule.max_outer);
            cfg.manifold.schedule.max_inner = s.value("max_inner", cfg.manifold.schedule.max_inner);
        }
        if (m.contains("tols")) {
            const json& t = m.at("tols");
            cfg.manifold.tols.residual = require_positive(t, "residual", cfg.manifold.tols.residual);
            cfg.manifold.tols.rel_change = require_positive(t, "rel_change", cfg.manifold.tols.rel_change);
            cfg.manifold.tols.theta = require_positive(t, "theta", cfg.manifold.tols.theta);
            cfg.manifold.tols.outer = require_positive(t, "outer", cfg.manifold.tols.outer);
        }
        cfg.manifold.warm_start = m.value("warm_start", true);
        cfg.manifold.dt = m.value("dt", 0.0);
        if (cfg.manifold.dt < 0) throw Error("manifold.dt must be positive");
        cfg.manifold.escape_factor = m.value("escape_factor", 10.0);
        if (!(cfg.manifold.escape_factor > 0)) throw Error("manifold.escape_factor must be positive");
    }

    if (j.contains("verify")) {
        const json& v = j.at("verify");
        cfg.verify.t_plus = v.value("t_plus", cfg.verify.t_plus);
        cfg.verify.t_minus = v.value("t_minus", cfg.verify.t_minus);
        cfg.verify.estimator = v.value("estimator", cfg.verify.estimator);
        if (cfg.verify.estimator != "ftla" && cfg.verify.estimator != "ildm" &&
            cfg.verify.estimator != "both")
            throw Error("verify.estimator must be ftla, ildm, or both");
        if (!(cfg.verify.t_plus > 0)) throw Error("verify.t_plus must be positive");
        if (!(cfg.verify.t_minus < 0)) throw Error("verify.t_minus must be negative");
    }

    if (j.contains("converge")) {
        const json& c = j.at("converge");
        for (const auto& chk : c.value("checks", json::array())) {
            ConvergeCheck cc;
            cc.direction = chk.value("direction", std::string("-"));
            cc.index = chk.value("index", 1);
            if (cc.direction != "+" && cc.direction != "-")
                throw Error("converge.checks direction must be '+' or '-'");
            cfg.converge.checks.push_back(cc);
        }
        for (const auto& t : c.value("T_grid", json::array()))
            cfg.converge.T_grid.push_back(t.get<double>());
    }

    cfg.output_dir = j.value("output_dir", cfg.output_dir);
    cfg.seed = j.value("seed", cfg.seed);
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open config file '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw Error("config parse failure in '" + path + "': " + e.what());
    }
    return parse_config(j);
}

json config_to_json(const RunConfig& cfg) {
    json j;
    json sys;
    if (!cfg.system.builtin.empty()) {
        sys["builtin"] = cfg.system.builtin;
        if (!cfg.system.overrides.empty()) {
            json p;
            for (const auto& [k, v] : cfg.system.overrides) p[k] = v;
            sys["params"] = p;
        }
    } else {
        sys["dsl_file"] = cfg.system.dsl_file;
    }
    j["system"] = sys;
    if (cfg.region_from_config) j["region"] = region_to_json(cfg.region);
    if (cfg.T_bar > 0) j["T_bar"] = cfg.T_bar;
    if (cfg.dims) j["dims"] = json::array({(*cfg.dims)[0], (*cfg.dims)[1], (*cfg.dims)[2]});
    j["dt"] = cfg.diagnosis.dt;
    j["t_samples"] = cfg.diagnosis.t_samples;
    j["ode"] = {{"rel", cfg.diagnosis.tols.rel}, {"abs", cfg.diagnosis.tols.abs}};
    j["diagnosis"] = {{"min_resolvability", cfg.diagnosis.min_resolvability},
                      {"min_delta_mu", cfg.diagnosis.min_delta_mu},
                      {"cond_limit", cfg.diagnosis.cond_limit},
                      {"cutoff_fraction", cfg.diagnosis.cutoff_fraction},
                      {"trailing_fraction", cfg.diagnosis.trailing_fraction}};
    j["workers"] = cfg.diagnosis.workers;
    if (!cfg.manifold.independent.empty()) {
        json m;
        m["independent"] = cfg.manifold.independent;
        m["values"] = cfg.manifold.values;
        m["guess"] = cfg.manifold.guess;
        m["schedule"] = {{"T_fwd0", cfg.manifold.schedule.T_fwd0},
                         {"T_bwd0", cfg.manifold.schedule.T_bwd0},
                         {"dT_fwd", cfg.manifold.schedule.dT_fwd},
                         {"dT_bwd", cfg.manifold.schedule.dT_bwd},
                         {"max_outer", cfg.manifold.schedule.max_outer},
                         {"max_inner", cfg.manifold.schedule.max_inner}};
        m["tols"] = {{"residual", cfg.manifold.tols.residual},
                     {"rel_change", cfg.manifold.tols.rel_change},
                     {"theta", cfg.manifold.tols.theta},
                     {"outer", cfg.manifold.tols.outer}};
        m["warm_start"] = cfg.manifold.warm_start;
        if (cfg.manifold.dt > 0) m["dt"] = cfg.manifold.dt;
        m["escape_factor"] = cfg.manifold.escape_factor;
        j["manifold"] = m;
    }
    j["verify"] = {{"t_plus", cfg.verify.t_plus},
                   {"t_minus", cfg.verify.t_minus},
                   {"estimator", cfg.verify.estimator}};
    if (!cfg.converge.checks.empty()) {
        json checks = json::array();
        for (const auto& c : cfg.converge.checks)
            checks.push_back({{"direction", c.direction}, {"index", c.index}});
        j["converge"] = {{"checks", checks}, {"T_grid", cfg.converge.T_grid}};
    }
    j["output_dir"] = cfg.output_dir;
    j["seed"] = cfg.seed;
    return j;
}

std::string config_hash(const RunConfig& cfg) {
    return hex64(fnv1a64(config_to_json(cfg).dump()));
}

BenchmarkSystem RunConfig::resolve() const {
    BenchmarkSystem sys;
    if (!system.builtin.empty()) {
        sys = make_system(system.builtin, system.overrides);
    } else {
        sys.name = "dsl";
        sys.field = load_field_file(system.dsl_file);
        sys.reference_manifold = [](const VectorXd&) -> std::optional<VectorXd> {
            return std::nullopt;
        };
        sys.analytic_normals = [](const VectorXd&) -> std::optional<MatrixXd> {
            return std::nullopt;
        };
        sys.default_dt = 0.1;
    }
    if (region_from_config) sys.default_region = region;
    if (T_bar > 0) sys.default_T_bar = T_bar;
    if (dims) {
        sys.ns = (*dims)[0];
        sys.nc = (*dims)[1];
        sys.nu = (*dims)[2];
    }
    if (sys.default_T_bar <= 0) throw Error("T_bar must be set for this system");
    if (sys.default_region.dimension() == 0) throw Error("a region must be configured");
    return sys;
}

}  // namespace ftla
