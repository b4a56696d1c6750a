#include "ftla/runner.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <nlohmann/json.hpp>

#include "ftla/ildm.hpp"
#include "ftla/output.hpp"
#include "ftla/parallel.hpp"

namespace ftla {

using nlohmann::json;

namespace {

std::string out_path(const RunConfig& cfg, const std::string& name) {
    std::filesystem::create_directories(cfg.output_dir);
    return (std::filesystem::path(cfg.output_dir) / name).string();
}

Parametrization resolve_param(const RunConfig& cfg, const BenchmarkSystem& sys) {
    const int n = sys.field.dimension();
    Parametrization p;
    if (!cfg.manifold.independent.empty()) {
        for (int idx : cfg.manifold.independent) {
            if (idx < 1 || idx > n) throw Error("manifold.independent index out of range");
            p.independent.push_back(idx - 1);
        }
        for (int i = 0; i < n; ++i)
            if (std::find(p.independent.begin(), p.independent.end(), i) == p.independent.end())
                p.dependent.push_back(i);
        return p;
    }
    if (!sys.default_param.independent.empty()) return sys.default_param;
    throw Error("manifold.independent must be configured for this system");
}

ManifoldOptions manifold_options(const RunConfig& cfg, const BenchmarkSystem& sys) {
    ManifoldOptions o;
    o.ns = sys.ns;
    o.nc = sys.nc;
    o.nu = sys.nu;
    if (o.nc < 1) throw Error("splitting dimensions (ns, nc, nu) are required; set 'dims'");
    o.dt = cfg.manifold.dt > 0 ? cfg.manifold.dt : cfg.diagnosis.dt;
    o.schedule = cfg.manifold.schedule;
    o.tols = cfg.manifold.tols;
    o.ode = cfg.diagnosis.tols;
    o.region_diameter = sys.default_region.dimension() > 0 ? sys.default_region.diameter() : 0.0;
    o.escape_factor = cfg.manifold.escape_factor;
    return o;
}

std::vector<ManifoldPoint> solve_grid(const VectorField& vf, const Parametrization& param,
                                      const RunConfig& cfg, const ManifoldOptions& opts) {
    if (cfg.manifold.values.empty()) throw Error("manifold.values must list independent values");
    const auto nd = param.dependent.size();
    if (cfg.manifold.guess.size() != nd)
        throw Error("manifold.guess must provide one value per dependent coordinate");

    std::vector<ManifoldPoint> out;
    VectorXd guess(static_cast<Eigen::Index>(nd));
    for (std::size_t i = 0; i < nd; ++i) guess[static_cast<Eigen::Index>(i)] = cfg.manifold.guess[i];

    if (cfg.manifold.warm_start) {
        for (const auto& row : cfg.manifold.values) {
            if (row.size() != param.independent.size())
                throw Error("manifold.values row length must match the independent count");
            VectorXd indep(static_cast<Eigen::Index>(row.size()));
            for (std::size_t i = 0; i < row.size(); ++i) indep[static_cast<Eigen::Index>(i)] = row[i];
            ManifoldPoint p = solve_manifold_point(vf, param, indep, guess, opts);
            for (std::size_t i = 0; i < nd; ++i)
                guess[static_cast<Eigen::Index>(i)] = p.x[param.dependent[i]];
            out.push_back(std::move(p));
        }
        return out;
    }
    out.resize(cfg.manifold.values.size());
    parallel_for(cfg.manifold.values.size(), cfg.diagnosis.workers, [&](std::size_t k) {
        const auto& row = cfg.manifold.values[k];
        if (row.size() != param.independent.size())
            throw Error("manifold.values row length must match the independent count");
        VectorXd indep(static_cast<Eigen::Index>(row.size()));
        for (std::size_t i = 0; i < row.size(); ++i) indep[static_cast<Eigen::Index>(i)] = row[i];
        out[k] = solve_manifold_point(vf, param, indep, guess, opts);
    });
    return out;
}

double reference_error(const BenchmarkSystem& sys, const Parametrization& param,
                       const VectorXd& x) {
    if (!sys.reference_manifold) return std::numeric_limits<double>::quiet_NaN();
    // The reference closure is defined for the system's own parametrization.
    if (!sys.default_param.independent.empty() &&
        param.independent != sys.default_param.independent)
        return std::numeric_limits<double>::quiet_NaN();
    VectorXd indep(static_cast<Eigen::Index>(param.independent.size()));
    for (std::size_t i = 0; i < param.independent.size(); ++i)
        indep[static_cast<Eigen::Index>(i)] = x[param.independent[i]];
    auto ref = sys.reference_manifold(indep);
    if (!ref) return std::numeric_limits<double>::quiet_NaN();
    double err2 = 0;
    for (std::size_t i = 0; i < param.dependent.size(); ++i) {
        const double d = x[param.dependent[i]] - (*ref)[static_cast<Eigen::Index>(i)];
        err2 += d * d;
    }
    return std::sqrt(err2);
}

RunResult run_spectrum(const RunConfig& cfg, const BenchmarkSystem& sys,
                       const std::string& hash) {
    const auto pts = sys.default_region.points();
    const double T_bar = sys.default_T_bar;
    const double dt = cfg.diagnosis.dt;
    const int segments = static_cast<int>(std::lround(T_bar / dt));
    const int stride = std::max(1, segments / std::max(1, cfg.diagnosis.t_samples));

    std::vector<std::vector<FtleSample>> fwd(pts.size()), bwd(pts.size());
    parallel_for(pts.size(), cfg.diagnosis.workers, [&](std::size_t i) {
        auto fc = transition_chain(sys.field, pts[i], T_bar, dt, Direction::Forward,
                                   cfg.diagnosis.tols);
        auto bc = transition_chain(sys.field, pts[i], T_bar, dt, Direction::Backward,
                                   cfg.diagnosis.tols);
        const int f1 = static_cast<int>(std::lround(dt / fc.dt));
        const int f2 = static_cast<int>(std::lround(dt / bc.dt));
        fwd[i] = ftle_curves(fc, stride * f1);
        bwd[i] = ftle_curves(bc, stride * f2);
    });

    Csv csv;
    csv.columns = {"point", "direction", "T", "index", "exponent"};
    for (std::size_t p = 0; p < pts.size(); ++p) {
        for (const auto& s : fwd[p])
            for (Eigen::Index i = 0; i < s.exponents.size(); ++i)
                csv.rows.push_back({std::to_string(p), "+", fmt17(s.T), std::to_string(i + 1),
                                    fmt17(s.exponents[i])});
        for (const auto& s : bwd[p])
            for (Eigen::Index i = 0; i < s.exponents.size(); ++i)
                csv.rows.push_back({std::to_string(p), "-", fmt17(s.T), std::to_string(i + 1),
                                    fmt17(s.exponents[i])});
    }
    RunResult r;
    const std::string path = out_path(cfg, "spectrum.csv");
    write_csv(path, csv, hash);
    r.files.push_back(path);
    return r;
}

RunResult run_diagnose(const RunConfig& cfg, const BenchmarkSystem& sys,
                       const std::string& hash) {
    DiagnoseOptions opts = cfg.diagnosis;
    if (cfg.dims) {
        opts.force_ns = (*cfg.dims)[0];
        opts.force_nc = (*cfg.dims)[1];
        opts.force_nu = (*cfg.dims)[2];
    }
    TwoTimescaleDiagnosis d =
        check_two_timescale(sys.field, sys.default_region, sys.default_T_bar, opts);

    json j;
    j["tool_version"] = kToolVersion;
    j["config_hash"] = hash;
    j["verdict"] = d.verdict;
    j["T_bar"] = sys.default_T_bar;
    if (d.gap) {
        j["n_s"] = d.gap->ns;
        j["n_c"] = d.gap->nc;
        j["n_u"] = d.gap->nu;
        j["alpha"] = d.gap->alpha;
        j["beta"] = d.gap->beta;
        j["delta_mu"] = d.gap->delta_mu;
        j["t_s"] = d.gap->t_s;
    }
    if (d.bounds) {
        j["sigma"] = d.bounds->sigma;
        j["nu"] = d.bounds->nu;
    }
    j["t_c"] = d.t_c;
    j["resolvability"] = d.resolvability;
    j["failure_reasons"] = d.failure_reasons;
    j["splitting_cond_min"] = d.cond_min;
    j["splitting_cond_max"] = d.cond_max;
    j["splitting_cond_mean"] = d.cond_mean;
    if (d.x_ext.size() > 0) {
        json ext = json::array();
        for (Eigen::Index i = 0; i < d.x_ext.rows(); ++i)
            ext.push_back(json::array({d.x_ext(i, 0), d.x_ext(i, 1)}));
        j["x_ext"] = ext;
    }
    json cands = json::array();
    for (const auto& c : d.candidates)
        cands.push_back({{"n_s", c.ns},
                         {"n_c", c.nc},
                         {"n_u", c.nu},
                         {"alpha", c.alpha},
                         {"beta", c.beta},
                         {"delta_mu", c.delta_mu},
                         {"t_s", c.t_s}});
    j["candidates"] = cands;

    RunResult r;
    const std::string path = out_path(cfg, "diagnosis.json");
    write_text_file(path, j.dump(2) + "\n");
    r.files.push_back(path);
    r.exit_code = d.verdict ? 0 : 2;
    return r;
}

Csv manifold_csv(const BenchmarkSystem& sys, const Parametrization& param,
                 const std::vector<ManifoldPoint>& points) {
    const int n = sys.field.dimension();
    Csv csv;
    csv.columns = {"id"};
    for (int i = 0; i < n; ++i) csv.columns.push_back("x" + std::to_string(i + 1));
    for (const char* c : {"residual_max", "theta", "T_fwd", "T_bwd", "inner_iterations",
                          "outer_iterations", "converged", "reference_error"})
        csv.columns.push_back(c);
    for (std::size_t k = 0; k < points.size(); ++k) {
        const auto& p = points[k];
        std::vector<std::string> row;
        row.push_back(std::to_string(k));
        for (int i = 0; i < n; ++i) row.push_back(fmt17(p.x[i]));
        row.push_back(fmt17(p.residuals.size() ? p.residuals.cwiseAbs().maxCoeff() : 0.0));
        row.push_back(fmt17(p.theta));
        row.push_back(fmt17(p.T_fwd));
        row.push_back(fmt17(p.T_bwd));
        row.push_back(std::to_string(p.inner_iterations));
        row.push_back(std::to_string(p.outer_iterations));
        row.push_back(p.converged ? "1" : "0");
        const double err = reference_error(sys, param, p.x);
        row.push_back(std::isnan(err) ? "" : fmt17(err));
        csv.rows.push_back(std::move(row));
    }
    return csv;
}

RunResult run_manifold(const RunConfig& cfg, const BenchmarkSystem& sys,
                       const std::string& hash) {
    Parametrization param = resolve_param(cfg, sys);
    ManifoldOptions opts = manifold_options(cfg, sys);
    auto points = solve_grid(sys.field, param, cfg, opts);
    RunResult r;
    const std::string path = out_path(cfg, "manifold.csv");
    write_csv(path, manifold_csv(sys, param, points), hash);
    r.files.push_back(path);
    return r;
}

RunResult run_ildm(const RunConfig& cfg, const BenchmarkSystem& sys, const std::string& hash) {
    Parametrization param = resolve_param(cfg, sys);
    if (sys.nc < 1) throw Error("splitting dimensions (ns, nc, nu) are required; set 'dims'");
    if (cfg.manifold.values.empty()) throw Error("manifold.values must list independent values");
    if (cfg.manifold.guess.size() != param.dependent.size())
        throw Error("manifold.guess must provide one value per dependent coordinate");

    const int n = sys.field.dimension();
    Csv csv;
    csv.columns = {"id"};
    for (int i = 0; i < n; ++i) csv.columns.push_back("x" + std::to_string(i + 1));
    csv.columns.push_back("reference_error");

    VectorXd guess(static_cast<Eigen::Index>(cfg.manifold.guess.size()));
    for (std::size_t i = 0; i < cfg.manifold.guess.size(); ++i)
        guess[static_cast<Eigen::Index>(i)] = cfg.manifold.guess[i];
    for (std::size_t k = 0; k < cfg.manifold.values.size(); ++k) {
        const auto& row = cfg.manifold.values[k];
        VectorXd indep(static_cast<Eigen::Index>(row.size()));
        for (std::size_t i = 0; i < row.size(); ++i) indep[static_cast<Eigen::Index>(i)] = row[i];
        VectorXd x = ildm_point(sys.field, param, indep, guess, sys.ns, sys.nc, sys.nu);
        if (cfg.manifold.warm_start)
            for (std::size_t i = 0; i < param.dependent.size(); ++i)
                guess[static_cast<Eigen::Index>(i)] = x[param.dependent[i]];
        std::vector<std::string> r;
        r.push_back(std::to_string(k));
        for (int i = 0; i < n; ++i) r.push_back(fmt17(x[i]));
        const double err = reference_error(sys, param, x);
        r.push_back(std::isnan(err) ? "" : fmt17(err));
        csv.rows.push_back(std::move(r));
    }
    RunResult r;
    const std::string path = out_path(cfg, "ildm.csv");
    write_csv(path, csv, hash);
    r.files.push_back(path);
    return r;
}

RunResult run_verify(const RunConfig& cfg, const BenchmarkSystem& sys, const std::string& hash) {
    Parametrization param = resolve_param(cfg, sys);
    ManifoldOptions opts = manifold_options(cfg, sys);
    auto points = solve_grid(sys.field, param, cfg, opts);

    const bool do_ftla = cfg.verify.estimator != "ildm";
    const bool do_ildm = cfg.verify.estimator != "ftla";

    ReEstimator ftla_est = [&](const VectorXd& indep, const VectorXd& guess) {
        return solve_manifold_point(sys.field, param, indep, guess, opts).x;
    };
    ReEstimator ildm_est = [&](const VectorXd& indep, const VectorXd& guess) {
        return ildm_point(sys.field, param, indep, guess, sys.ns, sys.nc, sys.nu);
    };

    Csv csv;
    csv.columns = {"point", "coordinate", "direction"};
    if (do_ftla) csv.columns.push_back("ftla_ip_percent");
    if (do_ildm) csv.columns.push_back("ildm_ip_percent");

    for (std::size_t k = 0; k < points.size(); ++k) {
        std::optional<IPReport> fr, ir;
        if (do_ftla)
            fr = invariance_percent(sys.field, points[k], cfg.verify.t_plus, cfg.verify.t_minus,
                                    ftla_est, cfg.diagnosis.tols);
        if (do_ildm) {
            // The eigenvector baseline is compared on its own solution of the
            // same orthogonality template, re-estimated from the same endpoint.
            ManifoldPoint ip = points[k];
            ip.x = ildm_est(
                [&] {
                    VectorXd iv(static_cast<Eigen::Index>(param.independent.size()));
                    for (std::size_t i = 0; i < param.independent.size(); ++i)
                        iv[static_cast<Eigen::Index>(i)] = points[k].x[param.independent[i]];
                    return iv;
                }(),
                [&] {
                    VectorXd gv(static_cast<Eigen::Index>(param.dependent.size()));
                    for (std::size_t i = 0; i < param.dependent.size(); ++i)
                        gv[static_cast<Eigen::Index>(i)] = points[k].x[param.dependent[i]];
                    return gv;
                }());
            ir = invariance_percent(sys.field, ip, cfg.verify.t_plus, cfg.verify.t_minus,
                                    ildm_est, cfg.diagnosis.tols);
        }
        for (std::size_t d = 0; d < param.dependent.size(); ++d) {
            const int coord = param.dependent[d];
            for (int dir : {+1, -1}) {
                std::vector<std::string> row = {std::to_string(k),
                                                "x" + std::to_string(coord + 1),
                                                dir > 0 ? "+" : "-"};
                if (fr) row.push_back(fmt17(fr->value(coord, dir)));
                if (ir) row.push_back(fmt17(ir->value(coord, dir)));
                csv.rows.push_back(std::move(row));
            }
        }
    }
    RunResult r;
    const std::string path = out_path(cfg, "verify.csv");
    write_csv(path, csv, hash);
    r.files.push_back(path);
    return r;
}

RunResult run_converge(const RunConfig& cfg, const BenchmarkSystem& sys,
                       const std::string& hash) {
    if (cfg.converge.checks.empty())
        throw Error("converge.checks must list (direction, index) pairs");
    const auto pts = sys.default_region.points();
    const double dt = cfg.diagnosis.dt;
    const double T_bar = sys.default_T_bar;

    Csv csv;
    csv.columns = {"point", "kind", "direction", "index", "T", "value"};

    for (std::size_t p = 0; p < pts.size(); ++p) {
        for (const auto& chk : cfg.converge.checks) {
            const Direction dir =
                chk.direction == "+" ? Direction::Forward : Direction::Backward;
            TransitionChain chain =
                transition_chain(sys.field, pts[p], T_bar, dt, dir, cfg.diagnosis.tols);
            auto samples = ftle_curves(chain, 1);
            auto near = [&](double T) -> const FtleSample* {
                const FtleSample* best = nullptr;
                double err = std::numeric_limits<double>::infinity();
                for (const auto& s : samples) {
                    const double e = std::abs(s.T - T);
                    if (e < err) {
                        err = e;
                        best = &s;
                    }
                }
                return best;
            };
            std::vector<double> grid = cfg.converge.T_grid;
            if (grid.empty())
                for (const auto& s : samples) grid.push_back(s.T);

            const int n = sys.field.dimension();
            auto basis_of = [&](const FtleSample& s) {
                Subspace ss;
                ss.x = pts[p];
                ss.basis = dir == Direction::Forward
                               ? MatrixXd(s.L.leftCols(chk.index))
                               : MatrixXd(s.L.rightCols(n - chk.index + 1));
                return ss;
            };
            for (std::size_t g = 0; g + 1 < grid.size(); ++g) {
                const FtleSample* s1 = near(grid[g]);
                const FtleSample* s2 = near(grid[g + 1]);
                if (!s1 || !s2 || s1->T == s2->T) continue;
                csv.rows.push_back({std::to_string(p), "dist", chk.direction,
                                    std::to_string(chk.index), fmt17(s1->T),
                                    fmt17(subspace_distance(basis_of(*s1), basis_of(*s2)))});
            }
            // Angles to analytic normals where the benchmark provides them.
            auto normals = sys.analytic_normals ? sys.analytic_normals(pts[p]) : std::nullopt;
            if (normals) {
                int col = -1;
                if (dir == Direction::Backward && chk.index <= sys.ns) col = chk.index - 1;
                if (dir == Direction::Forward && chk.index > sys.ns + sys.nc)
                    col = sys.ns + (chk.index - sys.ns - sys.nc - 1);
                if (col >= 0 && col < normals->cols()) {
                    for (double T : grid) {
                        const FtleSample* s = near(T);
                        if (!s) continue;
                        const VectorXd v = s->L.col(chk.index - 1);
                        const double c =
                            std::min(1.0, std::abs(v.dot(normals->col(col))) / v.norm());
                        csv.rows.push_back({std::to_string(p), "angle", chk.direction,
                                            std::to_string(chk.index), fmt17(s->T),
                                            fmt17(std::acos(c))});
                    }
                }
            }
        }
    }
    RunResult r;
    const std::string path = out_path(cfg, "converge.csv");
    write_csv(path, csv, hash);
    r.files.push_back(path);
    return r;
}

}  // namespace

RunResult run_command(const RunConfig& cfg, const std::string& command) {
    BenchmarkSystem sys = cfg.resolve();
    const std::string hash = config_hash(cfg);
    if (command == "spectrum") return run_spectrum(cfg, sys, hash);
    if (command == "diagnose") return run_diagnose(cfg, sys, hash);
    if (command == "manifold") return run_manifold(cfg, sys, hash);
    if (command == "ildm") return run_ildm(cfg, sys, hash);
    if (command == "verify") return run_verify(cfg, sys, hash);
    if (command == "converge") return run_converge(cfg, sys, hash);
    throw Error("unknown command '" + command + "'");
}

}  // namespace ftla
