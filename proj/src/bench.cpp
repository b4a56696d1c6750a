#include "ftla/bench.hpp"

#include <cmath>

namespace ftla {

namespace {

Region box_region(std::initializer_list<std::pair<double, double>> bounds,
                  std::initializer_list<int> grid) {
    Region r;
    r.bounds.resize(static_cast<Eigen::Index>(bounds.size()), 2);
    Eigen::Index i = 0;
    for (const auto& [lo, hi] : bounds) {
        r.bounds(i, 0) = lo;
        r.bounds(i, 1) = hi;
        ++i;
    }
    r.grid.assign(grid.begin(), grid.end());
    return r;
}

void reject_unknown(const std::map<std::string, double>& overrides,
                    std::initializer_list<const char*> allowed) {
    for (const auto& [k, v] : overrides) {
        bool ok = false;
        for (const char* a : allowed)
            if (k == a) ok = true;
        if (!ok) throw Error("unknown parameter override '" + k + "'");
    }
}

double get_or(const std::map<std::string, double>& m, const std::string& k, double dflt) {
    auto it = m.find(k);
    return it == m.end() ? dflt : it->second;
}

BenchmarkSystem make_ds(const std::map<std::string, double>& overrides) {
    reject_unknown(overrides, {"gamma"});
    const double g = get_or(overrides, "gamma", 3.0);
    if (!(g > 1.0)) throw Error("invalid override: ds requires gamma > 1");

    BenchmarkSystem s;
    s.name = "ds";
    s.field = parse_field("-x1 ; -g*x2 + ((g-1)*x1 + g*x1^2)/(1+x1)^2", 2, {{"g", g}});
    s.default_region = box_region({{0.0, 2.0}, {0.0, 1.0}}, {3, 3});
    s.default_T_bar = 4.0;
    s.default_dt = 0.1;
    s.ns = 1;
    s.nc = 1;
    s.nu = 0;
    s.default_param.independent = {0};
    s.default_param.dependent = {1};
    s.reference_constants = {{"alpha", 1.0}, {"beta", 3.0},  {"delta_mu", 2.0},
                             {"sigma", 1.0}, {"nu", 3.0},    {"t_s", 0.0}};
    s.reference_manifold = [](const VectorXd& indep) -> std::optional<VectorXd> {
        VectorXd dep(1);
        dep[0] = indep[0] / (1.0 + indep[0]);
        return dep;
    };
    s.reference_ildm = [g](const VectorXd& indep) -> std::optional<VectorXd> {
        const double x1 = indep[0];
        VectorXd dep(1);
        dep[0] = x1 / (1.0 + x1) +
                 (2.0 * x1 * x1 / (g * g)) * (1.0 / ((1.0 - 1.0 / g) * std::pow(1.0 + x1, 3)));
        return dep;
    };
    s.analytic_normals = [](const VectorXd& x) -> std::optional<MatrixXd> {
        // Normal of span{[(1+x1)^2, 1]}, the tangent of the invariant manifold.
        MatrixXd W(2, 1);
        const double q = (1.0 + x[0]) * (1.0 + x[0]);
        W(0, 0) = 1.0;
        W(1, 0) = -q;
        W.col(0).normalize();
        return W;
    };
    return s;
}

BenchmarkSystem make_sys3d(const std::map<std::string, double>& overrides) {
    reject_unknown(overrides, {"a", "b", "c", "gamma"});
    const double a = get_or(overrides, "a", -0.2);
    const double b = get_or(overrides, "b", -3.0);
    const double c = get_or(overrides, "c", 3.0);
    const double g = get_or(overrides, "gamma", 2.0);
    if (!(a < 0 && b < a && c > 0))
        throw Error("invalid override: sys3d requires b < a < 0 < c");

    BenchmarkSystem s;
    s.name = "sys3d";
    s.field = parse_field("a*x1 ; b*x2 + g*(b - 2*a)*x1^2 ; c*x3 + g*(c - 2*a)*x1^2", 3,
                          {{"a", a}, {"b", b}, {"c", c}, {"g", g}});
    s.default_region = box_region({{-10.0, 10.0}, {-10.0, 10.0}, {-10.0, 10.0}}, {3, 3, 3});
    s.default_T_bar = 3.0;
    s.default_dt = 0.1;
    s.ns = 1;
    s.nc = 1;
    s.nu = 1;
    s.default_param.independent = {0};
    s.default_param.dependent = {1, 2};
    s.reference_constants = {{"alpha", 0.8}, {"beta", 3.0}, {"delta_mu", 2.2},
                             {"sigma", 0.5}, {"nu", 3.0},   {"t_s", 0.0}};
    s.reference_manifold = [g](const VectorXd& indep) -> std::optional<VectorXd> {
        VectorXd dep(2);
        dep[0] = -g * indep[0] * indep[0];
        dep[1] = dep[0];
        return dep;
    };
    s.analytic_normals = [g](const VectorXd& x) -> std::optional<MatrixXd> {
        // eta1 (normal of the center-unstable surface, the backward slot) and
        // eta2 (normal of the center-stable surface, the forward slot).
        MatrixXd W(3, 2);
        W.col(0) << 2.0 * g * x[0], 1.0, 0.0;
        W.col(1) << 2.0 * g * x[0], 0.0, 1.0;
        W.col(0).normalize();
        W.col(1).normalize();
        return W;
    };
    return s;
}

BenchmarkSystem make_msd4d(const std::map<std::string, double>& overrides) {
    reject_unknown(overrides, {"m", "k1", "k2", "c"});
    const double m = get_or(overrides, "m", 0.5);
    const double k1 = get_or(overrides, "k1", 1.0);
    const double k2 = get_or(overrides, "k2", 0.01);
    const double c = get_or(overrides, "c", 4.0 * std::sqrt(k1 * m));
    if (!(m > 0 && k1 > 0 && c > 0)) throw Error("invalid override: msd4d requires m, k1, c > 0");

    BenchmarkSystem s;
    s.name = "msd4d";
    // State (x1, x2, lambda1, lambda2) as (x1, x2, x3, x4).
    s.field = parse_field(
        "x2 ;"
        " -(c*x2 + k1*x1 + k2*x1^3 + x4/m)/m ;"
        " (x4/m)*(k1 + 3*k2*x1^2) ;"
        " -x3 + c*x4/m",
        4, {{"m", m}, {"k1", k1}, {"k2", k2}, {"c", c}});
    Region r;
    auto add = [&r](std::initializer_list<double> v) {
        VectorXd p(4);
        Eigen::Index i = 0;
        for (double x : v) p[i++] = x;
        r.explicit_points.push_back(p);
    };
    add({3.00, -2.0, 7.5, 2.0});
    add({2.85, -2.0, 9.3, 2.0});
    add({2.70, -2.0, 11.0, 2.0});
    add({2.55, -2.0, 12.8, 2.0});
    add({2.40, -2.0, 14.5, 2.0});
    s.default_region = r;
    s.fixtures = r.explicit_points;
    s.default_T_bar = 0.5;
    s.default_dt = 0.025;
    s.ns = 1;
    s.nc = 2;
    s.nu = 1;
    s.default_param.independent = {0, 2};
    s.default_param.dependent = {1, 3};
    s.reference_constants = {{"alpha", 0.52}, {"beta", 5.64}, {"delta_mu", 5.12},
                             {"sigma", 0.66}, {"nu", 5.19},   {"t_s", 0.0}};
    s.reference_manifold = [](const VectorXd&) -> std::optional<VectorXd> {
        return std::nullopt;  // the invariant center manifold is not known in closed form
    };
    s.analytic_normals = [](const VectorXd&) -> std::optional<MatrixXd> { return std::nullopt; };
    return s;
}

BenchmarkSystem make_linear7d(const std::map<std::string, double>& overrides) {
    if (!overrides.empty()) throw Error("linear7d has no adjustable parameters");
    BenchmarkSystem s;
    s.name = "linear7d";
    s.field = parse_field(
        "-5.4*x1 + x2 ;"
        " -5.2*x2 + 30*x5 ;"
        " -0.3*x3 + 10*x7 ;"
        " -0.1*x4 ;"
        " 0.2*x5 ;"
        " 4.0*x6 + 8*x7 ;"
        " 4.6*x7",
        7, {});
    Region r;
    r.explicit_points.push_back(VectorXd::Zero(7));
    s.default_region = r;
    s.default_T_bar = 6.0;
    s.default_dt = 0.1;
    s.ns = 2;
    s.nc = 3;
    s.nu = 2;
    s.reference_constants = {{"sigma", 0.31}, {"nu", 3.29}, {"t_s", 2.05}, {"t_c", 5.5}};
    s.reference_manifold = [](const VectorXd&) -> std::optional<VectorXd> { return std::nullopt; };
    s.analytic_normals = [](const VectorXd&) -> std::optional<MatrixXd> { return std::nullopt; };
    return s;
}

}  // namespace

BenchmarkSystem make_system(const std::string& name,
                            const std::map<std::string, double>& overrides) {
    if (name == "ds") return make_ds(overrides);
    if (name == "sys3d") return make_sys3d(overrides);
    if (name == "msd4d") return make_msd4d(overrides);
    if (name == "linear7d") return make_linear7d(overrides);
    throw Error("unknown benchmark system '" + name + "'");
}

}  // namespace ftla
