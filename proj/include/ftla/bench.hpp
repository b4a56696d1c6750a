// The four built-in benchmark systems with their default regions, splitting
// dimensions, and analytic reference objects where they exist.

#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>

#include "ftla/diagnose.hpp"
#include "ftla/manifold.hpp"

namespace ftla {

struct BenchmarkSystem {
    std::string name;
    VectorField field;
    Region default_region;
    double default_T_bar = 0;
    double default_dt = 0.1;
    int ns = 0, nc = 0, nu = 0;
    Parametrization default_param;
    std::vector<VectorXd> fixtures;  // named test points (msd4d: the five x_j)
    // Reference diagnosis constants reported for this system in the
    // literature (alpha, beta, delta_mu, sigma, nu, t_s, t_c where known).
    std::map<std::string, double> reference_constants;

    // Exact dependent coordinates for given independents, when known.
    std::function<std::optional<VectorXd>(const VectorXd&)> reference_manifold;
    // Closed-form eigenvector-method curve (2D system only).
    std::function<std::optional<VectorXd>(const VectorXd&)> reference_ildm;
    // Analytic normals of the invariant manifold at a manifold point, in
    // complement column order (backward vectors first).
    std::function<std::optional<MatrixXd>(const VectorXd&)> analytic_normals;
};

// Recognized names: ds, sys3d, msd4d, linear7d. Overrides replace the
// documented parameters (ds: gamma; sys3d: a, b, c, gamma; msd4d: m, k1, k2,
// c). Unknown names or out-of-range overrides throw.
BenchmarkSystem make_system(const std::string& name,
                            const std::map<std::string, double>& overrides = {});

}  // namespace ftla
