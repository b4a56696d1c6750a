// Points on finite-time center manifolds: the orthogonality conditions
// <f(x), w_i> = 0 for the complement FTLVs w_i are solved for the dependent
// coordinates by a damped Newton iteration with frozen vectors (inner loop),
// while the averaging times grow until the converged point stops moving
// (outer loop).

#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ftla/lyap.hpp"

namespace ftla {

struct Parametrization {
    std::vector<int> independent;  // 0-based coordinate indices, size nc
    std::vector<int> dependent;    // size n - nc
};

// Dependent coordinates are the largest-leverage rows of the complement
// basis, found by column-pivoted QR of its transpose.
Parametrization choose_parametrization(const Splitting& splitting);

// <f(x), w_i> in complement column order (backward vectors first).
VectorXd orthogonality_residual(const VectorField& vf, const VectorXd& x, const MatrixXd& W);

struct SolveSchedule {
    double T_fwd0 = 0.5, T_bwd0 = 0.5;
    double dT_fwd = 0.3, dT_bwd = 0.1;
    int max_outer = 30, max_inner = 50;
};

struct SolveTols {
    double residual = 1e-5;    // |r_i| / max(1, ||f||)
    double rel_change = 1e-5;  // per dependent coordinate
    double theta = 1e-5;       // angle between f and its projection into E^c
    double outer = 1e-6;       // ||xhat_k - xhat_{k-1}||
};

struct ManifoldPoint {
    VectorXd x;
    Parametrization param;
    VectorXd residuals;      // at the final iterate
    double theta = 0;
    double T_fwd = 0, T_bwd = 0;
    int inner_iterations = 0;  // total across outer passes
    int outer_iterations = 0;
    bool converged = false;
    std::vector<std::string> flags;
};

struct ManifoldOptions {
    int ns = 0, nc = 0, nu = 0;
    double dt = 0.1;
    SolveSchedule schedule{};
    SolveTols tols{};
    OdeTols ode{};
    double escape_factor = 10.0;        // times the region diameter
    double region_diameter = 0.0;       // 0 disables the escape guard
    double fd_step = 1e-7;              // Newton finite-difference scale
};

ManifoldPoint solve_manifold_point(const VectorField& vf, const Parametrization& param,
                                   const VectorXd& independent_values,
                                   const VectorXd& dependent_guess,
                                   const ManifoldOptions& options);

// Re-estimates dependent coordinates at a state: takes the independent values
// and a dependent guess, returns the full re-solved state.
using ReEstimator = std::function<VectorXd(const VectorXd& indep, const VectorXd& guess)>;

struct IPEntry {
    int coordinate = 0;   // dependent coordinate index (0-based)
    int direction = +1;   // +1 / -1
    double percent = 0;
};
struct IPReport {
    std::vector<IPEntry> entries;
    double value(int coordinate, int direction) const;
};

// Propagates the point to phi(t_plus, x) and phi(t_minus, x), re-solves the
// dependents there with the independents fixed, and reports the relative
// mismatch of each dependent coordinate in percent.
IPReport invariance_percent(const VectorField& vf, const ManifoldPoint& point, double t_plus,
                            double t_minus, const ReEstimator& re_estimate,
                            const OdeTols& ode = {});

// Planar two-timescale error model: the center-manifold location error
// produced by an angular error eps in the complement direction when the
// stable and center directions are separated by angle delta.
double planar_error_model(double eps, double delta, double g, double dh_dx2);

}  // namespace ftla
