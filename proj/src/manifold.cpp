#include "ftla/manifold.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ftla {

Parametrization choose_parametrization(const Splitting& splitting) {
    const int n = static_cast<int>(splitting.complement.rows());
    const int nd = static_cast<int>(splitting.complement.cols());
    Eigen::JacobiSVD<MatrixXd> svd(splitting.complement);
    const auto& sv = svd.singularValues();
    if (sv(sv.size() - 1) <= 1e-12 * sv(0))
        throw NumericalError("complement basis rank-deficient");

    // Column-pivoted QR of W^T ranks coordinates by leverage in the complement.
    Eigen::ColPivHouseholderQR<MatrixXd> qr(splitting.complement.transpose());
    Eigen::VectorXi perm = qr.colsPermutation().indices();
    Parametrization p;
    for (int i = 0; i < nd; ++i) p.dependent.push_back(perm[i]);
    std::sort(p.dependent.begin(), p.dependent.end());
    for (int i = 0; i < n; ++i)
        if (std::find(p.dependent.begin(), p.dependent.end(), i) == p.dependent.end())
            p.independent.push_back(i);
    return p;
}

VectorXd orthogonality_residual(const VectorField& vf, const VectorXd& x, const MatrixXd& W) {
    return W.transpose() * vf(x);
}

namespace {

VectorXd assemble(const Parametrization& param, const VectorXd& indep, const VectorXd& dep,
                  int n) {
    VectorXd x(n);
    for (std::size_t i = 0; i < param.independent.size(); ++i)
        x[param.independent[i]] = indep[static_cast<Eigen::Index>(i)];
    for (std::size_t i = 0; i < param.dependent.size(); ++i)
        x[param.dependent[i]] = dep[static_cast<Eigen::Index>(i)];
    return x;
}

// Complement FTLVs at x with independently chosen forward/backward averaging
// times: backward vectors l_1^-..l_ns^- at T_bwd, forward vectors
// l_{ns+nc+1}^+..l_n^+ at T_fwd. Also reports the largest distance of any
// visited trajectory state from x.
MatrixXd mixed_complement(const VectorField& vf, const VectorXd& x, const ManifoldOptions& o,
                          double T_fwd, double T_bwd, double* max_excursion) {
    const int n = vf.dimension();
    MatrixXd W(n, o.ns + o.nu);
    double exc = 0;
    if (o.ns > 0) {
        TransitionChain chain = transition_chain(vf, x, T_bwd, o.dt, Direction::Backward, o.ode);
        for (const auto& s : chain.trajectory.states) exc = std::max(exc, (s - x).norm());
        LyapunovData d = compute_ftle_from_chain(chain, FtleMethod::Svd);
        W.leftCols(o.ns) = d.L.leftCols(o.ns);
    }
    if (o.nu > 0) {
        TransitionChain chain = transition_chain(vf, x, T_fwd, o.dt, Direction::Forward, o.ode);
        for (const auto& s : chain.trajectory.states) exc = std::max(exc, (s - x).norm());
        LyapunovData d = compute_ftle_from_chain(chain, FtleMethod::Svd);
        W.rightCols(o.nu) = d.L.rightCols(o.nu);
    }
    if (max_excursion) *max_excursion = exc;
    return W;
}

double angle_to_null_space(const VectorField& vf, const VectorXd& x, const MatrixXd& W) {
    const int n = static_cast<int>(W.rows());
    Eigen::JacobiSVD<MatrixXd> svd(W, Eigen::ComputeFullU);
    MatrixXd Ec = svd.matrixU().rightCols(n - W.cols());
    VectorXd f = vf(x);
    const double fn = f.norm();
    if (fn == 0) return 0;
    const double off = (f - Ec * (Ec.transpose() * f)).norm() / fn;
    return std::asin(std::min(1.0, off));
}

// Damped Newton on the dependent coordinates with the complement frozen.
VectorXd frozen_newton(const VectorField& vf, const Parametrization& param,
                       const VectorXd& indep, VectorXd dep, const MatrixXd& W,
                       const ManifoldOptions& o) {
    const int n = vf.dimension();
    const int nd = static_cast<int>(dep.size());
    for (int it = 0; it < 40; ++it) {
        VectorXd x = assemble(param, indep, dep, n);
        const VectorXd fx = vf(x);
        VectorXd r = W.transpose() * fx;
        const double scale = std::max(1.0, fx.norm());
        if (r.cwiseAbs().maxCoeff() < 1e-13 * scale) break;
        MatrixXd J(nd, nd);
        for (int j = 0; j < nd; ++j) {
            const double h = o.fd_step * std::max(1.0, std::abs(dep[j]));
            VectorXd dp = dep;
            dp[j] += h;
            VectorXd xp = assemble(param, indep, dp, n);
            J.col(j) = (W.transpose() * vf(xp) - r) / h;
        }
        Eigen::FullPivLU<MatrixXd> lu(J);
        if (!lu.isInvertible()) throw NumericalError("Newton Jacobian singular");
        VectorXd step = lu.solve(-r);
        // Step halving on residual increase.
        double lambda = 1.0;
        const double base = r.norm();
        VectorXd trial;
        for (;;) {
            trial = dep + lambda * step;
            VectorXd xt = assemble(param, indep, trial, n);
            if ((W.transpose() * vf(xt)).norm() <= base || lambda < 1e-6) break;
            lambda *= 0.5;
        }
        dep = trial;
    }
    return dep;
}

}  // namespace

ManifoldPoint solve_manifold_point(const VectorField& vf, const Parametrization& param,
                                   const VectorXd& independent_values,
                                   const VectorXd& dependent_guess,
                                   const ManifoldOptions& options) {
    const int n = vf.dimension();
    const int nd = static_cast<int>(param.dependent.size());
    if (static_cast<int>(param.independent.size() + param.dependent.size()) != n)
        throw Error("parametrization does not cover all coordinates");
    if (options.ns + options.nu != nd)
        throw Error("complement dimension ns + nu must equal the dependent count");

    ManifoldPoint out;
    out.param = param;

    double T_fwd = options.schedule.T_fwd0;
    double T_bwd = options.schedule.T_bwd0;
    VectorXd dep = dependent_guess;
    VectorXd x_prev_outer = assemble(param, independent_values, dep, n);
    bool T_frozen = false;
    bool have_estimate = false;

    for (int k = 0; k < options.schedule.max_outer; ++k) {
        out.outer_iterations = k + 1;
        VectorXd x_inner = k == 0 ? x_prev_outer : out.x;
        dep = VectorXd(nd);
        for (int i = 0; i < nd; ++i) dep[i] = x_inner[param.dependent[static_cast<std::size_t>(i)]];

        bool inner_ok = false;
        bool stage_failed = false;
        double excursion = 0;
        MatrixXd W;
        for (int i = 0; i < options.schedule.max_inner; ++i) {
            ++out.inner_iterations;
            try {
                W = mixed_complement(vf, x_inner, options, T_fwd, T_bwd, &excursion);
            } catch (const IntegrationError&) {
                // The residual off the finite-time manifold amplifies under
                // long backward propagation until the trajectory blows up.
                if (!have_estimate) throw;
                stage_failed = true;
                break;
            }
            VectorXd dep_new = frozen_newton(vf, param, independent_values, dep, W, options);
            VectorXd x_new = assemble(param, independent_values, dep_new, n);

            double rel = 0;
            for (int c = 0; c < nd; ++c) {
                const double denom = std::abs(dep[c]) > 0 ? std::abs(dep[c]) : 1.0;
                rel = std::max(rel, std::abs(dep_new[c] - dep[c]) / denom);
            }
            const double theta = angle_to_null_space(vf, x_new, W);
            dep = dep_new;
            x_inner = x_new;
            if (rel < options.tols.rel_change && theta < options.tols.theta) {
                out.theta = theta;
                inner_ok = true;
                break;
            }
        }
        if (!inner_ok && have_estimate && !stage_failed) {
            // The refreeze iteration loses contraction once the vectors grow
            // too sensitive; keep the last averaging times that worked.
            stage_failed = true;
        }
        if (stage_failed) {
            T_fwd = out.T_fwd;
            T_bwd = out.T_bwd;
            if (!T_frozen)
                out.flags.push_back("averaging-time growth halted: iteration failed at longer times");
            T_frozen = true;
            continue;
        }
        if (!inner_ok)
            throw ConvergenceError("inner loop did not converge within " +
                                   std::to_string(options.schedule.max_inner) + " iterations");
        // The escape guard is judged on the accepted iterate's trajectories.
        if (options.region_diameter > 0 && !T_frozen &&
            excursion > options.escape_factor * options.region_diameter) {
            T_frozen = true;
            out.flags.push_back("averaging-time growth halted: trajectory left the region");
        }

        out.x = x_inner;
        out.T_fwd = T_fwd;
        out.T_bwd = T_bwd;
        out.residuals = W.transpose() * vf(out.x);
        have_estimate = true;

        const double diff = (out.x - x_prev_outer).norm();
        x_prev_outer = out.x;
        if (diff < options.tols.outer) {
            out.converged = true;
            const double scale = std::max(1.0, vf(out.x).norm());
            if (out.residuals.cwiseAbs().maxCoeff() > options.tols.residual * scale)
                out.flags.push_back("residual above tolerance at final iterate");
            return out;
        }
        if (!T_frozen) {
            T_fwd += options.schedule.dT_fwd;
            T_bwd += options.schedule.dT_bwd;
        }
    }
    out.flags.push_back("outer loop reached max iterations");
    return out;
}

double IPReport::value(int coordinate, int direction) const {
    for (const auto& e : entries)
        if (e.coordinate == coordinate && e.direction == direction) return e.percent;
    throw Error("no IP entry for the requested coordinate/direction");
}

IPReport invariance_percent(const VectorField& vf, const ManifoldPoint& point, double t_plus,
                            double t_minus, const ReEstimator& re_estimate,
                            const OdeTols& ode) {
    if (!(t_plus >= 0)) throw Error("t_plus must be >= 0");
    if (!(t_minus <= 0)) throw Error("t_minus must be <= 0");
    IPReport report;
    for (int dir : {+1, -1}) {
        const double t = dir > 0 ? t_plus : t_minus;
        VectorXd y = flow(vf, point.x, t, ode);
        VectorXd indep(point.param.independent.size());
        VectorXd guess(point.param.dependent.size());
        for (std::size_t i = 0; i < point.param.independent.size(); ++i)
            indep[static_cast<Eigen::Index>(i)] = y[point.param.independent[i]];
        for (std::size_t i = 0; i < point.param.dependent.size(); ++i)
            guess[static_cast<Eigen::Index>(i)] = y[point.param.dependent[i]];
        VectorXd re = re_estimate(indep, guess);
        for (std::size_t i = 0; i < point.param.dependent.size(); ++i) {
            const int c = point.param.dependent[i];
            IPEntry e;
            e.coordinate = c;
            e.direction = dir;
            const double denom = std::abs(re[c]);
            e.percent = denom > 0 ? std::abs(re[c] - y[c]) / denom * 100.0
                                  : (y[c] == re[c] ? 0.0 : std::numeric_limits<double>::infinity());
            report.entries.push_back(e);
        }
    }
    return report;
}

double planar_error_model(double eps, double delta, double g, double dh_dx2) {
    const double denom = std::sin(delta + eps);
    if (denom == 0.0) throw Error("planar error model undefined: sin(delta + eps) = 0");
    if (dh_dx2 == 0.0) throw Error("planar error model undefined: dh/dx2 = 0");
    return -std::sin(eps) / denom * g / dh_dx2;
}

}  // namespace ftla
