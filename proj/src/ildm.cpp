#include "ftla/ildm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ftla {

IldmBasis ildm_complement(const VectorField& vf, const VectorXd& x, int ns, int nc, int nu) {
    const int n = vf.dimension();
    if (ns + nc + nu != n) throw NumericalError("ns + nc + nu must equal n");
    if (nc < 1) throw NumericalError("nc must be >= 1");
    MatrixXd J = vf.jacobian(x);
    Eigen::EigenSolver<MatrixXd> es(J);
    if (es.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");

    const double scale = std::max(1.0, J.cwiseAbs().maxCoeff());
    for (int i = 0; i < n; ++i)
        if (std::abs(es.eigenvalues()[i].imag()) > 1e-9 * scale)
            throw NumericalError("complex eigenvalues: the eigenvector construction requires a "
                                 "real spectrum");

    std::vector<int> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](int a, int b) {
        return es.eigenvalues()[a].real() < es.eigenvalues()[b].real();
    });

    IldmBasis basis;
    basis.x = x;
    basis.eigenvalues.resize(n);
    MatrixXd vecs(n, n);
    for (int i = 0; i < n; ++i) {
        basis.eigenvalues[i] = es.eigenvalues()[idx[static_cast<std::size_t>(i)]].real();
        VectorXd v = es.eigenvectors().col(idx[static_cast<std::size_t>(i)]).real();
        vecs.col(i) = v / v.norm();
    }
    const double gap_tol = 1e-9 * std::max(1.0, std::abs(basis.eigenvalues[n - 1]));
    if (ns >= 1 && !(basis.eigenvalues[ns] - basis.eigenvalues[ns - 1] > gap_tol))
        throw NumericalError("no eigenvalue gap between the stable and center blocks");
    if (nu >= 1 && !(basis.eigenvalues[ns + nc] - basis.eigenvalues[ns + nc - 1] > gap_tol))
        throw NumericalError("no eigenvalue gap between the center and unstable blocks");

    basis.center = vecs.middleCols(ns, nc);
    Eigen::JacobiSVD<MatrixXd> svd(basis.center, Eigen::ComputeFullU);
    basis.complement = svd.matrixU().rightCols(n - nc);
    return basis;
}

VectorXd ildm_point(const VectorField& vf, const Parametrization& param,
                    const VectorXd& independent_values, const VectorXd& dependent_guess,
                    int ns, int nc, int nu, double tol, int max_iterations) {
    const int n = vf.dimension();
    const int nd = static_cast<int>(param.dependent.size());
    if (nd != n - nc) throw Error("dependent count must be n - nc");

    auto assemble = [&](const VectorXd& dep) {
        VectorXd x(n);
        for (std::size_t i = 0; i < param.independent.size(); ++i)
            x[param.independent[i]] = independent_values[static_cast<Eigen::Index>(i)];
        for (std::size_t i = 0; i < param.dependent.size(); ++i)
            x[param.dependent[i]] = dep[static_cast<Eigen::Index>(i)];
        return x;
    };

    VectorXd dep = dependent_guess;
    for (int it = 0; it < max_iterations; ++it) {
        VectorXd x = assemble(dep);
        MatrixXd W = ildm_complement(vf, x, ns, nc, nu).complement;
        VectorXd r = W.transpose() * vf(x);
        const double scale = std::max(1.0, vf(x).norm());
        if (r.cwiseAbs().maxCoeff() < tol * scale) return x;

        MatrixXd J(nd, nd);
        for (int j = 0; j < nd; ++j) {
            const double h = 1e-7 * std::max(1.0, std::abs(dep[j]));
            VectorXd dp = dep;
            dp[j] += h;
            J.col(j) = (W.transpose() * vf(assemble(dp)) - r) / h;
        }
        Eigen::FullPivLU<MatrixXd> lu(J);
        if (!lu.isInvertible()) throw NumericalError("Newton Jacobian singular");
        VectorXd step = lu.solve(-r);
        double lambda = 1.0;
        const double base = r.norm();
        VectorXd trial;
        for (;;) {
            trial = dep + lambda * step;
            VectorXd xt = assemble(trial);
            MatrixXd Wt = ildm_complement(vf, xt, ns, nc, nu).complement;
            if ((Wt.transpose() * vf(xt)).norm() <= base || lambda < 1e-6) break;
            lambda *= 0.5;
        }
        dep = trial;
    }
    throw ConvergenceError("ILDM Newton iteration did not converge");
}

}  // namespace ftla
