// Eigenvector-of-Jacobian baseline for center-manifold point estimation:
// the center block of Df(x) eigenvectors approximates E^c and manifold
// points solve <f(x), w_i> = 0 for the orthogonal complement of that block.

#pragma once

#include "ftla/manifold.hpp"

namespace ftla {

struct IldmBasis {
    VectorXd x;
    VectorXd eigenvalues;  // all real, ascending
    MatrixXd center;       // n x nc eigenvector block (unit columns)
    MatrixXd complement;   // n x (n - nc), orthonormal, orthogonal to center
};

// Requires all eigenvalues of Df(x) real and separable into the requested
// (ns, nc, nu) blocks by real part.
IldmBasis ildm_complement(const VectorField& vf, const VectorXd& x, int ns, int nc, int nu);

// Damped Newton on the dependent coordinates zeroing <f(x), w_i>, with the
// complement re-evaluated at every iterate. Returns the full state.
VectorXd ildm_point(const VectorField& vf, const Parametrization& param,
                    const VectorXd& independent_values, const VectorXd& dependent_guess,
                    int ns, int nc, int nu, double tol = 1e-12, int max_iterations = 60);

}  // namespace ftla
