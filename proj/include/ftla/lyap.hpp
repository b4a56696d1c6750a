// Finite-time Lyapunov exponents and vectors, Lyapunov subspaces, the
// stable/center/unstable splitting, and subspace distances.
//
// Conventions: forward exponents are sorted ascending and backward exponents
// descending. The forward subspace of index j is the span of the first j
// forward vectors; the backward subspace of index j is the span of vectors
// j..n. For the SVD method the transition-matrix product over the chain is
// factored directly. The QR method recurs Phi_k Q_{k-1} = Q_k R_k from
// Q_0 = I (diagonal of R forced positive) and accumulates log|diag R_k|; the
// vectors at the base point are recovered through the forward/backward
// duality Phi(-T, phi(T,x)) = Phi(T,x)^{-1} by running the recursion over the
// inverted segments in reverse order.

#pragma once

#include <Eigen/Dense>
#include <vector>

#include "ftla/integrate.hpp"

namespace ftla {

enum class FtleMethod { Svd, Qr };

struct LyapunovData {
    Direction direction;
    double T = 0;
    VectorXd x;          // base point
    VectorXd exponents;  // forward ascending / backward descending
    MatrixXd L;          // columns l_i at x
    MatrixXd N;          // columns n_i at phi(+-T, x)
    VectorXd sigma;      // singular values, ordered with the exponents
    VectorXd endpoint;   // phi(+-T, x)
    bool degenerate = false;  // two neighboring exponents within 1e-9
    double min_gap = 0;
};

struct Subspace {
    VectorXd x;
    MatrixXd basis;  // n x k, orthonormal columns
    int dim() const { return static_cast<int>(basis.cols()); }
    int ambient() const { return static_cast<int>(basis.rows()); }
};

struct Splitting {
    double T_bar = 0;
    VectorXd x;
    int ns = 0, nc = 0, nu = 0;
    MatrixXd Es, Ec, Eu;     // orthonormal bases (possibly 0 columns)
    MatrixXd complement;     // [l_1^- .. l_ns^- | l_{ns+nc+1}^+ .. l_n^+]
    double stacked_cond = 0; // condition number of [Es Ec Eu]
};

LyapunovData compute_ftle(const VectorField& vf, const VectorXd& x, double T,
                          Direction direction, FtleMethod method, double dt,
                          const OdeTols& tols = {});

// Same factorizations reusing an existing chain (chain.direction must match).
LyapunovData compute_ftle_from_chain(const TransitionChain& chain, FtleMethod method);

// Exponents and L factors along the chain, at every `stride`-th segment
// boundary. Near-degenerate exponents (within 1e-9) are ordered by continuity
// with the previous sample (max |inner product| matching).
struct FtleSample {
    double T;
    VectorXd exponents;
    MatrixXd L;
};
std::vector<FtleSample> ftle_curves(const TransitionChain& chain, int stride = 1);

// Forward j: span of the first j columns; backward j: span of columns j..n.
Subspace lyapunov_subspace(const LyapunovData& data, int j);

// Spectral norm of the difference of orthogonal projectors; equals
// ||B1^T C2||_2 for equal-dimension subspaces (Golub & Van Loan Thm 2.6.1).
double subspace_distance(const Subspace& a, const Subspace& b);

// E^s from the leading forward vectors, E^u from the trailing backward
// vectors, E^c as the orthonormal null-space basis of the transposed
// complement. Throws NumericalError if the complement is rank-deficient or
// the stacked basis has condition number above cond_limit.
Splitting build_splitting(const LyapunovData& fwd, const LyapunovData& bwd, int ns, int nc,
                          int nu, double cond_limit = 1e8);

// Exponent curves of the propagated splitting bases: the singular values of
// Phi(+-T, x) E^j(T_bar, x) for T at every `stride`-th segment boundary up to
// T_max. Rows are samples; columns are exponent indices (forward ascending,
// backward descending).
struct SubspaceCurves {
    std::vector<double> times;
    MatrixXd s_fwd, s_bwd, c_fwd, c_bwd, u_fwd, u_bwd;  // 0x0 when that dim is 0
};
SubspaceCurves subspace_ftles(const VectorField& vf, const VectorXd& x,
                              const Splitting& splitting, double T_max, double dt,
                              const OdeTols& tols = {}, int stride = 1);

// Same computation over already-built chains (must share base point and dt).
SubspaceCurves subspace_ftles_from_chains(const TransitionChain& fwd,
                                          const TransitionChain& bwd,
                                          const Splitting& splitting, int stride = 1);

// Convenience: forward and backward factorizations at (T_bar, x) combined
// into the splitting with the given dimensions.
Splitting splitting_at(const VectorField& vf, const VectorXd& x, double T_bar, double dt,
                       int ns, int nc, int nu, const OdeTols& tols = {},
                       double cond_limit = 1e8);

}  // namespace ftla
