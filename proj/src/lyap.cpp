#include "ftla/lyap.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace ftla {

namespace {

constexpr double kDegenerateGap = 1e-9;

// Permutation sorting `values` ascending (fwd) or descending (bwd).
std::vector<int> order_for(const VectorXd& values, Direction dir) {
    std::vector<int> idx(static_cast<std::size_t>(values.size()));
    std::iota(idx.begin(), idx.end(), 0);
    if (dir == Direction::Forward) {
        std::stable_sort(idx.begin(), idx.end(),
                         [&](int a, int b) { return values[a] < values[b]; });
    } else {
        std::stable_sort(idx.begin(), idx.end(),
                         [&](int a, int b) { return values[a] > values[b]; });
    }
    return idx;
}

MatrixXd apply_columns(const MatrixXd& M, const std::vector<int>& idx) {
    MatrixXd out(M.rows(), M.cols());
    for (std::size_t i = 0; i < idx.size(); ++i)
        out.col(static_cast<Eigen::Index>(i)) = M.col(idx[i]);
    return out;
}

VectorXd apply_perm(const VectorXd& v, const std::vector<int>& idx) {
    VectorXd out(v.size());
    for (std::size_t i = 0; i < idx.size(); ++i) out[static_cast<Eigen::Index>(i)] = v[idx[i]];
    return out;
}

void flag_degeneracy(LyapunovData* d) {
    const auto n = d->exponents.size();
    d->min_gap = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i + 1 < n; ++i)
        d->min_gap = std::min(d->min_gap, std::abs(d->exponents[i + 1] - d->exponents[i]));
    d->degenerate = d->min_gap < kDegenerateGap;
}

LyapunovData svd_factor(const TransitionChain& chain, const MatrixXd& product, double T) {
    const Direction dir = chain.direction;
    Eigen::JacobiSVD<MatrixXd> svd(product, Eigen::ComputeFullU | Eigen::ComputeFullV);
    VectorXd sv = svd.singularValues();
    VectorXd mu(sv.size());
    for (Eigen::Index i = 0; i < sv.size(); ++i) mu[i] = std::log(sv[i]) / T;
    auto idx = order_for(mu, dir);

    LyapunovData out;
    out.direction = dir;
    out.T = T;
    out.x = chain.trajectory.base;
    out.exponents = apply_perm(mu, idx);
    out.sigma = apply_perm(sv, idx);
    out.L = apply_columns(svd.matrixV(), idx);
    out.N = apply_columns(svd.matrixU(), idx);
    out.endpoint = chain.endpoint();
    flag_degeneracy(&out);
    return out;
}

// One QR recursion pass: Phi_k Q_{k-1} = Q_k R_k with diag(R_k) > 0.
// Returns Q_N and the accumulated log|diag R_k|.
void qr_pass(const std::vector<MatrixXd>& segments, MatrixXd* Q_out, VectorXd* logs_out) {
    const auto n = segments.front().rows();
    MatrixXd Q = MatrixXd::Identity(n, n);
    VectorXd logs = VectorXd::Zero(n);
    for (const MatrixXd& seg : segments) {
        MatrixXd M = seg * Q;
        Eigen::HouseholderQR<MatrixXd> qr(M);
        MatrixXd R = qr.matrixQR().triangularView<Eigen::Upper>();
        Q = qr.householderQ() * MatrixXd::Identity(n, n);
        for (Eigen::Index i = 0; i < n; ++i) {
            double rii = R(i, i);
            if (rii == 0.0) throw NumericalError("zero diagonal in QR recursion");
            if (rii < 0) Q.col(i) = -Q.col(i);
            logs[i] += std::log(std::abs(rii));
        }
    }
    *Q_out = Q;
    *logs_out = logs;
}

LyapunovData qr_factor(const TransitionChain& chain) {
    const Direction dir = chain.direction;
    const double T = chain.total_time();

    MatrixXd Qp;
    VectorXd logp;
    qr_pass(chain.segments, &Qp, &logp);

    // Dual pass over the inverted segments in reverse order; its endpoint is
    // the chain's base point, where the L vectors live.
    std::vector<MatrixXd> dual;
    dual.reserve(chain.segments.size());
    for (auto it = chain.segments.rbegin(); it != chain.segments.rend(); ++it)
        dual.push_back(it->inverse());
    MatrixXd Qd;
    VectorXd logd;
    qr_pass(dual, &Qd, &logd);

    VectorXd mu = logp / T;
    auto idx = order_for(mu, dir);
    VectorXd mud = logd / T;
    Direction opposite = dir == Direction::Forward ? Direction::Backward : Direction::Forward;
    auto idxd = order_for(mud, opposite);

    LyapunovData out;
    out.direction = dir;
    out.T = T;
    out.x = chain.trajectory.base;
    out.exponents = apply_perm(mu, idx);
    out.sigma = out.exponents.unaryExpr([T](double m) { return std::exp(m * T); });
    out.N = apply_columns(Qp, idx);
    out.L = apply_columns(Qd, idxd);
    out.endpoint = chain.endpoint();
    flag_degeneracy(&out);
    return out;
}

}  // namespace

LyapunovData compute_ftle_from_chain(const TransitionChain& chain, FtleMethod method) {
    if (chain.count() < 1) throw NumericalError("empty transition chain");
    if (method == FtleMethod::Svd) return svd_factor(chain, chain.product(), chain.total_time());
    return qr_factor(chain);
}

LyapunovData compute_ftle(const VectorField& vf, const VectorXd& x, double T,
                          Direction direction, FtleMethod method, double dt,
                          const OdeTols& tols) {
    TransitionChain chain = transition_chain(vf, x, T, dt, direction, tols);
    return compute_ftle_from_chain(chain, method);
}

std::vector<FtleSample> ftle_curves(const TransitionChain& chain, int stride) {
    if (stride < 1) stride = 1;
    const auto n = chain.trajectory.base.size();
    std::vector<FtleSample> out;
    MatrixXd P = MatrixXd::Identity(n, n);
    const MatrixXd* prevL = nullptr;
    for (int k = 0; k < chain.count(); ++k) {
        P = chain.segments[static_cast<std::size_t>(k)] * P;
        if ((k + 1) % stride != 0 && k + 1 != chain.count()) continue;
        const double T = chain.dt * (k + 1);
        Eigen::JacobiSVD<MatrixXd> svd(P, Eigen::ComputeFullV);
        VectorXd sv = svd.singularValues();
        VectorXd mu(n);
        for (Eigen::Index i = 0; i < n; ++i) mu[i] = std::log(sv[i]) / T;
        auto idx = order_for(mu, chain.direction);
        FtleSample s;
        s.T = T;
        s.exponents = apply_perm(mu, idx);
        s.L = apply_columns(svd.matrixV(), idx);
        // Ties are ordered by continuity with the previous sample.
        if (prevL) {
            Eigen::Index i = 0;
            while (i + 1 < n) {
                Eigen::Index j = i;
                while (j + 1 < n && s.exponents[j + 1] - s.exponents[j] < kDegenerateGap &&
                       s.exponents[j] - s.exponents[j + 1] < kDegenerateGap)
                    ++j;
                if (j > i) {
                    // Greedy max-|dot| matching within the tied block.
                    std::vector<int> cols;
                    for (Eigen::Index c = i; c <= j; ++c) cols.push_back(static_cast<int>(c));
                    MatrixXd block = s.L.middleCols(i, j - i + 1);
                    MatrixXd newBlock(block.rows(), block.cols());
                    VectorXd newMu(j - i + 1);
                    std::vector<bool> used(cols.size(), false);
                    for (Eigen::Index slot = i; slot <= j; ++slot) {
                        double best = -1;
                        std::size_t bestc = 0;
                        for (std::size_t c = 0; c < cols.size(); ++c) {
                            if (used[c]) continue;
                            double d = std::abs(prevL->col(slot).dot(block.col(
                                static_cast<Eigen::Index>(c))));
                            if (d > best) {
                                best = d;
                                bestc = c;
                            }
                        }
                        used[bestc] = true;
                        newBlock.col(slot - i) = block.col(static_cast<Eigen::Index>(bestc));
                        newMu[slot - i] = s.exponents[i + static_cast<Eigen::Index>(bestc)];
                    }
                    s.L.middleCols(i, j - i + 1) = newBlock;
                    s.exponents.segment(i, j - i + 1) = newMu;
                }
                i = j + 1;
            }
        }
        out.push_back(std::move(s));
        prevL = &out.back().L;
    }
    return out;
}

Subspace lyapunov_subspace(const LyapunovData& data, int j) {
    const int n = static_cast<int>(data.L.cols());
    if (j < 1 || j > n)
        throw NumericalError("subspace index " + std::to_string(j) + " out of range 1.." +
                             std::to_string(n));
    Subspace s;
    s.x = data.x;
    if (data.direction == Direction::Forward) {
        s.basis = data.L.leftCols(j);
    } else {
        s.basis = data.L.rightCols(n - j + 1);
    }
    return s;
}

namespace {

MatrixXd orthonormalize(const MatrixXd& B) {
    Eigen::HouseholderQR<MatrixXd> qr(B);
    MatrixXd Q = qr.householderQ() * MatrixXd::Identity(B.rows(), B.cols());
    return Q;
}

}  // namespace

double subspace_distance(const Subspace& a, const Subspace& b) {
    if (a.ambient() != b.ambient())
        throw NumericalError("subspace ambient dimension mismatch");
    if (a.dim() != b.dim()) throw NumericalError("subspace dimension mismatch");
    MatrixXd Qa = orthonormalize(a.basis);
    MatrixXd Qb = orthonormalize(b.basis);
    MatrixXd D = Qa * Qa.transpose() - Qb * Qb.transpose();
    Eigen::JacobiSVD<MatrixXd> svd(D);
    return svd.singularValues()(0);
}

Splitting build_splitting(const LyapunovData& fwd, const LyapunovData& bwd, int ns, int nc,
                          int nu, double cond_limit) {
    if (fwd.direction != Direction::Forward || bwd.direction != Direction::Backward)
        throw NumericalError("build_splitting expects one forward and one backward factorization");
    const int n = static_cast<int>(fwd.L.rows());
    if ((fwd.x - bwd.x).norm() > 1e-12 * std::max(1.0, fwd.x.norm()))
        throw NumericalError("forward and backward data have different base points");
    if (std::abs(fwd.T - bwd.T) > 1e-12 * std::max(1.0, fwd.T))
        throw NumericalError("forward and backward data have different averaging times");
    if (ns + nc + nu != n) throw NumericalError("ns + nc + nu must equal n");
    if (nc < 1) throw NumericalError("nc must be >= 1");
    if (ns == 0 && nu == 0) throw NumericalError("ns and nu cannot both be zero");

    Splitting sp;
    sp.T_bar = fwd.T;
    sp.x = fwd.x;
    sp.ns = ns;
    sp.nc = nc;
    sp.nu = nu;
    sp.Es = fwd.L.leftCols(ns);
    sp.Eu = bwd.L.rightCols(nu);
    sp.complement.resize(n, ns + nu);
    if (ns > 0) sp.complement.leftCols(ns) = bwd.L.leftCols(ns);
    if (nu > 0) sp.complement.rightCols(nu) = fwd.L.rightCols(nu);

    Eigen::JacobiSVD<MatrixXd> wsvd(sp.complement, Eigen::ComputeFullU);
    const auto& wsv = wsvd.singularValues();
    if (wsv(wsv.size() - 1) <= 0 || wsv(0) / wsv(wsv.size() - 1) > cond_limit)
        throw NumericalError(
            "complement basis rank-deficient: forward/backward subspaces nearly tangent");
    sp.Ec = wsvd.matrixU().rightCols(nc);  // null space of complement^T

    MatrixXd stacked(n, n);
    if (ns > 0) stacked.leftCols(ns) = sp.Es;
    stacked.middleCols(ns, nc) = sp.Ec;
    if (nu > 0) stacked.rightCols(nu) = sp.Eu;
    Eigen::JacobiSVD<MatrixXd> ssvd(stacked);
    const auto& ssv = ssvd.singularValues();
    sp.stacked_cond = ssv(0) / ssv(ssv.size() - 1);
    if (!(ssv(ssv.size() - 1) > 0) || sp.stacked_cond > cond_limit)
        throw NumericalError("splitting not transverse (stacked condition number " +
                             std::to_string(sp.stacked_cond) + ")");
    return sp;
}

SubspaceCurves subspace_ftles(const VectorField& vf, const VectorXd& x,
                              const Splitting& splitting, double T_max, double dt,
                              const OdeTols& tols, int stride) {
    TransitionChain fwd = transition_chain(vf, x, T_max, dt, Direction::Forward, tols);
    TransitionChain bwd = transition_chain(vf, x, T_max, dt, Direction::Backward, tols);
    // Automatic dt halving may have fired on one side only; redo on a common grid.
    if (fwd.dt != bwd.dt) {
        const double common = std::min(fwd.dt, bwd.dt);
        fwd = transition_chain(vf, x, T_max, common, Direction::Forward, tols);
        bwd = transition_chain(vf, x, T_max, common, Direction::Backward, tols);
    }
    return subspace_ftles_from_chains(fwd, bwd, splitting, stride);
}

SubspaceCurves subspace_ftles_from_chains(const TransitionChain& fwd, const TransitionChain& bwd,
                                          const Splitting& splitting, int stride) {
    if (stride < 1) stride = 1;
    if (fwd.count() != bwd.count() || fwd.dt != bwd.dt)
        throw NumericalError("forward and backward chains are on different segment grids");
    const VectorXd& x = fwd.trajectory.base;

    SubspaceCurves out;
    std::vector<int> ks;
    for (int k = 0; k < fwd.count(); ++k)
        if ((k + 1) % stride == 0 || k + 1 == fwd.count()) ks.push_back(k);
    const auto rows = static_cast<Eigen::Index>(ks.size());
    out.times.reserve(ks.size());
    auto init = [&](MatrixXd& M, int dim) {
        if (dim > 0) M.resize(rows, dim);
    };
    init(out.s_fwd, splitting.ns);
    init(out.s_bwd, splitting.ns);
    init(out.c_fwd, splitting.nc);
    init(out.c_bwd, splitting.nc);
    init(out.u_fwd, splitting.nu);
    init(out.u_bwd, splitting.nu);

    const auto n = x.size();
    MatrixXd Pf = MatrixXd::Identity(n, n), Pb = MatrixXd::Identity(n, n);
    Eigen::Index row = 0;
    std::size_t next = 0;
    for (int k = 0; k < fwd.count(); ++k) {
        Pf = fwd.segments[static_cast<std::size_t>(k)] * Pf;
        Pb = bwd.segments[static_cast<std::size_t>(k)] * Pb;
        if (next >= ks.size() || ks[next] != k) continue;
        ++next;
        const double T = fwd.dt * (k + 1);
        out.times.push_back(T);
        auto fill = [&](const MatrixXd& E, const MatrixXd& P, bool forward, MatrixXd& dst) {
            if (E.cols() == 0) return;
            Eigen::JacobiSVD<MatrixXd> svd(P * E);
            VectorXd sv = svd.singularValues();
            VectorXd mu(sv.size());
            for (Eigen::Index i = 0; i < sv.size(); ++i) mu[i] = std::log(sv[i]) / T;
            std::sort(mu.data(), mu.data() + mu.size());
            if (!forward) mu.reverseInPlace();
            dst.row(row) = mu.transpose();
        };
        fill(splitting.Es, Pf, true, out.s_fwd);
        fill(splitting.Es, Pb, false, out.s_bwd);
        fill(splitting.Ec, Pf, true, out.c_fwd);
        fill(splitting.Ec, Pb, false, out.c_bwd);
        fill(splitting.Eu, Pf, true, out.u_fwd);
        fill(splitting.Eu, Pb, false, out.u_bwd);
        ++row;
    }
    return out;
}

Splitting splitting_at(const VectorField& vf, const VectorXd& x, double T_bar, double dt,
                       int ns, int nc, int nu, const OdeTols& tols, double cond_limit) {
    LyapunovData fwd = compute_ftle(vf, x, T_bar, Direction::Forward, FtleMethod::Svd, dt, tols);
    LyapunovData bwd = compute_ftle(vf, x, T_bar, Direction::Backward, FtleMethod::Svd, dt, tols);
    return build_splitting(fwd, bwd, ns, nc, nu, cond_limit);
}

}  // namespace ftla
