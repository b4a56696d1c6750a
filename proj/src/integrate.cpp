#include "ftla/integrate.hpp"

#include <cmath>

namespace ftla {

MatrixXd TransitionChain::product(int upto) const {
    const auto n = trajectory.base.size();
    MatrixXd P = MatrixXd::Identity(n, n);
    int m = upto < 0 ? count() : upto;
    for (int k = 0; k < m; ++k) P = segments[static_cast<std::size_t>(k)] * P;
    return P;
}

namespace {

// RHS of the combined system [x; vec(Phi)], optionally time-reversed.
OdeRhs combined_rhs(const VectorField& vf, int n, int sgn) {
    return [&vf, n, sgn](double, const Eigen::VectorXd& y, Eigen::VectorXd& dy) {
        VectorXd x = y.head(n);
        Eigen::Map<const MatrixXd> M(y.data() + n, n, n);
        VectorXd fx = vf(x);
        MatrixXd J = vf.jacobian(x);
        if (sgn < 0) {
            fx = -fx;
            J = -J;
        }
        dy.resize(n + n * n);
        dy.head(n) = fx;
        Eigen::Map<MatrixXd>(dy.data() + n, n, n) = J * M;
    };
}

}  // namespace

VectorXd flow(const VectorField& vf, const VectorXd& x, double t, const OdeTols& tols) {
    if (!std::isfinite(t)) throw IntegrationError("flow time must be finite");
    if (t == 0.0) return x;
    const int n = vf.dimension();
    const int sgn = t > 0 ? +1 : -1;
    OdeRhs rhs = [&vf, sgn](double, const Eigen::VectorXd& y, Eigen::VectorXd& dy) {
        dy = vf(y);
        if (sgn < 0) dy = -dy;
    };
    VectorXd y = ode_integrate(rhs, x, 0.0, std::abs(t), tols);
    if (y.size() != n) throw IntegrationError("flow state size mismatch");
    return y;
}

TransitionChain transition_chain(const VectorField& vf, const VectorXd& x, double T, double dt,
                                 Direction direction, const OdeTols& tols,
                                 double max_segment_norm) {
    if (!(T > 0) || !(dt > 0)) throw IntegrationError("T and dt must be positive");
    const double ratio = T / dt;
    const int N = static_cast<int>(std::lround(ratio));
    if (N < 1 || std::abs(ratio - N) > 1e-9 * std::max(1.0, ratio))
        throw IntegrationError("T must be an integer multiple of dt");

    const int n = vf.dimension();
    const int sgn = sign_of(direction);

    for (int attempt = 0; attempt < 8; ++attempt) {
        const int halvings = 1 << attempt;
        const double seg_dt = dt / halvings;
        const int segs = N * halvings;

        TransitionChain chain;
        chain.direction = direction;
        chain.dt = seg_dt;
        chain.trajectory.base = x;
        chain.trajectory.times.push_back(0.0);
        chain.trajectory.states.push_back(x);

        OdeRhs rhs = combined_rhs(vf, n, sgn);
        VectorXd cur = x;
        bool too_large = false;
        for (int k = 0; k < segs && !too_large; ++k) {
            VectorXd y0(n + n * n);
            y0.head(n) = cur;
            Eigen::Map<MatrixXd>(y0.data() + n, n, n) = MatrixXd::Identity(n, n);
            VectorXd y = ode_integrate(rhs, y0, 0.0, seg_dt, tols);
            cur = y.head(n);
            MatrixXd Phi = Eigen::Map<const MatrixXd>(y.data() + n, n, n);
            if (Phi.cwiseAbs().maxCoeff() > max_segment_norm) {
                too_large = true;
                break;
            }
            Eigen::JacobiSVD<MatrixXd> svd(Phi);
            const auto& sv = svd.singularValues();
            if (sv(sv.size() - 1) <= 0 || sv(0) / sv(sv.size() - 1) > 1e12)
                throw IntegrationError("singular segment matrix (condition number > 1e12)");
            chain.segments.push_back(std::move(Phi));
            chain.trajectory.times.push_back(sgn * seg_dt * (k + 1));
            chain.trajectory.states.push_back(cur);
        }
        if (!too_large) return chain;
    }
    throw IntegrationError("segment matrix norm still above limit after dt halvings");
}

}  // namespace ftla
