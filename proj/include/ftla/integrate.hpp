// Propagation of the nonlinear state together with the tangent linear
// dynamics, in the segmented form used by the spectrum computations: the
// total transition matrix over [0, T] is the ordered product of per-segment
// matrices, each integrated jointly with the state and re-initialized to the
// identity at the segment start.

#pragma once

#include <Eigen/Dense>
#include <vector>

#include "ftla/ode.hpp"
#include "ftla/vector_field.hpp"

namespace ftla {

enum class Direction { Forward = +1, Backward = -1 };

inline int sign_of(Direction d) { return d == Direction::Forward ? +1 : -1; }

struct Trajectory {
    VectorXd base;                   // x
    std::vector<double> times;       // signed sample times, first is 0
    std::vector<VectorXd> states;    // states[k] = phi(times[k], x)
};

class TransitionChain {
  public:
    Direction direction;
    double dt = 0;                   // segment length (positive)
    std::vector<MatrixXd> segments;  // Phi_k over segment k, k = 1..N
    Trajectory trajectory;

    int count() const { return static_cast<int>(segments.size()); }
    double total_time() const { return dt * count(); }
    const VectorXd& endpoint() const { return trajectory.states.back(); }

    // Phi_N ... Phi_1 (up to the given number of segments; -1 means all).
    MatrixXd product(int upto = -1) const;
};

// phi(t, x); negative t integrates the time-reversed field over |t|.
// t = 0 returns x exactly.
VectorXd flow(const VectorField& vf, const VectorXd& x, double t, const OdeTols& tols = {});

// Joint state + variational integration over N = T/dt segments. Requires T to
// be an integer multiple of dt. If any segment matrix max-norm exceeds
// max_segment_norm the chain is recomputed with dt halved (stiff directions
// would otherwise overflow the product). A segment with condition number
// above 1e12 is an error.
TransitionChain transition_chain(const VectorField& vf, const VectorXd& x, double T, double dt,
                                 Direction direction, const OdeTols& tols = {},
                                 double max_segment_norm = 1e6);

}  // namespace ftla
