// Adaptive explicit Runge-Kutta 5(4) with the Dormand-Prince coefficients.

#pragma once

#include <Eigen/Dense>
#include <functional>

#include "ftla/error.hpp"

namespace ftla {

struct OdeTols {
    double rel = 1e-10;
    double abs = 1e-12;
};

using OdeRhs = std::function<void(double t, const Eigen::VectorXd& y, Eigen::VectorXd& dy)>;

struct OdeStats {
    long steps = 0;
    long accepted = 0;
    long rejected = 0;
    long rhs_evals = 0;
};

// Integrates y' = rhs(t, y) from t0 to t1 (t1 > t0) and returns y(t1).
Eigen::VectorXd ode_integrate(const OdeRhs& rhs, Eigen::VectorXd y0, double t0, double t1,
                              const OdeTols& tols, OdeStats* stats = nullptr);

}  // namespace ftla
