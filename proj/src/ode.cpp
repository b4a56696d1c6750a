#include "ftla/ode.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ftla {

namespace {

// Dormand & Prince (1980) RKF5(4)7M tableau, FSAL.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
// 5th-order minus embedded 4th-order weights.
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

}  // namespace

Eigen::VectorXd ode_integrate(const OdeRhs& rhs, Eigen::VectorXd y, double t0, double t1,
                              const OdeTols& tols, OdeStats* stats) {
    using Eigen::VectorXd;
    if (!(t1 > t0)) {
        if (t1 == t0) return y;
        throw IntegrationError("ode_integrate requires t1 >= t0");
    }
    if (!(tols.rel > 0) || !(tols.abs > 0))
        throw IntegrationError("tolerances must be positive");

    const auto n = y.size();
    const double span = t1 - t0;
    double t = t0;

    VectorXd k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), ytmp(n), ynew(n), err(n);
    OdeStats local;
    OdeStats& st = stats ? *stats : local;

    rhs(t, y, k1);
    ++st.rhs_evals;

    // Initial step from the scaled magnitudes of y and f.
    double d0 = 0, d1 = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        double sc = tols.abs + tols.rel * std::abs(y[i]);
        d0 = std::max(d0, std::abs(y[i]) / sc);
        d1 = std::max(d1, std::abs(k1[i]) / sc);
    }
    double h = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * (d0 / d1);
    h = std::min(h, span);

    const double hmin = 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t1));
    bool last = false;

    while (!last) {
        if (t + h >= t1) {
            h = t1 - t;
            last = true;
        }
        if (h < hmin) throw IntegrationError("step size underflow (stiff or singular problem)");

        ytmp = y + h * (a21 * k1);
        rhs(t + c2 * h, ytmp, k2);
        ytmp = y + h * (a31 * k1 + a32 * k2);
        rhs(t + c3 * h, ytmp, k3);
        ytmp = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
        rhs(t + c4 * h, ytmp, k4);
        ytmp = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
        rhs(t + c5 * h, ytmp, k5);
        ytmp = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
        rhs(t + h, ytmp, k6);
        ynew = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
        rhs(t + h, ynew, k7);
        st.rhs_evals += 6;
        ++st.steps;

        err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
        double errnorm = 0;
        bool finite = true;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (!std::isfinite(ynew[i])) finite = false;
            double sc = tols.abs + tols.rel * std::max(std::abs(y[i]), std::abs(ynew[i]));
            double e = err[i] / sc;
            errnorm += e * e;
        }
        errnorm = std::sqrt(errnorm / static_cast<double>(n));
        if (!finite) {
            throw IntegrationError("non-finite state during integration");
        }

        if (errnorm <= 1.0) {
            t += h;
            y.swap(ynew);
            k1.swap(k7);  // FSAL
            ++st.accepted;
            double fac = 0.9 * std::pow(std::max(errnorm, 1e-10), -0.2);
            h *= std::clamp(fac, 0.2, 10.0);
        } else {
            ++st.rejected;
            last = false;
            double fac = 0.9 * std::pow(errnorm, -0.2);
            h *= std::clamp(fac, 0.1, 0.9);
        }
    }
    return y;
}

}  // namespace ftla
