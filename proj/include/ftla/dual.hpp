// Scalar dual numbers for forward-mode automatic differentiation.
//
// A Dual carries a value and one directional derivative. Evaluating an
// expression with the k-th state variable seeded as (x_k, 1) and all others
// as (x_i, 0) yields the k-th column of the Jacobian exactly (to rounding).

#pragma once

#include <cmath>

namespace ftla {

struct Dual {
    double re = 0.0;  // value
    double du = 0.0;  // directional derivative

    constexpr Dual() = default;
    constexpr Dual(double r) : re(r) {}
    constexpr Dual(double r, double d) : re(r), du(d) {}
};

constexpr Dual operator+(Dual a, Dual b) { return {a.re + b.re, a.du + b.du}; }
constexpr Dual operator-(Dual a, Dual b) { return {a.re - b.re, a.du - b.du}; }
constexpr Dual operator-(Dual a) { return {-a.re, -a.du}; }
constexpr Dual operator*(Dual a, Dual b) {
    return {a.re * b.re, a.re * b.du + a.du * b.re};
}
constexpr Dual operator/(Dual a, Dual b) {
    const double inv = 1.0 / b.re;
    return {a.re * inv, (a.du - a.re * b.du * inv) * inv};
}

inline Dual sin(Dual a) { return {std::sin(a.re), std::cos(a.re) * a.du}; }
inline Dual cos(Dual a) { return {std::cos(a.re), -std::sin(a.re) * a.du}; }
inline Dual exp(Dual a) {
    const double e = std::exp(a.re);
    return {e, e * a.du};
}
inline Dual log(Dual a) { return {std::log(a.re), a.du / a.re}; }
inline Dual sqrt(Dual a) {
    const double s = std::sqrt(a.re);
    return {s, a.du / (2.0 * s)};
}

// With a constant exponent the power rule keeps negative bases valid for
// integer powers; the general branch requires a positive base.
inline Dual pow(Dual a, Dual b) {
    if (b.du == 0.0) {
        const double v = std::pow(a.re, b.re);
        return {v, b.re * std::pow(a.re, b.re - 1.0) * a.du};
    }
    const double v = std::pow(a.re, b.re);
    return {v, v * (b.du * std::log(a.re) + b.re * a.du / a.re)};
}

}  // namespace ftla
