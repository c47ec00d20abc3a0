#pragma once

#include <cmath>
#include <complex>

#include "field.hpp"
#include "grid.hpp"

namespace parafree {

/// c * Re((x' - s')·e + i|x_n|)^{3/2} with exact derivatives. At x_n = 0 the
/// normal derivative is the one-sided limit from x_n > 0.
inline Sample profile_sample(const Vec& x, int n, const Vec& e, double c = 1.0, const Vec& shift = {}) {
    double xi = 0.0;
    for (int d = 0; d + 1 < n; ++d) xi += (x[d] - shift[d]) * e[d];
    const double xn = x[n - 1] - shift[n - 1];
    const std::complex<double> z(xi, std::abs(xn));
    const std::complex<double> root = std::sqrt(z);
    const std::complex<double> fprime = 1.5 * root;
    Sample s;
    s.u = c * (z * root).real();
    for (int d = 0; d + 1 < n; ++d) s.grad[d] = c * fprime.real() * e[d];
    const double sign = xn < 0.0 ? -1.0 : 1.0;
    s.grad[n - 1] = -c * fprime.imag() * sign;
    s.dt = 0.0;
    return s;
}

/// Re(x'·e + i|x_n|)^{7/2}: the next homogeneous global solution with the
/// same contact set as the 3/2 profile.
inline double profile72_value(const Vec& x, int n, const Vec& e) {
    double xi = 0.0;
    for (int d = 0; d + 1 < n; ++d) xi += x[d] * e[d];
    const double xn = x[n - 1];
    if (xn == 0.0 && xi <= 0.0) return 0.0;
    const std::complex<double> z(xi, std::abs(xn));
    return (z * z * z * std::sqrt(z)).real();
}

inline Vec unit_direction(int n, double angle) {
    Vec e{0.0, 0.0, 0.0};
    if (n == 2) {
        e[0] = std::cos(angle) >= 0.0 ? 1.0 : -1.0;
    } else {
        e[0] = std::cos(angle);
        e[1] = std::sin(angle);
    }
    return e;
}

inline AnalyticField profile_field(const GridSpec& g, const Vec& e, double c = 1.0, const Vec& shift = {}) {
    const int n = g.n;
    return AnalyticField(
        g, [n, e, c, shift](const Vec& x, double) { return profile_sample(x, n, e, c, shift); }, true,
        "profile");
}

inline AnalyticField constant_field(const GridSpec& g, double value) {
    return AnalyticField(
        g, [value](const Vec&, double) { return Sample{value, {0.0, 0.0, 0.0}, 0.0}; }, true, "constant");
}

/// u = x_1: caloric and parabolically 1-homogeneous.
inline AnalyticField linear_field(const GridSpec& g) {
    return AnalyticField(
        g, [](const Vec& x, double) { return Sample{x[0], {1.0, 0.0, 0.0}, 0.0}; }, true, "linear");
}

/// u = x_1^2 + 2t: caloric, parabolically 2-homogeneous, even in x_n.
inline AnalyticField quadratic_field(const GridSpec& g) {
    return AnalyticField(
        g, [](const Vec& x, double t) { return Sample{x[0] * x[0] + 2.0 * t, {2.0 * x[0], 0.0, 0.0}, 2.0}; },
        true, "quadratic");
}

/// Strictly positive caloric function 3 + e^{-2(t+1)} cos x_1 cos x_n.
inline Sample heat_positive_sample(const Vec& x, double t, int n) {
    const double a = std::exp(-2.0 * (t + 1.0));
    const double c1 = std::cos(x[0]), cn = std::cos(x[n - 1]);
    Sample s;
    s.u = 3.0 + a * c1 * cn;
    s.grad[0] = -a * std::sin(x[0]) * cn;
    s.grad[n - 1] = -a * c1 * std::sin(x[n - 1]);
    s.dt = -2.0 * a * c1 * cn;
    return s;
}

inline AnalyticField heat_positive_field(const GridSpec& g) {
    const int n = g.n;
    return AnalyticField(
        g, [n](const Vec& x, double t) { return heat_positive_sample(x, t, n); }, true, "heat-positive");
}

}  // namespace parafree
