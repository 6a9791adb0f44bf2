#pragma once

// Test-only oracles, deliberately independent of the library's own
// numerics: bisection root finding, direct DFT correlation, central
// finite differences, scalar Newton, least-squares fits and Simpson
// quadrature. Unit and acceptance suites compute expected values through
// these routes and compare against the implementation under test.

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace oracle {

inline double bisect(const std::function<double(double)>& f, double lo,
                     double hi, double tol = 1e-12) {
    double flo = f(lo), fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo > 0.0) == (fhi > 0.0))
        throw std::invalid_argument("bisect: no sign change in bracket");
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if (fm == 0.0) return mid;
        if ((fm > 0.0) == (flo > 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

inline double central_diff(const std::function<double(double)>& f, double x,
                           double h) {
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

/// Plain correlation DFT bin, normalized like the library's goertzel: a
/// pure A*sin at frequency f over an integer number of cycles returns A.
inline double dft_magnitude(const std::vector<double>& samples, double dt,
                            double f) {
    const double w = 2.0 * 3.14159265358979323846 * f * dt;
    double re = 0.0, im = 0.0;
    for (size_t n = 0; n < samples.size(); ++n) {
        re += samples[n] * std::cos(w * static_cast<double>(n));
        im -= samples[n] * std::sin(w * static_cast<double>(n));
    }
    return 2.0 * std::hypot(re, im) / static_cast<double>(samples.size());
}

inline double scalar_newton(const std::function<double(double)>& f,
                            const std::function<double(double)>& fprime,
                            double x0, int iters = 200) {
    double x = x0;
    for (int i = 0; i < iters; ++i) {
        const double step = f(x) / fprime(x);
        x -= step;
        if (std::fabs(step) < 1e-15) break;
    }
    return x;
}

/// Least-squares slope of y = c*x through the origin.
inline double fit_proportional(const std::vector<double>& x,
                               const std::vector<double>& y) {
    double sxy = 0.0, sxx = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        sxy += x[i] * y[i];
        sxx += x[i] * x[i];
    }
    return sxy / sxx;
}

/// Coefficient of determination of data y against a model prediction yhat.
inline double r_squared(const std::vector<double>& y,
                        const std::vector<double>& yhat) {
    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= static_cast<double>(y.size());
    double ss_res = 0.0, ss_tot = 0.0;
    for (size_t i = 0; i < y.size(); ++i) {
        ss_res += (y[i] - yhat[i]) * (y[i] - yhat[i]);
        ss_tot += (y[i] - mean) * (y[i] - mean);
    }
    return 1.0 - ss_res / ss_tot;
}

/// Composite Simpson rule on [a, b] with n (even) intervals.
inline double simpson(const std::function<double(double)>& f, double a,
                      double b, int n = 2000) {
    if (n % 2) ++n;
    const double h = (b - a) / n;
    double s = f(a) + f(b);
    for (int i = 1; i < n; ++i) s += f(a + h * i) * (i % 2 ? 4.0 : 2.0);
    return s * h / 3.0;
}

}  // namespace oracle
