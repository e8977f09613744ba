#pragma once

// Shared oracles for the test suites. Everything here is computed from first
// principles (explicit polynomials, composite Simpson, closed forms), kept
// independent of the library code paths it is used to check.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace oracle {

// Composite Simpson on [a, b] with `panels` panels (made even internally).
inline double simpson(const std::function<double(double)>& f, double a, double b, int panels) {
    if (panels % 2) ++panels;
    const double h = (b - a) / panels;
    double acc = f(a) + f(b);
    for (int i = 1; i < panels; ++i) acc += f(a + h * i) * ((i % 2) ? 4.0 : 2.0);
    return acc * h / 3.0;
}

// Erfi via its defining integral (independent of the library's series).
inline double erfi_quadrature(double x) {
    return 1.1283791670955126 * simpson([](double t) { return std::exp(t * t); }, 0.0, x, 4000);
}

// Explicit degree-5 Hermite polynomial, exact coefficients.
inline double hermite5(double x) {
    return 32.0 * std::pow(x, 5) - 160.0 * std::pow(x, 3) + 120.0 * x;
}

// ---------------------------------------------------------------------------
// Closed-form pattern functions (Erfi representation). The (2,1) form carries
// the sign fixed by the reconstruction identity E[f_{j,k}(X) e^{i(j-k)Phi}] =
// rho_{j,k}; the even-difference forms are sign-unambiguous.
// ---------------------------------------------------------------------------

inline double pf00(double x, double erfi_x) {
    return 2.0 - 2.0 * std::sqrt(M_PI) * x * std::exp(-x * x) * erfi_x;
}

inline double pf21(double x, double erfi_x) {
    const double x2 = x * x;
    return -(-2.0 * x * (-3.0 + 2.0 * x2) +
             std::exp(-x2) * std::sqrt(M_PI) * (1.0 - 8.0 * x2 + 4.0 * x2 * x2) * erfi_x);
}

inline double pf42(double x, double erfi_x) {
    const double x2 = x * x;
    return 1.0 / (2.0 * std::sqrt(3.0)) *
           (2.0 * (-4.0 + 27.0 * x2 - 24.0 * x2 * x2 + 4.0 * std::pow(x2, 3)) +
            std::exp(-x2) * std::sqrt(M_PI) * x *
                (21.0 - 74.0 * x2 + 52.0 * x2 * x2 - 8.0 * std::pow(x2, 3)) * erfi_x);
}

inline double pf55(double x, double erfi_x) {
    const double x2 = x * x;
    return (2.0 * (-30.0 + 435.0 * x2 - 865.0 * std::pow(x2, 2) + 526.0 * std::pow(x2, 3) -
                   116.0 * std::pow(x2, 4) + 8.0 * std::pow(x2, 5)) +
            std::exp(-x2) * std::sqrt(M_PI) * x *
                (225.0 - 1425.0 * x2 + 2160.0 * std::pow(x2, 2) - 1160.0 * std::pow(x2, 3) +
                 240.0 * std::pow(x2, 4) - 16.0 * std::pow(x2, 5)) * erfi_x) /
           30.0;
}

// Kolmogorov-Smirnov distance of a sample against a cdf.
inline double ks_distance(std::vector<double> sample, const std::function<double(double)>& cdf) {
    std::sort(sample.begin(), sample.end());
    const double n = static_cast<double>(sample.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double f = cdf(sample[i]);
        d = std::max(d, std::max((i + 1.0) / n - f, f - i / n));
    }
    return d;
}

// Least-squares slope of y against x.
inline double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

inline double mean_of(const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

inline double variance_of(const std::vector<double>& v) {
    const double m = mean_of(v);
    double s = 0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size());
}

}  // namespace oracle
