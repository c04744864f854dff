#pragma once

// Reference computations written independently of the library code paths.

#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

namespace oracle {

inline constexpr double c_nm_thz = 299792.458;

/// Golden-section search for the maximum of f on [a, b].
inline double maximize(const std::function<double(double)>& f, double a, double b, double tol = 1e-13) {
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = b - g * (b - a), x2 = a + g * (b - a);
    double f1 = f(x1), f2 = f(x2);
    while (b - a > tol) {
        if (f1 < f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1);
        }
    }
    return f(0.5 * (a + b));
}

/// Root of a monotone function on [a, b] by plain bisection.
inline double bisect(const std::function<double(double)>& f, double a, double b) {
    double fa = f(a);
    for (int k = 0; k < 200; ++k) {
        const double m = 0.5 * (a + b);
        const double fm = f(m);
        if ((fm > 0) == (fa > 0)) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    return 0.5 * (a + b);
}

/// Temperature-dependent SLT extraordinary index in its original
/// (T + 273.15)^2 form, lambda in um.
inline double slt_ne(double lambda_um, double t_c) {
    const double A = 4.502483, B = 0.007294, C = 0.185087, D = -0.02357, E = 0.073423, F = 0.199595;
    const double b = 3.483933e-8, c = 1.607839e-8;
    const double f = (t_c + 273.15) * (t_c + 273.15);
    const double l2 = lambda_um * lambda_um;
    const double r = C + c * f;
    return std::sqrt(A + (B + b * f) / (l2 - r * r) + E / (l2 - F * F) + D * l2);
}

/// |g|^2 with g = f(a,b) - f(b,a) exp(-i 2 pi (nu_a - nu_b) tau), computed
/// with complex arithmetic on a row-major n x n matrix.
inline std::vector<double> brute_force_csi(const std::vector<std::complex<double>>& f, const std::vector<double>& nu,
                                           double tau) {
    const std::size_t n = nu.size();
    std::vector<double> out(n * n);
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b) {
            const std::complex<double> phase = std::exp(std::complex<double>(0.0, -2.0 * std::numbers::pi * (nu[a] - nu[b]) * tau));
            out[a * n + b] = std::norm(f[a * n + b] - f[b * n + a] * phase);
        }
    return out;
}

/// Random nonnegative matrix, deterministic in the seed.
inline std::vector<double> random_matrix(std::size_t n, unsigned seed) {
    std::mt19937 g(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> m(n * n);
    for (auto& v : m) v = u(g);
    return m;
}

}  // namespace oracle
