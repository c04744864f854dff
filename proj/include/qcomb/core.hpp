#pragma once

// Units, uniform frequency grids and trapezoidal quadrature.
//
// Internal conventions: ordinary frequency in THz, vacuum wavelength in nm,
// delay in ps, propagation constants in rad/mm. Equations written in angular
// frequency carry their 2*pi explicitly where they are evaluated.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace qcomb {

inline constexpr const char* kVersion = "0.1.0";

/// Speed of light in nm*THz (equivalently um/ps * 1e3).
inline constexpr double kSpeedOfLight_nm_THz = 299792.458;
/// Speed of light in um/ps.
inline constexpr double kSpeedOfLight_um_ps = 299.792458;
/// Speed of light in mm/ps.
inline constexpr double kSpeedOfLight_mm_ps = 0.299792458;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// A grid or scan cannot resolve the requested structure.
class ResolutionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Frequency {
    double thz = 0.0;
    constexpr Frequency() = default;
    constexpr explicit Frequency(double v) : thz(v) {}
    friend constexpr auto operator<=>(const Frequency&, const Frequency&) = default;
};

struct Wavelength {
    double nm = 0.0;
    constexpr Wavelength() = default;
    constexpr explicit Wavelength(double v) : nm(v) {}
    friend constexpr auto operator<=>(const Wavelength&, const Wavelength&) = default;
};

struct DelayTime {
    double ps = 0.0;
    constexpr DelayTime() = default;
    constexpr explicit DelayTime(double v) : ps(v) {}
    friend constexpr auto operator<=>(const DelayTime&, const DelayTime&) = default;
};

inline Frequency wavelength_to_frequency(Wavelength lambda) {
    if (!(lambda.nm > 0.0) || !std::isfinite(lambda.nm))
        throw DomainError("wavelength must be positive and finite, got " + std::to_string(lambda.nm) + " nm");
    return Frequency{kSpeedOfLight_nm_THz / lambda.nm};
}

inline Wavelength frequency_to_wavelength(Frequency nu) {
    if (!(nu.thz > 0.0) || !std::isfinite(nu.thz))
        throw DomainError("frequency must be positive and finite, got " + std::to_string(nu.thz) + " THz");
    return Wavelength{kSpeedOfLight_nm_THz / nu.thz};
}

/// Single-pass stage convention: tau = d / c.
inline DelayTime delay_position_to_time(double position_um) {
    return DelayTime{position_um / kSpeedOfLight_um_ps};
}

inline double delay_time_to_position_um(DelayTime tau) { return tau.ps * kSpeedOfLight_um_ps; }

/// Uniform frequency axis covering [center - span/2, center + span/2].
class FreqGrid1D {
public:
    FreqGrid1D(Frequency center, double span_thz, std::size_t n)
        : center_(center), span_(span_thz), n_(n) {
        if (n < 2) throw DomainError("frequency grid needs at least 2 samples");
        if (!(span_thz > 0.0) || !std::isfinite(span_thz)) throw DomainError("frequency grid span must be positive");
        if (!std::isfinite(center.thz)) throw DomainError("frequency grid center must be finite");
    }

    /// Grid spanning [center - half_span, center + half_span] in wavelength,
    /// centred on the carrier frequency of `center`.
    static FreqGrid1D from_wavelength_window(Wavelength center, double half_span_nm, std::size_t n) {
        if (!(half_span_nm > 0.0) || half_span_nm >= center.nm)
            throw DomainError("wavelength half-span must be in (0, center)");
        const double hi = kSpeedOfLight_nm_THz / (center.nm - half_span_nm);
        const double lo = kSpeedOfLight_nm_THz / (center.nm + half_span_nm);
        return FreqGrid1D(wavelength_to_frequency(center), hi - lo, n);
    }

    Frequency center() const { return center_; }
    double span() const { return span_; }
    std::size_t size() const { return n_; }
    double spacing() const { return span_ / static_cast<double>(n_ - 1); }
    double lo() const { return center_.thz - 0.5 * span_; }
    double hi() const { return center_.thz + 0.5 * span_; }

    /// Symmetric about the centre: at(i) + at(n-1-i) == 2*center up to rounding.
    double at(std::size_t i) const {
        return center_.thz + (static_cast<double>(i) - 0.5 * static_cast<double>(n_ - 1)) * spacing();
    }

    double trapezoid_weight(std::size_t i) const {
        return (i == 0 || i + 1 == n_) ? 0.5 * spacing() : spacing();
    }

    std::vector<double> values() const {
        std::vector<double> v(n_);
        for (std::size_t i = 0; i < n_; ++i) v[i] = at(i);
        return v;
    }

    bool contains(double nu) const {
        const double h = 0.5 * spacing();
        return nu >= lo() - h && nu <= hi() + h;
    }

    friend bool operator==(const FreqGrid1D& a, const FreqGrid1D& b) {
        return a.center_ == b.center_ && a.span_ == b.span_ && a.n_ == b.n_;
    }

private:
    Frequency center_;
    double span_;
    std::size_t n_;
};

/// Dense row-major map over (axis1, axis2); row index follows axis1.
template <class T>
class Grid2D {
public:
    Grid2D(FreqGrid1D axis1, FreqGrid1D axis2, T fill = T{})
        : axis1_(std::move(axis1)), axis2_(std::move(axis2)), values_(axis1_.size() * axis2_.size(), fill) {}

    Grid2D(FreqGrid1D axis1, FreqGrid1D axis2, std::vector<T> values)
        : axis1_(std::move(axis1)), axis2_(std::move(axis2)), values_(std::move(values)) {
        if (values_.size() != axis1_.size() * axis2_.size())
            throw DomainError("grid values do not match axis dimensions");
    }

    const FreqGrid1D& axis1() const { return axis1_; }
    const FreqGrid1D& axis2() const { return axis2_; }
    std::size_t rows() const { return axis1_.size(); }
    std::size_t cols() const { return axis2_.size(); }
    bool square() const { return axis1_ == axis2_; }

    T& operator()(std::size_t i, std::size_t j) { return values_[i * cols() + j]; }
    const T& operator()(std::size_t i, std::size_t j) const { return values_[i * cols() + j]; }

    std::span<T> row(std::size_t i) { return {values_.data() + i * cols(), cols()}; }
    std::span<const T> row(std::size_t i) const { return {values_.data() + i * cols(), cols()}; }

    std::span<T> values() { return values_; }
    std::span<const T> values() const { return values_; }

private:
    FreqGrid1D axis1_;
    FreqGrid1D axis2_;
    std::vector<T> values_;
};

using ComplexGrid = Grid2D<std::complex<double>>;
using RealGrid = Grid2D<double>;

/// Trapezoidal rule on a uniform grid.
inline double integrate_1d(std::span<const double> values, const FreqGrid1D& grid) {
    if (values.size() != grid.size())
        throw DomainError("integrate_1d: " + std::to_string(values.size()) + " values for a grid of " +
                          std::to_string(grid.size()));
    double sum = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) sum += grid.trapezoid_weight(i) * values[i];
    return sum;
}

/// Trapezoidal rule for uniformly spaced samples with spacing h.
inline double integrate_uniform(std::span<const double> values, double h) {
    if (values.size() < 2) throw DomainError("integrate_uniform needs at least 2 samples");
    double sum = 0.5 * (values.front() + values.back());
    for (std::size_t i = 1; i + 1 < values.size(); ++i) sum += values[i];
    return sum * h;
}

inline double integrate_2d(const RealGrid& g) {
    double sum = 0.0;
    for (std::size_t i = 0; i < g.rows(); ++i) {
        double row = 0.0;
        const auto r = g.row(i);
        for (std::size_t j = 0; j < g.cols(); ++j) row += g.axis2().trapezoid_weight(j) * r[j];
        sum += g.axis1().trapezoid_weight(i) * row;
    }
    return sum;
}

/// Runs fn(begin, end) over contiguous blocks of [0, n). Blocks write disjoint
/// outputs, so results do not depend on the thread count.
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn) {
    const std::size_t hw = std::max(1u, std::thread::hardware_concurrency());
    const std::size_t workers = std::min<std::size_t>(hw, std::max<std::size_t>(1, n / 16));
    if (workers <= 1) {
        fn(std::size_t{0}, n);
        return;
    }
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t b = w * chunk;
        const std::size_t e = std::min(n, b + chunk);
        if (b >= e) break;
        pool.emplace_back([&fn, b, e] { fn(b, e); });
    }
}

/// Full width of a sampled curve at `fraction` of its maximum, using the
/// outermost crossings with linear interpolation. Returns 0 for an empty or
/// all-zero curve.
inline double full_width_at_fraction(std::span<const double> y, std::span<const double> x, double fraction) {
    if (y.size() != x.size() || y.size() < 2) throw DomainError("full_width_at_fraction: size mismatch");
    const double peak = *std::max_element(y.begin(), y.end());
    if (!(peak > 0.0)) return 0.0;
    const double level = fraction * peak;
    std::size_t first = 0;
    while (y[first] < level) ++first;
    std::size_t last = y.size() - 1;
    while (y[last] < level) --last;
    auto cross = [&](std::size_t a, std::size_t b) {
        return x[a] + (level - y[a]) / (y[b] - y[a]) * (x[b] - x[a]);
    };
    const double left = first == 0 ? x.front() : cross(first - 1, first);
    const double right = last + 1 == y.size() ? x.back() : cross(last, last + 1);
    return right - left;
}

}  // namespace qcomb
