#pragma once

// Joint spectral amplitude of the down-converted pair:
//   f(nu_s, nu_i) = alpha(nu_s + nu_i) * phi(nu_s, nu_i) * sqrt(T_s(nu_s) T_i(nu_i))
// on a square frequency grid, L2-normalised.

#include <complex>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "qcomb/core.hpp"
#include "qcomb/dispersion.hpp"

namespace qcomb {

/// Transform-limited Gaussian pump.
struct PumpSpec {
    double center_nm = 792.0;
    double fwhm_ps = 2.0;  // intensity FWHM in time

    void validate() const {
        if (!(center_nm > 0.0)) throw DomainError("pump center wavelength must be positive");
        if (!(fwhm_ps > 0.0)) throw DomainError("pump pulse FWHM must be positive");
    }

    Frequency frequency() const { return wavelength_to_frequency(Wavelength{center_nm}); }

    /// Intensity FWHM of |alpha|^2 in sum frequency: (2 ln2 / pi) / dt.
    double spectral_fwhm_thz() const { return 2.0 * std::numbers::ln2 / std::numbers::pi / fwhm_ps; }

    /// Width parameter of alpha = exp(-x^2 / (2 sigma^2)).
    double sigma_thz() const { return spectral_fwhm_thz() / (2.0 * std::sqrt(std::numbers::ln2)); }
};

/// Real, positive, unit peak at the pump frequency.
inline std::complex<double> pump_envelope(const PumpSpec& p, Frequency nu_sum) {
    const double x = nu_sum.thz - p.frequency().thz;
    const double s = p.sigma_thz();
    return {std::exp(-x * x / (2.0 * s * s)), 0.0};
}

inline double sinc(double x) {
    if (std::abs(x) < 1e-8) return 1.0 - x * x / 6.0;
    return std::sin(x) / x;
}

/// sinc(Delta k * L / 2).
inline std::complex<double> phase_matching_amplitude(const CrystalSpec& crystal, Frequency nu_s, Frequency nu_i) {
    return {sinc(0.5 * phase_mismatch(crystal, nu_s, nu_i) * crystal.length_mm), 0.0};
}

/// Long-pass edge: T = 1 / (1 + exp(-(lambda - cut_on) / width)).
struct LogisticEdge {
    double cut_on_nm = 1571.5424;
    double edge_width_nm = 2.5;
};

/// Gaussian band-limiting envelope (intensity FWHM in wavelength). Stands in
/// for the source's intrinsic bandwidth.
struct Apodization {
    double center_nm = 1584.0;
    double fwhm_nm = 49.4974;
};

struct AnalyticFilter {
    std::optional<LogisticEdge> edge;
    std::optional<Apodization> apodization;
};

/// Measured transmission curve, linearly interpolated and held constant
/// beyond its ends.
struct TabulatedFilter {
    std::vector<double> lambda_nm;
    std::vector<double> transmission;

    void validate() const {
        if (lambda_nm.size() != transmission.size() || lambda_nm.size() < 2)
            throw ValidationError("tabulated filter needs >= 2 (lambda, T) pairs");
        for (std::size_t k = 0; k < lambda_nm.size(); ++k) {
            if (!(transmission[k] >= 0.0 && transmission[k] <= 1.0))
                throw ValidationError("tabulated filter transmission outside [0, 1]");
            if (k > 0 && !(lambda_nm[k] > lambda_nm[k - 1]))
                throw ValidationError("tabulated filter wavelengths must be strictly increasing");
        }
    }
};

using FilterSpec = std::variant<AnalyticFilter, TabulatedFilter>;

inline double transmission(const FilterSpec& filter, Wavelength lambda) {
    if (const auto* a = std::get_if<AnalyticFilter>(&filter)) {
        double t = 1.0;
        if (a->edge) {
            const double z = (lambda.nm - a->edge->cut_on_nm) / a->edge->edge_width_nm;
            t *= 1.0 / (1.0 + std::exp(-z));
        }
        if (a->apodization) {
            const double z = (lambda.nm - a->apodization->center_nm) / a->apodization->fwhm_nm;
            t *= std::exp(-4.0 * std::numbers::ln2 * z * z);
        }
        return t;
    }
    const auto& tab = std::get<TabulatedFilter>(filter);
    const auto& x = tab.lambda_nm;
    if (lambda.nm <= x.front()) return tab.transmission.front();
    if (lambda.nm >= x.back()) return tab.transmission.back();
    const auto it = std::upper_bound(x.begin(), x.end(), lambda.nm);
    const std::size_t k = static_cast<std::size_t>(it - x.begin());
    const double u = (lambda.nm - x[k - 1]) / (x[k] - x[k - 1]);
    return (1.0 - u) * tab.transmission[k - 1] + u * tab.transmission[k];
}

/// Two-column text: wavelength (nm), transmission. '#' starts a comment.
inline TabulatedFilter parse_tabulated_filter(std::istream& in, const std::string& source = "<stream>") {
    TabulatedFilter f;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        for (char& ch : line)
            if (ch == ',') ch = ' ';
        std::istringstream ls(line);
        double l, t;
        if (!(ls >> l)) continue;
        if (!(ls >> t)) throw ValidationError(source + ":" + std::to_string(line_no) + ": expected 'lambda T'");
        f.lambda_nm.push_back(l);
        f.transmission.push_back(t);
    }
    f.validate();
    return f;
}

inline TabulatedFilter load_tabulated_filter(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open filter file '" + path + "'");
    return parse_tabulated_filter(in, path);
}

struct JsaGrid {
    ComplexGrid amplitude;
    bool normalized = false;

    const FreqGrid1D& axis() const { return amplitude.axis1(); }

    bool is_real() const {
        for (const auto& v : amplitude.values())
            if (v.imag() != 0.0) return false;
        return true;
    }

    /// Trapezoidal integral of |f|^2.
    double norm2() const {
        RealGrid g(amplitude.axis1(), amplitude.axis2());
        auto out = g.values();
        auto in = amplitude.values();
        for (std::size_t k = 0; k < in.size(); ++k) out[k] = std::norm(in[k]);
        return integrate_2d(g);
    }
};

namespace detail {

inline std::vector<double> filter_on_axis(const FilterSpec& f, const FreqGrid1D& axis) {
    std::vector<double> t(axis.size());
    for (std::size_t i = 0; i < t.size(); ++i)
        t[i] = transmission(f, frequency_to_wavelength(Frequency{axis.at(i)}));
    return t;
}

/// alpha * phi on the square grid, before filtering.
inline RealGrid source_amplitude(const PumpSpec& pump, const CrystalSpec& crystal, const FreqGrid1D& axis) {
    RealGrid g(axis, axis);
    parallel_for(axis.size(), [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
            const double nu_s = axis.at(i);
            for (std::size_t j = 0; j < axis.size(); ++j) {
                const double nu_i = axis.at(j);
                const double a = pump_envelope(pump, Frequency{nu_s + nu_i}).real();
                g(i, j) = a == 0.0 ? 0.0 : a * phase_matching_amplitude(crystal, Frequency{nu_s}, Frequency{nu_i}).real();
            }
        }
    });
    return g;
}

inline double border_fraction(const RealGrid& intensity) {
    const std::size_t n = intensity.rows(), m = intensity.cols();
    double total = 0.0, border = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) {
            const double w = intensity.axis1().trapezoid_weight(i) * intensity.axis2().trapezoid_weight(j) * intensity(i, j);
            total += w;
            if (i < 2 || j < 2 || i + 2 >= n || j + 2 >= m) border += w;
        }
    if (!(total > 0.0)) return 1.0;
    return border / total;
}

}  // namespace detail

inline JsaGrid assemble_jsa(const PumpSpec& pump, const CrystalSpec& crystal, const FilterSpec& filter_s,
                            const FilterSpec& filter_i, const FreqGrid1D& axis) {
    pump.validate();
    crystal.validate();
    if (const auto* t = std::get_if<TabulatedFilter>(&filter_s)) t->validate();
    if (const auto* t = std::get_if<TabulatedFilter>(&filter_i)) t->validate();

    const RealGrid src = detail::source_amplitude(pump, crystal, axis);
    const auto ts = detail::filter_on_axis(filter_s, axis);
    const auto ti = detail::filter_on_axis(filter_i, axis);

    JsaGrid jsa{ComplexGrid(axis, axis), false};
    RealGrid intensity(axis, axis);
    for (std::size_t i = 0; i < axis.size(); ++i) {
        const double as = std::sqrt(ts[i]);
        for (std::size_t j = 0; j < axis.size(); ++j) {
            const double v = src(i, j) * (as * std::sqrt(ti[j]));  // grouped so f(a,b) == f(b,a) bitwise
            jsa.amplitude(i, j) = {v, 0.0};
            intensity(i, j) = v * v;
        }
    }
    const double frac = detail::border_fraction(intensity);
    if (frac > 1e-4)
        throw ResolutionError("JSA support truncated: " + std::to_string(frac) +
                              " of the two-photon intensity lies within 2 samples of the grid edge; widen the grid");
    const double scale = 1.0 / std::sqrt(integrate_2d(intensity));
    for (auto& v : jsa.amplitude.values()) v *= scale;
    jsa.normalized = true;
    return jsa;
}

struct MarginalSpectrum {
    FreqGrid1D axis;
    std::vector<double> intensity;
    double fwhm_thz = 0.0;
    double fwhm_nm = 0.0;
    double center_nm = 0.0;  // midpoint of the half-maximum crossings
    bool multimodal = false;  // more than two half-maximum crossings
};

namespace detail {

inline MarginalSpectrum summarize_marginal(const FreqGrid1D& axis, std::vector<double> s) {
    MarginalSpectrum m{axis, std::move(s)};
    const auto& y = m.intensity;
    const double half = 0.5 * *std::max_element(y.begin(), y.end());
    std::vector<double> crossings;
    for (std::size_t k = 0; k + 1 < y.size(); ++k) {
        const double a = y[k] - half, b = y[k + 1] - half;
        if ((a < 0.0) != (b < 0.0)) crossings.push_back(axis.at(k) + a / (a - b) * axis.spacing());
    }
    if (crossings.size() < 2) throw ResolutionError("marginal spectrum does not fall to half maximum inside the grid");
    m.multimodal = crossings.size() > 2;
    const double lo = crossings.front(), hi = crossings.back();
    m.fwhm_thz = hi - lo;
    const double l_lo = kSpeedOfLight_nm_THz / hi, l_hi = kSpeedOfLight_nm_THz / lo;
    m.fwhm_nm = l_hi - l_lo;
    m.center_nm = 0.5 * (l_hi + l_lo);
    return m;
}

}  // namespace detail

/// S(nu) = integral of |f|^2 over the other photon; axis 1 = signal, 2 = idler.
inline MarginalSpectrum marginal_spectrum(const JsaGrid& jsa, int which_axis) {
    if (which_axis != 1 && which_axis != 2) throw DomainError("marginal axis must be 1 or 2");
    const auto& a = jsa.amplitude;
    const std::size_t n = a.rows();
    std::vector<double> s(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const double v = std::norm(a(i, j));
            if (which_axis == 1)
                s[i] += a.axis2().trapezoid_weight(j) * v;
            else
                s[j] += a.axis1().trapezoid_weight(i) * v;
        }
    return detail::summarize_marginal(which_axis == 1 ? a.axis1() : a.axis2(), std::move(s));
}

/// Bisects one scalar filter parameter until the signal marginal FWHM equals
/// `target_nm`. `apply(filter, x)` writes x into both arms' filter; the
/// marginal width must be monotone in x over [lo, hi].
template <class Apply>
double calibrate_filter_parameter(const PumpSpec& pump, const CrystalSpec& crystal, const AnalyticFilter& base,
                                  const FreqGrid1D& axis, double target_nm, double lo, double hi, Apply apply) {
    const RealGrid src = detail::source_amplitude(pump, crystal, axis);
    auto width = [&](double x) {
        AnalyticFilter f = base;
        apply(f, x);
        const auto t = detail::filter_on_axis(f, axis);
        std::vector<double> s(axis.size(), 0.0);
        for (std::size_t i = 0; i < axis.size(); ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < axis.size(); ++j) acc += axis.trapezoid_weight(j) * src(i, j) * src(i, j) * t[j];
            s[i] = acc * t[i];
        }
        return detail::summarize_marginal(axis, std::move(s)).fwhm_nm - target_nm;
    };
    double wlo = width(lo);
    const double whi = width(hi);
    if ((wlo > 0.0) == (whi > 0.0))
        throw SolverError("filter calibration target " + std::to_string(target_nm) + " nm not bracketed");
    for (int it = 0; it < 100 && std::abs(hi - lo) > 1e-9; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double wm = width(mid);
        if ((wm > 0.0) == (wlo > 0.0)) {
            lo = mid;
            wlo = wm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

}  // namespace qcomb
