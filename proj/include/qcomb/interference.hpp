#pragma once

// Spectrally resolved HOM interference.
//
// With the delay on the idler arm and the global phase removed, the
// post-selected coincidence amplitude is
//   g(nu1, nu2, tau) = f(nu1, nu2) - f(nu2, nu1) exp(-i 2 pi (nu1 - nu2) tau)
// and the correlated spectral intensity is I = |g|^2. For real f this reduces to
//   I = f12^2 + f21^2 - 2 f12 f21 cos(2 pi (nu1 - nu2) tau).
// P(tau) = 1/4 * integral of I; H(dnu) integrates I along nu2 - nu1 = dnu.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "qcomb/biphoton.hpp"
#include "qcomb/core.hpp"

namespace qcomb {

struct CsiGrid {
    RealGrid intensity;
    double tau_ps = 0.0;
    double normalization = 0.0;  // N = integral of I
    bool general_route = false;  // complex JSA, evaluated as |g|^2
};

struct DipMetrics {
    double baseline = 0.0;  // mean of the outer 10% of samples
    double minimum = 0.0;
    double tau_at_minimum_ps = 0.0;
    double visibility = 0.0;
    double fwhm_fs = 0.0;
    double fwhm_um = 0.0;
};

struct DipScan {
    std::vector<double> tau_ps;
    std::vector<double> probability;
    double accidental_floor = 0.0;
    DipMetrics metrics;
};

struct PeakSet {
    std::vector<std::size_t> indices;
    std::vector<double> positions;
    std::vector<double> heights;
    std::size_t count() const { return indices.size(); }
};

struct ToaSpectrum {
    double spacing_thz = 0.0;
    std::vector<double> delta_nu;  // nu2 - nu1, THz
    std::vector<double> values;
    PeakSet peaks;
};

struct QuditTooth {
    int j = 0;
    double nu_plus = 0.0;   // nominal channel-1 frequency of the tooth
    double nu_minus = 0.0;  // nominal channel-2 frequency
    double centroid_nu1 = 0.0;
    double centroid_nu2 = 0.0;
    double weight = 0.0;
};

struct QuditDecomposition {
    double tau_ps = 0.0;
    double pump_nu_thz = 0.0;
    std::vector<QuditTooth> teeth;

    std::size_t dimension(double min_weight = 0.05) const {
        return static_cast<std::size_t>(
            std::count_if(teeth.begin(), teeth.end(), [&](const QuditTooth& t) { return t.weight > min_weight; }));
    }
};

/// Peak-count defaults for comb analysis.
struct PeakOptions {
    double threshold = 0.20;  // fraction of the maximum
    std::optional<std::size_t> min_separation;  // samples; default half the tooth spacing
};

namespace detail {

inline void require_square(const JsaGrid& jsa) {
    if (!jsa.amplitude.square()) throw DomainError("interference requires a square JSA grid (identical axes)");
}

/// cos/sin of 2 pi (nu1 - nu2) tau indexed by k = i - j + (n - 1).
inline std::vector<std::complex<double>> diagonal_phases(const FreqGrid1D& axis, double tau_ps) {
    const std::size_t n = axis.size();
    const double h = axis.spacing();
    std::vector<std::complex<double>> ph(2 * n - 1);
    for (std::size_t k = 0; k < ph.size(); ++k) {
        const double d = (static_cast<double>(k) - static_cast<double>(n - 1)) * h;
        ph[k] = std::polar(1.0, kTwoPi * d * tau_ps);
    }
    return ph;
}

}  // namespace detail

/// g(nu1, nu2, tau) = f(nu1, nu2) - f(nu2, nu1) exp(-i 2 pi (nu1 - nu2) tau).
inline ComplexGrid interference_amplitude(const JsaGrid& jsa, DelayTime tau) {
    detail::require_square(jsa);
    const auto& f = jsa.amplitude;
    const std::size_t n = f.rows();
    const auto ph = detail::diagonal_phases(f.axis1(), tau.ps);
    ComplexGrid g(f.axis1(), f.axis2());
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) g(i, j) = f(i, j) - f(j, i) * std::conj(ph[i + n - 1 - j]);
    return g;
}

inline CsiGrid csi(const JsaGrid& jsa, DelayTime tau) {
    detail::require_square(jsa);
    const auto& f = jsa.amplitude;
    const std::size_t n = f.rows();
    CsiGrid out{RealGrid(f.axis1(), f.axis2()), tau.ps, 0.0, !jsa.is_real()};
    if (out.general_route) {
        const ComplexGrid g = interference_amplitude(jsa, tau);
        for (std::size_t k = 0; k < g.values().size(); ++k) out.intensity.values()[k] = std::norm(g.values()[k]);
    } else {
        const auto ph = detail::diagonal_phases(f.axis1(), tau.ps);
        parallel_for(n, [&](std::size_t b, std::size_t e) {
            for (std::size_t i = b; i < e; ++i)
                for (std::size_t j = 0; j < n; ++j) {
                    // |a - c e^{-i phi}|^2 as a sum of squares: exact zeros, no cancellation below zero.
                    const double a = f(i, j).real(), c = f(j, i).real();
                    const auto& p = ph[i + n - 1 - j];
                    const double re = a - c * p.real(), im = c * p.imag();
                    out.intensity(i, j) = re * re + im * im;
                }
        });
    }
    out.normalization = integrate_2d(out.intensity);
    return out;
}

/// P(tau) = 1/4 * integral of I.
inline double coincidence_probability(const JsaGrid& jsa, DelayTime tau) {
    return 0.25 * csi(jsa, tau).normalization;
}

/// Evaluates P(tau) for many delays. The cross term depends on (i, j) only via
/// i - j, so it is pre-summed per diagonal; the quadrature weights are those of
/// integrate_2d, making each value identical to coincidence_probability up to
/// summation order.
class CoincidenceEvaluator {
public:
    explicit CoincidenceEvaluator(const JsaGrid& jsa) : axis_(jsa.axis()) {
        detail::require_square(jsa);
        const auto& f = jsa.amplitude;
        const std::size_t n = f.rows();
        cross_.assign(2 * n - 1, {0.0, 0.0});
        for (std::size_t i = 0; i < n; ++i) {
            const double wi = axis_.trapezoid_weight(i);
            for (std::size_t j = 0; j < n; ++j) {
                const double w = wi * axis_.trapezoid_weight(j);
                direct_ += w * (std::norm(f(i, j)) + std::norm(f(j, i)));
                cross_[i + n - 1 - j] += w * f(i, j) * std::conj(f(j, i));
            }
        }
    }

    double operator()(DelayTime tau) const {
        const std::size_t n = axis_.size();
        const double h = axis_.spacing();
        double cross = 0.0;
        for (std::size_t k = 0; k < cross_.size(); ++k) {
            const double d = (static_cast<double>(k) - static_cast<double>(n - 1)) * h;
            cross += (cross_[k] * std::polar(1.0, kTwoPi * d * tau.ps)).real();
        }
        return 0.25 * (direct_ - 2.0 * cross);
    }

private:
    FreqGrid1D axis_;
    double direct_ = 0.0;
    std::vector<std::complex<double>> cross_;
};

/// Visibility and half-depth width of a sampled dip.
inline DipMetrics dip_metrics(const std::vector<double>& tau_ps, const std::vector<double>& p) {
    const std::size_t n = p.size();
    if (n < 5 || tau_ps.size() != n) throw DomainError("dip scan needs at least 5 samples");
    const std::size_t outer = std::max<std::size_t>(1, n / 20);
    double base = 0.0;
    for (std::size_t k = 0; k < outer; ++k) base += p[k] + p[n - 1 - k];
    base /= static_cast<double>(2 * outer);

    const std::size_t imin = static_cast<std::size_t>(std::min_element(p.begin(), p.end()) - p.begin());
    if (imin < 2 || imin + 2 >= n)
        throw ResolutionError("dip not resolved: minimum lies within 2 samples of the scan edge");

    DipMetrics m;
    m.baseline = base;
    m.minimum = p[imin];
    m.tau_at_minimum_ps = tau_ps[imin];
    m.visibility = base > 0.0 ? std::clamp((base - m.minimum) / base, 0.0, 1.0) : 0.0;
    const double level = 0.5 * (base + m.minimum);
    auto cross = [&](std::size_t a, std::size_t b) {
        return tau_ps[a] + (level - p[a]) / (p[b] - p[a]) * (tau_ps[b] - tau_ps[a]);
    };
    std::size_t l = imin;
    while (l > 0 && p[l] < level) --l;
    std::size_t r = imin;
    while (r + 1 < n && p[r] < level) ++r;
    if (p[l] < level || p[r] < level || l < outer || r + outer >= n)
        throw ResolutionError("dip not resolved: half-depth crossings fall outside the scanned baseline");
    const double left = cross(l + 1, l), right = cross(r - 1, r);
    const double width_ps = right - left;
    // A scan that ends inside the dip fakes a baseline; demand one FWHM of margin per side.
    if (left - tau_ps.front() < width_ps || tau_ps.back() - right < width_ps)
        throw ResolutionError("dip not resolved: scan must extend at least one FWHM beyond each half-depth crossing");
    m.fwhm_fs = width_ps * 1e3;
    m.fwhm_um = width_ps * kSpeedOfLight_um_ps;
    return m;
}

/// Samples P(tau) on a uniform delay grid and derives the dip metrics. The
/// optional additive floor models accidental coincidences.
inline DipScan dip_scan(const JsaGrid& jsa, double tau_min_ps, double tau_max_ps, std::size_t samples,
                        double accidental_floor = 0.0) {
    if (!(tau_max_ps > tau_min_ps) || samples < 5) throw DomainError("dip scan needs tau_max > tau_min and >= 5 samples");
    if (accidental_floor < 0.0) throw DomainError("accidental floor must be >= 0");
    const CoincidenceEvaluator eval(jsa);
    DipScan scan;
    scan.accidental_floor = accidental_floor;
    scan.tau_ps.resize(samples);
    scan.probability.resize(samples);
    const double step = (tau_max_ps - tau_min_ps) / static_cast<double>(samples - 1);
    parallel_for(samples, [&](std::size_t b, std::size_t e) {
        for (std::size_t k = b; k < e; ++k) {
            const double t = tau_min_ps + step * static_cast<double>(k);
            scan.tau_ps[k] = t;
            scan.probability[k] = eval(DelayTime{t}) + accidental_floor;
        }
    });
    scan.metrics = dip_metrics(scan.tau_ps, scan.probability);
    return scan;
}

/// Local maxima at or above threshold * max, thinned by non-maximum
/// suppression within `min_separation` samples. Ties go to the lower index.
inline PeakSet find_peaks(std::span<const double> signal, std::span<const double> positions, double threshold,
                          std::size_t min_separation) {
    if (!(threshold > 0.0 && threshold < 1.0)) throw DomainError("peak threshold must lie in (0, 1)");
    if (min_separation < 2) throw DomainError("peak separation must be >= 2 samples");
    if (positions.size() != signal.size()) throw DomainError("peak positions do not match signal length");
    PeakSet out;
    if (signal.size() < 3) return out;
    const double peak = *std::max_element(signal.begin(), signal.end());
    if (!(peak > 0.0)) return out;
    const double level = threshold * peak;
    std::vector<std::size_t> cand;
    for (std::size_t k = 1; k + 1 < signal.size(); ++k)
        if (signal[k] >= level && signal[k] > signal[k - 1] && signal[k] >= signal[k + 1]) cand.push_back(k);
    std::stable_sort(cand.begin(), cand.end(), [&](std::size_t a, std::size_t b) { return signal[a] > signal[b]; });
    std::vector<std::size_t> kept;
    for (std::size_t c : cand) {
        const bool clash = std::any_of(kept.begin(), kept.end(), [&](std::size_t k) {
            return (c > k ? c - k : k - c) < min_separation;
        });
        if (!clash) kept.push_back(c);
    }
    std::sort(kept.begin(), kept.end());
    for (std::size_t k : kept) {
        out.indices.push_back(k);
        out.positions.push_back(positions[k]);
        out.heights.push_back(signal[k]);
    }
    return out;
}

/// Half the analytic tooth spacing 1/tau, in samples of spacing h.
inline std::size_t default_peak_separation(double tau_ps, double h) {
    if (!(std::abs(tau_ps) > 0.0)) return std::numeric_limits<std::size_t>::max() / 4;
    return std::max<std::size_t>(2, static_cast<std::size_t>(std::floor(0.5 / (std::abs(tau_ps) * h))));
}

namespace detail {

/// H along nu2 - nu1 = k h with weights w_i w_{i+k} / h, so that summing
/// h * H over k reproduces integrate_2d exactly.
inline ToaSpectrum diagonal_marginal(const RealGrid& intensity) {
    const auto& ax = intensity.axis1();
    const std::size_t n = ax.size();
    const double h = ax.spacing();
    ToaSpectrum t;
    t.spacing_thz = h;
    t.delta_nu.resize(2 * n - 1);
    t.values.assign(2 * n - 1, 0.0);
    for (std::size_t k = 0; k < t.delta_nu.size(); ++k)
        t.delta_nu[k] = (static_cast<double>(k) - static_cast<double>(n - 1)) * h;
    for (std::size_t i = 0; i < n; ++i) {
        const double wi = ax.trapezoid_weight(i) / h;
        for (std::size_t j = 0; j < n; ++j)
            t.values[j + n - 1 - i] += wi * ax.trapezoid_weight(j) * intensity(i, j);
    }
    return t;
}

}  // namespace detail

/// H(dnu) = integral over nu1 of I(nu1, nu1 + dnu), with its comb peaks.
inline ToaSpectrum marginal_toa(const CsiGrid& c, const PeakOptions& opts = {}) {
    if (!c.intensity.square()) throw DomainError("marginal_toa requires a square CSI grid");
    ToaSpectrum t = detail::diagonal_marginal(c.intensity);
    const std::size_t sep = opts.min_separation.value_or(default_peak_separation(c.tau_ps, t.spacing_thz));
    t.peaks = find_peaks(t.values, t.delta_nu, opts.threshold, std::min(sep, t.values.size()));
    return t;
}

/// H of the incoherent sum |f12|^2 + |f21|^2: the large-delay envelope of H.
inline ToaSpectrum incoherent_toa(const JsaGrid& jsa) {
    detail::require_square(jsa);
    const auto& f = jsa.amplitude;
    RealGrid inc(f.axis1(), f.axis2());
    for (std::size_t i = 0; i < f.rows(); ++i)
        for (std::size_t j = 0; j < f.cols(); ++j) inc(i, j) = std::norm(f(i, j)) + std::norm(f(j, i));
    return detail::diagonal_marginal(inc);
}

struct ToothSpacing {
    double spacing_thz = 0.0;
    std::vector<double> fringe_peaks_thz;
};

/// Tooth spacing from the envelope-normalised fringe H / H_incoherent, whose
/// maxima sit at the cos = -1 condition independent of the spectral envelope.
/// The spacing is the least-squares slope of peak position against index.
inline ToothSpacing measure_tooth_spacing(const JsaGrid& jsa, DelayTime tau, double support = 1e-3) {
    const CsiGrid c = csi(jsa, tau);
    const ToaSpectrum h = marginal_toa(c);
    const ToaSpectrum env = incoherent_toa(jsa);
    const double envmax = *std::max_element(env.values.begin(), env.values.end());
    std::vector<double> fringe(h.values.size(), 0.0);
    for (std::size_t k = 0; k < fringe.size(); ++k)
        if (env.values[k] > support * envmax) fringe[k] = h.values[k] / env.values[k];
    const PeakSet all = find_peaks(fringe, h.delta_nu, 0.5, default_peak_separation(tau.ps, h.spacing_thz));
    // Maxima next to the support edge are truncated fringes, not centres.
    PeakSet p;
    for (std::size_t k = 0; k < all.count(); ++k) {
        const std::size_t i = all.indices[k];
        if (i < 2 || i + 2 >= fringe.size()) continue;
        if (std::any_of(fringe.begin() + static_cast<std::ptrdiff_t>(i - 2), fringe.begin() + static_cast<std::ptrdiff_t>(i + 3),
                        [](double v) { return v == 0.0; }))
            continue;
        p.indices.push_back(i);
        p.positions.push_back(all.positions[k]);
        p.heights.push_back(all.heights[k]);
    }
    if (p.count() < 2) throw ResolutionError("fewer than two fringe maxima; cannot measure tooth spacing");
    const double m = static_cast<double>(p.count());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t k = 0; k < p.count(); ++k) {
        const double x = static_cast<double>(k), y = p.positions[k];
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    return {(m * sxy - sx * sy) / (m * sxx - sx * sx), p.positions};
}

/// Splits the CSI into teeth j owning (j-1)/tau <= nu1 - nu2 < j/tau, i.e. the
/// bands between consecutive dark lines, with nominal centres
/// nu_pm = nu_p/2 +- (2j-1)/(4 tau). Weights are sqrt(band mass / N),
/// renormalised over teeth holding at least `min_fraction` of the mass.
inline QuditDecomposition extract_qudit(const CsiGrid& c, Frequency pump, double min_fraction = 1e-6) {
    const auto& I = c.intensity;
    if (!I.square()) throw DomainError("extract_qudit requires a square CSI grid");
    const double h = I.axis1().spacing();
    const double tau = std::abs(c.tau_ps);
    if (!(tau > 0.0) || 1.0 / (tau * h) < 4.0)
        throw ResolutionError("comb teeth unresolved (tooth spacing below 4 grid samples); refine the grid or reduce tau");
    if (!(c.normalization > 0.0)) throw ResolutionError("CSI has no mass; no comb structure to decompose");

    struct Acc {
        double mass = 0, m1 = 0, m2 = 0;
    };
    std::map<int, Acc> bands;
    const std::size_t n = I.rows();
    for (std::size_t i = 0; i < n; ++i) {
        const double nu1 = I.axis1().at(i);
        for (std::size_t j = 0; j < n; ++j) {
            const double v = I(i, j) * I.axis1().trapezoid_weight(i) * I.axis2().trapezoid_weight(j);
            if (v == 0.0) continue;
            const double d = (static_cast<double>(i) - static_cast<double>(j)) * h;
            const int tooth = static_cast<int>(std::floor(d * tau)) + 1;
            auto& a = bands[tooth];
            a.mass += v;
            a.m1 += v * nu1;
            a.m2 += v * I.axis2().at(j);
        }
    }
    QuditDecomposition q{c.tau_ps, pump.thz, {}};
    double kept = 0.0;
    for (const auto& [j, a] : bands) {
        if (a.mass < min_fraction * c.normalization) continue;
        const double off = (2.0 * j - 1.0) / (4.0 * tau);
        q.teeth.push_back({j, 0.5 * pump.thz + off, 0.5 * pump.thz - off, a.m1 / a.mass, a.m2 / a.mass, a.mass});
        kept += a.mass;
    }
    for (auto& t : q.teeth) t.weight = std::sqrt(t.weight / kept);
    return q;
}

struct DoubleSlitCheck {
    double residual = 0.0;
    double max_intensity = 0.0;
};

/// max |I - (I1 + I2 - 2 sqrt(I1 I2) cos(2 pi (nu1 - nu2) tau))| with
/// I1 = f(nu1, nu2)^2 and I2 = f(nu2, nu1)^2.
inline DoubleSlitCheck double_slit_identity(const JsaGrid& jsa, DelayTime tau) {
    if (!jsa.is_real()) throw DomainError("double-slit identity needs a real JSA");
    const CsiGrid c = csi(jsa, tau);
    const auto& f = jsa.amplitude;
    const std::size_t n = f.rows();
    const double h = f.axis1().spacing();
    DoubleSlitCheck out;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const double i1 = f(i, j).real() * f(i, j).real();
            const double i2 = f(j, i).real() * f(j, i).real();
            const double d = (static_cast<double>(i) - static_cast<double>(j)) * h;
            const double slit = i1 + i2 - 2.0 * std::sqrt(i1 * i2) * std::cos(kTwoPi * d * tau.ps);
            out.residual = std::max(out.residual, std::abs(c.intensity(i, j) - slit));
            out.max_intensity = std::max(out.max_intensity, c.intensity(i, j));
        }
    return out;
}

/// Dark CSI (N below 1e-9 of the incoherent mass 2 * integral |f|^2) or
/// fewer than two peaks in H.
inline bool comb_absent(const CsiGrid& c, const ToaSpectrum& h, double jsa_norm2) {
    return !(c.normalization > 1e-9 * 2.0 * jsa_norm2) || h.peaks.count() < 2;
}

struct CombAnalysis {
    double tau_ps = 0.0;
    CsiGrid csi;
    ToaSpectrum toa;
    bool no_comb = false;
    std::optional<QuditDecomposition> qudit;
};

/// CSI, H with its peaks and, when teeth are resolvable, the qudit split.
inline CombAnalysis analyze_comb(const JsaGrid& jsa, DelayTime tau, Frequency pump, const PeakOptions& opts = {}) {
    CombAnalysis a{tau.ps, csi(jsa, tau), {}, false, std::nullopt};
    a.toa = marginal_toa(a.csi, opts);
    a.no_comb = comb_absent(a.csi, a.toa, jsa.norm2());
    if (!a.no_comb) {
        try {
            a.qudit = extract_qudit(a.csi, pump);
        } catch (const ResolutionError&) {
            a.qudit.reset();
        }
    }
    return a;
}

}  // namespace qcomb
