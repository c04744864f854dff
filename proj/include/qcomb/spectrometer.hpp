#pragma once

// Dispersive-fibre spectrometer and time-tagging chain: affine
// wavelength-to-arrival-time map, Monte-Carlo pair sampling from a CSI grid,
// detector jitter/efficiency, and histogram reconstruction.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "qcomb/core.hpp"
#include "qcomb/interference.hpp"

namespace qcomb {

/// t = offset + D*L * (lambda - lambda_ref), valid over [band_lo, band_hi] THz.
struct DispersionMap {
    double dispersion_ps_nm_km = 18.0;
    double fiber_km = 7.5;
    double lambda_ref_nm = 1584.0;
    double offset_ns = 6.58;
    double band_lo_thz = 0.0;
    double band_hi_thz = 0.0;

    double total_ps_per_nm() const { return dispersion_ps_nm_km * fiber_km; }

    void validate() const {
        if (!(total_ps_per_nm() != 0.0) || !std::isfinite(total_ps_per_nm()))
            throw ValidationError("dispersion map: D*L must be finite and non-zero");
        if (!(lambda_ref_nm > 0.0)) throw ValidationError("dispersion map: reference wavelength must be positive");
        if (!(band_lo_thz > 0.0 && band_hi_thz > band_lo_thz))
            throw ValidationError("dispersion map: calibrated band must satisfy 0 < lo < hi");
    }

    /// Band covering a grid including half a cell on either side.
    DispersionMap with_band(const FreqGrid1D& axis) const {
        DispersionMap m = *this;
        m.band_lo_thz = axis.lo() - 0.5 * axis.spacing();
        m.band_hi_thz = axis.hi() + 0.5 * axis.spacing();
        return m;
    }

    /// Arrival times of the band edges (ns), ordered.
    std::pair<double, double> time_window() const;
};

inline double freq_to_arrival_time(const DispersionMap& map, Frequency nu) {
    if (!(nu.thz >= map.band_lo_thz && nu.thz <= map.band_hi_thz))
        throw DomainError("frequency " + std::to_string(nu.thz) + " THz outside the calibrated spectrometer band");
    const double lambda = kSpeedOfLight_nm_THz / nu.thz;
    return map.offset_ns + map.total_ps_per_nm() * (lambda - map.lambda_ref_nm) * 1e-3;
}

inline std::pair<double, double> DispersionMap::time_window() const {
    const double a = freq_to_arrival_time(*this, Frequency{band_lo_thz});
    const double b = freq_to_arrival_time(*this, Frequency{band_hi_thz});
    return {std::min(a, b), std::max(a, b)};
}

inline Frequency invert_time_to_freq(const DispersionMap& map, double t_ns) {
    const auto [t0, t1] = map.time_window();
    if (!(t_ns >= t0 && t_ns <= t1))
        throw DomainError("arrival time " + std::to_string(t_ns) + " ns outside the calibrated spectrometer band");
    const double lambda = map.lambda_ref_nm + (t_ns - map.offset_ns) * 1e3 / map.total_ps_per_nm();
    return Frequency{kSpeedOfLight_nm_THz / lambda};
}

struct DetectorSpec {
    double jitter_fwhm_ps = 100.0;
    double efficiency = 0.7;
    double accidental_rate = 0.0;  // mean dark/accidental clicks per trigger gate

    void validate() const {
        if (!(jitter_fwhm_ps >= 0.0)) throw ValidationError("detector jitter must be >= 0");
        if (!(efficiency >= 0.0 && efficiency <= 1.0)) throw ValidationError("detector efficiency must lie in [0, 1]");
        if (!(accidental_rate >= 0.0)) throw ValidationError("accidental rate must be >= 0");
    }
};

struct EventRecord {
    std::uint64_t trigger = 0;
    std::optional<double> t1_ns;
    std::optional<double> t2_ns;

    bool coincidence() const { return t1_ns.has_value() && t2_ns.has_value(); }
    friend bool operator==(const EventRecord&, const EventRecord&) = default;
};

struct EventBatch {
    std::vector<EventRecord> records;
    std::string config_hash;
    std::uint64_t seed = 0;

    std::size_t coincidences() const {
        return static_cast<std::size_t>(
            std::count_if(records.begin(), records.end(), [](const EventRecord& r) { return r.coincidence(); }));
    }
};

/// Uniform bins [lo + k*width, lo + (k+1)*width).
struct Histogram1D {
    double lo = 0.0;
    double width = 1.0;
    std::vector<std::uint64_t> counts;
    std::uint64_t dropped = 0;  // entries outside the binned range

    double center(std::size_t k) const { return lo + (static_cast<double>(k) + 0.5) * width; }
    double hi() const { return lo + width * static_cast<double>(counts.size()); }
    std::uint64_t total() const { return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0}); }

    std::vector<double> centers() const {
        std::vector<double> c(counts.size());
        for (std::size_t k = 0; k < c.size(); ++k) c[k] = center(k);
        return c;
    }
    std::vector<double> as_double() const { return {counts.begin(), counts.end()}; }
};

struct Histogram2D {
    double lo1 = 0.0, width1 = 1.0;
    double lo2 = 0.0, width2 = 1.0;
    std::size_t n1 = 0, n2 = 0;
    std::vector<std::uint64_t> counts;  // row-major, axis 1 = rows
    std::uint64_t dropped = 0;

    std::uint64_t& at(std::size_t a, std::size_t b) { return counts[a * n2 + b]; }
    std::uint64_t at(std::size_t a, std::size_t b) const { return counts[a * n2 + b]; }
    double center1(std::size_t a) const { return lo1 + (static_cast<double>(a) + 0.5) * width1; }
    double center2(std::size_t b) const { return lo2 + (static_cast<double>(b) + 0.5) * width2; }
    std::uint64_t total() const { return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0}); }
};

namespace detail {

inline constexpr std::size_t kRngBlock = 1u << 16;

/// Independent generator for block `b` of stream `stream`.
inline std::mt19937_64 substream(std::uint64_t seed, std::uint64_t stream, std::uint64_t block) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(block),
                      static_cast<std::uint32_t>(block >> 32)};
    return std::mt19937_64(seq);
}

inline double uniform01(std::mt19937_64& g) { return std::generate_canonical<double, 64>(g); }

/// Box-Muller; avoids implementation-defined std::normal_distribution caching.
inline double standard_normal(std::mt19937_64& g) {
    double u1 = uniform01(g);
    while (u1 <= 0.0) u1 = uniform01(g);
    const double u2 = uniform01(g);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

inline std::uint64_t poisson(std::mt19937_64& g, double mean) {
    if (!(mean > 0.0)) return 0;
    const double limit = std::exp(-mean);
    std::uint64_t k = 0;
    double p = uniform01(g);
    while (p > limit) {
        ++k;
        p *= uniform01(g);
    }
    return k;
}

}  // namespace detail

/// i.i.d. (nu1, nu2) draws from the CSI: inverse CDF over cell masses
/// I_ab w_a w_b, then uniform dithering inside the cell. Blocks of 2^16 draws
/// use their own generator, so output is independent of the thread count.
inline std::vector<std::pair<double, double>> sample_pairs(const CsiGrid& c, std::size_t n, std::uint64_t seed) {
    if (n < 1) throw DomainError("sample_pairs needs n >= 1");
    const auto& I = c.intensity;
    const std::size_t cols = I.cols();
    std::vector<double> cdf(I.values().size());
    double acc = 0.0;
    for (std::size_t a = 0; a < I.rows(); ++a)
        for (std::size_t b = 0; b < cols; ++b) {
            const double v = I(a, b);
            if (v < 0.0 || !std::isfinite(v)) throw DomainError("CSI must be finite and nonnegative for sampling");
            acc += v * I.axis1().trapezoid_weight(a) * I.axis2().trapezoid_weight(b);
            cdf[a * cols + b] = acc;
        }
    if (!(acc > 0.0)) throw DomainError("CSI has zero mass; nothing to sample");
    const double h1 = I.axis1().spacing(), h2 = I.axis2().spacing();
    std::vector<std::pair<double, double>> out(n);
    const std::size_t blocks = (n + detail::kRngBlock - 1) / detail::kRngBlock;
    parallel_for(blocks, [&](std::size_t b0, std::size_t b1) {
        for (std::size_t blk = b0; blk < b1; ++blk) {
            auto g = detail::substream(seed, 1, blk);
            const std::size_t e = std::min(n, (blk + 1) * detail::kRngBlock);
            for (std::size_t k = blk * detail::kRngBlock; k < e; ++k) {
                const double u = detail::uniform01(g) * acc;
                // First cell whose cumulative mass exceeds u; zero-mass cells never qualify.
                auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
                if (it == cdf.end()) it = std::lower_bound(cdf.begin(), cdf.end(), acc);
                const std::size_t cell = static_cast<std::size_t>(it - cdf.begin());
                const std::size_t a = cell / cols, bb = cell % cols;
                const double d1 = detail::uniform01(g) - 0.5;
                const double d2 = detail::uniform01(g) - 0.5;
                out[k] = {std::clamp(I.axis1().at(a) + d1 * h1, I.axis1().lo() - 0.5 * h1, I.axis1().hi() + 0.5 * h1),
                          std::clamp(I.axis2().at(bb) + d2 * h2, I.axis2().lo() - 0.5 * h2, I.axis2().hi() + 0.5 * h2)};
            }
        }
    });
    return out;
}

/// One pair per trigger slot. Each photon survives with the detector
/// efficiency, picks up Gaussian jitter, and competes with Poisson accidentals
/// uniform in the gate; the earliest click is recorded.
inline EventBatch simulate_events(const std::vector<std::pair<double, double>>& pairs, const DispersionMap& map1,
                                  const DispersionMap& map2, const DetectorSpec& det1, const DetectorSpec& det2,
                                  double trigger_period_ns, std::uint64_t seed) {
    map1.validate();
    map2.validate();
    det1.validate();
    det2.validate();
    if (!(trigger_period_ns > 0.0)) throw ValidationError("trigger period must be positive");
    for (const auto* m : {&map1, &map2}) {
        const auto [t0, t1] = m->time_window();
        if (t0 < 0.0 || t1 >= trigger_period_ns)
            throw ValidationError("trigger period " + std::to_string(trigger_period_ns) +
                                  " ns too short: mapped arrival window [" + std::to_string(t0) + ", " +
                                  std::to_string(t1) + "] ns would wrap into the next gate");
    }
    constexpr double kFwhmToSigma = 1.0 / 2.3548200450309493;
    const double s1 = det1.jitter_fwhm_ps * 1e-3 * kFwhmToSigma;
    const double s2 = det2.jitter_fwhm_ps * 1e-3 * kFwhmToSigma;

    EventBatch batch;
    batch.seed = seed;
    batch.records.resize(pairs.size());
    const std::size_t blocks = (pairs.size() + detail::kRngBlock - 1) / detail::kRngBlock;
    parallel_for(blocks, [&](std::size_t b0, std::size_t b1) {
        for (std::size_t blk = b0; blk < b1; ++blk) {
            auto g = detail::substream(seed, 2, blk);
            const std::size_t e = std::min(pairs.size(), (blk + 1) * detail::kRngBlock);
            for (std::size_t k = blk * detail::kRngBlock; k < e; ++k) {
                auto channel = [&](double nu, const DispersionMap& m, const DetectorSpec& d, double sigma) {
                    std::optional<double> t;
                    const bool hit = detail::uniform01(g) < d.efficiency;
                    const double jitter = sigma * detail::standard_normal(g);
                    if (hit) t = freq_to_arrival_time(m, Frequency{nu}) + jitter;
                    for (auto n = detail::poisson(g, d.accidental_rate); n > 0; --n) {
                        const double ta = detail::uniform01(g) * trigger_period_ns;
                        if (!t || ta < *t) t = ta;
                    }
                    return t;
                };
                EventRecord& r = batch.records[k];
                r.trigger = k;
                r.t1_ns = channel(pairs[k].first, map1, det1, s1);
                r.t2_ns = channel(pairs[k].second, map2, det2, s2);
            }
        }
    });
    return batch;
}

/// Start-stop histogram of t2 - t1 over coincident records, with bins
/// symmetric about zero covering [-half_range, half_range].
inline Histogram1D toa_histogram(const EventBatch& batch, double bin_ps, double half_range_ns) {
    if (!(bin_ps > 0.0) || !(half_range_ns > 0.0)) throw DomainError("ToA histogram needs positive bin and range");
    const double w = bin_ps * 1e-3;
    const auto half = static_cast<std::size_t>(std::ceil(half_range_ns / w));
    Histogram1D h{-static_cast<double>(half) * w, w, std::vector<std::uint64_t>(2 * half, 0), 0};
    for (const auto& r : batch.records) {
        if (!r.coincidence()) continue;
        const double x = (*r.t2_ns - *r.t1_ns - h.lo) / w;
        if (x >= 0.0 && x < static_cast<double>(h.counts.size()))
            ++h.counts[static_cast<std::size_t>(x)];
        else
            ++h.dropped;
    }
    return h;
}

/// Histogram of one channel's arrival times over coincident records.
inline Histogram1D arrival_histogram(const EventBatch& batch, int channel, double bin_ps, double lo_ns, double hi_ns) {
    if (channel != 1 && channel != 2) throw DomainError("channel must be 1 or 2");
    const double w = bin_ps * 1e-3;
    const auto n = static_cast<std::size_t>(std::ceil((hi_ns - lo_ns) / w));
    Histogram1D h{lo_ns, w, std::vector<std::uint64_t>(n, 0), 0};
    for (const auto& r : batch.records) {
        if (!r.coincidence()) continue;
        const double x = ((channel == 1 ? *r.t1_ns : *r.t2_ns) - lo_ns) / w;
        if (x >= 0.0 && x < static_cast<double>(n))
            ++h.counts[static_cast<std::size_t>(x)];
        else
            ++h.dropped;
    }
    return h;
}

/// Reconstructs (nu1, nu2) from coincident arrival times and bins them on
/// blocks of `group` x `group` grid cells. Times outside either band are
/// counted in `dropped`.
inline Histogram2D reconstruct_csi_histogram(const EventBatch& batch, const DispersionMap& map1,
                                             const DispersionMap& map2, const FreqGrid1D& axis, std::size_t group) {
    if (group < 1 || axis.size() % group != 0) throw DomainError("CSI bin group must divide the grid size");
    const double w = axis.spacing() * static_cast<double>(group);
    const double lo = axis.lo() - 0.5 * axis.spacing();
    const std::size_t nb = axis.size() / group;
    Histogram2D h{lo, w, lo, w, nb, nb, std::vector<std::uint64_t>(nb * nb, 0), 0};
    const auto [a0, a1] = map1.time_window();
    const auto [b0, b1] = map2.time_window();
    for (const auto& r : batch.records) {
        if (!r.coincidence()) continue;
        if (*r.t1_ns < a0 || *r.t1_ns > a1 || *r.t2_ns < b0 || *r.t2_ns > b1) {
            ++h.dropped;
            continue;
        }
        const double x = (invert_time_to_freq(map1, *r.t1_ns).thz - lo) / w;
        const double y = (invert_time_to_freq(map2, *r.t2_ns).thz - lo) / w;
        const auto a = std::min(nb - 1, static_cast<std::size_t>(std::max(0.0, x)));
        const auto b = std::min(nb - 1, static_cast<std::size_t>(std::max(0.0, y)));
        ++h.at(a, b);
    }
    return h;
}

/// Cell masses I_ab w_a w_b summed over the same blocks as the reconstruction.
inline std::vector<double> binned_csi(const CsiGrid& c, std::size_t group) {
    const auto& I = c.intensity;
    if (group < 1 || I.rows() % group != 0 || I.cols() % group != 0)
        throw DomainError("CSI bin group must divide the grid size");
    const std::size_t n1 = I.rows() / group, n2 = I.cols() / group;
    std::vector<double> out(n1 * n2, 0.0);
    for (std::size_t a = 0; a < I.rows(); ++a)
        for (std::size_t b = 0; b < I.cols(); ++b)
            out[(a / group) * n2 + b / group] +=
                I(a, b) * I.axis1().trapezoid_weight(a) * I.axis2().trapezoid_weight(b);
    return out;
}

/// ||p - q|| / ||q|| after normalising both to unit sum.
inline double relative_l2(std::span<const double> measured, std::span<const double> reference) {
    if (measured.size() != reference.size()) throw DomainError("relative_l2: size mismatch");
    const double sp = std::accumulate(measured.begin(), measured.end(), 0.0);
    const double sq = std::accumulate(reference.begin(), reference.end(), 0.0);
    if (!(sp > 0.0) || !(sq > 0.0)) throw DomainError("relative_l2: empty distribution");
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < measured.size(); ++k) {
        const double q = reference[k] / sq;
        const double d = measured[k] / sp - q;
        num += d * d;
        den += q * q;
    }
    return std::sqrt(num / den);
}

/// nu2 - nu1 on the energy ridge nu1 + nu2 = nu_p that yields the
/// channel-wavelength difference lambda2 - lambda1 = dlambda.
inline double ridge_delta_nu(double dlambda_nm, double pump_thz) {
    const double c = kSpeedOfLight_nm_THz;
    // c/(nu_p/2 - d) - c/(nu_p/2 + d) = dlambda, solved stably for d.
    const double q = 0.25 * pump_thz * pump_thz;
    const double d = 2.0 * dlambda_nm * q / (2.0 * c + std::sqrt(4.0 * c * c + 4.0 * dlambda_nm * dlambda_nm * q));
    return -2.0 * d;
}

/// Lock-in amplitude of the ToA histogram at the comb frequency:
/// 2 |sum h_k exp(i 2 pi dnu_k tau)| / sum h_k, with each bin's delay mapped to
/// dnu along the energy ridge. 1 for an ideal comb, ~0 when washed out.
inline double comb_contrast(const Histogram1D& toa, const DispersionMap& map1, const DispersionMap& map2,
                            Frequency pump, DelayTime tau) {
    if (map1.total_ps_per_nm() != map2.total_ps_per_nm() || map1.lambda_ref_nm != map2.lambda_ref_nm)
        throw DomainError("comb contrast assumes identical channel dispersion maps");
    std::complex<double> acc{0.0, 0.0};
    double total = 0.0;
    for (std::size_t k = 0; k < toa.counts.size(); ++k) {
        if (toa.counts[k] == 0) continue;
        const double dt = toa.center(k) - (map2.offset_ns - map1.offset_ns);
        const double dnu = ridge_delta_nu(dt * 1e3 / map1.total_ps_per_nm(), pump.thz);
        const double v = static_cast<double>(toa.counts[k]);
        acc += v * std::polar(1.0, kTwoPi * dnu * tau.ps);
        total += v;
    }
    if (!(total > 0.0)) return 0.0;
    return 2.0 * std::abs(acc) / total;
}

/// Contrast below which adjacent teeth are not resolved (Rayleigh-equivalent
/// dip depth for two equal Gaussians).
inline constexpr double kCombResolvedContrast = 0.105;

/// Line format: `trigger t1_ns t2_ns`, '-' for a missing click.
inline void write_event_batch(std::ostream& out, const EventBatch& b) {
    char buf[96];
    for (const auto& r : b.records) {
        auto field = [](const std::optional<double>& t, char* dst, std::size_t n) {
            if (t)
                std::snprintf(dst, n, "%.6f", *t);
            else
                std::snprintf(dst, n, "-");
        };
        char t1[40], t2[40];
        field(r.t1_ns, t1, sizeof t1);
        field(r.t2_ns, t2, sizeof t2);
        std::snprintf(buf, sizeof buf, "%llu %s %s\n", static_cast<unsigned long long>(r.trigger), t1, t2);
        out << buf;
    }
}

inline EventBatch read_event_batch(std::istream& in) {
    EventBatch b;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string trig, a, c;
        if (!(ls >> trig >> a >> c)) throw ValidationError("event line " + std::to_string(line_no) + ": expected 3 fields");
        EventRecord r;
        try {
            r.trigger = std::stoull(trig);
            if (a != "-") r.t1_ns = std::stod(a);
            if (c != "-") r.t2_ns = std::stod(c);
        } catch (const std::exception&) {
            throw ValidationError("event line " + std::to_string(line_no) + ": malformed number");
        }
        b.records.push_back(r);
    }
    return b;
}

}  // namespace qcomb
