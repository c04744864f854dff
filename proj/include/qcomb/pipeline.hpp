#pragma once

// Config-driven commands. Each writes its artifacts into `out` and returns a
// JSON summary; outputs are pure functions of (config, seed).

#include <filesystem>
#include <string>
#include <vector>

#include "qcomb/biphoton.hpp"
#include "qcomb/config.hpp"
#include "qcomb/interference.hpp"
#include "qcomb/io.hpp"
#include "qcomb/spectrometer.hpp"

namespace qcomb {

namespace fs = std::filesystem;

inline JsaGrid build_jsa(const RunConfig& cfg) {
    return assemble_jsa(cfg.pump, cfg.crystal, cfg.filter_signal, cfg.filter_idler, cfg.grid.axis());
}

namespace detail {

inline Json marginal_json(const MarginalSpectrum& m) {
    return {{"fwhm_nm", m.fwhm_nm}, {"fwhm_thz", m.fwhm_thz}, {"center_nm", m.center_nm}, {"multimodal", m.multimodal}};
}

/// t2 - t1 (ns) of a pair on the energy ridge with nu2 - nu1 = dnu.
inline double ridge_delay_ns(double dnu, double pump_thz, const DispersionMap& map) {
    const double l1 = kSpeedOfLight_nm_THz / (0.5 * pump_thz - 0.5 * dnu);
    const double l2 = kSpeedOfLight_nm_THz / (0.5 * pump_thz + 0.5 * dnu);
    return map.total_ps_per_nm() * (l2 - l1) * 1e-3;
}

inline std::uint64_t delay_seed(std::uint64_t seed, const DelaySpec& d) { return seed ^ fnv1a64(d.label()); }

}  // namespace detail

/// JSA matrix, both marginals and their widths.
inline Json cmd_jsa(const RunConfig& cfg, const fs::path& out) {
    const std::string hash = config_hash(cfg);
    const JsaGrid jsa = build_jsa(cfg);
    const MarginalSpectrum s1 = marginal_spectrum(jsa, 1);
    const MarginalSpectrum s2 = marginal_spectrum(jsa, 2);
    write_file(out / "jsa.csv", format_jsa(jsa, hash));

    CsvWriter m(hash, {"nu_thz", "lambda_nm", "signal", "idler"});
    for (std::size_t i = 0; i < s1.axis.size(); ++i) {
        const double nu = s1.axis.at(i);
        m.row({nu, kSpeedOfLight_nm_THz / nu, s1.intensity[i], s2.intensity[i]});
    }
    m.save(out / "marginals.csv");

    Json report = {{"signal", detail::marginal_json(s1)},
                   {"idler", detail::marginal_json(s2)},
                   {"norm", jsa.norm2()},
                   {"poling_period_um", cfg.crystal.poling_period_um},
                   {"grid", {{"n", cfg.grid.n}, {"spacing_thz", jsa.axis().spacing()}}}};
    write_json(out / "jsa_report.json", hash, report);
    return report;
}

/// P(tau) scan and dip metrics.
inline Json cmd_dip(const RunConfig& cfg, const fs::path& out) {
    const std::string hash = config_hash(cfg);
    const JsaGrid jsa = build_jsa(cfg);
    const DipScan scan = dip_scan(jsa, cfg.dip.tau_min_ps, cfg.dip.tau_max_ps, cfg.dip.samples, cfg.dip.accidental_floor);
    CsvWriter c(hash, {"tau_ps", "position_um", "probability"});
    for (std::size_t k = 0; k < scan.tau_ps.size(); ++k)
        c.row({scan.tau_ps[k], delay_time_to_position_um(DelayTime{scan.tau_ps[k]}), scan.probability[k]});
    c.save(out / "dip_scan.csv");
    const auto& m = scan.metrics;
    Json report = {{"visibility", m.visibility},          {"fwhm_fs", m.fwhm_fs},
                   {"fwhm_um", m.fwhm_um},                {"baseline", m.baseline},
                   {"minimum", m.minimum},                {"tau_at_minimum_ps", m.tau_at_minimum_ps},
                   {"accidental_floor", scan.accidental_floor}, {"samples", scan.tau_ps.size()}};
    write_json(out / "dip_metrics.json", hash, report);
    return report;
}

/// Per delay: CSI map, H(dnu), its peaks and the qudit decomposition.
inline Json cmd_comb(const RunConfig& cfg, const fs::path& out) {
    const std::string hash = config_hash(cfg);
    const JsaGrid jsa = build_jsa(cfg);
    const Frequency pump = cfg.pump.frequency();
    const DispersionMap& map = cfg.spectrometer.map1;
    const double norm2 = jsa.norm2();
    Json summary = Json::array();
    for (const auto& d : cfg.delays) {
        const DelayTime tau = d.time();
        const std::string tag = d.label();
        const CsiGrid c = csi(jsa, tau);
        PeakOptions opts;
        opts.threshold = cfg.comb.peak_threshold;
        const ToaSpectrum h = marginal_toa(c, opts);
        const bool no_comb = comb_absent(c, h, norm2);

        CsvWriter cw(hash, {"nu1_thz", "nu2_thz", "intensity"});
        const auto& ax = c.intensity.axis1();
        for (std::size_t i = 0; i < ax.size(); i += cfg.comb.csi_stride) {
            for (std::size_t j = 0; j < ax.size(); j += cfg.comb.csi_stride)
                cw.row({ax.at(i), ax.at(j), c.intensity(i, j)});
            cw.blank();
        }
        cw.save(out / ("csi_" + tag + ".csv"));

        CsvWriter hw(hash, {"dnu_thz", "dt_ns", "H"});
        for (std::size_t k = 0; k < h.values.size(); ++k)
            hw.row({h.delta_nu[k], detail::ridge_delay_ns(h.delta_nu[k], pump.thz, map), h.values[k]});
        hw.save(out / ("toa_" + tag + ".csv"));

        const std::size_t sep = std::min(default_peak_separation(tau.ps, h.spacing_thz), h.values.size());
        Json peaks = {{"delay", tag},
                      {"tau_ps", tau.ps},
                      {"count", h.peaks.count()},
                      {"positions_thz", h.peaks.positions},
                      {"heights", h.peaks.heights},
                      {"threshold", opts.threshold},
                      {"min_separation_samples", sep},
                      {"no_comb", no_comb}};
        write_json(out / ("peaks_" + tag + ".json"), hash, peaks);

        Json q = {{"delay", tag}, {"tau_ps", tau.ps}, {"min_weight", cfg.comb.qudit_min_weight}};
        std::size_t dim = 0;
        if (no_comb) {
            q["resolved"] = false;
            q["reason"] = "no comb-like structure";
        } else {
            try {
                const QuditDecomposition qd = extract_qudit(c, pump);
                dim = qd.dimension(cfg.comb.qudit_min_weight);
                Json teeth = Json::array();
                for (const auto& t : qd.teeth)
                    teeth.push_back({{"j", t.j},
                                     {"nu_plus_thz", t.nu_plus},
                                     {"nu_minus_thz", t.nu_minus},
                                     {"centroid_nu1_thz", t.centroid_nu1},
                                     {"centroid_nu2_thz", t.centroid_nu2},
                                     {"weight", t.weight}});
                q["resolved"] = true;
                q["dimension"] = dim;
                q["teeth"] = teeth;
            } catch (const ResolutionError& e) {
                q["resolved"] = false;
                q["reason"] = e.what();
            }
        }
        write_json(out / ("qudit_" + tag + ".json"), hash, q);
        summary.push_back({{"delay", tag},
                           {"tau_ps", tau.ps},
                           {"peaks", h.peaks.count()},
                           {"no_comb", no_comb},
                           {"qudit_dimension", dim},
                           {"coincidence_probability", 0.25 * c.normalization}});
    }
    write_json(out / "comb_summary.json", hash, {{"delays", summary}});
    return summary;
}

/// Monte-Carlo measurement chain per spectrometer delay.
inline Json cmd_events(const RunConfig& cfg, const fs::path& out) {
    if (!cfg.seed) throw ValidationError("config.seed: required for the events command (or pass --seed)");
    const std::string hash = config_hash(cfg);
    const JsaGrid jsa = build_jsa(cfg);
    const auto& sp = cfg.spectrometer;
    const FreqGrid1D axis = jsa.axis();
    const DispersionMap m1 = sp.map1.with_band(axis), m2 = sp.map2.with_band(axis);
    const Frequency pump = cfg.pump.frequency();
    Json summary = Json::array();
    for (const auto& d : sp.delays) {
        const DelayTime tau = d.time();
        const std::string tag = d.label();
        const std::uint64_t seed = detail::delay_seed(*cfg.seed, d);
        const CsiGrid c = csi(jsa, tau);
        const auto pairs = sample_pairs(c, sp.n_pairs, seed);
        EventBatch batch = simulate_events(pairs, m1, m2, sp.detector1, sp.detector2, sp.trigger_period_ns, seed);
        batch.config_hash = hash;

        {
            std::ostringstream os;
            os << header_line(hash) << "# seed=" << seed << " delay=" << tag << "\n# trigger t1_ns t2_ns\n";
            write_event_batch(os, batch);
            write_file(out / ("events_" + tag + ".txt"), os.str());
        }

        const auto [a0, a1] = m1.time_window();
        const auto [b0, b1] = m2.time_window();
        const double half_range = std::max(std::abs(b1 - a0), std::abs(a1 - b0)) + 1.0;
        const Histogram1D toa = toa_histogram(batch, sp.toa_bin_ps, half_range);
        CsvWriter tw(hash, {"bin_lo_ns", "bin_hi_ns", "count"});
        for (std::size_t k = 0; k < toa.counts.size(); ++k)
            tw.row({toa.lo + toa.width * static_cast<double>(k), toa.lo + toa.width * static_cast<double>(k + 1),
                    static_cast<double>(toa.counts[k])});
        tw.save(out / ("toa_hist_" + tag + ".csv"));

        const Histogram2D rec = reconstruct_csi_histogram(batch, m1, m2, axis, sp.csi_bin_group);
        const std::vector<double> ref = binned_csi(c, sp.csi_bin_group);
        const double ref_sum = std::accumulate(ref.begin(), ref.end(), 0.0);
        CsvWriter cw(hash, {"nu1_thz", "nu2_thz", "count", "analytic_fraction"});
        for (std::size_t a = 0; a < rec.n1; ++a) {
            for (std::size_t b = 0; b < rec.n2; ++b)
                cw.row({rec.center1(a), rec.center2(b), static_cast<double>(rec.at(a, b)), ref[a * rec.n2 + b] / ref_sum});
            cw.blank();
        }
        cw.save(out / ("csi_hist_" + tag + ".csv"));

        const std::vector<double> measured(rec.counts.begin(), rec.counts.end());
        const double l2 = relative_l2(measured, ref);
        const auto ty = toa.as_double();
        const auto tx = toa.centers();
        const double toa_width = full_width_at_fraction(ty, tx, 0.05);
        const Histogram1D t1 = arrival_histogram(batch, 1, sp.toa_bin_ps, 0.0, sp.trigger_period_ns);
        const double t1_width = full_width_at_fraction(t1.as_double(), t1.centers(), 0.05);
        const double contrast = comb_contrast(toa, m1, m2, pump, tau);
        // Raw maxima above threshold; counts shot noise once the comb is washed out (see comb_resolved).
        std::size_t toa_peaks = 0;
        if (std::abs(tau.ps) > 0.0) {
            const double period_ns = std::abs(detail::ridge_delay_ns(1.0 / std::abs(tau.ps), pump.thz, m1));
            const auto sep = std::max<std::size_t>(2, static_cast<std::size_t>(0.5 * period_ns / toa.width));
            toa_peaks = find_peaks(ty, tx, cfg.comb.peak_threshold, std::min(sep, ty.size())).count();
        }
        Json report = {{"delay", tag},
                       {"tau_ps", tau.ps},
                       {"seed", seed},
                       {"n_pairs", sp.n_pairs},
                       {"coincidences", batch.coincidences()},
                       {"toa_dropped", toa.dropped},
                       {"csi_dropped", rec.dropped},
                       {"csi_l2_relative", l2},
                       {"toa_full_width_ns", toa_width},
                       {"csi_axis1_full_width_ns", t1_width},
                       {"width_ratio", t1_width > 0.0 ? toa_width / t1_width : 0.0},
                       {"comb_contrast", contrast},
                       {"comb_resolved", contrast > kCombResolvedContrast},
                       {"toa_local_maxima", toa_peaks}};
        write_json(out / ("events_report_" + tag + ".json"), hash, report);
        summary.push_back(report);
    }
    return summary;
}

/// gnuplot scripts for the CSV artifacts of the other commands.
inline Json cmd_plot(const RunConfig& cfg, const fs::path& out) {
    const std::string hash = config_hash(cfg);
    const std::string head = header_line(hash) + "set datafile separator ','\nset key off\n";
    Json written = Json::array();
    auto emit = [&](const std::string& name, const std::string& body) {
        write_file(out / name, head + body);
        written.push_back(name);
    };
    emit("plot_marginals.gp",
         "set xlabel 'wavelength (nm)'\nset ylabel 'S'\nplot 'marginals.csv' every ::1 using 2:3 with lines, "
         "'' every ::1 using 2:4 with lines\n");
    emit("plot_dip.gp",
         "set xlabel 'delay (um)'\nset ylabel 'P'\nplot 'dip_scan.csv' every ::1 using 2:3 with linespoints\n");
    for (const auto& d : cfg.delays) {
        const std::string t = d.label();
        emit("plot_comb_" + t + ".gp",
             "set multiplot layout 1,2\nset xlabel 'nu1 (THz)'\nset ylabel 'nu2 (THz)'\nset view map\n"
             "splot 'csi_" + t + ".csv' using 1:2:3 with pm3d\nset xlabel 't2 - t1 (ns)'\nset ylabel 'H'\n"
             "plot 'toa_" + t + ".csv' using 2:3 with lines\nunset multiplot\n");
    }
    for (const auto& d : cfg.spectrometer.delays) {
        const std::string t = d.label();
        emit("plot_events_" + t + ".gp",
             "set multiplot layout 1,2\nset xlabel 't2 - t1 (ns)'\nset ylabel 'counts'\n"
             "plot 'toa_hist_" + t + ".csv' using 1:3 with steps\nset view map\nset xlabel 'nu1 (THz)'\n"
             "set ylabel 'nu2 (THz)'\nsplot 'csi_hist_" + t + ".csv' using 1:2:3 with pm3d\nunset multiplot\n");
    }
    return written;
}

}  // namespace qcomb
