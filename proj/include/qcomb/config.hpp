#pragma once

// JSON run configuration. Every field error names its path, e.g.
// "config.crystal.length_mm: required field missing".

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "qcomb/biphoton.hpp"
#include "qcomb/dispersion.hpp"
#include "qcomb/spectrometer.hpp"

namespace qcomb {

using Json = nlohmann::json;

struct GridSpec {
    double center_nm = 1584.0;
    double half_span_nm = 40.0;
    std::size_t n = 1024;

    FreqGrid1D axis() const { return FreqGrid1D::from_wavelength_window(Wavelength{center_nm}, half_span_nm, n); }
};

struct DelaySpec {
    double value = 0.0;
    std::string unit = "um";  // "um" (stage position) or "ps"

    DelayTime time() const { return unit == "ps" ? DelayTime{value} : delay_position_to_time(value); }

    /// File-name tag such as "600um" or "2ps".
    std::string label() const {
        char buf[48];
        std::snprintf(buf, sizeof buf, "%g%s", value, unit.c_str());
        return buf;
    }
};

struct DipSpec {
    double tau_min_ps = -0.6;
    double tau_max_ps = 0.6;
    std::size_t samples = 201;
    double accidental_floor = 0.0;
};

struct CombSpec {
    double peak_threshold = 0.20;
    double qudit_min_weight = 0.05;
    std::size_t csi_stride = 4;
};

struct SpectrometerSpec {
    DispersionMap map1;
    DispersionMap map2;
    DetectorSpec detector1;
    DetectorSpec detector2;
    double trigger_period_ns = 1000.0 / 76.0;
    double toa_bin_ps = 10.0;
    std::size_t csi_bin_group = 8;
    std::size_t n_pairs = 1000000;
    std::vector<DelaySpec> delays{{320.0, "um"}, {2100.0, "um"}};
};

struct RunConfig {
    PumpSpec pump;
    CrystalSpec crystal;
    FilterSpec filter_signal = AnalyticFilter{};
    FilterSpec filter_idler = AnalyticFilter{};
    GridSpec grid;
    std::vector<DelaySpec> delays;
    DipSpec dip;
    CombSpec comb;
    SpectrometerSpec spectrometer;
    std::optional<std::uint64_t> seed;
    Json source;  // effective document; its canonical dump is hashed
};

namespace detail {

/// Cursor into the document that knows its own dotted path.
class Field {
public:
    Field(const Json& j, std::string path) : j_(j), path_(std::move(path)) {}

    [[noreturn]] void fail(const std::string& what) const { throw ValidationError(path_ + ": " + what); }

    const std::string& path() const { return path_; }
    const Json& raw() const { return j_; }

    void require_object() const {
        if (!j_.is_object()) fail("expected an object");
    }

    void allow_only(std::initializer_list<const char*> keys) const {
        require_object();
        const std::set<std::string> ok(keys.begin(), keys.end());
        for (const auto& [k, v] : j_.items())
            if (!ok.count(k)) fail("unknown field '" + k + "'");
    }

    bool has(const std::string& key) const { return j_.is_object() && j_.contains(key) && !j_.at(key).is_null(); }

    Field at(const std::string& key) const {
        require_object();
        if (!has(key)) Field(Json{}, path_ + "." + key).fail("required field missing");
        return Field(j_.at(key), path_ + "." + key);
    }

    double number() const {
        if (!j_.is_number()) fail("expected a number");
        const double v = j_.get<double>();
        if (!std::isfinite(v)) fail("must be finite");
        return v;
    }

    double number(const std::string& key) const { return at(key).number(); }
    double number_or(const std::string& key, double fallback) const { return has(key) ? number(key) : fallback; }

    double positive(const std::string& key) const {
        const double v = number(key);
        if (!(v > 0.0)) at(key).fail("must be > 0");
        return v;
    }
    double positive_or(const std::string& key, double fallback) const { return has(key) ? positive(key) : fallback; }

    std::uint64_t count(const std::string& key) const {
        const Field f = at(key);
        if (!f.j_.is_number_integer() || f.j_.get<std::int64_t>() < 0) f.fail("expected a non-negative integer");
        return f.j_.get<std::uint64_t>();
    }
    std::uint64_t count_or(const std::string& key, std::uint64_t fallback) const {
        return has(key) ? count(key) : fallback;
    }

    std::string text(const std::string& key) const {
        const Field f = at(key);
        if (!f.j_.is_string()) f.fail("expected a string");
        return f.j_.get<std::string>();
    }
    std::string text_or(const std::string& key, const std::string& fallback) const {
        return has(key) ? text(key) : fallback;
    }

private:
    const Json& j_;
    std::string path_;
};

inline std::string resolve(const std::filesystem::path& base, const std::string& file) {
    const std::filesystem::path p(file);
    return (p.is_absolute() ? p : base / p).lexically_normal().string();
}

inline PumpSpec parse_pump(const Field& f) {
    f.allow_only({"center_nm", "fwhm_ps"});
    return PumpSpec{f.positive("center_nm"), f.positive("fwhm_ps")};
}

inline DispersionBackend parse_backend(const Field& f, const std::filesystem::path& base) {
    const std::string kind = f.text("backend");
    if (kind == "taylor") {
        f.allow_only({"backend", "degenerate_nm", "inv_vp", "inv_vs", "inv_vi", "beta2_p", "beta2_s", "beta2_i", "n_p",
                      "n_s", "n_i"});
        TaylorDispersion t;
        t.nu0_thz = kSpeedOfLight_nm_THz / f.positive_or("degenerate_nm", 1584.0);
        t.inv_vp = f.positive_or("inv_vp", t.inv_vp);
        t.inv_vs = f.positive_or("inv_vs", t.inv_vs);
        t.inv_vi = f.positive_or("inv_vi", t.inv_vi);
        t.beta2_p = f.number_or("beta2_p", 0.0);
        t.beta2_s = f.number_or("beta2_s", 0.0);
        t.beta2_i = f.number_or("beta2_i", 0.0);
        t.n_p = f.positive_or("n_p", t.n_p);
        t.n_s = f.positive_or("n_s", t.n_s);
        t.n_i = f.positive_or("n_i", t.n_i);
        return t;
    }
    if (kind == "sellmeier") {
        f.allow_only({"backend", "file", "temperature_c", "pump_axis", "signal_axis", "idler_axis"});
        SellmeierModel m;
        try {
            m = load_sellmeier(resolve(base, f.text("file")));
        } catch (const std::exception& e) {
            f.at("file").fail(e.what());
        }
        if (f.has("temperature_c")) m.temperature_c = f.number("temperature_c");
        SellmeierBackend b{std::make_shared<const SellmeierModel>(std::move(m))};
        b.pump_axis = f.text_or("pump_axis", b.pump_axis);
        b.signal_axis = f.text_or("signal_axis", b.signal_axis);
        b.idler_axis = f.text_or("idler_axis", b.idler_axis);
        for (const auto& ax : {b.pump_axis, b.signal_axis, b.idler_axis})
            if (!b.model->axes.count(ax)) f.fail("axis '" + ax + "' not present in the Sellmeier file");
        return b;
    }
    f.at("backend").fail("expected 'taylor' or 'sellmeier'");
}

inline CrystalSpec parse_crystal(const Field& f, const PumpSpec& pump, const std::filesystem::path& base) {
    f.allow_only({"length_mm", "poling_period_um", "dispersion"});
    CrystalSpec c;
    c.length_mm = f.positive("length_mm");
    c.backend = f.has("dispersion") ? parse_backend(f.at("dispersion"), base) : DispersionBackend{TaylorDispersion{}};
    const Field period = f.at("poling_period_um");
    if (period.raw().is_string()) {
        if (period.raw().get<std::string>() != "auto") period.fail("expected a number or \"auto\"");
        try {
            c.poling_period_um =
                solve_poling_period(c.backend, Wavelength{pump.center_nm}, Wavelength{2.0 * pump.center_nm});
        } catch (const DomainError& e) {
            period.fail(e.what());
        }
    } else {
        c.poling_period_um = f.positive("poling_period_um");
    }
    return c;
}

inline FilterSpec parse_filter(const Field& f, const std::filesystem::path& base) {
    const std::string kind = f.text("type");
    if (kind == "analytic") {
        f.allow_only({"type", "edge", "apodization"});
        AnalyticFilter a;
        if (f.has("edge")) {
            const Field e = f.at("edge");
            e.allow_only({"cut_on_nm", "edge_width_nm"});
            a.edge = LogisticEdge{e.positive("cut_on_nm"), e.positive("edge_width_nm")};
        }
        if (f.has("apodization")) {
            const Field e = f.at("apodization");
            e.allow_only({"center_nm", "fwhm_nm"});
            a.apodization = Apodization{e.positive("center_nm"), e.positive("fwhm_nm")};
        }
        return a;
    }
    if (kind == "tabulated") {
        f.allow_only({"type", "file"});
        try {
            return load_tabulated_filter(resolve(base, f.text("file")));
        } catch (const ValidationError& e) {
            f.at("file").fail(e.what());
        }
    }
    f.at("type").fail("expected 'analytic' or 'tabulated'");
}

inline std::vector<DelaySpec> parse_delays(const Field& f) {
    f.allow_only({"unit", "values"});
    const std::string unit = f.text_or("unit", "um");
    if (unit != "um" && unit != "ps") f.at("unit").fail("expected 'um' or 'ps'");
    const Field v = f.at("values");
    if (!v.raw().is_array() || v.raw().empty()) v.fail("expected a non-empty array of numbers");
    std::vector<DelaySpec> out;
    for (std::size_t k = 0; k < v.raw().size(); ++k)
        out.push_back({Field(v.raw()[k], v.path() + "[" + std::to_string(k) + "]").number(), unit});
    return out;
}

inline DetectorSpec parse_detector(const Field& f) {
    f.allow_only({"jitter_fwhm_ps", "efficiency", "accidental_rate"});
    DetectorSpec d;
    d.jitter_fwhm_ps = f.number_or("jitter_fwhm_ps", d.jitter_fwhm_ps);
    d.efficiency = f.number_or("efficiency", d.efficiency);
    d.accidental_rate = f.number_or("accidental_rate", d.accidental_rate);
    try {
        d.validate();
    } catch (const ValidationError& e) {
        f.fail(e.what());
    }
    return d;
}

inline DispersionMap parse_map(const Field& f) {
    f.allow_only({"dispersion_ps_nm_km", "fiber_km", "lambda_ref_nm", "offset_ns"});
    DispersionMap m;
    m.dispersion_ps_nm_km = f.number_or("dispersion_ps_nm_km", m.dispersion_ps_nm_km);
    m.fiber_km = f.positive_or("fiber_km", m.fiber_km);
    m.lambda_ref_nm = f.positive_or("lambda_ref_nm", m.lambda_ref_nm);
    m.offset_ns = f.number_or("offset_ns", m.offset_ns);
    if (m.total_ps_per_nm() == 0.0) f.fail("D*L must be non-zero");
    return m;
}

inline SpectrometerSpec parse_spectrometer(const Field& f) {
    f.allow_only({"fiber1", "fiber2", "detector1", "detector2", "trigger_period_ns", "toa_bin_ps", "csi_bin_group",
                  "n_pairs", "delays"});
    SpectrometerSpec s;
    if (f.has("fiber1")) s.map1 = parse_map(f.at("fiber1"));
    if (f.has("fiber2")) s.map2 = parse_map(f.at("fiber2"));
    if (f.has("detector1")) s.detector1 = parse_detector(f.at("detector1"));
    if (f.has("detector2")) s.detector2 = parse_detector(f.at("detector2"));
    s.trigger_period_ns = f.positive_or("trigger_period_ns", s.trigger_period_ns);
    s.toa_bin_ps = f.positive_or("toa_bin_ps", s.toa_bin_ps);
    s.csi_bin_group = f.count_or("csi_bin_group", s.csi_bin_group);
    s.n_pairs = f.count_or("n_pairs", s.n_pairs);
    if (s.n_pairs < 1) f.at("n_pairs").fail("must be >= 1");
    if (s.csi_bin_group < 1) f.at("csi_bin_group").fail("must be >= 1");
    if (f.has("delays")) s.delays = parse_delays(f.at("delays"));
    return s;
}

}  // namespace detail

/// Parses and validates a configuration document. Relative file paths are
/// resolved against `base_dir`.
inline RunConfig parse_config(const Json& doc, const std::filesystem::path& base_dir = ".") {
    using detail::Field;
    const Field root(doc, "config");
    root.allow_only({"pump", "crystal", "filters", "grid", "delays", "dip", "comb", "spectrometer", "seed"});
    RunConfig c;
    c.source = doc;
    c.pump = detail::parse_pump(root.at("pump"));
    c.crystal = detail::parse_crystal(root.at("crystal"), c.pump, base_dir);

    const Field filters = root.at("filters");
    filters.allow_only({"signal", "idler"});
    c.filter_signal = detail::parse_filter(filters.at("signal"), base_dir);
    c.filter_idler = detail::parse_filter(filters.at("idler"), base_dir);

    const Field g = root.at("grid");
    g.allow_only({"center_nm", "half_span_nm", "n"});
    c.grid.center_nm = g.positive("center_nm");
    c.grid.half_span_nm = g.positive("half_span_nm");
    c.grid.n = g.count("n");
    if (c.grid.n < 16) g.at("n").fail("must be >= 16");
    if (c.grid.half_span_nm >= c.grid.center_nm) g.at("half_span_nm").fail("must be smaller than center_nm");

    c.delays = detail::parse_delays(root.at("delays"));

    if (root.has("dip")) {
        const Field d = root.at("dip");
        d.allow_only({"tau_min_ps", "tau_max_ps", "samples", "accidental_floor"});
        c.dip.tau_min_ps = d.number_or("tau_min_ps", c.dip.tau_min_ps);
        c.dip.tau_max_ps = d.number_or("tau_max_ps", c.dip.tau_max_ps);
        c.dip.samples = d.count_or("samples", c.dip.samples);
        c.dip.accidental_floor = d.number_or("accidental_floor", c.dip.accidental_floor);
        if (!(c.dip.tau_max_ps > c.dip.tau_min_ps)) d.fail("tau_max_ps must exceed tau_min_ps");
        if (c.dip.samples < 5) d.at("samples").fail("must be >= 5");
        if (c.dip.accidental_floor < 0.0) d.at("accidental_floor").fail("must be >= 0");
    }
    if (root.has("comb")) {
        const Field d = root.at("comb");
        d.allow_only({"peak_threshold", "qudit_min_weight", "csi_stride"});
        c.comb.peak_threshold = d.number_or("peak_threshold", c.comb.peak_threshold);
        c.comb.qudit_min_weight = d.number_or("qudit_min_weight", c.comb.qudit_min_weight);
        c.comb.csi_stride = d.count_or("csi_stride", c.comb.csi_stride);
        if (!(c.comb.peak_threshold > 0.0 && c.comb.peak_threshold < 1.0))
            d.at("peak_threshold").fail("must lie in (0, 1)");
        if (c.comb.csi_stride < 1) d.at("csi_stride").fail("must be >= 1");
    }
    if (root.has("spectrometer")) c.spectrometer = detail::parse_spectrometer(root.at("spectrometer"));
    if (root.has("seed")) c.seed = root.count("seed");
    return c;
}

inline RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("config: cannot open '" + path.string() + "'");
    Json doc;
    try {
        doc = Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw ValidationError("config: JSON parse error in '" + path.string() + "': " + e.what());
    }
    return parse_config(doc, path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 0x100000001b3ull;
    }
    return h;
}

/// Hash of the effective configuration (canonical, key-sorted dump).
inline std::string config_hash(const RunConfig& c) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(c.source.dump())));
    return buf;
}

/// Applies command-line overrides and records them in the hashed document.
inline void apply_overrides(RunConfig& c, std::optional<std::uint64_t> seed,
                            const std::optional<std::vector<DelaySpec>>& delays) {
    if (seed) {
        c.seed = *seed;
        c.source["seed"] = *seed;
    }
    if (delays) {
        if (delays->empty()) throw ValidationError("--delays: expected at least one value");
        c.delays = *delays;
        c.spectrometer.delays = *delays;
        Json v = Json::array();
        for (const auto& d : *delays) v.push_back(d.value);
        c.source["delays"] = {{"unit", delays->front().unit}, {"values", v}};
    }
}

}  // namespace qcomb
