#pragma once

// Refractive-index models, quasi-phase-matching mismatch and poling design.
//
// Two backends evaluate the propagation constants k(nu) = 2*pi*n*nu/c:
//   - SellmeierModel: coefficient sets loaded from a text file, quantitative.
//   - TaylorDispersion: first/second-order expansion about degeneracy, which
//     reproduces group-velocity matching (V_s^-1 == V_i^-1) exactly.

#include <cmath>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "qcomb/core.hpp"

namespace qcomb {

/// One resonance term (B + dB*dT) / (lambda^2 - (C + dC*dT)^2), lambda in um.
struct SellmeierPole {
    double strength = 0.0;
    double resonance_um = 0.0;
    double dstrength_dT = 0.0;
    double dresonance_dT = 0.0;
};

/// n^2 = A + sum(poles) + D*lambda^2, each coefficient optionally linear in
/// (T - T_ref).
struct SellmeierAxis {
    double a = 1.0;
    double da_dT = 0.0;
    std::vector<SellmeierPole> poles;
    double ir = 0.0;
    double dir_dT = 0.0;
};

struct SellmeierModel {
    std::string name;
    double valid_lo_nm = 0.0;
    double valid_hi_nm = 0.0;
    double reference_temperature_c = 25.0;
    double temperature_c = 25.0;
    std::map<std::string, SellmeierAxis> axes;

    bool in_range(Wavelength lambda) const { return lambda.nm >= valid_lo_nm && lambda.nm <= valid_hi_nm; }

    const SellmeierAxis& axis(const std::string& name_) const {
        auto it = axes.find(name_);
        if (it == axes.end()) throw DomainError("Sellmeier model '" + name + "' has no axis '" + name_ + "'");
        return it->second;
    }

    SellmeierModel at_temperature(double t_c) const {
        SellmeierModel m = *this;
        m.temperature_c = t_c;
        return m;
    }
};

/// Parses the plain-text coefficient format:
///
///     # comment
///     name <string>
///     valid_range_nm <lo> <hi>
///     reference_temperature_c <T>
///     axis <label>
///     A <value> [dA/dT]
///     pole <B> <C_um> [dB/dT dC/dT]
///     ir <D> [dD/dT]
///
/// `axis` opens a block; A/pole/ir lines apply to the most recent axis.
inline SellmeierModel parse_sellmeier(std::istream& in, const std::string& source = "<stream>") {
    SellmeierModel model;
    SellmeierAxis* current = nullptr;
    bool have_range = false;
    std::string line;
    int line_no = 0;
    auto fail = [&](const std::string& msg) {
        throw ValidationError(source + ":" + std::to_string(line_no) + ": " + msg);
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::string key;
        if (!(ls >> key)) continue;
        std::vector<double> nums;
        if (key == "name") {
            ls >> model.name;
            continue;
        }
        if (key == "axis") {
            std::string label;
            if (!(ls >> label)) fail("axis needs a label");
            current = &model.axes[label];
            *current = SellmeierAxis{};
            continue;
        }
        double v;
        while (ls >> v) nums.push_back(v);
        if (!ls.eof()) fail("non-numeric value after '" + key + "'");
        if (key == "valid_range_nm") {
            if (nums.size() != 2 || !(nums[0] > 0.0) || !(nums[1] > nums[0])) fail("valid_range_nm needs lo < hi");
            model.valid_lo_nm = nums[0];
            model.valid_hi_nm = nums[1];
            have_range = true;
        } else if (key == "reference_temperature_c") {
            if (nums.size() != 1) fail("reference_temperature_c needs one value");
            model.reference_temperature_c = model.temperature_c = nums[0];
        } else if (key == "A" || key == "pole" || key == "ir") {
            if (!current) fail("'" + key + "' before any axis");
            if (key == "A") {
                if (nums.empty() || nums.size() > 2) fail("A takes 1 or 2 values");
                current->a = nums[0];
                current->da_dT = nums.size() > 1 ? nums[1] : 0.0;
            } else if (key == "ir") {
                if (nums.empty() || nums.size() > 2) fail("ir takes 1 or 2 values");
                current->ir = nums[0];
                current->dir_dT = nums.size() > 1 ? nums[1] : 0.0;
            } else {
                if (nums.size() != 2 && nums.size() != 4) fail("pole takes 2 or 4 values");
                SellmeierPole p{nums[0], nums[1], 0.0, 0.0};
                if (nums.size() == 4) {
                    p.dstrength_dT = nums[2];
                    p.dresonance_dT = nums[3];
                }
                current->poles.push_back(p);
            }
        } else {
            fail("unknown key '" + key + "'");
        }
    }
    if (!have_range) throw ValidationError(source + ": missing valid_range_nm");
    if (model.axes.empty()) throw ValidationError(source + ": no axes defined");
    return model;
}

inline SellmeierModel load_sellmeier(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open Sellmeier file '" + path + "'");
    return parse_sellmeier(in, path);
}

inline double refractive_index(const SellmeierModel& model, Wavelength lambda, const std::string& axis_name) {
    if (!model.in_range(lambda))
        throw DomainError("wavelength " + std::to_string(lambda.nm) + " nm outside Sellmeier range [" +
                          std::to_string(model.valid_lo_nm) + ", " + std::to_string(model.valid_hi_nm) + "]");
    const SellmeierAxis& ax = model.axis(axis_name);
    const double dt = model.temperature_c - model.reference_temperature_c;
    const double l2 = (lambda.nm * 1e-3) * (lambda.nm * 1e-3);
    double n2 = ax.a + ax.da_dT * dt + (ax.ir + ax.dir_dT * dt) * l2;
    for (const auto& p : ax.poles) {
        const double c = p.resonance_um + p.dresonance_dT * dt;
        n2 += (p.strength + p.dstrength_dT * dt) / (l2 - c * c);
    }
    if (!(n2 > 1.0)) throw DomainError("Sellmeier model gives n^2 <= 1 at " + std::to_string(lambda.nm) + " nm");
    return std::sqrt(n2);
}

/// Central-difference step for numeric group velocity, in THz.
inline constexpr double kGroupVelocityStep_THz = 1e-3;

/// dk/domega in ps/mm, by central difference of n(nu)*nu with a 1e-3 THz step.
inline double inv_group_velocity(const SellmeierModel& model, Wavelength lambda, const std::string& axis_name) {
    const double nu = wavelength_to_frequency(lambda).thz;
    const double h = kGroupVelocityStep_THz;
    const Wavelength lo = frequency_to_wavelength(Frequency{nu + h});
    const Wavelength hi = frequency_to_wavelength(Frequency{nu - h});
    if (!model.in_range(lo) || !model.in_range(hi))
        throw DomainError("group velocity stencil leaves the Sellmeier range at " + std::to_string(lambda.nm) + " nm");
    const double up = refractive_index(model, lo, axis_name) * (nu + h);
    const double dn = refractive_index(model, hi, axis_name) * (nu - h);
    return (up - dn) / (2.0 * h) / kSpeedOfLight_mm_ps;
}

/// Expansion of k about degeneracy; the pump expands about 2*nu0.
struct TaylorDispersion {
    double nu0_thz = kSpeedOfLight_nm_THz / 1584.0;
    // Read off data/ppslt.sellmeier at 792/1584 nm; signal and idler set to
    // their mean so the group velocities match exactly.
    double inv_vp = 7.440722;  // ps/mm
    double inv_vs = 7.207593;
    double inv_vi = 7.207593;
    double beta2_p = 0.0;  // ps^2/mm
    double beta2_s = 0.0;
    double beta2_i = 0.0;
    // Phase indices at the expansion points; they fix the zeroth-order mismatch.
    double n_p = 2.152905;
    double n_s = 2.116983;
    double n_i = 2.115990;

    void validate() const {
        if (!(inv_vp > 0.0 && inv_vs > 0.0 && inv_vi > 0.0))
            throw DomainError("Taylor dispersion: inverse group velocities must be positive");
        if (!(nu0_thz > 0.0)) throw DomainError("Taylor dispersion: nu0 must be positive");
    }

    /// k_p(2 nu0) - k_s(nu0) - k_i(nu0), rad/mm.
    double zeroth_order_mismatch() const {
        return kTwoPi * nu0_thz * (2.0 * n_p - n_s - n_i) / kSpeedOfLight_mm_ps;
    }

    /// Poling period that cancels the zeroth-order mismatch, um.
    double closed_form_poling_period_um() const { return kTwoPi / zeroth_order_mismatch() * 1e3; }

    double inv_group_velocity(double nu_thz, char wave) const {
        switch (wave) {
        case 'p': return inv_vp + beta2_p * kTwoPi * (nu_thz - 2.0 * nu0_thz);
        case 's': return inv_vs + beta2_s * kTwoPi * (nu_thz - nu0_thz);
        case 'i': return inv_vi + beta2_i * kTwoPi * (nu_thz - nu0_thz);
        default: throw DomainError("Taylor dispersion: wave must be p, s or i");
        }
    }
};

struct SellmeierBackend {
    std::shared_ptr<const SellmeierModel> model;
    std::string pump_axis = "o";
    std::string signal_axis = "o";
    std::string idler_axis = "e";
};

using DispersionBackend = std::variant<SellmeierBackend, TaylorDispersion>;

struct CrystalSpec {
    double length_mm = 40.0;
    double poling_period_um = 21.5;
    DispersionBackend backend = TaylorDispersion{};

    void validate() const {
        if (!(length_mm > 0.0)) throw DomainError("crystal length must be positive");
        if (!(poling_period_um > 0.0)) throw DomainError("poling period must be positive");
        if (auto* t = std::get_if<TaylorDispersion>(&backend)) t->validate();
        if (auto* s = std::get_if<SellmeierBackend>(&backend); s && !s->model)
            throw DomainError("Sellmeier backend without a model");
    }

    /// Same crystal with signal and idler roles exchanged.
    CrystalSpec swapped() const {
        CrystalSpec c = *this;
        if (auto* t = std::get_if<TaylorDispersion>(&c.backend)) {
            std::swap(t->inv_vs, t->inv_vi);
            std::swap(t->beta2_s, t->beta2_i);
            std::swap(t->n_s, t->n_i);
        } else {
            auto& s = std::get<SellmeierBackend>(c.backend);
            std::swap(s.signal_axis, s.idler_axis);
        }
        return c;
    }
};

namespace detail {

inline double sellmeier_k(const SellmeierBackend& b, double nu_thz, const std::string& axis) {
    const double n = refractive_index(*b.model, frequency_to_wavelength(Frequency{nu_thz}), axis);
    return kTwoPi * n * nu_thz / kSpeedOfLight_mm_ps;
}

/// Mismatch without the grating term.
inline double bulk_mismatch(const DispersionBackend& backend, double nu_s, double nu_i) {
    if (const auto* t = std::get_if<TaylorDispersion>(&backend)) {
        const double ds = nu_s - t->nu0_thz;
        const double di = nu_i - t->nu0_thz;
        const double dp = ds + di;
        const double first = kTwoPi * ((t->inv_vp - t->inv_vs) * ds + (t->inv_vp - t->inv_vi) * di);
        const double second = 0.5 * kTwoPi * kTwoPi * (t->beta2_p * dp * dp - t->beta2_s * ds * ds - t->beta2_i * di * di);
        return t->zeroth_order_mismatch() + first + second;
    }
    const auto& s = std::get<SellmeierBackend>(backend);
    return sellmeier_k(s, nu_s + nu_i, s.pump_axis) - sellmeier_k(s, nu_s, s.signal_axis) -
           sellmeier_k(s, nu_i, s.idler_axis);
}

}  // namespace detail

/// Delta k = k_p(nu_s + nu_i) - k_s(nu_s) - k_i(nu_i) - 2*pi/Lambda, rad/mm.
inline double phase_mismatch(const CrystalSpec& crystal, Frequency nu_s, Frequency nu_i) {
    const double grating = kTwoPi / (crystal.poling_period_um * 1e-3);
    return detail::bulk_mismatch(crystal.backend, nu_s.thz, nu_i.thz) - grating;
}

/// Poling period (um) that phase-matches degenerate down-conversion, found by
/// bisection; Delta k at degeneracy is monotone increasing in Lambda.
inline double solve_poling_period(const DispersionBackend& backend, Wavelength pump, Wavelength degenerate,
                                  double lo_um = 0.5, double hi_um = 1000.0) {
    if (std::abs(degenerate.nm - 2.0 * pump.nm) > 1e-3 * degenerate.nm)
        throw DomainError("degenerate wavelength must be twice the pump wavelength (within 0.1%)");
    const double nu = wavelength_to_frequency(degenerate).thz;
    const double bulk = detail::bulk_mismatch(backend, nu, nu);
    auto f = [&](double period_um) { return bulk - kTwoPi / (period_um * 1e-3); };
    double flo = f(lo_um);
    const double fhi = f(hi_um);
    if ((flo > 0.0) == (fhi > 0.0))
        throw SolverError("poling period not bracketed in [" + std::to_string(lo_um) + ", " + std::to_string(hi_um) +
                          "] um");
    for (int it = 0; it < 200 && hi_um - lo_um > 1e-13 * hi_um; ++it) {
        const double mid = 0.5 * (lo_um + hi_um);
        const double fm = f(mid);
        if ((fm > 0.0) == (flo > 0.0)) {
            lo_um = mid;
            flo = fm;
        } else {
            hi_um = mid;
        }
    }
    return 0.5 * (lo_um + hi_um);
}

/// Taylor expansion whose group and phase indices are read off a Sellmeier
/// backend at degeneracy.
inline TaylorDispersion taylor_from_sellmeier(const SellmeierBackend& b, Wavelength degenerate) {
    const Wavelength pump{degenerate.nm / 2.0};
    TaylorDispersion t;
    t.nu0_thz = wavelength_to_frequency(degenerate).thz;
    t.inv_vp = inv_group_velocity(*b.model, pump, b.pump_axis);
    t.inv_vs = inv_group_velocity(*b.model, degenerate, b.signal_axis);
    t.inv_vi = inv_group_velocity(*b.model, degenerate, b.idler_axis);
    t.n_p = refractive_index(*b.model, pump, b.pump_axis);
    t.n_s = refractive_index(*b.model, degenerate, b.signal_axis);
    t.n_i = refractive_index(*b.model, degenerate, b.idler_axis);
    return t;
}

}  // namespace qcomb
