#include <gtest/gtest.h>

#include <fstream>
#include <map>
#include <sstream>

#include "qcomb/dispersion.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace qcomb;

namespace {

const SellmeierModel& shipped() {
    static const SellmeierModel m = load_sellmeier((fixtures::source_dir() / "data" / "ppslt.sellmeier").string());
    return m;
}

std::map<std::string, double> read_golden(const std::string& name) {
    std::ifstream in(fixtures::source_dir() / "tests" / "golden" / name);
    std::map<std::string, double> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string k;
        double v;
        ls >> k >> v;
        out[k] = v;
    }
    return out;
}

TaylorDispersion gvm_taylor() { return TaylorDispersion{}; }

}  // namespace

TEST(Sellmeier, MidRangeMatchesIndependentEvaluation) {
    const double lambda_nm = 2200.0;  // midpoint of 400..4000 nm
    EXPECT_NEAR(refractive_index(shipped(), Wavelength{lambda_nm}, "e"), oracle::slt_ne(lambda_nm / 1e3, 40.8), 1e-12);
    EXPECT_NEAR(refractive_index(shipped(), Wavelength{1064.0}, "e"), oracle::slt_ne(1.064, 40.8), 1e-12);
}

TEST(Sellmeier, LinearTemperatureTermTracksOriginalForm) {
    const SellmeierModel warm = shipped().at_temperature(45.0);
    EXPECT_NEAR(refractive_index(warm, Wavelength{1584.0}, "e"), oracle::slt_ne(1.584, 45.0), 1e-6);
}

TEST(Sellmeier, ReferenceTemperatureAddsNoCorrection) {
    SellmeierModel m = shipped();
    m.temperature_c = m.reference_temperature_c;
    for (auto& [name, ax] : m.axes) {
        ax.da_dT = 99.0;
        ax.dir_dT = 99.0;
        for (auto& p : ax.poles) p.dstrength_dT = p.dresonance_dT = 99.0;
    }
    for (double l : {500.0, 1584.0, 3000.0})
        EXPECT_EQ(refractive_index(m, Wavelength{l}, "o"), refractive_index(shipped(), Wavelength{l}, "o"));
}

TEST(Sellmeier, OutOfRangeRejected) {
    EXPECT_THROW(refractive_index(shipped(), Wavelength{399.0}, "e"), DomainError);
    EXPECT_THROW(refractive_index(shipped(), Wavelength{4001.0}, "e"), DomainError);
    EXPECT_THROW(refractive_index(shipped(), Wavelength{1584.0}, "x"), DomainError);
    EXPECT_THROW(inv_group_velocity(shipped(), Wavelength{400.0}, "e"), DomainError);
}

TEST(Sellmeier, IndexAboveOneAcrossRange) {
    for (double l = 400.0; l <= 4000.0; l += 25.0)
        for (const char* ax : {"o", "e"}) EXPECT_GT(refractive_index(shipped(), Wavelength{l}, ax), 1.0);
}

TEST(Sellmeier, ParserReportsBadInput) {
    std::istringstream bad("name X\nvalid_range_nm 400 4000\nA 1.0\n");
    EXPECT_THROW(parse_sellmeier(bad), ValidationError);
    std::istringstream unknown("name X\nvalid_range_nm 400 4000\naxis o\nA 2.0\nbogus 1\n");
    EXPECT_THROW(parse_sellmeier(unknown), ValidationError);
}

TEST(GroupVelocity, FiniteDifferenceMatchesPolynomialModel) {
    std::istringstream src("name poly\nvalid_range_nm 500 3000\naxis o\nA 4.2\nir -0.02\n");
    const SellmeierModel m = parse_sellmeier(src);
    for (double l : {800.0, 1584.0, 2500.0}) {
        const double lu = l / 1e3;
        const double n = std::sqrt(4.2 - 0.02 * lu * lu);
        const double ng = n + 0.02 * lu * lu / n;  // n - lambda dn/dlambda
        const double analytic = ng / 0.299792458;
        EXPECT_NEAR(inv_group_velocity(m, Wavelength{l}, "o") / analytic, 1.0, 1e-6);
    }
}

TEST(GroupVelocity, ShippedSetMatchesGolden) {
    const auto g = read_golden("gvm_1584nm.txt");
    const double vs = inv_group_velocity(shipped(), Wavelength{1584.0}, "o");
    const double vi = inv_group_velocity(shipped(), Wavelength{1584.0}, "e");
    EXPECT_NEAR(vs, g.at("inv_vs"), 1e-9);
    EXPECT_NEAR(vi, g.at("inv_vi"), 1e-9);
    EXPECT_NEAR(std::abs(vs - vi), g.at("abs_difference"), 1e-9);
    EXPECT_LT(std::abs(vs - vi), g.at("tolerance"));
}

TEST(GroupVelocity, TaylorAtDegeneracyIsDefinition) {
    const TaylorDispersion t = gvm_taylor();
    EXPECT_EQ(t.inv_group_velocity(t.nu0_thz, 's'), t.inv_vs);
    EXPECT_EQ(t.inv_group_velocity(t.nu0_thz, 'i'), t.inv_vi);
    EXPECT_EQ(t.inv_group_velocity(2.0 * t.nu0_thz, 'p'), t.inv_vp);
}

TEST(PhaseMismatch, VanishesAtDesignedDegeneracy) {
    const TaylorDispersion t = gvm_taylor();
    CrystalSpec c{40.0, 0.0, t};
    c.poling_period_um = solve_poling_period(c.backend, Wavelength{792.0}, Wavelength{1584.0});
    const Frequency nu0{oracle::c_nm_thz / 1584.0};
    EXPECT_LT(std::abs(phase_mismatch(c, nu0, nu0)), 1e-9);

    CrystalSpec s{40.0, 0.0, SellmeierBackend{std::make_shared<const SellmeierModel>(shipped())}};
    s.poling_period_um = solve_poling_period(s.backend, Wavelength{792.0}, Wavelength{1584.0});
    EXPECT_LT(std::abs(phase_mismatch(s, nu0, nu0)), 1e-9);
}

TEST(PhaseMismatch, GvmDependsOnSumOnly) {
    CrystalSpec c{40.0, 21.7, gvm_taylor()};
    const double a = phase_mismatch(c, Frequency{189.0}, Frequency{190.0});
    const double b = phase_mismatch(c, Frequency{189.75}, Frequency{189.25});
    EXPECT_NEAR(a, b, 1e-12 * std::abs(a) + 1e-12);
}

TEST(PhaseMismatch, ZeroSetIsTheAntiDiagonal) {
    const TaylorDispersion t = gvm_taylor();
    CrystalSpec c{40.0, t.closed_form_poling_period_um(), t};
    double worst = 0.0;
    for (double d = -3.0; d <= 3.0; d += 0.01)
        worst = std::max(worst, std::abs(phase_mismatch(c, Frequency{t.nu0_thz + d}, Frequency{t.nu0_thz - d})));
    EXPECT_LT(worst, 1e-12);
}

TEST(PhaseMismatch, SwappingAxesSwapsArguments) {
    TaylorDispersion t;
    t.inv_vs = 7.1;
    t.inv_vi = 7.3;
    t.beta2_s = 0.2;
    t.beta2_i = -0.1;
    const CrystalSpec c{40.0, 21.7, t};
    const CrystalSpec sw = c.swapped();
    for (auto [a, b] : {std::pair{188.0, 190.5}, std::pair{189.3, 189.1}})
        EXPECT_NEAR(phase_mismatch(sw, Frequency{a}, Frequency{b}), phase_mismatch(c, Frequency{b}, Frequency{a}), 1e-9);

    const CrystalSpec s{40.0, 21.7, SellmeierBackend{std::make_shared<const SellmeierModel>(shipped())}};
    EXPECT_NEAR(phase_mismatch(s.swapped(), Frequency{188.0}, Frequency{190.0}),
                phase_mismatch(s, Frequency{190.0}, Frequency{188.0}), 1e-9);
}

TEST(PhaseMismatch, FiniteOnDefaultGrid) {
    const auto g = FreqGrid1D::from_wavelength_window(Wavelength{1584.0}, 40.0, 64);
    const CrystalSpec s{40.0, 21.7, SellmeierBackend{std::make_shared<const SellmeierModel>(shipped())}};
    for (std::size_t i = 0; i < g.size(); ++i)
        for (std::size_t j = 0; j < g.size(); ++j)
            EXPECT_TRUE(std::isfinite(phase_mismatch(s, Frequency{g.at(i)}, Frequency{g.at(j)})));
}

TEST(PolingPeriod, ShippedSetNearDesignValue) {
    const SellmeierBackend b{std::make_shared<const SellmeierModel>(shipped())};
    const double p = solve_poling_period(b, Wavelength{792.0}, Wavelength{1584.0});
    EXPECT_NEAR(p, 21.5, 1.0);
    EXPECT_NEAR(solve_poling_period(b, Wavelength{792.0}, Wavelength{1584.0}), p, 1e-4);
}

TEST(PolingPeriod, TaylorMatchesClosedForm) {
    const TaylorDispersion t = gvm_taylor();
    EXPECT_NEAR(solve_poling_period(t, Wavelength{792.0}, Wavelength{1584.0}), t.closed_form_poling_period_um(), 1e-10);
}

TEST(PolingPeriod, NonDegenerateRequestRejected) {
    EXPECT_THROW(solve_poling_period(gvm_taylor(), Wavelength{792.0}, Wavelength{1600.0}), DomainError);
}

TEST(PolingPeriod, UnbracketedRootRaisesSolverError) {
    EXPECT_THROW(solve_poling_period(gvm_taylor(), Wavelength{792.0}, Wavelength{1584.0}, 30.0, 40.0), SolverError);
}

TEST(PolingPeriod, TaylorFromSellmeierReproducesPeriod) {
    const SellmeierBackend b{std::make_shared<const SellmeierModel>(shipped())};
    const TaylorDispersion t = taylor_from_sellmeier(b, Wavelength{1584.0});
    EXPECT_NEAR(t.closed_form_poling_period_um(), solve_poling_period(b, Wavelength{792.0}, Wavelength{1584.0}), 1e-6);
}

TEST(Crystal, InvalidGeometryRejected) {
    EXPECT_THROW((CrystalSpec{0.0, 21.5, gvm_taylor()}.validate()), DomainError);
    EXPECT_THROW((CrystalSpec{40.0, -1.0, gvm_taylor()}.validate()), DomainError);
    TaylorDispersion t;
    t.inv_vs = 0.0;
    EXPECT_THROW((CrystalSpec{40.0, 21.5, t}.validate()), DomainError);
}
