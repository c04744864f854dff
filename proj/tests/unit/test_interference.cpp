#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "qcomb/interference.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace qcomb;

namespace {

JsaGrid complex_random_jsa(std::size_t n, unsigned seed) {
    const auto re = oracle::random_matrix(n, seed);
    const auto im = oracle::random_matrix(n, seed + 1);
    JsaGrid j = fixtures::jsa_from_matrix(re, n);
    for (std::size_t k = 0; k < re.size(); ++k) j.amplitude.values()[k] = {re[k] - 0.5, im[k] - 0.5};
    return j;
}

Frequency pump_of(const RunConfig& c) { return c.pump.frequency(); }

}  // namespace

TEST(Csi, RealRouteMatchesComplexModulus) {
    const JsaGrid& j = fixtures::reference_jsa();
    for (double tau : {0.0, 0.53, 2.0}) {
        const CsiGrid c = csi(j, DelayTime{tau});
        EXPECT_FALSE(c.general_route);
        const ComplexGrid g = interference_amplitude(j, DelayTime{tau});
        double worst = 0.0;
        for (std::size_t k = 0; k < g.values().size(); ++k)
            worst = std::max(worst, std::abs(std::norm(g.values()[k]) - c.intensity.values()[k]));
        EXPECT_LT(worst, 1e-12) << "tau " << tau;
    }
}

TEST(Csi, ComplexJsaMatchesBruteForce) {
    const std::size_t n = 24;
    const JsaGrid j = complex_random_jsa(n, 7);
    const auto nu = j.axis().values();
    std::vector<std::complex<double>> f(j.amplitude.values().begin(), j.amplitude.values().end());
    for (double tau : {0.0, 0.7, 3.1}) {
        const auto ref = oracle::brute_force_csi(f, nu, tau);
        const CsiGrid c = csi(j, DelayTime{tau});
        EXPECT_TRUE(c.general_route);
        for (std::size_t k = 0; k < ref.size(); ++k) EXPECT_NEAR(c.intensity.values()[k], ref[k], 1e-12);
    }
}

TEST(Csi, RealRandomMatchesBruteForce) {
    const std::size_t n = 31;
    const auto m = oracle::random_matrix(n, 11);
    const JsaGrid j = fixtures::jsa_from_matrix(m, n);
    std::vector<std::complex<double>> f(m.begin(), m.end());
    const auto ref = oracle::brute_force_csi(f, j.axis().values(), 1.3);
    const CsiGrid c = csi(j, DelayTime{1.3});
    for (std::size_t k = 0; k < ref.size(); ++k) EXPECT_NEAR(c.intensity.values()[k], ref[k], 1e-12);
}

TEST(Csi, AmplitudeVanishesOnDiagonalAndIsExchangeAntisymmetricInModulus) {
    const JsaGrid j = complex_random_jsa(20, 3);
    for (double tau : {0.0, 0.4, 5.0}) {
        const ComplexGrid g = interference_amplitude(j, DelayTime{tau});
        for (std::size_t a = 0; a < 20; ++a) {
            EXPECT_EQ(std::abs(g(a, a)), 0.0);
            for (std::size_t b = 0; b < 20; ++b) EXPECT_NEAR(std::abs(g(a, b)), std::abs(g(b, a)), 1e-14);
        }
    }
}

TEST(Csi, NonnegativeEverywhere) {
    const CsiGrid c = csi(fixtures::reference_jsa(), DelayTime{1.07});
    for (double v : c.intensity.values()) EXPECT_GE(v, 0.0);
}

TEST(Coincidence, DipAtZeroAndHalfAtLargeDelay) {
    const JsaGrid& j = fixtures::reference_jsa();
    EXPECT_LT(coincidence_probability(j, DelayTime{0.0}), 1e-10);
    EXPECT_NEAR(coincidence_probability(j, DelayTime{20.0}), 0.5, 1e-3);
}

TEST(Coincidence, EvenInDelayForRealJsa) {
    const JsaGrid j = fixtures::jsa_from_matrix(oracle::random_matrix(16, 5), 16);
    for (double tau : {0.1, 0.9, 2.5})
        EXPECT_NEAR(coincidence_probability(j, DelayTime{tau}), coincidence_probability(j, DelayTime{-tau}), 1e-12);
}

TEST(Coincidence, EvaluatorAgreesWithDirectIntegration) {
    const JsaGrid& j = fixtures::reference_jsa();
    const CoincidenceEvaluator eval(j);
    for (double tau : {-0.3, -0.05, 0.0, 0.08, 0.2, 1.0})
        EXPECT_NEAR(eval(DelayTime{tau}), coincidence_probability(j, DelayTime{tau}), 1e-12) << "tau " << tau;
    const JsaGrid c = complex_random_jsa(18, 9);
    const CoincidenceEvaluator ec(c);
    for (double tau : {0.0, 0.6}) EXPECT_NEAR(ec(DelayTime{tau}), coincidence_probability(c, DelayTime{tau}), 1e-12);
}

TEST(Dip, FullVisibilityForSymmetricSource) {
    const DipScan s = dip_scan(fixtures::reference_jsa(), -0.6, 0.6, 201);
    EXPECT_GT(s.metrics.visibility, 0.999);
    EXPECT_NEAR(s.metrics.tau_at_minimum_ps, 0.0, 1e-12);
    EXPECT_NEAR(s.metrics.baseline, 0.5, 5e-3);
}

TEST(Dip, WidthAgreesWithFourierLimitOfMarginal) {
    // Gaussian estimate 2 ln2 / (pi dnu); the filtered spectrum is not Gaussian, so loose bounds.
    const auto m = marginal_spectrum(fixtures::reference_jsa(), 1);
    const double gaussian_fs = 2.0 * std::log(2.0) / (std::numbers::pi * m.fwhm_thz) * 1e3;
    const DipScan s = dip_scan(fixtures::reference_jsa(), -0.6, 0.6, 201);
    EXPECT_GT(s.metrics.fwhm_fs, 0.75 * gaussian_fs);
    EXPECT_LT(s.metrics.fwhm_fs, 1.6 * gaussian_fs);
}

TEST(Dip, ReducedVisibilityWithDistinguishableArms) {
    const auto& cfg = fixtures::reference_config();
    AnalyticFilter shifted = std::get<AnalyticFilter>(cfg.filter_idler);
    shifted.edge->cut_on_nm += 5.0;
    const JsaGrid j = assemble_jsa(cfg.pump, cfg.crystal, cfg.filter_signal, shifted, cfg.grid.axis());
    const DipScan s = dip_scan(j, -0.6, 0.6, 121);
    EXPECT_LT(s.metrics.visibility, 0.99);
    EXPECT_GT(s.metrics.visibility, 0.3);
}

TEST(Dip, NarrowScanIsResolutionError) {
    EXPECT_THROW(dip_scan(fixtures::reference_jsa(), -0.02, 0.02, 41), ResolutionError);
}

TEST(Dip, AccidentalFloorLowersVisibility) {
    const DipScan s = dip_scan(fixtures::reference_jsa(), -0.6, 0.6, 121, 0.05);
    EXPECT_NEAR(s.metrics.visibility, (0.55 - 0.05) / 0.55, 0.01);
}

TEST(Peaks, SingleGaussian) {
    std::vector<double> x(101), y(101);
    for (std::size_t k = 0; k < x.size(); ++k) {
        x[k] = static_cast<double>(k);
        y[k] = std::exp(-0.5 * std::pow((x[k] - 40.0) / 5.0, 2));
    }
    const PeakSet p = find_peaks(y, x, 0.2, 2);
    ASSERT_EQ(p.count(), 1u);
    EXPECT_EQ(p.indices[0], 40u);
    EXPECT_DOUBLE_EQ(p.heights[0], 1.0);
}

TEST(Peaks, ThresholdAndSeparation) {
    std::vector<double> x(200), y(200);
    for (std::size_t k = 0; k < x.size(); ++k) {
        x[k] = static_cast<double>(k);
        y[k] = std::exp(-0.5 * std::pow((x[k] - 50.0) / 4.0, 2)) + 0.5 * std::exp(-0.5 * std::pow((x[k] - 70.0) / 4.0, 2)) +
               0.1 * std::exp(-0.5 * std::pow((x[k] - 150.0) / 4.0, 2));
    }
    EXPECT_EQ(find_peaks(y, x, 0.2, 2).count(), 2u);
    EXPECT_EQ(find_peaks(y, x, 0.05, 2).count(), 3u);
    const PeakSet merged = find_peaks(y, x, 0.2, 25);
    ASSERT_EQ(merged.count(), 1u);
    EXPECT_EQ(merged.indices[0], 50u);
}

TEST(Peaks, FlatAndInvalidInput) {
    std::vector<double> zero(50, 0.0), x(50, 0.0);
    EXPECT_EQ(find_peaks(zero, x, 0.2, 2).count(), 0u);
    EXPECT_THROW(find_peaks(zero, x, 0.0, 2), DomainError);
    EXPECT_THROW(find_peaks(zero, x, 0.2, 1), DomainError);
    std::vector<double> shorter(49, 0.0);
    EXPECT_THROW(find_peaks(zero, shorter, 0.2, 2), DomainError);
}

TEST(Peaks, PlateauTieGoesToLowerIndex) {
    const std::vector<double> y{0, 1, 2, 2, 1, 0}, x{0, 1, 2, 3, 4, 5};
    const PeakSet p = find_peaks(y, x, 0.5, 2);
    ASSERT_EQ(p.count(), 1u);
    EXPECT_EQ(p.indices[0], 2u);
}

TEST(Toa, ParsevalAgainstCsiIntegral) {
    const CsiGrid c = csi(fixtures::reference_jsa(), DelayTime{0.53});
    const ToaSpectrum t = marginal_toa(c);
    const double sum = std::accumulate(t.values.begin(), t.values.end(), 0.0) * t.spacing_thz;
    EXPECT_NEAR(sum, c.normalization, 1e-12 * std::max(1.0, c.normalization));
}

TEST(Toa, SymmetricForExchangeSymmetricSource) {
    const ToaSpectrum t = marginal_toa(csi(fixtures::reference_jsa(), DelayTime{1.07}));
    const std::size_t m = t.values.size();
    double peak = *std::max_element(t.values.begin(), t.values.end());
    for (std::size_t k = 0; k < m; ++k) EXPECT_NEAR(t.values[k], t.values[m - 1 - k], 1e-12 * peak);
}

TEST(Toa, PeakCountGrowsWithDelay) {
    const JsaGrid& j = fixtures::reference_jsa();
    const Frequency p = pump_of(fixtures::reference_config());
    std::size_t last = 0;
    for (double tau : {0.13, 0.53, 1.07, 2.0}) {
        const auto a = analyze_comb(j, DelayTime{tau}, p);
        EXPECT_FALSE(a.no_comb);
        EXPECT_GT(a.toa.peaks.count(), last) << "tau " << tau;
        last = a.toa.peaks.count();
    }
    EXPECT_TRUE(analyze_comb(j, DelayTime{0.0}, p).no_comb);
}

TEST(Toa, TwiceAsWideAsChannelMarginal) {
    // H lives on nu2 - nu1 = 2 (nu2 - nu_p/2) along the energy ridge.
    const JsaGrid& j = fixtures::reference_jsa();
    const ToaSpectrum env = incoherent_toa(j);
    const auto m = marginal_spectrum(j, 1);
    const double w = full_width_at_fraction(env.values, env.delta_nu, 0.5);
    EXPECT_NEAR(w / m.fwhm_thz, 2.0, 0.2);
}

TEST(Spacing, FringeSpacingIsInverseDelay) {
    const JsaGrid& j = fixtures::reference_jsa();
    const double h = j.axis().spacing();
    for (double tau : {0.53, 1.07, 2.0}) {
        const ToothSpacing s = measure_tooth_spacing(j, DelayTime{tau});
        EXPECT_NEAR(s.spacing_thz, 1.0 / tau, 2.0 * h) << "tau " << tau;
    }
}

TEST(Qudit, WeightsNormalisedAndSymmetric) {
    const auto& cfg = fixtures::reference_config();
    const CsiGrid c = csi(fixtures::reference_jsa(), DelayTime{2.0});
    const QuditDecomposition q = extract_qudit(c, pump_of(cfg));
    double s = 0.0;
    for (const auto& t : q.teeth) s += t.weight * t.weight;
    EXPECT_NEAR(s, 1.0, 1e-12);
    EXPECT_GE(q.dimension(), 10u);
    for (const auto& t : q.teeth) {
        EXPECT_NEAR(t.nu_plus + t.nu_minus, pump_of(cfg).thz, 1e-9);
        const auto mirror = std::find_if(q.teeth.begin(), q.teeth.end(), [&](const QuditTooth& u) { return u.j == 1 - t.j; });
        if (t.weight > 0.05) {
            ASSERT_NE(mirror, q.teeth.end());
            EXPECT_NEAR(mirror->weight, t.weight, 0.02 * t.weight);
        }
    }
}

TEST(Qudit, CentroidsOnEnergyRidge) {
    const auto& cfg = fixtures::reference_config();
    const double h = fixtures::reference_jsa().axis().spacing();
    const QuditDecomposition q = extract_qudit(csi(fixtures::reference_jsa(), DelayTime{1.07}), pump_of(cfg));
    for (const auto& t : q.teeth)
        if (t.weight > 0.05) {
            EXPECT_NEAR(t.centroid_nu1 + t.centroid_nu2, pump_of(cfg).thz, h);
        }
}

TEST(Qudit, UnresolvedTeethRejected) {
    const auto& cfg = fixtures::reference_config();
    EXPECT_THROW(extract_qudit(csi(fixtures::reference_jsa(), DelayTime{0.0}), pump_of(cfg)), ResolutionError);
    EXPECT_THROW(extract_qudit(csi(fixtures::reference_jsa(), DelayTime{40.0}), pump_of(cfg)), ResolutionError);
}

TEST(DoubleSlit, IdentityHoldsOnRandomNonnegativeGrids) {
    for (unsigned seed : {1u, 2u, 3u}) {
        const JsaGrid j = fixtures::jsa_from_matrix(oracle::random_matrix(40, seed), 40);
        for (double tau : {0.0, 0.37, 2.9}) {
            const DoubleSlitCheck d = double_slit_identity(j, DelayTime{tau});
            EXPECT_LT(d.residual, 1e-12 * std::max(1.0, d.max_intensity));
        }
    }
}

TEST(DoubleSlit, ComplexInputRejected) {
    EXPECT_THROW(double_slit_identity(complex_random_jsa(8, 1), DelayTime{0.1}), DomainError);
}
