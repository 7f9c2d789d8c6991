#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "fishweight/fitting.hpp"
#include "fishweight/synth.hpp"

using namespace fishweight;

namespace {

// Midpoint-rule area of |x/A|^n + |y/B|^n <= 1, in the same units as A·B.
double superellipse_area_quadrature(double A, double B, double n)
{
    const int steps = 200000;
    double sum = 0.0;
    for (int i = 0; i < steps; ++i) {
        const double x = (i + 0.5) / steps;
        sum += std::pow(1.0 - std::pow(x, n), 1.0 / n);
    }
    return 4.0 * A * B * sum / steps;
}

std::size_t components4(const MaskImage& m)
{
    const std::size_t w = m.width(), h = m.height();
    std::vector<int> label(m.size(), 0);
    std::size_t count = 0;
    for (std::size_t start = 0; start < m.size(); ++start) {
        if (!m.pixels()[start] || label[start]) { continue; }
        ++count;
        std::vector<std::size_t> stack{start};
        label[start] = 1;
        while (!stack.empty()) {
            const std::size_t k = stack.back();
            stack.pop_back();
            const std::size_t x = k % w, y = k / w;
            auto push = [&](std::size_t j) {
                if (m.pixels()[j] && !label[j]) {
                    label[j] = 1;
                    stack.push_back(j);
                }
            };
            if (x > 0) { push(k - 1); }
            if (x + 1 < w) { push(k + 1); }
            if (y > 0) { push(k - w); }
            if (y + 1 < h) { push(k + w); }
        }
    }
    return count;
}

} // namespace

TEST(GenSamples, NoiselessFollowsPowerLaw)
{
    SynthConfig cfg;
    cfg.seed = 5;
    const auto s = gen_samples(cfg);
    ASSERT_EQ(s.dataset.size(), 200u);
    for (const auto& x : s.dataset.samples) {
        EXPECT_GE(x.area, 100.0);
        EXPECT_LE(x.area, 800.0);
        EXPECT_NEAR(x.weight, 0.124 * std::pow(x.area, 1.55), 1e-12 * x.weight);
    }
    EXPECT_EQ(s.dataset.samples.front().id, "s0001");
}

TEST(GenSamples, ExactOutlierCount)
{
    SynthConfig cfg;
    cfg.n = 1000;
    cfg.outlier_fraction = 0.1;
    cfg.seed = 3;
    const auto s = gen_samples(cfg);
    EXPECT_EQ(std::count(s.is_outlier.begin(), s.is_outlier.end(), true), 100);
    for (std::size_t i = 0; i < s.dataset.size(); ++i) {
        const auto& x = s.dataset.samples[i];
        const double ratio = x.weight / (0.124 * std::pow(x.area, 1.55));
        if (s.is_outlier[i]) {
            EXPECT_TRUE(std::abs(ratio - 0.5) < 1e-12 || std::abs(ratio - 2.0) < 1e-12);
        } else {
            EXPECT_NEAR(ratio, 1.0, 1e-12);
        }
    }
}

TEST(GenSamples, DeterministicAndSeedSensitive)
{
    SynthConfig cfg;
    cfg.ln_noise_sigma = 0.1;
    cfg.seed = 77;
    EXPECT_EQ(gen_samples(cfg).dataset.samples, gen_samples(cfg).dataset.samples);
    auto other = cfg;
    other.seed = 78;
    EXPECT_NE(gen_samples(cfg).dataset.samples, gen_samples(other).dataset.samples);
}

TEST(GenSamples, NoiseStatistics)
{
    SynthConfig cfg;
    cfg.n = 20000;
    cfg.ln_noise_sigma = 0.05;
    cfg.seed = 1;
    const auto s = gen_samples(cfg);
    double sum = 0.0, sq = 0.0;
    for (const auto& x : s.dataset.samples) {
        const double e = std::log(x.weight / (cfg.a * std::pow(x.area, cfg.b)));
        sum += e;
        sq += e * e;
    }
    const double n = static_cast<double>(cfg.n);
    EXPECT_NEAR(sum / n, 0.0, 0.002);
    EXPECT_NEAR(std::sqrt(sq / n), 0.05, 0.002);
}

TEST(GenSamples, MapeEchoesNoiseLevel)
{
    SynthConfig cfg;
    cfg.n = 1000;
    cfg.a = 0.17;
    cfg.b = 1.5;
    cfg.ln_noise_sigma = 0.055;
    cfg.seed = 12;
    const auto ds = gen_samples(cfg).dataset;
    const double m = fit_one_factor_log(ds).metrics.mape;
    EXPECT_GE(m, 3.5);
    EXPECT_LE(m, 5.5);
    EXPECT_NEAR(m, 100.0 * 0.055 * std::sqrt(2.0 / std::numbers::pi), 0.5);
}

TEST(GenSamples, RejectsBadConfig)
{
    SynthConfig cfg;
    cfg.a = 0.0;
    EXPECT_THROW(gen_samples(cfg), InvalidArgument);
    cfg = {};
    cfg.outlier_fraction = 1.0;
    EXPECT_THROW(gen_samples(cfg), InvalidArgument);
    cfg = {};
    cfg.area_min = 900.0;
    EXPECT_THROW(gen_samples(cfg), InvalidArgument);
}

TEST(Silhouette, BodyAreaFormulaMatchesQuadrature)
{
    SilhouetteSpec spec;
    const double analytic = body_area_cm2(spec);
    EXPECT_NEAR(analytic, superellipse_area_quadrature(15.0, 5.25, 2.5), 1e-7 * analytic);
    EXPECT_NEAR(superellipse_area_quadrature(10.0, 3.5, 2.5), 118.3327376888, 1e-6);
}

TEST(Silhouette, BodyPixelAreaMatchesAnalytic)
{
    for (double mmpp : {0.5, 1.0}) {
        SilhouetteSpec spec;
        spec.fins = false;
        spec.mm_per_pixel = mmpp;
        const double area = mask_area(gen_silhouette(spec));
        EXPECT_NEAR(area / body_area_cm2(spec), 1.0, 0.03) << mmpp;
    }
}

TEST(Silhouette, NoFinsAboutTwentyPercentSmaller)
{
    for (double len : {200.0, 300.0, 450.0}) {
        SilhouetteSpec spec;
        spec.body_length = len;
        const double whole = mask_area(gen_silhouette(spec));
        spec.fins = false;
        const double body = mask_area(gen_silhouette(spec));
        const double ratio = body / whole;
        EXPECT_GE(ratio, 0.75);
        EXPECT_LE(ratio, 0.85);
        EXPECT_NEAR(ratio, 0.8, 0.01);
    }
}

TEST(Silhouette, AreaScalesWithLengthSquared)
{
    SilhouetteSpec spec;
    spec.body_length = 200.0;
    const double a1 = mask_area(gen_silhouette(spec));
    spec.body_length = 400.0;
    const double a2 = mask_area(gen_silhouette(spec));
    EXPECT_NEAR(a2 / a1, 4.0, 0.08);
}

TEST(Silhouette, SingleFourConnectedComponent)
{
    for (bool fins : {true, false}) {
        for (double len : {120.0, 300.0}) {
            SilhouetteSpec spec;
            spec.fins = fins;
            spec.body_length = len;
            EXPECT_EQ(components4(gen_silhouette(spec)), 1u);
        }
    }
}

TEST(Silhouette, VariantsShareCanvasAndNest)
{
    SilhouetteSpec spec;
    const auto whole = gen_silhouette(spec);
    spec.fins = false;
    const auto body = gen_silhouette(spec);
    ASSERT_TRUE(whole.same_shape(body));
    for (std::size_t i = 0; i < whole.size(); ++i) {
        if (body.pixels()[i]) { ASSERT_EQ(whole.pixels()[i], 1); }
    }
}

TEST(Silhouette, DeterministicAndCalibrated)
{
    SilhouetteSpec spec;
    spec.mm_per_pixel = 0.8;
    const auto a = gen_silhouette(spec);
    EXPECT_EQ(a, gen_silhouette(spec));
    EXPECT_EQ(a.mm_per_pixel(), 0.8);
}

TEST(Silhouette, RejectsBadSpec)
{
    SilhouetteSpec spec;
    spec.aspect = 1.2;
    EXPECT_THROW(gen_silhouette(spec), InvalidArgument);
    spec = {};
    spec.fin_area_ratio = 0.9;
    EXPECT_THROW(gen_silhouette(spec), InvalidArgument);
    spec = {};
    spec.body_length = 3.0;
    EXPECT_THROW(gen_silhouette(spec), InvalidArgument);
}
