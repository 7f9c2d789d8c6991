#include <gtest/gtest.h>

#include <cmath>

#include "fishweight/random.hpp"
#include "fishweight/trainmath.hpp"

using namespace fishweight;

namespace {

MaskImage half_mask(std::size_t w, std::size_t h)
{
    std::vector<std::uint8_t> px(w * h, 0);
    for (std::size_t i = 0; i < px.size() / 2; ++i) { px[i] = 1; }
    return MaskImage(w, h, 1.0, std::move(px));
}

ProbMap as_map(const MaskImage& m)
{
    std::vector<double> px(m.pixels().begin(), m.pixels().end());
    return ProbMap(m.width(), m.height(), m.mm_per_pixel(), std::move(px));
}

std::pair<MaskImage, ProbMap> random_pair(Rng& rng, std::size_t w, std::size_t h)
{
    std::vector<std::uint8_t> y(w * h);
    std::vector<double> p(w * h);
    const double fg = rng.uniform(0.05, 0.95);
    for (std::size_t i = 0; i < y.size(); ++i) {
        y[i] = rng.bernoulli(fg) ? 1 : 0;
        p[i] = rng.uniform();
    }
    return {MaskImage(w, h, 1.0, std::move(y)), ProbMap(w, h, 1.0, std::move(p))};
}

} // namespace

TEST(Bce, PerfectPredictionIsNearZero)
{
    const auto y = half_mask(10, 10);
    EXPECT_LE(bce(y, as_map(y)), -std::log(1.0 - kDefaultBceEps) + 1e-15);
}

TEST(Bce, HalfProbabilityIsLnTwo)
{
    for (const auto& y : {half_mask(10, 10), MaskImage(4, 4, 1.0, std::uint8_t{0}), MaskImage(4, 4, 1.0, std::uint8_t{1})}) {
        EXPECT_NEAR(bce(y, ProbMap(y.width(), y.height(), 1.0, 0.5)), std::log(2.0), 1e-12);
    }
}

TEST(Bce, AllOnesAtPointNine)
{
    EXPECT_NEAR(bce(MaskImage(5, 5, 1.0, std::uint8_t{1}), ProbMap(5, 5, 1.0, 0.9)), 0.10536051565782628, 1e-14);
}

TEST(Bce, Errors)
{
    EXPECT_THROW(bce(MaskImage(2, 2, 1.0, std::uint8_t{1}), ProbMap(2, 3, 1.0, 0.5)), InvalidArgument);
    EXPECT_THROW(bce(MaskImage(2, 2, 1.0, std::uint8_t{1}), ProbMap(2, 2, 1.0, 0.5), 0.5), InvalidArgument);
}

TEST(Dice, IdentityDisjointAndHalfOverlap)
{
    const auto y = half_mask(10, 10);
    EXPECT_DOUBLE_EQ(dice(y, as_map(y), 0.0), 1.0);

    std::vector<double> inv(100);
    for (std::size_t i = 0; i < 100; ++i) { inv[i] = y.pixels()[i] ? 0.0 : 1.0; }
    EXPECT_DOUBLE_EQ(dice(y, ProbMap(10, 10, 1.0, inv), 0.0), 0.0);

    // Σy = 100, Σp = 100, Σyp = 50.
    std::vector<std::uint8_t> ym(400, 0);
    std::vector<double> pm(400, 0.0);
    for (std::size_t i = 0; i < 100; ++i) { ym[i] = 1; }
    for (std::size_t i = 50; i < 150; ++i) { pm[i] = 1.0; }
    EXPECT_DOUBLE_EQ(dice(MaskImage(20, 20, 1.0, ym), ProbMap(20, 20, 1.0, pm), 0.0), 0.5);
}

TEST(Dice, SymmetricForBinaryAndBounded)
{
    Rng rng(4);
    for (int t = 0; t < 200; ++t) {
        auto [y, p] = random_pair(rng, 9, 7);
        const auto pb = threshold(p, 0.5);
        EXPECT_NEAR(dice(y, as_map(pb)), dice(pb, as_map(y)), 1e-15);
        const double d = dice(y, p, rng.uniform(0.0, 2.0));
        EXPECT_GE(d, 0.0);
        EXPECT_LE(d, 1.0);
    }
}

TEST(LinearDiceLoss, HalfForegroundAtHalfProbability)
{
    const auto y = half_mask(20, 10);
    const auto v = loss_linear_dice(y, ProbMap(20, 10, 1.0, 0.5));
    EXPECT_NEAR(v.bce_part, std::log(2.0), 1e-12);
    EXPECT_NEAR(v.dice_value, 0.5, 1e-8);
    EXPECT_NEAR(v.total, 1.1931471805599453, 1e-8);
}

TEST(LinearDiceLoss, PerfectPredictionAndBceBound)
{
    const auto y = half_mask(8, 8);
    EXPECT_LE(loss_linear_dice(y, as_map(y)).total, 2 * kDefaultBceEps);
    Rng rng(9);
    for (int t = 0; t < 100; ++t) {
        auto [ym, p] = random_pair(rng, 6, 6);
        const auto v = loss_linear_dice(ym, p);
        EXPECT_GE(v.total, v.bce_part);
    }
}

TEST(LogDiceLoss, ContributionAtHalfDice)
{
    std::vector<std::uint8_t> ym(400, 0);
    std::vector<double> pm(400, 0.0);
    for (std::size_t i = 0; i < 100; ++i) { ym[i] = 1; }
    for (std::size_t i = 50; i < 150; ++i) { pm[i] = 1.0; }
    const MaskImage y(20, 20, 1.0, ym);
    const ProbMap p(20, 20, 1.0, pm);
    const auto lin = loss_linear_dice(y, p);
    const auto log = loss_log_dice(y, p);
    EXPECT_NEAR(log.total - log.bce_part, 0.6931471805599453, 1e-8);
    EXPECT_NEAR(lin.total - lin.bce_part, 0.5, 1e-8);
}

TEST(LogDiceLoss, DominatesLinearForm)
{
    Rng rng(21);
    for (int t = 0; t < 1000; ++t) {
        auto [y, p] = random_pair(rng, 8, 8);
        const auto lin = loss_linear_dice(y, p);
        const auto log = loss_log_dice(y, p);
        EXPECT_GE(log.total, lin.total);
        EXPECT_NEAR(log.total - lin.total, -std::log(log.dice_value) - (1.0 - log.dice_value), 1e-12);
    }
    const auto y = half_mask(8, 8);
    EXPECT_NEAR(loss_log_dice(y, as_map(y)).total, loss_linear_dice(y, as_map(y)).total, 1e-12);
}

TEST(LogDiceLoss, RequiresPositiveSmooth)
{
    const auto y = half_mask(4, 4);
    EXPECT_THROW(loss_log_dice(y, as_map(y), kDefaultBceEps, 0.0), InvalidArgument);
}

TEST(Mape, Values)
{
    const std::vector<double> a{100, 200};
    EXPECT_EQ(mape(a, a), 0.0);
    EXPECT_NEAR(mape(a, std::vector<double>{90, 220}), 10.0, 1e-12);
    EXPECT_THROW(mape(std::vector<double>{0, 1}, std::vector<double>{1, 1}), InvalidArgument);
    EXPECT_THROW(mape(std::vector<double>{-1}, std::vector<double>{1}), InvalidArgument);
}

TEST(Metrics, HomogeneityProperties)
{
    Rng rng(6);
    for (int t = 0; t < 100; ++t) {
        std::vector<double> a(10), p(10), ka(10), kp(10);
        const double k = rng.uniform(0.01, 100.0);
        for (int i = 0; i < 10; ++i) {
            a[i] = rng.uniform(50, 3000);
            p[i] = rng.uniform(50, 3000);
            ka[i] = k * a[i];
            kp[i] = k * p[i];
        }
        EXPECT_NEAR(mape(ka, kp), mape(a, p), 1e-9 * mape(a, p));
        EXPECT_NEAR(mae(ka, kp), k * mae(a, p), 1e-9 * k * mae(a, p));
        EXPECT_LE(mae(a, p), std::sqrt(mse(a, p)) + 1e-12);
    }
}

TEST(MaeMse, Values)
{
    const std::vector<double> z{0, 0};
    EXPECT_EQ(mae(z, z), 0.0);
    EXPECT_EQ(mse(z, z), 0.0);
    EXPECT_DOUBLE_EQ(mae(z, std::vector<double>{3, 4}), 3.5);
    EXPECT_DOUBLE_EQ(mse(z, std::vector<double>{3, 4}), 12.5);
    EXPECT_THROW(mae(z, std::vector<double>{1}), InvalidArgument);
    EXPECT_THROW(mse(z, std::vector<double>{1, 2, 3}), InvalidArgument);
}

TEST(RSquared, Values)
{
    const std::vector<double> a{1, 2, 3};
    EXPECT_EQ(r_squared(a, a), 1.0);
    EXPECT_EQ(r_squared(a, std::vector<double>{2, 2, 2}), 0.0);
    EXPECT_DOUBLE_EQ(r_squared(a, std::vector<double>{1, 2, 4}), 0.5);
    EXPECT_THROW(r_squared(std::vector<double>{5, 5}, std::vector<double>{5, 6}), InvalidArgument);
}

TEST(RSquared, OneOnlyForZeroResiduals)
{
    const std::vector<double> a{1, 2, 3, 4};
    EXPECT_LT(r_squared(a, std::vector<double>{1, 2, 3, 4.001}), 1.0);
    Metrics m = compute_metrics(std::vector<double>{7}, std::vector<double>{7});
    EXPECT_FALSE(m.r_squared.has_value());
}

TEST(LrSchedule, Endpoints)
{
    EXPECT_EQ(lr_at(0), 1e-3);
    EXPECT_EQ(lr_at(100), 1e-5);
    EXPECT_NEAR(lr_at(50), 5.05e-4, 1e-18);
    EXPECT_NEAR(lr_at(0, {}, true), 1e-4, 1e-19);
    EXPECT_NEAR(lr_at(100, {}, true), 1e-6, 1e-21);
}

TEST(LrSchedule, MonotoneAndEncoderRatio)
{
    const LrSchedule s{};
    double prev = lr_at(0, s);
    for (int e = 0; e <= s.total_epochs; ++e) {
        const double base = lr_at(e, s);
        EXPECT_LE(base, prev);
        EXPECT_EQ(lr_at(e, s, true), base / s.encoder_factor);
        prev = base;
    }
}

TEST(LrSchedule, Errors)
{
    EXPECT_THROW(lr_at(-1), InvalidArgument);
    EXPECT_THROW(lr_at(101), InvalidArgument);
    EXPECT_THROW(lr_at(0, {1e-5, 1e-3, 100, 10}), InvalidArgument);
    EXPECT_THROW(lr_at(0, {1e-3, 1e-5, 0, 10}), InvalidArgument);
    EXPECT_THROW(lr_at(0, {1e-3, 1e-5, 100, 0.5}), InvalidArgument);
}
