#include <gtest/gtest.h>

#include <cmath>

#include "fishweight/augment.hpp"

using namespace fishweight;

namespace {

MaskImage disk(std::size_t side, double radius)
{
    std::vector<std::uint8_t> px(side * side);
    const double c = (static_cast<double>(side) - 1.0) / 2.0;
    for (std::size_t y = 0; y < side; ++y) {
        for (std::size_t x = 0; x < side; ++x) {
            const double dx = static_cast<double>(x) - c, dy = static_cast<double>(y) - c;
            px[y * side + x] = dx * dx + dy * dy <= radius * radius;
        }
    }
    return MaskImage(side, side, 1.0, std::move(px));
}

GrayImage noise_image(std::size_t w, std::size_t h, std::uint64_t seed)
{
    Rng rng(seed);
    std::vector<double> px(w * h);
    for (auto& v : px) { v = rng.uniform(); }
    return GrayImage(w, h, 1.0, std::move(px));
}

MaskImage random_mask(std::size_t w, std::size_t h, std::uint64_t seed)
{
    Rng rng(seed);
    std::vector<std::uint8_t> px(w * h);
    for (auto& v : px) { v = rng.bernoulli(0.3); }
    return MaskImage(w, h, 1.0, std::move(px));
}

GrayImage as_gray(const MaskImage& m)
{
    return GrayImage(m.width(), m.height(), m.mm_per_pixel(), std::vector<double>(m.pixels().begin(), m.pixels().end()));
}

AugmentConfig disabled()
{
    AugmentConfig c;
    c.rotation_range = 0.0;
    c.enable_scale = false;
    c.flip_prob = 0.0;
    c.blur_prob = 0.0;
    c.clahe_prob = 0.0;
    return c;
}

} // namespace

TEST(Rotate, ZeroIsIdentity)
{
    const auto img = noise_image(31, 20, 1);
    EXPECT_EQ(rotate(img, 0.0, Interp::Bilinear), img);
    const auto m = random_mask(31, 20, 2);
    EXPECT_EQ(rotate(m, 0.0, Interp::Nearest), m);
}

TEST(Rotate, HalfTurnEqualsDoubleFlip)
{
    for (auto [w, h] : {std::pair<std::size_t, std::size_t>{17, 11}, {16, 10}}) {
        const auto m = random_mask(w, h, 3);
        EXPECT_EQ(rotate(m, 180.0, Interp::Nearest), flip(m, true, true));
        EXPECT_EQ(rotate(m, -180.0, Interp::Nearest), flip(m, true, true));
    }
}

TEST(Rotate, QuarterTurnsOfSquareArePermutations)
{
    const auto m = random_mask(24, 24, 4);
    const auto r = rotate(m, 90.0, Interp::Nearest);
    EXPECT_EQ(foreground_count(r), foreground_count(m));
    EXPECT_EQ(rotate(rotate(rotate(r, 90.0, Interp::Nearest), 90.0, Interp::Nearest), 90.0, Interp::Nearest), m);
    EXPECT_NE(r, m);
}

TEST(Rotate, DiskAreaRoughlyInvariant)
{
    const auto d = disk(101, 30.0);
    const double before = static_cast<double>(foreground_count(d));
    for (double angle : {17.0, 45.0, -123.0}) {
        EXPECT_NEAR(static_cast<double>(foreground_count(rotate(d, angle, Interp::Nearest))) / before, 1.0, 0.02);
    }
}

TEST(Rescale, UnitFactorIsIdentity)
{
    const auto img = noise_image(20, 13, 5);
    EXPECT_EQ(rescale(img, 1.0, Interp::Bilinear), img);
    const auto m = random_mask(20, 13, 6);
    EXPECT_EQ(rescale(m, 1.0, Interp::Nearest), m);
}

TEST(Rescale, DoublingQuadruplesArea)
{
    const auto d = disk(101, 30.0);
    const auto big = rescale(d, 2.0, Interp::Nearest);
    ASSERT_EQ(big.width(), 202u);
    EXPECT_NEAR(static_cast<double>(foreground_count(big)) / static_cast<double>(foreground_count(d)), 4.0, 0.08);
    // At a factor of exactly 2 nearest sampling replicates every pixel into a 2x2 block.
    for (std::size_t y = 0; y < big.height(); ++y) {
        for (std::size_t x = 0; x < big.width(); ++x) { ASSERT_EQ(big(x, y), d(x / 2, y / 2)); }
    }
}

TEST(Rescale, CalibrationHandling)
{
    const MaskImage m(100, 50, 0.5, std::uint8_t{1});
    const auto plain = rescale(m, 2.0, Interp::Nearest);
    EXPECT_EQ(plain.mm_per_pixel(), 0.5);
    EXPECT_DOUBLE_EQ(mask_area(plain), 4.0 * mask_area(m));
    const auto kept = rescale(m, 2.0, Interp::Nearest, true);
    EXPECT_DOUBLE_EQ(kept.mm_per_pixel(), 0.25);
    EXPECT_DOUBLE_EQ(mask_area(kept), mask_area(m));
}

TEST(Rescale, HalveThenDoubleRestoresDimensions)
{
    const auto m = random_mask(64, 48, 7);
    const auto r = rescale(rescale(m, 0.5, Interp::Nearest), 2.0, Interp::Nearest);
    EXPECT_EQ(r.width(), 64u);
    EXPECT_EQ(r.height(), 48u);
    EXPECT_THROW(rescale(m, 0.0, Interp::Nearest), InvalidArgument);
    EXPECT_THROW(rescale(m, 0.001, Interp::Nearest), InvalidArgument);
}

TEST(Crop, LargerInputIsWindowed)
{
    const auto img = noise_image(600, 600, 8);
    const auto c = crop(img, 480, CropOffset{60, 30});
    ASSERT_EQ(c.width(), 480u);
    ASSERT_EQ(c.height(), 480u);
    EXPECT_EQ(c(0, 0), img(60, 30));
    EXPECT_EQ(c(479, 479), img(539, 509));
    EXPECT_THROW(crop(img, 480, CropOffset{121, 0}), InvalidArgument);
}

TEST(Crop, SmallerInputIsPaddedAndCentered)
{
    const MaskImage m(300, 300, 1.0, std::uint8_t{1});
    const auto c = crop(m, 480, CropOffset{});
    EXPECT_EQ(foreground_count(c), 90000u);
    EXPECT_EQ(c(89, 89), 0);
    EXPECT_EQ(c(90, 90), 1);
    EXPECT_EQ(c(389, 389), 1);
    EXPECT_EQ(c(390, 390), 0);
}

TEST(Crop, SameSizeIsIdentity)
{
    const auto m = random_mask(480, 480, 9);
    EXPECT_EQ(crop(m, 480, CropOffset{}), m);
}

TEST(Crop, RandomOffsetPairsStayAligned)
{
    const auto m = random_mask(600, 500, 10);
    Rng rng(3);
    const auto p = crop_pair(as_gray(m), m, 480, rng);
    EXPECT_EQ(p.image, as_gray(p.mask));
}

TEST(Flip, InvolutionAndCount)
{
    const auto m = random_mask(13, 9, 11);
    for (bool h : {false, true}) {
        for (bool v : {false, true}) {
            EXPECT_EQ(flip(flip(m, h, v), h, v), m);
            EXPECT_EQ(foreground_count(flip(m, h, v)), foreground_count(m));
        }
    }
    EXPECT_EQ(flip(m, false, false), m);
    EXPECT_NE(flip(m, true, false), m);
}

TEST(Pipeline, DisabledConfigIsIdentity)
{
    const auto img = noise_image(480, 480, 12);
    const auto m = random_mask(480, 480, 13);
    for (std::uint64_t draw = 0; draw < 5; ++draw) {
        const auto p = augment_pair(img, m, disabled(), draw);
        EXPECT_EQ(p.image, img);
        EXPECT_EQ(p.mask, m);
    }
}

TEST(Pipeline, DeterministicPerSeedAndDraw)
{
    const auto img = noise_image(200, 160, 14);
    const auto m = random_mask(200, 160, 15);
    AugmentConfig cfg;
    cfg.crop = 128;
    cfg.seed = 99;
    for (std::uint64_t draw = 0; draw < 5; ++draw) {
        const auto a = augment_pair(img, m, cfg, draw);
        const auto b = augment_pair(img, m, cfg, draw);
        EXPECT_EQ(a.image, b.image);
        EXPECT_EQ(a.mask, b.mask);
    }
    EXPECT_NE(augment_pair(img, m, cfg, 0).image, augment_pair(img, m, cfg, 1).image);
}

TEST(Pipeline, FlipFrequency)
{
    AugmentConfig cfg;
    cfg.seed = 2024;
    int h = 0, v = 0;
    const int n = 10000;
    for (int d = 0; d < n; ++d) {
        const auto p = draw_params(cfg, static_cast<std::uint64_t>(d), 600, 600);
        h += p.hflip;
        v += p.vflip;
    }
    EXPECT_GE(h, 4800);
    EXPECT_LE(h, 5200);
    EXPECT_GE(v, 4800);
    EXPECT_LE(v, 5200);
}

TEST(Pipeline, ParameterRanges)
{
    AugmentConfig cfg;
    cfg.seed = 5;
    int blur3 = 0, blur5 = 0;
    for (std::uint64_t d = 0; d < 2000; ++d) {
        const auto p = draw_params(cfg, d, 600, 500);
        EXPECT_GE(p.angle, -180.0);
        EXPECT_LE(p.angle, 180.0);
        EXPECT_GE(p.scale, 0.8);
        EXPECT_LE(p.scale, 1.2);
        blur3 += p.blur_kernel == 3;
        blur5 += p.blur_kernel == 5;
        EXPECT_TRUE(p.blur_kernel == 0 || p.blur_kernel == 3 || p.blur_kernel == 5);
    }
    EXPECT_GT(blur3, 350);
    EXPECT_GT(blur5, 350);
}

TEST(Pipeline, MaskStaysBinary)
{
    const auto img = noise_image(160, 120, 16);
    const auto m = random_mask(160, 120, 17);
    AugmentConfig cfg;
    cfg.crop = 96;
    cfg.seed = 1;
    for (std::uint64_t d = 0; d < 200; ++d) {
        const auto p = augment_pair(img, m, cfg, d);
        for (auto v : p.mask.pixels()) { ASSERT_LE(v, 1); }
        ASSERT_TRUE(p.image.same_shape(p.mask));
        ASSERT_EQ(p.image.width(), 96u);
    }
}

TEST(Pipeline, PhotometricOpsLeaveMaskAlone)
{
    const auto img = noise_image(64, 64, 18);
    const auto m = random_mask(64, 64, 19);
    auto cfg = disabled();
    cfg.crop = 64;
    cfg.blur_prob = 1.0;
    cfg.clahe_prob = 1.0;
    const auto p = augment_pair(img, m, cfg, 0);
    EXPECT_EQ(p.mask, m);
    EXPECT_NE(p.image, img);
}

TEST(Pipeline, GeometryIsSharedByImageAndMask)
{
    const auto m = disk(80, 25.0);
    AugmentConfig cfg;
    cfg.crop = 64;
    cfg.blur_prob = 0.0;
    cfg.clahe_prob = 0.0;
    cfg.seed = 8;
    for (std::uint64_t d = 0; d < 20; ++d) {
        const auto p = draw_params(cfg, d, m.width(), m.height());
        auto g = rotate(m, p.angle, Interp::Nearest);
        g = rescale(g, p.scale, Interp::Nearest);
        g = crop(g, cfg.crop, p.crop_offset);
        g = flip(g, p.hflip, p.vflip);
        const auto out = apply_params(as_gray(m), m, cfg, p);
        EXPECT_EQ(out.mask, g);
        // The bilinear image copy of the disk agrees with the mask away from the rim.
        std::size_t disagree = 0;
        for (std::size_t i = 0; i < out.mask.size(); ++i) {
            disagree += std::abs(out.image.pixels()[i] - out.mask.pixels()[i]) > 0.5;
        }
        EXPECT_LT(static_cast<double>(disagree), 0.02 * static_cast<double>(out.mask.size()));
    }
}

TEST(Pipeline, Errors)
{
    const auto img = noise_image(10, 10, 1);
    const auto m = random_mask(11, 10, 1);
    EXPECT_THROW(augment_pair(img, m, AugmentConfig{}, 0), InvalidArgument);
    AugmentConfig bad;
    bad.flip_prob = 1.5;
    EXPECT_THROW(augment_pair(img, random_mask(10, 10, 1), bad, 0), InvalidArgument);
}
