#ifndef FISHWEIGHT_AUGMENT_HPP
#define FISHWEIGHT_AUGMENT_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <utility>
#include <vector>

#include "fishweight/error.hpp"
#include "fishweight/imaging.hpp"
#include "fishweight/random.hpp"

namespace fishweight {

/// Image-mask pair moving through the augmentation pipeline together.
struct ImagePair {
    GrayImage image;
    MaskImage mask;
};

enum class Interp { Nearest, Bilinear };

namespace detail {

inline void require_paired(const GrayImage& img, const MaskImage& m, const char* what)
{
    if (!img.same_shape(m)) { throw InvalidArgument(std::string(what) + ": image and mask dimensions differ"); }
}

// Sample `src` at continuous pixel coordinates. Outside the raster reads 0.
template <typename R>
typename R::value_type sample_zero(const R& src, double sx, double sy, Interp interp)
{
    using T = typename R::value_type;
    const long w = static_cast<long>(src.width());
    const long h = static_cast<long>(src.height());
    if (interp == Interp::Nearest) {
        const long x = static_cast<long>(std::floor(sx + 0.5));
        const long y = static_cast<long>(std::floor(sy + 0.5));
        if (x < 0 || y < 0 || x >= w || y >= h) { return T{}; }
        return src(static_cast<std::size_t>(x), static_cast<std::size_t>(y));
    }
    const double fx0 = std::floor(sx), fy0 = std::floor(sy);
    const long x0 = static_cast<long>(fx0), y0 = static_cast<long>(fy0);
    const double ax = sx - fx0, ay = sy - fy0;
    auto at = [&](long x, long y) -> double {
        if (x < 0 || y < 0 || x >= w || y >= h) { return 0.0; }
        return static_cast<double>(src(static_cast<std::size_t>(x), static_cast<std::size_t>(y)));
    };
    // Zero weights short-circuit so integer coordinates reproduce pixels exactly.
    double v = 0.0;
    if (ax < 1.0 && ay < 1.0) { v += (1.0 - ax) * (1.0 - ay) * at(x0, y0); }
    if (ax > 0.0 && ay < 1.0) { v += ax * (1.0 - ay) * at(x0 + 1, y0); }
    if (ax < 1.0 && ay > 0.0) { v += (1.0 - ax) * ay * at(x0, y0 + 1); }
    if (ax > 0.0 && ay > 0.0) { v += ax * ay * at(x0 + 1, y0 + 1); }
    return static_cast<T>(std::clamp(v, 0.0, 1.0));
}

// Exact cosine/sine for multiples of 90 degrees so right-angle rotations are
// pixel permutations.
inline std::pair<double, double> cos_sin_degrees(double angle)
{
    const double quarter = angle / 90.0;
    if (quarter == std::round(quarter)) {
        static constexpr double c[4] = {1.0, 0.0, -1.0, 0.0};
        static constexpr double s[4] = {0.0, 1.0, 0.0, -1.0};
        const long k = ((static_cast<long>(quarter) % 4) + 4) % 4;
        return {c[k], s[k]};
    }
    const double rad = angle * std::numbers::pi / 180.0;
    return {std::cos(rad), std::sin(rad)};
}

} // namespace detail

/// Rotation by `angle` degrees about the raster center, same dimensions;
/// uncovered pixels become 0.
template <typename R>
R rotate(const R& src, double angle, Interp interp)
{
    const auto [c, s] = detail::cos_sin_degrees(angle);
    const double cx = (static_cast<double>(src.width()) - 1.0) / 2.0;
    const double cy = (static_cast<double>(src.height()) - 1.0) / 2.0;
    std::vector<typename R::value_type> out(src.size());
    for (std::size_t y = 0; y < src.height(); ++y) {
        for (std::size_t x = 0; x < src.width(); ++x) {
            const double dx = static_cast<double>(x) - cx;
            const double dy = static_cast<double>(y) - cy;
            const double sx = cx + c * dx + s * dy;
            const double sy = cy - s * dx + c * dy;
            out[y * src.width() + x] = detail::sample_zero(src, sx, sy, interp);
        }
    }
    return R(src.width(), src.height(), src.mm_per_pixel(), std::move(out));
}

/// Dimensions scaled by `factor` (rounded). Sampling clamps to the edge.
template <typename R>
R rescale(const R& src, double factor, Interp interp, bool preserve_calibration = false)
{
    if (!(factor > 0.0) || !std::isfinite(factor)) { throw InvalidArgument("scale: factor must be positive"); }
    const auto nw = static_cast<std::size_t>(std::llround(static_cast<double>(src.width()) * factor));
    const auto nh = static_cast<std::size_t>(std::llround(static_cast<double>(src.height()) * factor));
    if (nw < 1 || nh < 1) { throw InvalidArgument("scale: result would be smaller than 1x1"); }
    const double rx = static_cast<double>(nw) / static_cast<double>(src.width());
    const double ry = static_cast<double>(nh) / static_cast<double>(src.height());
    const double max_x = static_cast<double>(src.width() - 1);
    const double max_y = static_cast<double>(src.height() - 1);
    std::vector<typename R::value_type> out(nw * nh);
    for (std::size_t y = 0; y < nh; ++y) {
        for (std::size_t x = 0; x < nw; ++x) {
            double sx, sy;
            if (interp == Interp::Nearest) {
                sx = std::min(std::floor((static_cast<double>(x) + 0.5) / rx), max_x);
                sy = std::min(std::floor((static_cast<double>(y) + 0.5) / ry), max_y);
            } else {
                sx = std::clamp((static_cast<double>(x) + 0.5) / rx - 0.5, 0.0, max_x);
                sy = std::clamp((static_cast<double>(y) + 0.5) / ry - 0.5, 0.0, max_y);
            }
            out[y * nw + x] = detail::sample_zero(src, sx, sy, interp);
        }
    }
    const double mmpp = preserve_calibration ? src.mm_per_pixel() / rx : src.mm_per_pixel();
    return R(nw, nh, mmpp, std::move(out));
}

/// Top-left corner of a crop window, in padded coordinates.
struct CropOffset {
    std::size_t x = 0;
    std::size_t y = 0;
};

/// side×side window. Axes shorter than `side` are first zero-padded
/// symmetrically (extra pixel after), then the window starts at `offset`.
template <typename R>
R crop(const R& src, std::size_t side, CropOffset offset)
{
    if (side == 0) { throw InvalidArgument("crop: side must be positive"); }
    const std::size_t pw = std::max(src.width(), side);
    const std::size_t ph = std::max(src.height(), side);
    if (offset.x > pw - side || offset.y > ph - side) { throw InvalidArgument("crop: offset outside the image"); }
    const long pad_x = static_cast<long>((pw - src.width()) / 2);
    const long pad_y = static_cast<long>((ph - src.height()) / 2);
    std::vector<typename R::value_type> out(side * side);
    for (std::size_t y = 0; y < side; ++y) {
        const long sy = static_cast<long>(y + offset.y) - pad_y;
        if (sy < 0 || sy >= static_cast<long>(src.height())) { continue; }
        for (std::size_t x = 0; x < side; ++x) {
            const long sx = static_cast<long>(x + offset.x) - pad_x;
            if (sx < 0 || sx >= static_cast<long>(src.width())) { continue; }
            out[y * side + x] = src(static_cast<std::size_t>(sx), static_cast<std::size_t>(sy));
        }
    }
    return R(side, side, src.mm_per_pixel(), std::move(out));
}

template <typename R>
R flip(const R& src, bool horizontal, bool vertical)
{
    const std::size_t w = src.width(), h = src.height();
    std::vector<typename R::value_type> out(src.size());
    for (std::size_t y = 0; y < h; ++y) {
        const std::size_t sy = vertical ? h - 1 - y : y;
        for (std::size_t x = 0; x < w; ++x) {
            const std::size_t sx = horizontal ? w - 1 - x : x;
            out[y * w + x] = src(sx, sy);
        }
    }
    return R(w, h, src.mm_per_pixel(), std::move(out));
}

/// Rotation about the center: bilinear for the image, nearest for the mask.
inline ImagePair rotate_pair(const GrayImage& img, const MaskImage& m, double angle)
{
    detail::require_paired(img, m, "rotate_pair");
    return {rotate(img, angle, Interp::Bilinear), rotate(m, angle, Interp::Nearest)};
}

/// Resize by `factor`. Calibration stays unchanged unless
/// `preserve_calibration` is set, so by default the object appears larger or
/// smaller in physical units.
inline ImagePair scale_pair(const GrayImage& img, const MaskImage& m, double factor, bool preserve_calibration = false)
{
    detail::require_paired(img, m, "scale_pair");
    return {rescale(img, factor, Interp::Bilinear, preserve_calibration),
            rescale(m, factor, Interp::Nearest, preserve_calibration)};
}

inline ImagePair crop_pair(const GrayImage& img, const MaskImage& m, std::size_t side, CropOffset offset)
{
    detail::require_paired(img, m, "crop_pair");
    return {crop(img, side, offset), crop(m, side, offset)};
}

/// Crop at an offset drawn uniformly from the valid range.
inline ImagePair crop_pair(const GrayImage& img, const MaskImage& m, std::size_t side, Rng& rng)
{
    detail::require_paired(img, m, "crop_pair");
    const std::size_t pw = std::max(img.width(), side), ph = std::max(img.height(), side);
    const CropOffset off{static_cast<std::size_t>(rng.below(pw - side + 1)), static_cast<std::size_t>(rng.below(ph - side + 1))};
    return crop_pair(img, m, side, off);
}

inline ImagePair flip_pair(const GrayImage& img, const MaskImage& m, bool horizontal, bool vertical)
{
    detail::require_paired(img, m, "flip_pair");
    return {flip(img, horizontal, vertical), flip(m, horizontal, vertical)};
}

/// Training-time augmentation settings. Defaults follow the segmentation
/// training recipe: ±180° rotation, [0.8, 1.2] scaling, 480 px crops,
/// 0.5-probability flips, and 0.5-probability blur and CLAHE.
struct AugmentConfig {
    double rotation_range = 180.0;
    double scale_min = 0.8;
    double scale_max = 1.2;
    bool enable_scale = true;
    bool preserve_calibration = false;
    std::size_t crop = 480;
    double flip_prob = 0.5;
    double blur_prob = 0.5;
    double clahe_prob = 0.5;
    ClaheParams clahe{};
    std::uint64_t seed = 0;

    void validate() const
    {
        auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
        if (!prob(flip_prob) || !prob(blur_prob) || !prob(clahe_prob)) {
            throw InvalidArgument("augment: probabilities must lie in [0, 1]");
        }
        if (!(rotation_range >= 0.0)) { throw InvalidArgument("augment: rotation_range must be non-negative"); }
        if (!(scale_min > 0.0) || !(scale_max >= scale_min)) { throw InvalidArgument("augment: need 0 < scale_min <= scale_max"); }
        if (crop == 0) { throw InvalidArgument("augment: crop must be positive"); }
    }
};

/// Concrete random choices of one augmentation draw.
struct AugmentParams {
    double angle = 0.0;
    /// 1 when scaling is disabled.
    double scale = 1.0;
    CropOffset crop_offset{};
    bool hflip = false;
    bool vflip = false;
    /// 0 when blur is not applied, else 3 or 5.
    int blur_kernel = 0;
    bool clahe = false;
};

/**
 * Draws the parameters of augmentation `draw` for a width×height input. The
 * generator is keyed by (cfg.seed, draw), and every variate is drawn whether
 * or not its transform fires, so each draw is independent of the others.
 */
inline AugmentParams draw_params(const AugmentConfig& cfg, std::uint64_t draw, std::size_t width, std::size_t height)
{
    cfg.validate();
    Rng rng(cfg.seed, draw);
    AugmentParams p;
    p.angle = rng.uniform(-cfg.rotation_range, cfg.rotation_range);
    const double s = rng.uniform(cfg.scale_min, cfg.scale_max);
    p.scale = cfg.enable_scale ? s : 1.0;
    std::size_t w = width, h = height;
    if (cfg.enable_scale) {
        w = static_cast<std::size_t>(std::llround(static_cast<double>(width) * p.scale));
        h = static_cast<std::size_t>(std::llround(static_cast<double>(height) * p.scale));
    }
    const std::size_t pw = std::max(w, cfg.crop), ph = std::max(h, cfg.crop);
    p.crop_offset.x = static_cast<std::size_t>(rng.below(pw - cfg.crop + 1));
    p.crop_offset.y = static_cast<std::size_t>(rng.below(ph - cfg.crop + 1));
    p.hflip = rng.bernoulli(cfg.flip_prob);
    p.vflip = rng.bernoulli(cfg.flip_prob);
    const bool blur_on = rng.bernoulli(cfg.blur_prob);
    const int kernel = rng.below(2) == 0 ? 3 : 5;
    p.blur_kernel = blur_on ? kernel : 0;
    p.clahe = rng.bernoulli(cfg.clahe_prob);
    return p;
}

/// Applies rotate -> scale -> crop -> flip to both rasters, then blur and/or
/// CLAHE to the image only.
inline ImagePair apply_params(const GrayImage& img, const MaskImage& m, const AugmentConfig& cfg, const AugmentParams& p)
{
    detail::require_paired(img, m, "augment_pair");
    ImagePair cur = rotate_pair(img, m, p.angle);
    if (cfg.enable_scale) { cur = scale_pair(cur.image, cur.mask, p.scale, cfg.preserve_calibration); }
    cur = crop_pair(cur.image, cur.mask, cfg.crop, p.crop_offset);
    cur = flip_pair(cur.image, cur.mask, p.hflip, p.vflip);
    if (p.blur_kernel) { cur.image = blur(cur.image, p.blur_kernel); }
    if (p.clahe) { cur.image = clahe(cur.image, cfg.clahe); }
    return cur;
}

inline ImagePair augment_pair(const GrayImage& img, const MaskImage& m, const AugmentConfig& cfg, std::uint64_t draw)
{
    detail::require_paired(img, m, "augment_pair");
    return apply_params(img, m, cfg, draw_params(cfg, draw, img.width(), img.height()));
}

} // namespace fishweight

#endif // FISHWEIGHT_AUGMENT_HPP
