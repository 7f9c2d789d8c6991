#ifndef FISHWEIGHT_IMAGING_HPP
#define FISHWEIGHT_IMAGING_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fishweight/error.hpp"

namespace fishweight {

namespace detail {

struct GrayTag {
    static constexpr const char* name = "gray image";
    static bool valid(double v) { return v >= 0.0 && v <= 1.0; }
};

struct ProbTag {
    static constexpr const char* name = "probability map";
    static bool valid(double v) { return v >= 0.0 && v <= 1.0; }
};

struct MaskTag {
    static constexpr const char* name = "mask";
    static bool valid(std::uint8_t v) { return v <= 1; }
};

} // namespace detail

/**
 * Immutable single-channel raster with a physical calibration.
 *
 * Pixels are stored row-major. `Tag` fixes the value domain: [0,1] intensities
 * for gray images and probability maps, {0,1} for masks. The constructor
 * rejects values outside the domain, so every live raster satisfies it.
 */
template <typename T, typename Tag>
class Raster {
public:
    using value_type = T;

    Raster(std::size_t width, std::size_t height, double mm_per_pixel, std::vector<T> pixels)
        : m_width(width), m_height(height), m_mm_per_pixel(mm_per_pixel), m_pixels(std::move(pixels))
    {
        if (width == 0 || height == 0) {
            throw InvalidArgument(std::string(Tag::name) + " must be at least 1x1");
        }
        if (!(mm_per_pixel > 0.0) || !std::isfinite(mm_per_pixel)) {
            throw InvalidArgument(std::string(Tag::name) + ": mm_per_pixel must be positive");
        }
        if (m_pixels.size() != width * height) {
            throw InvalidArgument(std::string(Tag::name) + ": pixel count does not match dimensions");
        }
        for (const T& v : m_pixels) {
            if (!Tag::valid(v)) {
                throw InvalidArgument(std::string(Tag::name) + ": pixel value out of range");
            }
        }
    }

    Raster(std::size_t width, std::size_t height, double mm_per_pixel, T fill)
        : Raster(width, height, mm_per_pixel, std::vector<T>(width * height, fill))
    {
    }

    std::size_t width() const noexcept { return m_width; }
    std::size_t height() const noexcept { return m_height; }
    std::size_t size() const noexcept { return m_pixels.size(); }
    double mm_per_pixel() const noexcept { return m_mm_per_pixel; }

    std::span<const T> pixels() const& noexcept { return m_pixels; }
    std::span<const T> pixels() const&& = delete;

    T operator()(std::size_t x, std::size_t y) const noexcept { return m_pixels[y * m_width + x]; }

    /// Same pixels under a different calibration.
    Raster with_calibration(double mm_per_pixel) const
    {
        return Raster(m_width, m_height, mm_per_pixel, m_pixels);
    }

    bool same_shape(std::size_t w, std::size_t h) const noexcept { return w == m_width && h == m_height; }

    template <typename U, typename UTag>
    bool same_shape(const Raster<U, UTag>& other) const noexcept
    {
        return same_shape(other.width(), other.height());
    }

    bool operator==(const Raster&) const = default;

private:
    std::size_t m_width;
    std::size_t m_height;
    double m_mm_per_pixel;
    std::vector<T> m_pixels;
};

/// One-channel intensities normalized to [0,1].
using GrayImage = Raster<double, detail::GrayTag>;
/// Per-pixel foreground probabilities, e.g. sigmoid outputs of a segmentation net.
using ProbMap = Raster<double, detail::ProbTag>;
/// Binary silhouette; 1 = foreground.
using MaskImage = Raster<std::uint8_t, detail::MaskTag>;

inline constexpr double kLumaRed = 0.299;
inline constexpr double kLumaGreen = 0.587;
inline constexpr double kLumaBlue = 0.114;

/// Luma conversion of three [0,1] channels. Calibration is taken from `r`.
inline GrayImage to_grayscale(const GrayImage& r, const GrayImage& g, const GrayImage& b)
{
    if (!r.same_shape(g) || !r.same_shape(b)) {
        throw InvalidArgument("to_grayscale: channel dimensions differ");
    }
    std::vector<double> out(r.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double v = kLumaRed * r.pixels()[i] + kLumaGreen * g.pixels()[i] + kLumaBlue * b.pixels()[i];
        out[i] = std::clamp(v, 0.0, 1.0);
    }
    return GrayImage(r.width(), r.height(), r.mm_per_pixel(), std::move(out));
}

inline std::size_t foreground_count(const MaskImage& m) noexcept
{
    return static_cast<std::size_t>(std::count(m.pixels().begin(), m.pixels().end(), std::uint8_t{1}));
}

/// Silhouette area in cm²: foreground pixels times the pixel footprint.
inline double mask_area(const MaskImage& m) noexcept
{
    const double mm2 = static_cast<double>(foreground_count(m)) * m.mm_per_pixel() * m.mm_per_pixel();
    return mm2 / 100.0;
}

/// Foreground where value >= t. The default cut-off of a sigmoid output is 0.5.
inline MaskImage threshold(const ProbMap& p, double t = 0.5)
{
    if (!(t > 0.0 && t < 1.0)) { throw InvalidArgument("threshold must lie in (0, 1)"); }
    std::vector<std::uint8_t> out(p.size());
    std::transform(p.pixels().begin(), p.pixels().end(), out.begin(),
                   [t](double v) { return static_cast<std::uint8_t>(v >= t ? 1 : 0); });
    return MaskImage(p.width(), p.height(), p.mm_per_pixel(), std::move(out));
}

/// Log-scale weight readout: ln(1 + sum of all map values), no thresholding.
/// A map with nothing detected reads as zero mass.
inline double regression_head(const ProbMap& p) noexcept
{
    const double sum = std::accumulate(p.pixels().begin(), p.pixels().end(), 0.0);
    return std::log1p(sum);
}

/// Grams to the regression head's log scale, ln(w + 1).
inline double log_weight(double grams)
{
    if (!(grams >= 0.0)) { throw InvalidArgument("log_weight: weight must be non-negative"); }
    return std::log1p(grams);
}

/// Inverse of log_weight.
inline double weight_from_log(double log_value)
{
    if (!(log_value >= 0.0)) { throw InvalidArgument("weight_from_log: value must be non-negative"); }
    return std::expm1(log_value);
}

struct ClaheParams {
    double clip_limit = 2.0;
    std::size_t tiles_x = 8;
    std::size_t tiles_y = 8;
};

namespace detail {

inline constexpr std::size_t kClaheBins = 256;

inline std::size_t clahe_bin(double v) noexcept
{
    return std::min<std::size_t>(kClaheBins - 1, static_cast<std::size_t>(v * kClaheBins));
}

// Tile k of n along an axis of `len` pixels covers [k*len/n, (k+1)*len/n).
inline std::size_t tile_start(std::size_t k, std::size_t n, std::size_t len) noexcept { return k * len / n; }

// For pixel index i, the two neighbouring tiles and the weight of the second
// one, using tile centers in continuous coordinates.
struct AxisInterp {
    std::size_t lo;
    std::size_t hi;
    double w;
};

inline std::vector<AxisInterp> axis_interpolation(std::size_t len, std::size_t n)
{
    std::vector<double> centers(n);
    for (std::size_t k = 0; k < n; ++k) {
        centers[k] = 0.5 * static_cast<double>(tile_start(k, n, len) + tile_start(k + 1, n, len));
    }
    std::vector<AxisInterp> out(len);
    for (std::size_t i = 0; i < len; ++i) {
        const double pos = static_cast<double>(i) + 0.5;
        if (pos <= centers.front()) {
            out[i] = {0, 0, 0.0};
        } else if (pos >= centers.back()) {
            out[i] = {n - 1, n - 1, 0.0};
        } else {
            std::size_t k = 0;
            while (centers[k + 1] < pos) { ++k; }
            out[i] = {k, k + 1, (pos - centers[k]) / (centers[k + 1] - centers[k])};
        }
    }
    return out;
}

} // namespace detail

/**
 * Contrast-limited adaptive histogram equalization (Zuiderveld).
 *
 * Each tile gets a 256-bin histogram of its uniformly quantized intensities.
 * Bins are clipped at `clip_limit` times the uniform bin height (at least one
 * count); the clipped excess is spread evenly over all bins and the remainder
 * one count at a time at a fixed stride. The normalized cumulative histogram
 * is the tile mapping, and each output pixel bilinearly blends the mappings of
 * the four tiles whose centers surround it.
 */
inline GrayImage clahe(const GrayImage& img, const ClaheParams& params = {})
{
    if (params.tiles_x < 1 || params.tiles_y < 1) { throw InvalidArgument("clahe: tile grid must be at least 1x1"); }
    if (!(params.clip_limit > 0.0)) { throw InvalidArgument("clahe: clip_limit must be positive"); }
    if (img.width() < params.tiles_x || img.height() < params.tiles_y) {
        throw InvalidArgument("clahe: image is smaller than the tile grid");
    }
    using detail::kClaheBins;
    const std::size_t tx = params.tiles_x;
    const std::size_t ty = params.tiles_y;
    const std::size_t w = img.width();
    const std::size_t h = img.height();

    std::vector<std::array<double, kClaheBins>> luts(tx * ty);
    for (std::size_t j = 0; j < ty; ++j) {
        const std::size_t y0 = detail::tile_start(j, ty, h);
        const std::size_t y1 = detail::tile_start(j + 1, ty, h);
        for (std::size_t i = 0; i < tx; ++i) {
            const std::size_t x0 = detail::tile_start(i, tx, w);
            const std::size_t x1 = detail::tile_start(i + 1, tx, w);
            std::array<long, kClaheBins> hist{};
            for (std::size_t y = y0; y < y1; ++y) {
                for (std::size_t x = x0; x < x1; ++x) { ++hist[detail::clahe_bin(img(x, y))]; }
            }
            const long area = static_cast<long>((x1 - x0) * (y1 - y0));
            const long limit = std::max(1L, static_cast<long>(params.clip_limit * static_cast<double>(area) / kClaheBins));
            long clipped = 0;
            for (auto& c : hist) {
                if (c > limit) {
                    clipped += c - limit;
                    c = limit;
                }
            }
            const long batch = clipped / static_cast<long>(kClaheBins);
            long residual = clipped - batch * static_cast<long>(kClaheBins);
            for (auto& c : hist) { c += batch; }
            if (residual > 0) {
                const std::size_t step = std::max<std::size_t>(kClaheBins / static_cast<std::size_t>(residual), 1);
                for (std::size_t b = 0; b < kClaheBins && residual > 0; b += step, --residual) { ++hist[b]; }
            }
            auto& lut = luts[j * tx + i];
            long cdf = 0;
            for (std::size_t b = 0; b < kClaheBins; ++b) {
                cdf += hist[b];
                lut[b] = static_cast<double>(cdf) / static_cast<double>(area);
            }
        }
    }

    const auto xi = detail::axis_interpolation(w, tx);
    const auto yi = detail::axis_interpolation(h, ty);
    std::vector<double> out(img.size());
    for (std::size_t y = 0; y < h; ++y) {
        const auto& ay = yi[y];
        for (std::size_t x = 0; x < w; ++x) {
            const auto& ax = xi[x];
            const std::size_t bin = detail::clahe_bin(img(x, y));
            const double top = (1.0 - ax.w) * luts[ay.lo * tx + ax.lo][bin] + ax.w * luts[ay.lo * tx + ax.hi][bin];
            const double bottom = (1.0 - ax.w) * luts[ay.hi * tx + ax.lo][bin] + ax.w * luts[ay.hi * tx + ax.hi][bin];
            out[y * w + x] = std::clamp((1.0 - ay.w) * top + ay.w * bottom, 0.0, 1.0);
        }
    }
    return GrayImage(w, h, img.mm_per_pixel(), std::move(out));
}

/// k×k box filter with edge replication; k must be 3 or 5.
inline GrayImage blur(const GrayImage& img, int k)
{
    if (k != 3 && k != 5) { throw InvalidArgument("blur: kernel size must be 3 or 5"); }
    const long w = static_cast<long>(img.width());
    const long h = static_cast<long>(img.height());
    const long r = k / 2;
    const double norm = 1.0 / static_cast<double>(k * k);
    std::vector<double> out(img.size());
    for (long y = 0; y < h; ++y) {
        for (long x = 0; x < w; ++x) {
            double sum = 0.0;
            for (long dy = -r; dy <= r; ++dy) {
                const long sy = std::clamp(y + dy, 0L, h - 1);
                for (long dx = -r; dx <= r; ++dx) {
                    const long sx = std::clamp(x + dx, 0L, w - 1);
                    sum += img(static_cast<std::size_t>(sx), static_cast<std::size_t>(sy));
                }
            }
            out[static_cast<std::size_t>(y * w + x)] = std::clamp(sum * norm, 0.0, 1.0);
        }
    }
    return GrayImage(img.width(), img.height(), img.mm_per_pixel(), std::move(out));
}

} // namespace fishweight

#endif // FISHWEIGHT_IMAGING_HPP
