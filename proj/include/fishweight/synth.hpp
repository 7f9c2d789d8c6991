#ifndef FISHWEIGHT_SYNTH_HPP
#define FISHWEIGHT_SYNTH_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "fishweight/dataset.hpp"
#include "fishweight/error.hpp"
#include "fishweight/imaging.hpp"
#include "fishweight/random.hpp"

namespace fishweight {

/// Generator settings for allometric area-weight samples.
struct SynthConfig {
    double a = 0.124;
    double b = 1.55;
    std::size_t n = 200;
    double area_min = 100.0;
    double area_max = 800.0;
    /// Std of the multiplicative log-normal weight noise.
    double ln_noise_sigma = 0.0;
    double outlier_fraction = 0.0;
    std::vector<double> outlier_multipliers{0.5, 2.0};
    std::uint64_t seed = 0;

    void validate() const
    {
        if (!(a > 0.0) || !(b > 0.0)) { throw InvalidArgument("synth: a and b must be positive"); }
        if (!(area_min > 0.0) || !(area_max >= area_min)) { throw InvalidArgument("synth: need 0 < area_min <= area_max"); }
        if (!(ln_noise_sigma >= 0.0)) { throw InvalidArgument("synth: ln_noise_sigma must be non-negative"); }
        if (!(outlier_fraction >= 0.0 && outlier_fraction < 1.0)) {
            throw InvalidArgument("synth: outlier_fraction must lie in [0, 1)");
        }
        if (outlier_fraction > 0.0 && outlier_multipliers.empty()) {
            throw InvalidArgument("synth: outlier_multipliers must not be empty");
        }
        for (double m : outlier_multipliers) {
            if (!(m > 0.0)) { throw InvalidArgument("synth: outlier multipliers must be positive"); }
        }
    }
};

struct SynthSamples {
    Dataset dataset;
    /// True for samples whose weight was corrupted by an outlier multiplier.
    std::vector<bool> is_outlier;
};

namespace detail {

inline std::string padded_id(const char* prefix, std::size_t i, std::size_t n)
{
    std::string num = std::to_string(i + 1);
    const std::size_t width = std::max<std::size_t>(4, std::to_string(n).size());
    if (num.size() < width) { num.insert(0, width - num.size(), '0'); }
    return prefix + num;
}

} // namespace detail

/**
 * Areas ~ U(area_min, area_max), weights a·S^b·exp(ε) with ε ~ N(0, σ²).
 * Exactly round(outlier_fraction·n) samples, chosen by a seeded partial
 * shuffle, have their weight multiplied by a uniformly chosen multiplier.
 */
inline SynthSamples gen_samples(const SynthConfig& cfg)
{
    cfg.validate();
    Rng rng(cfg.seed);
    SynthSamples out;
    out.dataset.name = "synthetic";
    out.dataset.samples.reserve(cfg.n);
    for (std::size_t i = 0; i < cfg.n; ++i) {
        const double area = rng.uniform(cfg.area_min, cfg.area_max);
        const double eps = rng.normal();
        double weight = cfg.a * std::pow(area, cfg.b);
        if (cfg.ln_noise_sigma > 0.0) { weight *= std::exp(cfg.ln_noise_sigma * eps); }
        out.dataset.samples.push_back(Sample{detail::padded_id("s", i, cfg.n), area, weight, "synthetic", false});
    }
    out.is_outlier.assign(cfg.n, false);
    const auto n_out = static_cast<std::size_t>(std::floor(cfg.outlier_fraction * static_cast<double>(cfg.n) + 0.5));
    std::vector<std::size_t> order(cfg.n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t k = 0; k < n_out; ++k) {
        std::swap(order[k], order[k + rng.below(cfg.n - k)]);
        const std::size_t idx = order[k];
        const double mult = cfg.outlier_multipliers[rng.below(cfg.outlier_multipliers.size())];
        out.dataset.samples[idx].weight *= mult;
        out.is_outlier[idx] = true;
    }
    return out;
}

/// Fish-like silhouette geometry.
struct SilhouetteSpec {
    double body_length = 300.0;   // mm
    double aspect = 0.35;         // body height / length
    bool fins = true;
    double mm_per_pixel = 1.0;
    double body_exponent = 2.5;   // superellipse exponent of the body outline
    /// Whole-fish area over body-only area; 1.25 makes no-fins 20% smaller.
    double fin_area_ratio = 1.25;

    void validate() const
    {
        if (!(body_length > 0.0)) { throw InvalidArgument("silhouette: body_length must be positive"); }
        if (!(aspect > 0.0 && aspect < 1.0)) { throw InvalidArgument("silhouette: aspect must lie in (0, 1)"); }
        if (!(mm_per_pixel > 0.0)) { throw InvalidArgument("silhouette: mm_per_pixel must be positive"); }
        if (!(body_exponent > 0.0)) { throw InvalidArgument("silhouette: body_exponent must be positive"); }
        if (!(fin_area_ratio >= 1.0)) { throw InvalidArgument("silhouette: fin_area_ratio must be at least 1"); }
    }
};

/// Exact area (cm²) of the superellipse body outline: 4AB·Γ(1+1/n)²/Γ(1+2/n).
inline double body_area_cm2(const SilhouetteSpec& spec)
{
    const double half_len = spec.body_length / 2.0;
    const double half_h = spec.aspect * half_len;
    const double n = spec.body_exponent;
    const double g = std::tgamma(1.0 + 1.0 / n);
    return 4.0 * half_len * half_h * g * g / std::tgamma(1.0 + 2.0 / n) / 100.0;
}

namespace detail {

struct Pt {
    double x, y;
};

// Fin triangles in body half-axis units. Each grows by scaling about its
// first vertex, which sits on or inside the body, so larger scales contain
// smaller ones and the fins stay attached.
struct FinTemplate {
    Pt anchor;
    std::array<Pt, 2> offsets;
};

inline constexpr std::array<FinTemplate, 3> kFins{{
    {{-0.85, 0.0}, {{{-0.5, 0.8}, {-0.5, -0.8}}}},  // caudal
    {{-0.05, 0.75}, {{{0.35, 0.0}, {-0.25, 0.7}}}}, // dorsal
    {{-0.15, -0.75}, {{{0.3, 0.0}, {-0.15, -0.5}}}}, // pelvic/anal
}};

inline constexpr double kMaxFinScale = 2.5;

inline double cross(Pt o, Pt a, Pt b) { return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x); }

inline bool in_triangle(Pt p, Pt a, Pt b, Pt c)
{
    const double d1 = cross(a, b, p), d2 = cross(b, c, p), d3 = cross(c, a, p);
    const bool neg = d1 < 0 || d2 < 0 || d3 < 0;
    const bool pos = d1 > 0 || d2 > 0 || d3 > 0;
    return !(neg && pos);
}

// p in half-axis units (x / A, y / B).
inline bool in_fins(Pt p, double scale)
{
    for (const auto& f : kFins) {
        const Pt b{f.anchor.x + scale * f.offsets[0].x, f.anchor.y + scale * f.offsets[0].y};
        const Pt c{f.anchor.x + scale * f.offsets[1].x, f.anchor.y + scale * f.offsets[1].y};
        if (in_triangle(p, f.anchor, b, c)) { return true; }
    }
    return false;
}

// Keeps the 4-connected component containing `seed`.
inline void keep_component(std::vector<std::uint8_t>& px, std::size_t w, std::size_t h, std::size_t seed)
{
    std::vector<std::uint8_t> keep(px.size(), 0);
    std::vector<std::size_t> stack{seed};
    keep[seed] = 1;
    while (!stack.empty()) {
        const std::size_t i = stack.back();
        stack.pop_back();
        const std::size_t x = i % w, y = i / w;
        auto visit = [&](std::size_t j) {
            if (px[j] && !keep[j]) {
                keep[j] = 1;
                stack.push_back(j);
            }
        };
        if (x > 0) { visit(i - 1); }
        if (x + 1 < w) { visit(i + 1); }
        if (y > 0) { visit(i - w); }
        if (y + 1 < h) { visit(i + w); }
    }
    px = std::move(keep);
}

} // namespace detail

/**
 * Rasterizes a fish silhouette: a superellipse body plus, when `fins` is set,
 * caudal, dorsal and pelvic triangles. The fin size is solved by bisection so
 * that whole/body pixel area matches `fin_area_ratio`. Whole and no-fins
 * masks of the same spec share one canvas, so they overlay exactly. The
 * result is a single 4-connected component.
 */
inline MaskImage gen_silhouette(const SilhouetteSpec& spec)
{
    spec.validate();
    const double half_len = spec.body_length / 2.0 / spec.mm_per_pixel; // pixels
    const double half_h = spec.aspect * half_len;
    if (half_len < 4.0 || half_h < 2.0) { throw InvalidArgument("silhouette: too few pixels at this calibration"); }

    // Canvas bounds in half-axis units, enough for the largest fin scale.
    constexpr double x_lo = -2.2, x_hi = 1.05, y_lo = -2.1, y_hi = 2.6;
    const auto w = static_cast<std::size_t>(std::ceil((x_hi - x_lo) * half_len)) + 4;
    const auto h = static_cast<std::size_t>(std::ceil((y_hi - y_lo) * half_h)) + 4;
    const double cx = 2.0 - x_lo * half_len; // pixel coordinate of the body center
    const double cy = 2.0 + y_hi * half_h;

    std::vector<detail::Pt> unit(w * h);
    std::vector<std::uint8_t> body(w * h, 0);
    std::size_t body_count = 0;
    const double e = spec.body_exponent;
    for (std::size_t j = 0; j < h; ++j) {
        for (std::size_t i = 0; i < w; ++i) {
            const detail::Pt p{(static_cast<double>(i) + 0.5 - cx) / half_len, (cy - static_cast<double>(j) - 0.5) / half_h};
            unit[j * w + i] = p;
            if (std::pow(std::abs(p.x), e) + std::pow(std::abs(p.y), e) <= 1.0) {
                body[j * w + i] = 1;
                ++body_count;
            }
        }
    }

    auto render = [&](double scale) {
        std::vector<std::uint8_t> px = body;
        for (std::size_t k = 0; k < px.size(); ++k) {
            if (!px[k] && detail::in_fins(unit[k], scale)) { px[k] = 1; }
        }
        return px;
    };
    auto count = [](const std::vector<std::uint8_t>& px) {
        return static_cast<double>(std::count(px.begin(), px.end(), std::uint8_t{1}));
    };

    const double target = spec.fin_area_ratio * static_cast<double>(body_count);
    double lo = 0.0, hi = detail::kMaxFinScale;
    if (count(render(hi)) < target) { throw InvalidArgument("silhouette: fin_area_ratio too large"); }
    for (int it = 0; it < 40; ++it) {
        const double mid = 0.5 * (lo + hi);
        (count(render(mid)) < target ? lo : hi) = mid;
    }
    std::vector<std::uint8_t> whole = render(hi);
    if (const auto lower = render(lo); std::abs(count(lower) - target) < std::abs(count(whole) - target)) {
        whole = lower;
    }

    // Crop both variants to the whole fish's bounding box plus a margin.
    std::size_t x0 = w, x1 = 0, y0 = h, y1 = 0;
    for (std::size_t j = 0; j < h; ++j) {
        for (std::size_t i = 0; i < w; ++i) {
            if (whole[j * w + i]) {
                x0 = std::min(x0, i);
                x1 = std::max(x1, i);
                y0 = std::min(y0, j);
                y1 = std::max(y1, j);
            }
        }
    }
    const std::size_t margin = 2;
    x0 = x0 >= margin ? x0 - margin : 0;
    y0 = y0 >= margin ? y0 - margin : 0;
    x1 = std::min(w - 1, x1 + margin);
    y1 = std::min(h - 1, y1 + margin);

    const auto& src = spec.fins ? whole : body;
    const std::size_t ow = x1 - x0 + 1, oh = y1 - y0 + 1;
    std::vector<std::uint8_t> out(ow * oh);
    for (std::size_t j = 0; j < oh; ++j) {
        std::copy_n(src.begin() + static_cast<long>((y0 + j) * w + x0), ow, out.begin() + static_cast<long>(j * ow));
    }
    const auto ci = static_cast<std::size_t>(cx) - x0;
    const auto cj = static_cast<std::size_t>(cy) - y0;
    detail::keep_component(out, ow, oh, cj * ow + ci);
    return MaskImage(ow, oh, spec.mm_per_pixel, std::move(out));
}

} // namespace fishweight

#endif // FISHWEIGHT_SYNTH_HPP
