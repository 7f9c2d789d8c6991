#ifndef FISHWEIGHT_IMAGE_IO_HPP
#define FISHWEIGHT_IMAGE_IO_HPP

// 8-bit grayscale PGM (P5) and PNG reading/writing. Calibration never comes
// from the file; callers pass mm-per-pixel explicitly.

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <csetjmp>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "fishweight/error.hpp"
#include "fishweight/imaging.hpp"
#include "fishweight/text.hpp"

namespace fishweight::io {

/// Raw 8-bit single-channel pixels as stored on disk.
struct Bytes {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<std::uint8_t> data;
};

namespace detail {

inline std::string lower_extension(const std::filesystem::path& path)
{
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return ext;
}

inline Bytes decode_pgm(const std::string& buf, const std::string& name)
{
    std::size_t pos = 0;
    auto skip_space = [&] {
        while (pos < buf.size()) {
            if (buf[pos] == '#') {
                while (pos < buf.size() && buf[pos] != '\n') { ++pos; }
            } else if (std::isspace(static_cast<unsigned char>(buf[pos]))) {
                ++pos;
            } else {
                break;
            }
        }
    };
    auto read_int = [&]() -> long {
        skip_space();
        long v = 0;
        std::size_t start = pos;
        while (pos < buf.size() && std::isdigit(static_cast<unsigned char>(buf[pos]))) {
            v = v * 10 + (buf[pos] - '0');
            if (v > 1'000'000) { throw ParseError(name + ": PGM header value too large"); }
            ++pos;
        }
        if (pos == start) { throw ParseError(name + ": malformed PGM header"); }
        return v;
    };
    if (buf.size() < 2 || buf[0] != 'P' || buf[1] != '5') { throw ParseError(name + ": not a binary PGM (P5)"); }
    pos = 2;
    const long w = read_int();
    const long h = read_int();
    const long maxval = read_int();
    if (w <= 0 || h <= 0) { throw ParseError(name + ": PGM has zero size"); }
    if (maxval <= 0 || maxval > 255) { throw ParseError(name + ": only 8-bit PGM is supported"); }
    if (pos >= buf.size() || !std::isspace(static_cast<unsigned char>(buf[pos]))) {
        throw ParseError(name + ": malformed PGM header");
    }
    ++pos;
    const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
    if (buf.size() - pos < n) { throw ParseError(name + ": truncated PGM data"); }
    Bytes out{static_cast<std::size_t>(w), static_cast<std::size_t>(h), {}};
    out.data.assign(buf.begin() + static_cast<long>(pos), buf.begin() + static_cast<long>(pos + n));
    if (maxval != 255) {
        for (auto& v : out.data) { v = static_cast<std::uint8_t>(std::lround(v * 255.0 / static_cast<double>(maxval))); }
    }
    return out;
}

inline std::string encode_pgm(const Bytes& img)
{
    std::string out = "P5\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
    out.append(reinterpret_cast<const char*>(img.data.data()), img.data.size());
    return out;
}

struct FileCloser {
    void operator()(std::FILE* f) const noexcept { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

inline Bytes read_png(const std::filesystem::path& path)
{
    FilePtr fp(std::fopen(path.string().c_str(), "rb"));
    if (!fp) { throw Error("cannot open " + path.string()); }
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) { throw Error("libpng initialization failed"); }
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw Error("libpng initialization failed");
    }
    Bytes out;
    std::vector<png_bytep> rows;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw ParseError(path.string() + ": invalid PNG");
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);
    const png_byte color = png_get_color_type(png, info);
    const png_byte depth = png_get_bit_depth(png, info);
    if (depth == 16) { png_set_strip_16(png); }
    if (color == PNG_COLOR_TYPE_PALETTE) { png_set_palette_to_rgb(png); }
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) { png_set_expand_gray_1_2_4_to_8(png); }
    if (png_get_valid(png, info, PNG_INFO_tRNS)) { png_set_tRNS_to_alpha(png); }
    if (color & PNG_COLOR_MASK_ALPHA || png_get_valid(png, info, PNG_INFO_tRNS)) { png_set_strip_alpha(png); }
    if (color == PNG_COLOR_TYPE_RGB || color == PNG_COLOR_TYPE_RGB_ALPHA || color == PNG_COLOR_TYPE_PALETTE) {
        png_set_rgb_to_gray_fixed(png, 1, -1, -1);
    }
    png_read_update_info(png, info);
    out.width = png_get_image_width(png, info);
    out.height = png_get_image_height(png, info);
    if (png_get_rowbytes(png, info) != out.width) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw ParseError(path.string() + ": unsupported PNG layout");
    }
    out.data.resize(out.width * out.height);
    rows.resize(out.height);
    for (std::size_t y = 0; y < out.height; ++y) { rows[y] = out.data.data() + y * out.width; }
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return out;
}

inline void write_png(const std::filesystem::path& path, const Bytes& img)
{
    auto tmp = path;
    tmp += ".tmp";
    {
        FilePtr fp(std::fopen(tmp.string().c_str(), "wb"));
        if (!fp) { throw Error("cannot write " + tmp.string()); }
        png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
        if (!png) { throw Error("libpng initialization failed"); }
        png_infop info = png_create_info_struct(png);
        if (!info) {
            png_destroy_write_struct(&png, nullptr);
            throw Error("libpng initialization failed");
        }
        std::vector<png_bytep> rows(img.height);
        if (setjmp(png_jmpbuf(png))) {
            png_destroy_write_struct(&png, &info);
            throw Error("PNG encoding failed for " + path.string());
        }
        png_init_io(png, fp.get());
        png_set_IHDR(png, info, static_cast<png_uint_32>(img.width), static_cast<png_uint_32>(img.height), 8,
                     PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
        for (std::size_t y = 0; y < img.height; ++y) {
            rows[y] = const_cast<png_bytep>(img.data.data() + y * img.width);
        }
        png_set_rows(png, info, rows.data());
        png_write_png(png, info, PNG_TRANSFORM_IDENTITY, nullptr);
        png_destroy_write_struct(&png, &info);
    }
    std::filesystem::rename(tmp, path);
}

} // namespace detail

/// Reads an 8-bit grayscale PGM or PNG, chosen by file extension.
inline Bytes read_bytes(const std::filesystem::path& path)
{
    const auto ext = detail::lower_extension(path);
    if (ext == ".pgm") { return detail::decode_pgm(text::read_file(path), path.string()); }
    if (ext == ".png") { return detail::read_png(path); }
    throw InvalidArgument(path.string() + ": unsupported image format (expected .pgm or .png)");
}

inline void write_bytes(const std::filesystem::path& path, const Bytes& img)
{
    const auto ext = detail::lower_extension(path);
    if (ext == ".pgm") {
        text::write_file_atomic(path, detail::encode_pgm(img));
    } else if (ext == ".png") {
        detail::write_png(path, img);
    } else {
        throw InvalidArgument(path.string() + ": unsupported image format (expected .pgm or .png)");
    }
}

/// Any nonzero byte is foreground.
inline MaskImage read_mask(const std::filesystem::path& path, double mm_per_pixel)
{
    auto raw = read_bytes(path);
    std::vector<std::uint8_t> px(raw.data.size());
    std::transform(raw.data.begin(), raw.data.end(), px.begin(), [](std::uint8_t v) { return std::uint8_t(v != 0); });
    return MaskImage(raw.width, raw.height, mm_per_pixel, std::move(px));
}

/// Byte / 255 into [0,1].
inline GrayImage read_gray(const std::filesystem::path& path, double mm_per_pixel)
{
    auto raw = read_bytes(path);
    std::vector<double> px(raw.data.size());
    std::transform(raw.data.begin(), raw.data.end(), px.begin(), [](std::uint8_t v) { return v / 255.0; });
    return GrayImage(raw.width, raw.height, mm_per_pixel, std::move(px));
}

/// Foreground is written as 255.
inline void write_mask(const std::filesystem::path& path, const MaskImage& m)
{
    Bytes raw{m.width(), m.height(), std::vector<std::uint8_t>(m.size())};
    std::transform(m.pixels().begin(), m.pixels().end(), raw.data.begin(),
                   [](std::uint8_t v) { return static_cast<std::uint8_t>(v ? 255 : 0); });
    write_bytes(path, raw);
}

inline void write_gray(const std::filesystem::path& path, const GrayImage& img)
{
    Bytes raw{img.width(), img.height(), std::vector<std::uint8_t>(img.size())};
    std::transform(img.pixels().begin(), img.pixels().end(), raw.data.begin(),
                   [](double v) { return static_cast<std::uint8_t>(std::lround(v * 255.0)); });
    write_bytes(path, raw);
}

} // namespace fishweight::io

#endif // FISHWEIGHT_IMAGE_IO_HPP
