#pragma once

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include "bidpo/common.hpp"

namespace bidpo {

/// 8-bit value for a cell in [-1, 1] (linear map, -1 -> 0, 1 -> 255).
inline std::uint8_t to_byte(double v) {
    return static_cast<std::uint8_t>(std::lround((std::clamp(v, -1.0, 1.0) + 1.0) * 127.5));
}

/// Writes an RGB PNG, upscaling each cell to `scale` x `scale` pixels.
inline void write_png(const Image& img, const std::string& path, int scale = 8) {
    if (img.shape.channels != 3) throw ShapeMismatch("png: expects 3 channels");
    std::unique_ptr<FILE, int (*)(FILE*)> fp(std::fopen(path.c_str(), "wb"), &std::fclose);
    if (!fp) throw FormatError(FormatError::Kind::io, "png: cannot open " + path);
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw FormatError(FormatError::Kind::io, "png: cannot allocate writer");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw FormatError(FormatError::Kind::io, "png: write failed for " + path);
    }
    const int side = img.shape.grid * scale;
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(side), static_cast<png_uint_32>(side), 8, PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<png_byte> row(static_cast<std::size_t>(side * 3));
    for (int y = 0; y < side; ++y) {
        for (int x = 0; x < side; ++x)
            for (int ch = 0; ch < 3; ++ch)
                row[static_cast<std::size_t>(x * 3 + ch)] = to_byte(img.at(y / scale, x / scale, ch));
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

}  // namespace bidpo
