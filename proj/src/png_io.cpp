#include "clr/png_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <stdexcept>
#include <vector>

namespace clr {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

Tensor read_png(const std::string& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw std::runtime_error("cannot open image: " + path);

    png_byte header[8];
    if (std::fread(header, 1, 8, fp.get()) != 8 || png_sig_cmp(header, 0, 8) != 0)
        throw std::runtime_error("not a PNG file: " + path);

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw std::runtime_error("png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw std::runtime_error("png_create_info_struct failed");
    }
    std::vector<png_bytep> row_ptrs;
    std::vector<png_byte> pixels;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error("failed to decode PNG: " + path);
    }

    png_init_io(png, fp.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);

    // normalize everything to 8-bit RGB
    png_set_strip_16(png);
    png_set_palette_to_rgb(png);
    if (png_get_color_type(png, info) == PNG_COLOR_TYPE_GRAY &&
        png_get_bit_depth(png, info) < 8)
        png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (png_get_color_type(png, info) == PNG_COLOR_TYPE_GRAY ||
        png_get_color_type(png, info) == PNG_COLOR_TYPE_GRAY_ALPHA)
        png_set_gray_to_rgb(png);
    png_set_strip_alpha(png);
    png_read_update_info(png, info);

    const int w = static_cast<int>(png_get_image_width(png, info));
    const int h = static_cast<int>(png_get_image_height(png, info));
    const std::size_t stride = png_get_rowbytes(png, info);
    pixels.resize(stride * static_cast<std::size_t>(h));
    row_ptrs.resize(static_cast<std::size_t>(h));
    for (int y = 0; y < h; ++y)
        row_ptrs[static_cast<std::size_t>(y)] = pixels.data() + stride * static_cast<std::size_t>(y);
    png_read_image(png, row_ptrs.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    Tensor out({3, h, w});
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c)
                out.data()[(static_cast<std::int64_t>(c) * h + y) * w + x] =
                    static_cast<float>(pixels[stride * static_cast<std::size_t>(y) +
                                              static_cast<std::size_t>(x) * 3 +
                                              static_cast<std::size_t>(c)]) /
                    255.0f;
    return out;
}

void write_png(const Tensor& image, const std::string& path) {
    if (image.rank() != 3 || image.dim(0) != 3)
        throw std::invalid_argument("write_png: image must be 3xHxW");
    const int h = image.dim(1);
    const int w = image.dim(2);

    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw std::runtime_error("cannot open image for writing: " + path);

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw std::runtime_error("png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw std::runtime_error("png_create_info_struct failed");
    }
    std::vector<png_byte> row(static_cast<std::size_t>(w) * 3);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error("failed to encode PNG: " + path);
    }

    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), 8,
                 PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c) {
                const float v =
                    image.data()[(static_cast<std::int64_t>(c) * h + y) * w + x];
                row[static_cast<std::size_t>(x) * 3 + static_cast<std::size_t>(c)] =
                    static_cast<png_byte>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
            }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

Tensor resize_bilinear(const Tensor& image, int side) {
    if (image.rank() != 3) throw std::invalid_argument("resize_bilinear: image must be CxHxW");
    const int c = image.dim(0), h = image.dim(1), w = image.dim(2);
    if (h == side && w == side) return image;
    Tensor out({c, side, side});
    const float sy = static_cast<float>(h) / static_cast<float>(side);
    const float sx = static_cast<float>(w) / static_cast<float>(side);
    for (int ch = 0; ch < c; ++ch) {
        const float* src = image.data() + static_cast<std::int64_t>(ch) * h * w;
        float* dst = out.data() + static_cast<std::int64_t>(ch) * side * side;
        for (int y = 0; y < side; ++y) {
            const float fy = std::clamp((static_cast<float>(y) + 0.5f) * sy - 0.5f, 0.0f,
                                        static_cast<float>(h - 1));
            const int y0 = static_cast<int>(fy);
            const int y1 = std::min(y0 + 1, h - 1);
            const float wy = fy - static_cast<float>(y0);
            for (int x = 0; x < side; ++x) {
                const float fx = std::clamp((static_cast<float>(x) + 0.5f) * sx - 0.5f, 0.0f,
                                            static_cast<float>(w - 1));
                const int x0 = static_cast<int>(fx);
                const int x1 = std::min(x0 + 1, w - 1);
                const float wx = fx - static_cast<float>(x0);
                const float top = src[y0 * w + x0] * (1.0f - wx) + src[y0 * w + x1] * wx;
                const float bot = src[y1 * w + x0] * (1.0f - wx) + src[y1 * w + x1] * wx;
                dst[y * side + x] = top * (1.0f - wy) + bot * wy;
            }
        }
    }
    return out;
}

}  // namespace clr
