#include "graspmap/image.hpp"

#include <cmath>
#include <cstdio>
#include <memory>
#include <stdexcept>

#include <png.h>

#include "graspmap/errors.hpp"

namespace graspmap {

ImageU8::ImageU8(int width, int height, std::array<std::uint8_t, 3> fill)
    : width_(width), height_(height),
      data_(static_cast<std::size_t>(width) * height * 3) {
    if (width < 1 || height < 1) {
        throw std::invalid_argument("ImageU8: dimensions must be positive");
    }
    for (std::size_t i = 0; i < data_.size(); i += 3) {
        data_[i] = fill[0];
        data_[i + 1] = fill[1];
        data_[i + 2] = fill[2];
    }
}

Affine Affine::rotate_scale_translate(double deg, double scale,
                                      double cx, double cy,
                                      double tx, double ty) {
    const double t = deg * M_PI / 180.0;
    const double c = std::cos(t) * scale;
    const double s = std::sin(t) * scale;
    Affine m;
    m.a00 = c;
    m.a01 = -s;
    m.a10 = s;
    m.a11 = c;
    m.b0 = cx - c * cx + s * cy + tx;
    m.b1 = cy - s * cx - c * cy + ty;
    return m;
}

Affine Affine::inverse() const {
    const double det = a00 * a11 - a01 * a10;
    if (std::abs(det) < 1e-12) {
        throw std::invalid_argument("Affine::inverse: singular transform");
    }
    Affine inv;
    inv.a00 = a11 / det;
    inv.a01 = -a01 / det;
    inv.a10 = -a10 / det;
    inv.a11 = a00 / det;
    inv.b0 = -(inv.a00 * b0 + inv.a01 * b1);
    inv.b1 = -(inv.a10 * b0 + inv.a11 * b1);
    return inv;
}

namespace {

std::array<double, 3> sample_bilinear(const ImageU8& src, double x, double y) {
    if (x < -1.0 || y < -1.0 || x > src.width() || y > src.height()) {
        return {0.0, 0.0, 0.0};
    }
    const int x0 = static_cast<int>(std::floor(x));
    const int y0 = static_cast<int>(std::floor(y));
    const double fx = x - x0;
    const double fy = y - y0;
    std::array<double, 3> out{0.0, 0.0, 0.0};
    for (int dy = 0; dy <= 1; ++dy) {
        for (int dx = 0; dx <= 1; ++dx) {
            const int xi = x0 + dx;
            const int yi = y0 + dy;
            if (xi < 0 || yi < 0 || xi >= src.width() || yi >= src.height()) continue;
            const double wgt = (dx ? fx : 1.0 - fx) * (dy ? fy : 1.0 - fy);
            const std::uint8_t* p = src.pixel(xi, yi);
            out[0] += wgt * p[0];
            out[1] += wgt * p[1];
            out[2] += wgt * p[2];
        }
    }
    return out;
}

std::uint8_t to_u8(double v) {
    return static_cast<std::uint8_t>(std::lround(std::min(255.0, std::max(0.0, v))));
}

} // namespace

ImageU8 warp_affine(const ImageU8& src, const Affine& fwd) {
    const Affine inv = fwd.inverse();
    ImageU8 out(src.width(), src.height());
    for (int y = 0; y < out.height(); ++y) {
        for (int x = 0; x < out.width(); ++x) {
            const auto [sx, sy] = inv.apply(x, y);
            const auto rgb = sample_bilinear(src, sx, sy);
            std::uint8_t* p = out.pixel(x, y);
            p[0] = to_u8(rgb[0]);
            p[1] = to_u8(rgb[1]);
            p[2] = to_u8(rgb[2]);
        }
    }
    return out;
}

ImageU8 resize_bilinear(const ImageU8& src, int out_width, int out_height) {
    ImageU8 out(out_width, out_height);
    const double sx = static_cast<double>(src.width()) / out_width;
    const double sy = static_cast<double>(src.height()) / out_height;
    for (int y = 0; y < out_height; ++y) {
        for (int x = 0; x < out_width; ++x) {
            const auto rgb = sample_bilinear(src, x * sx, y * sy);
            std::uint8_t* p = out.pixel(x, y);
            p[0] = to_u8(rgb[0]);
            p[1] = to_u8(rgb[1]);
            p[2] = to_u8(rgb[2]);
        }
    }
    return out;
}

ImageU8 crop(const ImageU8& src, int x0, int y0, int width, int height) {
    if (x0 < 0 || y0 < 0 || x0 + width > src.width() || y0 + height > src.height()) {
        throw std::invalid_argument("crop: window outside image");
    }
    ImageU8 out(width, height);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const std::uint8_t* s = src.pixel(x0 + x, y0 + y);
            std::uint8_t* d = out.pixel(x, y);
            d[0] = s[0];
            d[1] = s[1];
            d[2] = s[2];
        }
    }
    return out;
}

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

} // namespace

ImageU8 read_png(const std::string& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw IoError("read_png: cannot open " + path);

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("read_png: png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw IoError("read_png: png_create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("read_png: failed to decode " + path);
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);

    png_uint_32 width = png_get_image_width(png, info);
    png_uint_32 height = png_get_image_height(png, info);
    const int color_type = png_get_color_type(png, info);
    const int bit_depth = png_get_bit_depth(png, info);

    if (bit_depth == 16) png_set_strip_16(png);
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA) {
        png_set_gray_to_rgb(png);
    }
    png_set_strip_alpha(png);
    png_read_update_info(png, info);

    ImageU8 image(static_cast<int>(width), static_cast<int>(height));
    std::vector<png_bytep> rows(height);
    for (png_uint_32 y = 0; y < height; ++y) {
        rows[y] = image.pixel(0, static_cast<int>(y));
    }
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return image;
}

void write_png(const std::string& path, const ImageU8& image) {
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw IoError("write_png: cannot open " + path);

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("write_png: png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw IoError("write_png: png_create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("write_png: failed to encode " + path);
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, image.width(), image.height(), 8, PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<png_bytep> rows(image.height());
    for (int y = 0; y < image.height(); ++y) {
        rows[y] = const_cast<png_bytep>(image.pixel(0, y));
    }
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

void write_png_gray(const std::string& path, const std::vector<std::uint8_t>& pixels,
                    int width, int height) {
    if (pixels.size() != static_cast<std::size_t>(width) * height) {
        throw std::invalid_argument("write_png_gray: size mismatch");
    }
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw IoError("write_png_gray: cannot open " + path);

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("write_png_gray: png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw IoError("write_png_gray: png_create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("write_png_gray: failed to encode " + path);
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, width, height, 8, PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<png_bytep> rows(height);
    for (int y = 0; y < height; ++y) {
        rows[y] = const_cast<png_bytep>(&pixels[static_cast<std::size_t>(y) * width]);
    }
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

} // namespace graspmap
