#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace graspmap {

/// Interleaved 8-bit RGB raster.
class ImageU8 {
public:
    ImageU8() = default;
    ImageU8(int width, int height, std::array<std::uint8_t, 3> fill = {0, 0, 0});

    int width() const { return width_; }
    int height() const { return height_; }

    const std::uint8_t* pixel(int x, int y) const {
        return &data_[(static_cast<std::size_t>(y) * width_ + x) * 3];
    }
    std::uint8_t* pixel(int x, int y) {
        return &data_[(static_cast<std::size_t>(y) * width_ + x) * 3];
    }

    const std::vector<std::uint8_t>& data() const { return data_; }
    std::vector<std::uint8_t>& data() { return data_; }

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> data_;
};

/// 2D affine map p -> A p + b.
struct Affine {
    double a00 = 1.0, a01 = 0.0, b0 = 0.0;
    double a10 = 0.0, a11 = 1.0, b1 = 0.0;

    std::array<double, 2> apply(double x, double y) const {
        return {a00 * x + a01 * y + b0, a10 * x + a11 * y + b1};
    }

    /// Rotation by `deg` about `center`, then uniform `scale` about it, then
    /// translation — the augmentation transform.
    static Affine rotate_scale_translate(double deg, double scale,
                                         double cx, double cy,
                                         double tx, double ty);
    Affine inverse() const;
};

/// Resamples `src` through the inverse of `fwd` with bilinear interpolation
/// and zero padding, onto a canvas of the same size.
ImageU8 warp_affine(const ImageU8& src, const Affine& fwd);

/// Bilinear resize with the pure-scale convention src = dst / scale, matching
/// the affine applied to labels.
ImageU8 resize_bilinear(const ImageU8& src, int out_width, int out_height);

ImageU8 crop(const ImageU8& src, int x0, int y0, int width, int height);

// PNG io. Grayscale and palette inputs are expanded to RGB; alpha is dropped.
ImageU8 read_png(const std::string& path);
void write_png(const std::string& path, const ImageU8& image);
void write_png_gray(const std::string& path, const std::vector<std::uint8_t>& pixels,
                    int width, int height);

} // namespace graspmap
