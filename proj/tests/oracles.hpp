// Independent test oracles. These deliberately re-derive results from first
// principles (explicit covariance inversion, rasterization, direct affine
// application) instead of calling the library paths they check.
#pragma once

#include <array>
#include <cmath>
#include <random>
#include <vector>

#include "graspmap/geometry.hpp"
#include "graspmap/types.hpp"

namespace oracle {

using graspmap::GraspRectangle;
using graspmap::GridSpec;
using graspmap::Vec2;

/// Mixture density via an explicitly inverted world-frame covariance
/// Sigma = R diag(sy^2, sx^2) R^T (sx spans the plate, sy the opening).
inline double mixture_density(const GraspRectangle& rect, double sigma_y, double px,
                              double py) {
    const double t = rect.theta * M_PI / 180.0;
    const double ux = std::cos(t), uy = std::sin(t);
    const double sigma_x = rect.h / graspmap::kSigmaXDivisor;
    const double sy2 = sigma_y * sigma_y;
    const double sx2 = sigma_x * sigma_x;
    // World covariance from the eigen decomposition.
    const double cxx = sy2 * ux * ux + sx2 * uy * uy;
    const double cxy = (sy2 - sx2) * ux * uy;
    const double cyy = sy2 * uy * uy + sx2 * ux * ux;
    const double det = cxx * cyy - cxy * cxy;
    const double ixx = cyy / det, ixy = -cxy / det, iyy = cxx / det;
    const double amp = 1.0 / (2.0 * M_PI * 2.0 * sigma_x * sigma_y);

    double total = 0.0;
    for (double side : {-1.0, 1.0}) {
        const double mx = rect.x + side * (rect.w / 2.0) * ux;
        const double my = rect.y + side * (rect.w / 2.0) * uy;
        const double dx = px - mx, dy = py - my;
        const double q = dx * dx * ixx + 2.0 * dx * dy * ixy + dy * dy * iyy;
        total += amp * std::exp(-0.5 * q);
    }
    return total;
}

/// Per-pixel evaluation of the grasp mixture, peak-rescaled to 1.
inline std::vector<double> render_map(const GraspRectangle& rect, const GridSpec& grid) {
    const double sigma_y = graspmap::kSigmaYAt128 * grid.width / 128.0;
    std::vector<double> map(static_cast<std::size_t>(grid.width) * grid.height);
    double peak = 0.0;
    for (int y = 0; y < grid.height; ++y) {
        for (int x = 0; x < grid.width; ++x) {
            const double v = mixture_density(rect, sigma_y, x, y);
            map[static_cast<std::size_t>(y) * grid.width + x] = v;
            peak = std::max(peak, v);
        }
    }
    for (double& v : map) v /= peak;
    return map;
}

/// Point-in-oriented-rectangle via the local frame.
inline bool inside_rect(const GraspRectangle& r, double px, double py) {
    const double t = r.theta * M_PI / 180.0;
    const double ux = std::cos(t), uy = std::sin(t);
    const double dx = px - r.x, dy = py - r.y;
    const double a = dx * ux + dy * uy;    // along w
    const double b = -dx * uy + dy * ux;   // along h
    return std::abs(a) <= r.w / 2.0 && std::abs(b) <= r.h / 2.0;
}

/// Rasterized IoU at `subdiv` samples per unit length, centered sampling over
/// the union bounding box.
inline double rasterized_iou(const GraspRectangle& a, const GraspRectangle& b,
                             int subdiv = 10) {
    double lo_x = 1e30, lo_y = 1e30, hi_x = -1e30, hi_y = -1e30;
    for (const GraspRectangle* r : {&a, &b}) {
        for (const Vec2& c : graspmap::rectangle_to_corners(*r)) {
            lo_x = std::min(lo_x, c.x);
            lo_y = std::min(lo_y, c.y);
            hi_x = std::max(hi_x, c.x);
            hi_y = std::max(hi_y, c.y);
        }
    }
    const double step = 1.0 / subdiv;
    long long inter = 0, uni = 0;
    for (double y = lo_y + step / 2.0; y <= hi_y; y += step) {
        for (double x = lo_x + step / 2.0; x <= hi_x; x += step) {
            const bool ia = inside_rect(a, x, y);
            const bool ib = inside_rect(b, x, y);
            inter += (ia && ib) ? 1 : 0;
            uni += (ia || ib) ? 1 : 0;
        }
    }
    return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

/// Random valid rectangle whose component means sit >= 3 sigma inside the
/// grid and whose plate blobs stay separable after binarization.
inline GraspRectangle random_roundtrip_rect(std::mt19937_64& rng, const GridSpec& grid) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    while (true) {
        const double h = 14.0 + 26.0 * unit(rng);
        const double w = 20.0 + 36.0 * unit(rng);
        const double theta = 180.0 * unit(rng);
        const double sigma_y = graspmap::kSigmaYAt128 * grid.width / 128.0;
        const double sigma_x = h / graspmap::kSigmaXDivisor;
        const double margin = 3.0 * std::max(sigma_x, sigma_y) + 1.0;
        const double x = margin + (grid.width - 1 - 2 * margin) * unit(rng);
        const double y = margin + (grid.height - 1 - 2 * margin) * unit(rng);
        GraspRectangle rect(x, y, theta, h, w);
        const double t = theta * M_PI / 180.0;
        const double ox = std::abs((w / 2.0) * std::cos(t));
        const double oy = std::abs((w / 2.0) * std::sin(t));
        if (x - ox < margin || x + ox > grid.width - 1 - margin || y - oy < margin ||
            y + oy > grid.height - 1 - margin) {
            continue;
        }
        return rect;
    }
}

inline double angle_error_180(double a, double b) {
    double d = std::fmod(std::abs(a - b), 180.0);
    return std::min(d, 180.0 - d);
}

} // namespace oracle
