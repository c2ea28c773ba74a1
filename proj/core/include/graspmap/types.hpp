#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "graspmap/errors.hpp"

namespace graspmap {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    double dot(const Vec2& o) const { return x * o.x + y * o.y; }
    double norm() const { return std::hypot(x, y); }
};

inline double deg_to_rad(double deg) { return deg * (M_PI / 180.0); }
inline double rad_to_deg(double rad) { return rad * (180.0 / M_PI); }

/// Folds an angle in degrees into [0, 180). A grasp and its 180° flip are
/// the same grasp, so orientations are always stored this way.
inline double normalize_angle_180(double deg) {
    double a = std::fmod(deg, 180.0);
    if (a < 0.0) a += 180.0;
    if (a == 180.0) a = 0.0;  // fmod may return -0 -> +180 after the add
    return a;
}

/// 5D grasp configuration (x, y, theta, h, w) in image pixel coordinates.
/// (x, y) is the rectangle center, theta its orientation in degrees relative
/// to the horizontal axis, h the gripper-plate length and w the gripper
/// opening. theta is normalized into [0, 180) on construction.
struct GraspRectangle {
    double x = 0.0;
    double y = 0.0;
    double theta = 0.0;  // degrees, [0, 180)
    double h = 1.0;      // pixels, > 0
    double w = 1.0;      // pixels, > 0

    GraspRectangle() = default;
    GraspRectangle(double x_, double y_, double theta_, double h_, double w_)
        : x(x_), y(y_), theta(normalize_angle_180(theta_)), h(h_), w(w_) {
        if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(theta_) ||
            !std::isfinite(h) || !std::isfinite(w)) {
            throw std::invalid_argument("GraspRectangle: non-finite field");
        }
        if (h <= 0.0 || w <= 0.0) {
            throw std::invalid_argument("GraspRectangle: extents must be > 0");
        }
    }

    double area() const { return h * w; }
    Vec2 center() const { return {x, y}; }
};

/// One oriented bivariate normal of a grasp belief mixture. The mean sits at
/// a gripper-plate center. sigma_x spans the plate direction (the long axis,
/// proportional to plate length h), sigma_y the opening direction between the
/// two plates; theta is the grasp orientation the rotation is derived from.
struct GaussianComponent {
    Vec2 mu;
    double sigma_x = 1.0;  // pixels, > 0, along the plate
    double sigma_y = 1.0;  // pixels, > 0, along the opening
    double theta = 0.0;    // degrees

    GaussianComponent() = default;
    GaussianComponent(Vec2 mu_, double sx, double sy, double theta_)
        : mu(mu_), sigma_x(sx), sigma_y(sy), theta(theta_) {
        if (sigma_x <= 0.0 || sigma_y <= 0.0) {
            throw std::invalid_argument("GaussianComponent: sigmas must be > 0");
        }
    }
};

/// Pixel grid the belief maps are rendered on.
struct GridSpec {
    int width = 128;
    int height = 128;

    GridSpec() = default;
    GridSpec(int w, int h) : width(w), height(h) {
        if (width < 8 || height < 8) {
            throw std::invalid_argument("GridSpec: grid must be at least 8x8");
        }
    }
};

/// Dense non-negative confidence grid over pixel centers, row-major.
/// Maps rendered from a rectangle are rescaled to peak 1.0; predicted maps
/// are clamped to [0, 1] by the network output activation.
class BeliefMap {
public:
    BeliefMap() = default;
    BeliefMap(int width, int height, double fill = 0.0)
        : width_(width), height_(height),
          values_(static_cast<std::size_t>(width) * height, fill) {
        if (width < 1 || height < 1) {
            throw std::invalid_argument("BeliefMap: dimensions must be positive");
        }
    }

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t size() const { return values_.size(); }

    double at(int x, int y) const { return values_[idx(x, y)]; }
    double& at(int x, int y) { return values_[idx(x, y)]; }

    const std::vector<double>& values() const { return values_; }
    std::vector<double>& values() { return values_; }

    bool same_shape(const BeliefMap& o) const {
        return width_ == o.width_ && height_ == o.height_;
    }

    double max_value() const {
        double m = 0.0;
        for (double v : values_) m = std::max(m, v);
        return m;
    }

    double total_mass() const {
        double s = 0.0;
        for (double v : values_) s += v;
        return s;
    }

private:
    std::size_t idx(int x, int y) const {
        return static_cast<std::size_t>(y) * width_ + x;
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<double> values_;
};

/// Set of M simultaneously predicted belief maps for one input.
struct HypothesisSet {
    std::vector<BeliefMap> maps;

    int num_hypotheses() const { return static_cast<int>(maps.size()); }
};

} // namespace graspmap
