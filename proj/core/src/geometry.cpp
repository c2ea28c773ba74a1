#include "graspmap/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "graspmap/gmm.hpp"

namespace graspmap {

std::pair<GaussianComponent, GaussianComponent>
rectangle_to_components(const GraspRectangle& rect, double sigma_y) {
    const double t = deg_to_rad(rect.theta);
    const Vec2 u{std::cos(t), std::sin(t)};  // opening direction
    const Vec2 c = rect.center();
    const double sigma_x = rect.h / kSigmaXDivisor;
    const Vec2 half = u * (rect.w / 2.0);
    return {GaussianComponent(c - half, sigma_x, sigma_y, rect.theta),
            GaussianComponent(c + half, sigma_x, sigma_y, rect.theta)};
}

namespace {

struct ComponentEval {
    Vec2 mu;
    Vec2 u;  // opening direction (sigma_y axis)
    Vec2 v;  // plate direction (sigma_x axis)
    double inv_2sx2;
    double inv_2sy2;
    double amplitude;

    explicit ComponentEval(const GaussianComponent& g) {
        const double t = deg_to_rad(g.theta);
        mu = g.mu;
        u = {std::cos(t), std::sin(t)};
        v = {-std::sin(t), std::cos(t)};
        inv_2sx2 = 1.0 / (2.0 * g.sigma_x * g.sigma_x);
        inv_2sy2 = 1.0 / (2.0 * g.sigma_y * g.sigma_y);
        amplitude = 1.0 / (2.0 * M_PI * 2.0 * g.sigma_x * g.sigma_y);  // N = 2
    }

    double operator()(const Vec2& p) const {
        const Vec2 d = p - mu;
        const double a = d.dot(u);
        const double b = d.dot(v);
        return amplitude * std::exp(-(a * a * inv_2sy2 + b * b * inv_2sx2));
    }
};

bool mean_inside(const Vec2& mu, const GridSpec& grid) {
    return mu.x >= 0.0 && mu.x <= grid.width - 1 &&
           mu.y >= 0.0 && mu.y <= grid.height - 1;
}

} // namespace

double mixture_density(const std::pair<GaussianComponent, GaussianComponent>& comps,
                       const Vec2& p) {
    return ComponentEval(comps.first)(p) + ComponentEval(comps.second)(p);
}

BeliefMap render_components(const std::pair<GaussianComponent, GaussianComponent>& comps,
                            const GridSpec& grid) {
    const ComponentEval e1(comps.first);
    const ComponentEval e2(comps.second);
    BeliefMap map(grid.width, grid.height);
    double peak = 0.0;
    for (int y = 0; y < grid.height; ++y) {
        for (int x = 0; x < grid.width; ++x) {
            const Vec2 p{static_cast<double>(x), static_cast<double>(y)};
            const double v = e1(p) + e2(p);
            map.at(x, y) = v;
            peak = std::max(peak, v);
        }
    }
    // Rescale to peak 1.0 so the map is a confidence grid in [0, 1].
    const double inv = 1.0 / peak;
    for (double& v : map.values()) v *= inv;
    return map;
}

BeliefMap render_belief_map(const GraspRectangle& rect, const GridSpec& grid) {
    auto comps = rectangle_to_components(rect, sigma_y_for_grid(grid));
    if (!mean_inside(comps.first.mu, grid) || !mean_inside(comps.second.mu, grid)) {
        throw OutOfBoundsError("render_belief_map: component mean outside grid");
    }
    return render_components(comps, grid);
}

namespace {

/// 8-connected flood fill from `start` over `mask`; returns member pixels.
std::vector<std::pair<int, int>> connected_region(const std::vector<std::uint8_t>& mask,
                                                  int width, int height,
                                                  int start_x, int start_y) {
    std::vector<std::pair<int, int>> region;
    if (!mask[static_cast<std::size_t>(start_y) * width + start_x]) return region;
    std::vector<std::uint8_t> seen(mask.size(), 0);
    std::vector<std::pair<int, int>> stack{{start_x, start_y}};
    seen[static_cast<std::size_t>(start_y) * width + start_x] = 1;
    while (!stack.empty()) {
        auto [x, y] = stack.back();
        stack.pop_back();
        region.emplace_back(x, y);
        for (int dy = -1; dy <= 1; ++dy) {
            for (int dx = -1; dx <= 1; ++dx) {
                if (dx == 0 && dy == 0) continue;
                const int nx = x + dx;
                const int ny = y + dy;
                if (nx < 0 || ny < 0 || nx >= width || ny >= height) continue;
                const std::size_t i = static_cast<std::size_t>(ny) * width + nx;
                if (mask[i] && !seen[i]) {
                    seen[i] = 1;
                    stack.emplace_back(nx, ny);
                }
            }
        }
    }
    return region;
}

/// Length of the region's major axis: extent of the pixel centers projected
/// onto the principal eigenvector, plus one pixel of footprint.
double region_major_axis(const std::vector<std::pair<int, int>>& region) {
    const double n = static_cast<double>(region.size());
    double mx = 0.0, my = 0.0;
    for (auto [x, y] : region) {
        mx += x;
        my += y;
    }
    mx /= n;
    my /= n;
    Cov2 c{0.0, 0.0, 0.0};
    for (auto [x, y] : region) {
        const double dx = x - mx;
        const double dy = y - my;
        c.xx += dx * dx;
        c.xy += dx * dy;
        c.yy += dy * dy;
    }
    c.xx /= n;
    c.xy /= n;
    c.yy /= n;
    const Vec2 axis = c.major_axis();
    double lo = 0.0, hi = 0.0;
    bool first = true;
    for (auto [x, y] : region) {
        const double t = (x - mx) * axis.x + (y - my) * axis.y;
        if (first) {
            lo = hi = t;
            first = false;
        } else {
            lo = std::min(lo, t);
            hi = std::max(hi, t);
        }
    }
    return (hi - lo) + 1.0;
}

} // namespace

GraspRectangle decode_belief_map(const BeliefMap& map, const GmmFit& fit) {
    if (fit.num_components() != 2) {
        throw std::invalid_argument("decode_belief_map: expected a 2-component fit");
    }
    const Vec2 m1 = fit.means[0];
    const Vec2 m2 = fit.means[1];
    const Vec2 d = m2 - m1;
    const double w = d.norm();
    if (w < kDegenerateMeanDistance) {
        throw DegenerateMapError("decode_belief_map: fitted means coincide");
    }
    if (std::min(fit.weights[0], fit.weights[1]) < kDegenerateWeight) {
        throw DegenerateMapError("decode_belief_map: starved mixture component");
    }
    // Angle of the line joining the means, folded into [0, 180). atan2 covers
    // the vertical case (horizontal distance -> 0) that a plain arctan of the
    // distance ratio would not.
    const double theta = normalize_angle_180(rad_to_deg(std::atan2(d.y, d.x)));

    const double threshold = kDecodeThreshold * map.max_value();
    std::vector<std::uint8_t> mask(map.size(), 0);
    for (std::size_t i = 0; i < map.size(); ++i) {
        mask[i] = map.values()[i] >= threshold ? 1 : 0;
    }

    double h_sum = 0.0;
    std::pair<int, int> first_seed{-1, -1};
    for (const Vec2& mu : fit.means) {
        const int px = std::clamp(static_cast<int>(std::lround(mu.x)), 0, map.width() - 1);
        const int py = std::clamp(static_cast<int>(std::lround(mu.y)), 0, map.height() - 1);
        auto region = connected_region(mask, map.width(), map.height(), px, py);
        if (region.empty()) {
            throw DegenerateMapError("decode_belief_map: empty binarized region");
        }
        // A single region holding both means is one mode, not two plates
        // (uniform, pure-noise and single-Gaussian maps all land here).
        if (first_seed.first < 0) {
            first_seed = {px, py};
        } else if (std::find(region.begin(), region.end(), first_seed) != region.end()) {
            throw DegenerateMapError("decode_belief_map: modes not separable");
        }
        h_sum += region_major_axis(region);
    }
    const double h = h_sum / 2.0;

    return GraspRectangle((m1.x + m2.x) / 2.0, (m1.y + m2.y) / 2.0, theta, h, w);
}

std::array<Vec2, 4> rectangle_to_corners(const GraspRectangle& rect) {
    const double t = deg_to_rad(rect.theta);
    const Vec2 u{std::cos(t), std::sin(t)};   // opening direction, length w
    const Vec2 v{-std::sin(t), std::cos(t)};  // plate direction, length h
    const Vec2 c = rect.center();
    const Vec2 hu = u * (rect.w / 2.0);
    const Vec2 hv = v * (rect.h / 2.0);
    return {c - hu - hv, c + hu - hv, c + hu + hv, c - hu + hv};
}

GraspRectangle corners_to_rectangle(const std::array<Vec2, 4>& points,
                                    double tolerance_deg) {
    for (const Vec2& p : points) {
        if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
            throw InvalidCoordinatesError("corners_to_rectangle: non-finite coordinate");
        }
    }
    std::array<Vec2, 4> e;
    for (int i = 0; i < 4; ++i) {
        e[i] = points[(i + 1) % 4] - points[i];
        if (e[i].norm() <= 0.0) {
            throw NotARectangleError("corners_to_rectangle: zero-length edge");
        }
    }
    for (int i = 0; i < 4; ++i) {
        const Vec2& a = e[i];
        const Vec2& b = e[(i + 1) % 4];
        const double cosang = a.dot(b) / (a.norm() * b.norm());
        const double ang = rad_to_deg(std::acos(std::clamp(cosang, -1.0, 1.0)));
        if (std::abs(ang - 90.0) > tolerance_deg) {
            throw NotARectangleError("corners_to_rectangle: corner angle off by " +
                                     std::to_string(std::abs(ang - 90.0)) + " deg");
        }
    }
    const double cx = (points[0].x + points[1].x + points[2].x + points[3].x) / 4.0;
    const double cy = (points[0].y + points[1].y + points[2].y + points[3].y) / 4.0;
    const double theta = normalize_angle_180(rad_to_deg(std::atan2(e[0].y, e[0].x)));
    const double w = (e[0].norm() + e[2].norm()) / 2.0;
    const double h = (e[1].norm() + e[3].norm()) / 2.0;
    return GraspRectangle(cx, cy, theta, h, w);
}

} // namespace graspmap
