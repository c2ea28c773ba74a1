#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>

#include "graspmap/dataset.hpp"

namespace fs = std::filesystem;

namespace graspmap {

namespace {

/// Grasp opening relative to the object thickness at the grasp point. Wide
/// enough that the two plate blobs stay separable after binarization even on
/// somewhat blurry predicted maps.
constexpr double kGraspClearance = 1.7;

struct Frame {
    Vec2 origin;
    Vec2 u;  // along rotation_deg
    Vec2 v;  // perpendicular

    Frame(const Vec2& o, double deg) : origin(o) {
        const double t = deg_to_rad(deg);
        u = {std::cos(t), std::sin(t)};
        v = {-std::sin(t), std::cos(t)};
    }
    Vec2 world(double tu, double tv) const { return origin + u * tu + v * tv; }
    Vec2 local(const Vec2& p) const {
        const Vec2 d = p - origin;
        return {d.dot(u), d.dot(v)};
    }
};

/// Anchor frames: bar and ellipse are centered on `center`; the L-shape uses
/// its junction corner, the T-shape its stem base.
Frame object_frame(const SyntheticObject& o) {
    switch (o.family) {
        case ShapeFamily::kBar:
        case ShapeFamily::kEllipse:
            return Frame(o.center, o.rotation_deg);
        case ShapeFamily::kLShape: {
            Frame f(o.center, o.rotation_deg);
            f.origin = o.center - f.u * (o.length1 / 2.0) - f.v * (o.length2 / 2.0);
            return f;
        }
        case ShapeFamily::kTShape: {
            Frame f(o.center, o.rotation_deg);
            f.origin = o.center - f.u * (o.length1 / 2.0);
            return f;
        }
    }
    return Frame(o.center, o.rotation_deg);
}

bool inside_object(const SyntheticObject& o, const Frame& f, const Vec2& p) {
    const Vec2 t = f.local(p);
    const double half_thick = o.thickness / 2.0;
    switch (o.family) {
        case ShapeFamily::kBar:
            return std::abs(t.x) <= o.length1 / 2.0 && std::abs(t.y) <= half_thick;
        case ShapeFamily::kEllipse: {
            const double a = t.x / o.length1;
            const double b = t.y / o.length2;
            return a * a + b * b <= 1.0;
        }
        case ShapeFamily::kLShape:
            return (t.x >= -half_thick && t.x <= o.length1 && std::abs(t.y) <= half_thick) ||
                   (t.y >= -half_thick && t.y <= o.length2 && std::abs(t.x) <= half_thick);
        case ShapeFamily::kTShape: {
            const bool stem = t.x >= 0.0 && t.x <= o.length1 && std::abs(t.y) <= half_thick;
            const bool bar = std::abs(t.x - o.length1) <= half_thick &&
                             std::abs(t.y) <= o.length2 / 2.0;
            return stem || bar;
        }
    }
    return false;
}

/// Extreme points used to keep the whole object inside the frame.
std::vector<Vec2> object_extremes(const SyntheticObject& o) {
    const Frame f = object_frame(o);
    const double ht = o.thickness / 2.0;
    std::vector<Vec2> pts;
    switch (o.family) {
        case ShapeFamily::kBar:
            for (double sx : {-o.length1 / 2.0, o.length1 / 2.0}) {
                for (double sy : {-ht, ht}) pts.push_back(f.world(sx, sy));
            }
            break;
        case ShapeFamily::kEllipse:
            for (double sx : {-o.length1, o.length1}) pts.push_back(f.world(sx, 0.0));
            for (double sy : {-o.length2, o.length2}) pts.push_back(f.world(0.0, sy));
            break;
        case ShapeFamily::kLShape:
            pts.push_back(f.world(-ht, -ht));
            pts.push_back(f.world(o.length1, -ht));
            pts.push_back(f.world(o.length1, ht));
            pts.push_back(f.world(-ht, o.length2));
            pts.push_back(f.world(ht, o.length2));
            break;
        case ShapeFamily::kTShape:
            pts.push_back(f.world(0.0, -ht));
            pts.push_back(f.world(0.0, ht));
            pts.push_back(f.world(o.length1 + ht, -o.length2 / 2.0));
            pts.push_back(f.world(o.length1 + ht, o.length2 / 2.0));
            pts.push_back(f.world(o.length1 - ht, -o.length2 / 2.0));
            pts.push_back(f.world(o.length1 - ht, o.length2 / 2.0));
            break;
    }
    return pts;
}

} // namespace

std::vector<GraspRectangle> object_grasps(const SyntheticObject& o) {
    const Frame f = object_frame(o);
    const double phi = o.rotation_deg;
    // Opening = thickness plus half a thickness of gripper clearance.
    const double w_across = kGraspClearance * o.thickness;
    std::vector<GraspRectangle> gts;
    auto add = [&](const Vec2& at, double theta, double h, double w) {
        gts.emplace_back(at.x, at.y, theta, h, w);
    };
    switch (o.family) {
        case ShapeFamily::kBar: {
            const double h = 0.28 * o.length1;
            for (double t : {-0.25 * o.length1, 0.0, 0.25 * o.length1}) {
                add(f.world(t, 0.0), phi + 90.0, h, w_across);
            }
            break;
        }
        case ShapeFamily::kEllipse: {
            const double h = std::max(0.9 * o.length2, 0.45 * o.length1);
            for (double t : {-0.4 * o.length1, 0.0, 0.4 * o.length1}) {
                add(f.world(t, 0.0), phi + 90.0, h, w_across);
            }
            break;
        }
        case ShapeFamily::kLShape:
            // Exactly one grasp per limb: two distinct grasps 90 degrees apart.
            add(f.world(0.58 * o.length1, 0.0), phi + 90.0, 0.30 * o.length1, w_across);
            add(f.world(0.0, 0.58 * o.length2), phi, 0.30 * o.length2, w_across);
            break;
        case ShapeFamily::kTShape:
            add(f.world(0.42 * o.length1, 0.0), phi + 90.0, 0.30 * o.length1, w_across);
            add(f.world(o.length1, -0.30 * o.length2), phi, 0.26 * o.length2, w_across);
            add(f.world(o.length1, 0.30 * o.length2), phi, 0.26 * o.length2, w_across);
            break;
    }
    return gts;
}

ImageU8 render_object(const SyntheticObject& o, int image_size) {
    const Frame f = object_frame(o);
    ImageU8 img(image_size, image_size, o.background_color);
    // 3x3 supersampled coverage, blended between background and object color.
    for (int y = 0; y < image_size; ++y) {
        for (int x = 0; x < image_size; ++x) {
            int hits = 0;
            for (int sy = 0; sy < 3; ++sy) {
                for (int sx = 0; sx < 3; ++sx) {
                    const Vec2 p{x + (sx - 1) / 3.0, y + (sy - 1) / 3.0};
                    if (inside_object(o, f, p)) ++hits;
                }
            }
            if (hits == 0) continue;
            const double cov = hits / 9.0;
            std::uint8_t* px = img.pixel(x, y);
            for (int c = 0; c < 3; ++c) {
                const double v = o.background_color[c] +
                                 cov * (o.object_color[c] - o.background_color[c]);
                px[c] = static_cast<std::uint8_t>(std::lround(v));
            }
        }
    }
    return img;
}

std::string to_string(ShapeFamily family) {
    switch (family) {
        case ShapeFamily::kBar: return "bar";
        case ShapeFamily::kEllipse: return "ellipse";
        case ShapeFamily::kLShape: return "lshape";
        case ShapeFamily::kTShape: return "tshape";
    }
    return "?";
}

namespace {

SyntheticObject draw_object_geometry(ShapeFamily family, int image_size,
                                     std::mt19937_64& rng) {
    const double s = image_size;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto range = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

    SyntheticObject o;
    o.family = family;
    switch (family) {
        case ShapeFamily::kBar:
            o.length1 = range(0.42, 0.62) * s;
            o.length2 = 0.0;
            o.thickness = range(0.11, 0.16) * s;
            break;
        case ShapeFamily::kEllipse:
            o.length1 = range(0.20, 0.30) * s;                 // semi-major
            o.length2 = o.length1 / range(1.6, 2.4);           // semi-minor
            o.thickness = 2.0 * o.length2;
            break;
        case ShapeFamily::kLShape:
            o.length1 = range(0.34, 0.46) * s;
            o.length2 = std::min(0.46 * s, o.length1 * range(0.85, 1.18));
            o.thickness = range(0.11, 0.14) * s;
            break;
        case ShapeFamily::kTShape:
            o.length1 = range(0.32, 0.44) * s;
            o.length2 = std::min(0.46 * s, o.length1 * range(0.85, 1.18));
            o.thickness = range(0.11, 0.14) * s;
            break;
    }
    // Colors: light background, dark object, strong contrast.
    std::uniform_int_distribution<int> bg(170, 235);
    std::uniform_int_distribution<int> fg(25, 130);
    for (int c = 0; c < 3; ++c) o.background_color[c] = static_cast<std::uint8_t>(bg(rng));
    for (int c = 0; c < 3; ++c) o.object_color[c] = static_cast<std::uint8_t>(fg(rng));
    return o;
}

bool pose_fits(const SyntheticObject& o, int image_size) {
    const double border = 6.0;
    for (const Vec2& p : object_extremes(o)) {
        if (p.x < border || p.y < border || p.x > image_size - 1 - border ||
            p.y > image_size - 1 - border) {
            return false;
        }
    }
    for (const GraspRectangle& g : object_grasps(o)) {
        const auto comps = rectangle_to_components(g);
        for (const auto* c : {&comps.first, &comps.second}) {
            if (c->mu.x < border || c->mu.y < border ||
                c->mu.x > image_size - 1 - border || c->mu.y > image_size - 1 - border) {
                return false;
            }
        }
    }
    return true;
}

void draw_pose(SyntheticObject& o, int image_size, std::mt19937_64& rng) {
    const double s = image_size;
    std::uniform_real_distribution<double> pos(0.40 * s, 0.60 * s);
    std::uniform_real_distribution<double> rot(0.0, 180.0);
    for (int attempt = 0; attempt < 64; ++attempt) {
        o.center = {pos(rng), pos(rng)};
        o.rotation_deg = rot(rng);
        if (pose_fits(o, image_size)) return;
        // Shrink stubborn geometry a little and retry.
        o.length1 *= 0.96;
        o.length2 *= 0.96;
        o.thickness = std::max(0.08 * s, o.thickness * 0.98);
    }
}

} // namespace

std::vector<AnnotatedSample> generate_synthetic(const SyntheticConfig& config) {
    if (config.count < 1) throw std::invalid_argument("generate_synthetic: n must be >= 1");
    if (config.families.empty()) {
        throw std::invalid_argument("generate_synthetic: no shape families");
    }
    std::vector<AnnotatedSample> samples;
    samples.reserve(config.count);
    const int views = std::max(1, config.views_per_object);
    for (int i = 0; i < config.count; ++i) {
        const int object = i / views;
        const int view = i % views;
        // Geometry and colors are per object, pose per view.
        std::mt19937_64 geometry_rng(derive_seed(config.seed, object, 0x67656f));
        const ShapeFamily family =
            config.families[object % static_cast<int>(config.families.size())];
        SyntheticObject obj = draw_object_geometry(family, config.image_size, geometry_rng);
        std::mt19937_64 pose_rng(derive_seed(config.seed, object, 0x706f73 + view));
        draw_pose(obj, config.image_size, pose_rng);

        AnnotatedSample sample;
        sample.image = render_object(obj, config.image_size);
        sample.gt_rects = object_grasps(obj);
        sample.object_id = object;
        sample.shape_class = to_string(family);
        char buf[32];
        std::snprintf(buf, sizeof(buf), "synth-%05d", i);
        sample.source_id = buf;
        samples.push_back(std::move(sample));
    }
    return samples;
}

std::vector<AnnotatedSample> generate_synthetic(int n, std::uint64_t seed) {
    SyntheticConfig config;
    config.count = n;
    config.seed = seed;
    return generate_synthetic(config);
}

std::string write_dataset(const std::vector<AnnotatedSample>& samples,
                          const std::string& out_dir) {
    fs::create_directories(fs::path(out_dir) / "images");
    fs::create_directories(fs::path(out_dir) / "annotations");
    std::vector<ManifestRecord> records;
    for (const AnnotatedSample& s : samples) {
        ManifestRecord rec;
        rec.source_id = s.source_id;
        rec.image_path = "images/" + s.source_id + ".png";
        rec.annotation_path = "annotations/" + s.source_id + "cpos.txt";
        rec.object_id = s.object_id;
        rec.shape_class = s.shape_class;
        rec.crop_center = s.crop_center;
        write_png((fs::path(out_dir) / rec.image_path).string(), s.image);
        write_cornell_annotations((fs::path(out_dir) / rec.annotation_path).string(),
                                  s.gt_rects);
        records.push_back(std::move(rec));
    }
    const std::string manifest = (fs::path(out_dir) / "manifest.txt").string();
    write_manifest(manifest, records);
    return manifest;
}

std::uint64_t dataset_hash(const std::vector<AnnotatedSample>& samples) {
    std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
    auto mix_bytes = [&](const void* data, std::size_t n) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= p[i];
            h *= 1099511628211ULL;
        }
    };
    auto mix_double = [&](double v) {
        // Hash a fixed-precision rendering so the hash is stable across
        // serialization round trips.
        const long long q = std::llround(v * 10000.0);
        mix_bytes(&q, sizeof(q));
    };
    for (const AnnotatedSample& s : samples) {
        mix_bytes(s.source_id.data(), s.source_id.size());
        mix_bytes(s.shape_class.data(), s.shape_class.size());
        mix_bytes(&s.object_id, sizeof(s.object_id));
        mix_bytes(s.image.data().data(), s.image.data().size());
        for (const GraspRectangle& r : s.gt_rects) {
            mix_double(r.x);
            mix_double(r.y);
            mix_double(r.theta);
            mix_double(r.h);
            mix_double(r.w);
        }
    }
    return h;
}

} // namespace graspmap
