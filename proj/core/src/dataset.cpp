#include "graspmap/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "graspmap/logging.hpp"

namespace fs = std::filesystem;

namespace graspmap {

namespace {

bool is_blank(const std::string& line) {
    return std::all_of(line.begin(), line.end(),
                       [](unsigned char c) { return std::isspace(c); });
}

/// Parses "x y" with arbitrary surrounding whitespace; accepts nan/inf tokens
/// (stream extraction would reject them, strtod does not).
bool parse_point_line(const std::string& line, Vec2& out) {
    const char* p = line.c_str();
    char* end = nullptr;
    const double x = std::strtod(p, &end);
    if (end == p) return false;
    p = end;
    const double y = std::strtod(p, &end);
    if (end == p) return false;
    while (*end != '\0') {
        if (!std::isspace(static_cast<unsigned char>(*end))) return false;
        ++end;
    }
    out = {x, y};
    return true;
}

} // namespace

CornellParseResult parse_cornell_annotations(const std::string& text) {
    CornellParseResult result;
    std::istringstream stream(text);
    std::string line;
    std::vector<Vec2> group;
    while (std::getline(stream, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (is_blank(line)) continue;
        Vec2 p;
        if (!parse_point_line(line, p)) {
            throw MalformedLineError("parse_cornell_annotations: bad line: " + line);
        }
        group.push_back(p);
        if (group.size() == 4) {
            try {
                result.rects.push_back(corners_to_rectangle(
                    {group[0], group[1], group[2], group[3]}));
            } catch (const InvalidCoordinatesError&) {
                ++result.skipped_groups;
            } catch (const NotARectangleError&) {
                ++result.skipped_groups;
            } catch (const std::invalid_argument&) {
                ++result.skipped_groups;  // degenerate extents
            }
            group.clear();
        }
    }
    if (!group.empty()) {
        throw TruncatedGroupError("parse_cornell_annotations: trailing " +
                                  std::to_string(group.size()) + " corner line(s)");
    }
    return result;
}

CornellParseResult parse_cornell_annotation_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("parse_cornell_annotation_file: cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_cornell_annotations(buf.str());
}

void write_cornell_annotations(const std::string& path,
                               const std::vector<GraspRectangle>& rects) {
    std::ofstream out(path);
    if (!out) throw IoError("write_cornell_annotations: cannot open " + path);
    char buf[64];
    for (const GraspRectangle& r : rects) {
        for (const Vec2& c : rectangle_to_corners(r)) {
            std::snprintf(buf, sizeof(buf), "%.6f %.6f\n", c.x, c.y);
            out << buf;
        }
    }
    if (!out) throw IoError("write_cornell_annotations: write failed for " + path);
}

// ---------------------------------------------------------------------------

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t tab = line.find('\t', start);
        if (tab == std::string::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, tab - start));
        start = tab + 1;
    }
    return fields;
}

} // namespace

std::vector<ManifestRecord> read_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("read_manifest: cannot open " + path);
    std::vector<ManifestRecord> records;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (is_blank(line) || line[0] == '#') continue;
        const auto fields = split_tabs(line);
        if (fields.size() != 5 && fields.size() != 6) {
            throw MalformedLineError("read_manifest: line " + std::to_string(lineno) +
                                     ": expected 5 or 6 tab-separated fields");
        }
        ManifestRecord rec;
        rec.source_id = fields[0];
        rec.image_path = fields[1];
        rec.annotation_path = fields[2];
        rec.object_id = std::stoi(fields[3]);
        rec.shape_class = fields[4];
        if (fields.size() == 6 && !fields[5].empty()) {
            const std::size_t comma = fields[5].find(',');
            if (comma == std::string::npos) {
                throw MalformedLineError("read_manifest: line " + std::to_string(lineno) +
                                         ": crop center must be cx,cy");
            }
            rec.crop_center = Vec2{std::stod(fields[5].substr(0, comma)),
                                   std::stod(fields[5].substr(comma + 1))};
        }
        records.push_back(std::move(rec));
    }
    return records;
}

void write_manifest(const std::string& path, const std::vector<ManifestRecord>& records) {
    std::ofstream out(path);
    if (!out) throw IoError("write_manifest: cannot open " + path);
    for (const ManifestRecord& rec : records) {
        out << rec.source_id << '\t' << rec.image_path << '\t' << rec.annotation_path
            << '\t' << rec.object_id << '\t' << rec.shape_class;
        if (rec.crop_center) {
            char buf[48];
            std::snprintf(buf, sizeof(buf), "\t%.2f,%.2f", rec.crop_center->x,
                          rec.crop_center->y);
            out << buf;
        }
        out << '\n';
    }
    if (!out) throw IoError("write_manifest: write failed for " + path);
}

AnnotatedSample load_sample(const ManifestRecord& record, const std::string& base_dir) {
    auto resolve = [&](const std::string& p) {
        fs::path path(p);
        if (path.is_absolute() || base_dir.empty()) return p;
        return (fs::path(base_dir) / path).string();
    };
    AnnotatedSample sample;
    sample.image = read_png(resolve(record.image_path));
    auto parsed = parse_cornell_annotation_file(resolve(record.annotation_path));
    if (parsed.rects.empty()) {
        throw InvalidCoordinatesError("load_sample: no valid rectangle in " +
                                      record.annotation_path);
    }
    sample.gt_rects = std::move(parsed.rects);
    sample.object_id = record.object_id;
    sample.shape_class = record.shape_class;
    sample.source_id = record.source_id;
    sample.crop_center = record.crop_center;
    return sample;
}

std::vector<AnnotatedSample> load_dataset(const std::string& manifest_path) {
    const std::string base = fs::path(manifest_path).parent_path().string();
    std::vector<AnnotatedSample> samples;
    for (const ManifestRecord& rec : read_manifest(manifest_path)) {
        samples.push_back(load_sample(rec, base));
    }
    return samples;
}

// ---------------------------------------------------------------------------

FloatImage to_float_image(const ImageU8& image) {
    FloatImage out;
    out.width = image.width();
    out.height = image.height();
    out.chw.resize(3 * static_cast<std::size_t>(out.width) * out.height);
    const std::size_t plane = static_cast<std::size_t>(out.width) * out.height;
    for (int y = 0; y < out.height; ++y) {
        for (int x = 0; x < out.width; ++x) {
            const std::uint8_t* p = image.pixel(x, y);
            const std::size_t i = static_cast<std::size_t>(y) * out.width + x;
            out.chw[i] = p[0] / 255.0;
            out.chw[plane + i] = p[1] / 255.0;
            out.chw[2 * plane + i] = p[2] / 255.0;
        }
    }
    return out;
}

namespace {

bool means_inside_grid(const GraspRectangle& rect, int width, int height) {
    const auto comps = rectangle_to_components(rect);
    for (const auto* c : {&comps.first, &comps.second}) {
        if (c->mu.x < 0.0 || c->mu.x > width - 1 || c->mu.y < 0.0 || c->mu.y > height - 1) {
            return false;
        }
    }
    return true;
}

} // namespace

PreprocessedSample preprocess(const AnnotatedSample& sample, const PreprocessSpec& spec) {
    const ImageU8& img = sample.image;
    if (img.width() < spec.crop_size || img.height() < spec.crop_size) {
        throw ImageTooSmallError("preprocess: image " + sample.source_id + " is " +
                                 std::to_string(img.width()) + "x" +
                                 std::to_string(img.height()) + ", need " +
                                 std::to_string(spec.crop_size));
    }
    const Vec2 center = sample.crop_center.value_or(
        Vec2{img.width() / 2.0, img.height() / 2.0});
    int x0 = static_cast<int>(std::lround(center.x - spec.crop_size / 2.0));
    int y0 = static_cast<int>(std::lround(center.y - spec.crop_size / 2.0));
    x0 = std::clamp(x0, 0, img.width() - spec.crop_size);
    y0 = std::clamp(y0, 0, img.height() - spec.crop_size);

    const ImageU8 cropped = crop(img, x0, y0, spec.crop_size, spec.crop_size);
    const ImageU8 resized = (spec.image_out == spec.crop_size)
                                ? cropped
                                : resize_bilinear(cropped, spec.image_out, spec.image_out);

    PreprocessedSample out;
    out.image = to_float_image(resized);
    out.object_id = sample.object_id;
    out.shape_class = sample.shape_class;
    out.source_id = sample.source_id;

    const double scale = static_cast<double>(spec.map_out) / spec.crop_size;
    for (const GraspRectangle& r : sample.gt_rects) {
        const GraspRectangle mapped((r.x - x0) * scale, (r.y - y0) * scale, r.theta,
                                    r.h * scale, r.w * scale);
        if (means_inside_grid(mapped, spec.map_out, spec.map_out)) {
            out.rects.push_back(mapped);
        } else {
            ++out.dropped_rects;
            log_info("preprocess: dropped out-of-grid rectangle in " + sample.source_id);
        }
    }
    return out;
}

std::vector<BeliefMap> render_gt_maps(const PreprocessedSample& sample,
                                      const PreprocessSpec& spec) {
    const GridSpec grid(spec.map_out, spec.map_out);
    std::vector<BeliefMap> maps;
    maps.reserve(sample.rects.size());
    for (const GraspRectangle& r : sample.rects) {
        maps.push_back(render_belief_map(r, grid));
    }
    return maps;
}

// ---------------------------------------------------------------------------

AugmentParams::AugmentParams(double rotation, Vec2 t, double s)
    : rotation_deg(rotation), translation(t), scale(s) {
    if (rotation < -60.0 || rotation > 60.0 || t.x < -20.0 || t.x > 20.0 ||
        t.y < -20.0 || t.y > 20.0 || s < 0.9 || s > 1.1) {
        throw std::invalid_argument("AugmentParams: value outside the sampling ranges");
    }
}

AugmentParams AugmentParams::unchecked(double rotation, Vec2 t, double s) {
    AugmentParams p;
    p.rotation_deg = rotation;
    p.translation = t;
    p.scale = s;
    return p;
}

AugmentParams sample_augment_params(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> rot(-60.0, 60.0);
    std::uniform_real_distribution<double> trans(-20.0, 20.0);
    std::uniform_real_distribution<double> scale(0.9, 1.1);
    AugmentParams p;
    p.rotation_deg = rot(rng);
    p.translation = {trans(rng), trans(rng)};
    p.scale = scale(rng);
    return p;
}

AnnotatedSample augment(const AnnotatedSample& sample, const AugmentParams& params) {
    const Affine fwd = Affine::rotate_scale_translate(
        params.rotation_deg, params.scale, sample.image.width() / 2.0,
        sample.image.height() / 2.0, params.translation.x, params.translation.y);

    AnnotatedSample out;
    const bool identity = params.rotation_deg == 0.0 && params.scale == 1.0 &&
                          params.translation.x == 0.0 && params.translation.y == 0.0;
    out.image = identity ? sample.image : warp_affine(sample.image, fwd);
    out.object_id = sample.object_id;
    out.shape_class = sample.shape_class;
    out.source_id = sample.source_id;
    out.crop_center = sample.crop_center;
    if (out.crop_center) {
        const auto [cx, cy] = fwd.apply(out.crop_center->x, out.crop_center->y);
        out.crop_center = Vec2{cx, cy};
    }
    for (const GraspRectangle& r : sample.gt_rects) {
        const auto [x, y] = fwd.apply(r.x, r.y);
        const GraspRectangle moved(x, y, r.theta + params.rotation_deg,
                                   r.h * params.scale, r.w * params.scale);
        if (means_inside_grid(moved, sample.image.width(), sample.image.height())) {
            out.gt_rects.push_back(moved);
        }
    }
    return out;
}

std::vector<AnnotatedSample> augment_dataset(const std::vector<AnnotatedSample>& samples,
                                             std::uint64_t seed, int copies) {
    std::vector<AnnotatedSample> out;
    out.reserve(samples.size() * (copies + 1));
    for (std::size_t i = 0; i < samples.size(); ++i) {
        out.push_back(samples[i]);
        std::mt19937_64 rng(derive_seed(seed, i, 0x617567));
        for (int c = 0; c < copies; ++c) {
            for (int attempt = 0; attempt < 16; ++attempt) {
                AnnotatedSample aug = augment(samples[i], sample_augment_params(rng));
                if (!aug.gt_rects.empty()) {
                    aug.source_id += "-aug" + std::to_string(c);
                    out.push_back(std::move(aug));
                    break;
                }
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<int> chunk_of(const std::vector<int>& items, int fold, int folds) {
    const std::size_t n = items.size();
    const std::size_t lo = n * fold / folds;
    const std::size_t hi = n * (fold + 1) / folds;
    return {items.begin() + lo, items.begin() + hi};
}

} // namespace

SplitSpec make_splits(const std::vector<SampleKey>& keys, SplitMode mode,
                      std::uint64_t seed) {
    const int n = static_cast<int>(keys.size());
    if (n == 0) throw std::invalid_argument("make_splits: empty dataset");
    SplitSpec spec;
    spec.mode = mode;
    spec.seed = seed;
    std::mt19937_64 rng(seed);

    if (mode == SplitMode::kImageWise) {
        std::vector<int> idx(n);
        std::iota(idx.begin(), idx.end(), 0);
        std::shuffle(idx.begin(), idx.end(), rng);
        for (int f = 0; f < 5; ++f) {
            SplitFold fold;
            fold.test = chunk_of(idx, f, 5);
            std::set<int> test_set(fold.test.begin(), fold.test.end());
            for (int i = 0; i < n; ++i) {
                if (!test_set.count(i)) fold.train.push_back(i);
            }
            std::sort(fold.test.begin(), fold.test.end());
            spec.folds.push_back(std::move(fold));
        }
        return spec;
    }

    // Both remaining modes split whole objects.
    std::map<int, std::vector<int>> by_object;  // object_id -> sample indices
    for (int i = 0; i < n; ++i) by_object[keys[i].object_id].push_back(i);

    auto fold_from_test_objects = [&](const std::set<int>& test_objects) {
        SplitFold fold;
        for (int i = 0; i < n; ++i) {
            (test_objects.count(keys[i].object_id) ? fold.test : fold.train).push_back(i);
        }
        return fold;
    };

    if (mode == SplitMode::kObjectWise) {
        std::vector<int> objects;
        for (const auto& [id, _] : by_object) objects.push_back(id);
        std::shuffle(objects.begin(), objects.end(), rng);
        for (int f = 0; f < 5; ++f) {
            const auto chunk = chunk_of(objects, f, 5);
            spec.folds.push_back(fold_from_test_objects({chunk.begin(), chunk.end()}));
        }
        return spec;
    }

    // shape_wise: group objects by class, order classes under the seed, and
    // take the smallest prefix of whole classes covering 20% of the objects;
    // the second fold uses the reversed class order. Whole classes keep any
    // shape family on one side only.
    std::map<std::string, std::vector<int>> class_objects;
    for (int i = 0; i < n; ++i) {
        if (keys[i].shape_class.empty()) {
            throw MissingShapeLabelsError("make_splits: sample without shape_class");
        }
    }
    for (const auto& [id, idxs] : by_object) {
        class_objects[keys[idxs.front()].shape_class].push_back(id);
    }
    std::vector<std::string> classes;
    for (const auto& [cls, _] : class_objects) classes.push_back(cls);
    std::shuffle(classes.begin(), classes.end(), rng);

    const std::size_t n_objects = by_object.size();
    const std::size_t want = (n_objects + 4) / 5;  // ceil(20%)
    auto build_fold = [&](const std::vector<std::string>& order) {
        std::set<int> test_objects;
        for (const std::string& cls : order) {
            if (test_objects.size() >= want) break;
            for (int id : class_objects[cls]) test_objects.insert(id);
        }
        return fold_from_test_objects(test_objects);
    };
    spec.folds.push_back(build_fold(classes));
    std::vector<std::string> reversed(classes.rbegin(), classes.rend());
    spec.folds.push_back(build_fold(reversed));
    return spec;
}

SplitSpec make_splits(const std::vector<AnnotatedSample>& samples, SplitMode mode,
                      std::uint64_t seed) {
    std::vector<SampleKey> keys;
    keys.reserve(samples.size());
    for (const auto& s : samples) keys.push_back({s.object_id, s.shape_class});
    return make_splits(keys, mode, seed);
}

SplitSpec make_splits(const std::vector<ManifestRecord>& records, SplitMode mode,
                      std::uint64_t seed) {
    std::vector<SampleKey> keys;
    keys.reserve(records.size());
    for (const auto& r : records) keys.push_back({r.object_id, r.shape_class});
    return make_splits(keys, mode, seed);
}

SplitMode split_mode_from_string(const std::string& name) {
    if (name == "image") return SplitMode::kImageWise;
    if (name == "object") return SplitMode::kObjectWise;
    if (name == "shape") return SplitMode::kShapeWise;
    throw ConfigError("unknown split mode: " + name);
}

std::string to_string(SplitMode mode) {
    switch (mode) {
        case SplitMode::kImageWise: return "image";
        case SplitMode::kObjectWise: return "object";
        case SplitMode::kShapeWise: return "shape";
    }
    return "?";
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index, std::uint64_t stream) {
    // splitmix64 over the combined key
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1) +
                      0xbf58476d1ce4e5b9ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace graspmap
