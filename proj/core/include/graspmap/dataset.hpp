#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "graspmap/geometry.hpp"
#include "graspmap/image.hpp"
#include "graspmap/types.hpp"

namespace graspmap {

/// An image with its ground-truth grasps and grouping identifiers.
struct AnnotatedSample {
    ImageU8 image;
    std::vector<GraspRectangle> gt_rects;
    int object_id = 0;
    std::string shape_class;
    std::string source_id;
    std::optional<Vec2> crop_center;  // manifest override for off-center objects
};

// ---------------------------------------------------------------------------
// Cornell annotation convention: consecutive groups of 4 "x y" lines, one
// corner per line. Groups with non-finite coordinates (the dataset contains
// NaN lines) or failing the rectangle tolerance are skipped and counted.

struct CornellParseResult {
    std::vector<GraspRectangle> rects;
    int skipped_groups = 0;
};

/// Throws MalformedLineError on a line that is neither two floats nor
/// whitespace, TruncatedGroupError on 1-3 trailing corner lines.
CornellParseResult parse_cornell_annotations(const std::string& text);
CornellParseResult parse_cornell_annotation_file(const std::string& path);
void write_cornell_annotations(const std::string& path,
                               const std::vector<GraspRectangle>& rects);

// ---------------------------------------------------------------------------
// Dataset manifest: line-oriented UTF-8, one tab-separated record per sample:
// source_id, image path, annotation path, object_id, shape_class, and an
// optional "cx,cy" crop-center override. '#' lines are comments.

struct ManifestRecord {
    std::string source_id;
    std::string image_path;
    std::string annotation_path;
    int object_id = 0;
    std::string shape_class;
    std::optional<Vec2> crop_center;
};

std::vector<ManifestRecord> read_manifest(const std::string& path);
void write_manifest(const std::string& path, const std::vector<ManifestRecord>& records);

/// Loads one sample; relative paths resolve against the manifest directory.
/// Samples whose every annotation group is invalid are rejected
/// (InvalidCoordinatesError) per the AnnotatedSample contract.
AnnotatedSample load_sample(const ManifestRecord& record, const std::string& base_dir);
std::vector<AnnotatedSample> load_dataset(const std::string& manifest_path);

// ---------------------------------------------------------------------------
// Preprocessing: center crop, bilinear resize to the network input, and the
// identical affine applied to the labels, which live on the half-resolution
// map grid.

struct PreprocessSpec {
    int crop_size = 350;
    int image_out = 256;
    int map_out = 128;
};

/// Network-input image: planar CHW doubles in [0, 1].
struct FloatImage {
    int width = 0;
    int height = 0;
    std::vector<double> chw;  // 3 * height * width

    double at(int c, int y, int x) const {
        return chw[(static_cast<std::size_t>(c) * height + y) * width + x];
    }
};

FloatImage to_float_image(const ImageU8& image);

struct PreprocessedSample {
    FloatImage image;
    std::vector<GraspRectangle> rects;  // in map_out pixel coordinates
    int dropped_rects = 0;
    int object_id = 0;
    std::string shape_class;
    std::string source_id;
};

/// Throws ImageTooSmallError when the source cannot supply the crop window.
/// Ground-truth rectangles whose component means leave the map grid are
/// dropped with a warning.
PreprocessedSample preprocess(const AnnotatedSample& sample,
                              const PreprocessSpec& spec = {});

/// Renders every ground-truth rectangle of a preprocessed sample.
std::vector<BeliefMap> render_gt_maps(const PreprocessedSample& sample,
                                      const PreprocessSpec& spec = {});

// ---------------------------------------------------------------------------
// Augmentation: rotation / translation / scale applied identically to pixels
// and labels, in the original image frame (before cropping).

struct AugmentParams {
    double rotation_deg = 0.0;  // [-60, 60]
    Vec2 translation;           // each component in [-20, 20] px
    double scale = 1.0;         // [0.9, 1.1]

    AugmentParams() = default;
    AugmentParams(double rotation, Vec2 translation, double scale);
    /// Bypasses the range checks (test fixtures use e.g. 90-degree turns).
    static AugmentParams unchecked(double rotation, Vec2 translation, double scale);
};

AugmentParams sample_augment_params(std::mt19937_64& rng);
AnnotatedSample augment(const AnnotatedSample& sample, const AugmentParams& params);

/// Number of augmented copies per sample in the standard pipeline.
inline constexpr int kAugmentCopies = 6;

/// Expands a dataset with kAugmentCopies augmented copies per sample
/// (plus the original). Copies that lose every rectangle are redrawn.
std::vector<AnnotatedSample> augment_dataset(const std::vector<AnnotatedSample>& samples,
                                             std::uint64_t seed,
                                             int copies = kAugmentCopies);

// ---------------------------------------------------------------------------
// Cross-validation splits.

enum class SplitMode { kImageWise, kObjectWise, kShapeWise };

struct SplitFold {
    std::vector<int> train;  // sample indices
    std::vector<int> test;
};

struct SplitSpec {
    SplitMode mode = SplitMode::kImageWise;
    std::vector<SplitFold> folds;
    std::uint64_t seed = 0;
};

struct SampleKey {
    int object_id = 0;
    std::string shape_class;
};

/// image_wise: 5 folds over shuffled samples. object_wise: 5 folds over
/// shuffled object ids, whole objects per side. shape_wise: 2 folds; the
/// smallest prefix of whole shape classes (in seeded order) covering 20% of
/// objects is the test side, then the same with the class order reversed.
/// Throws MissingShapeLabelsError when shape_wise lacks labels.
SplitSpec make_splits(const std::vector<SampleKey>& keys, SplitMode mode,
                      std::uint64_t seed);
SplitSpec make_splits(const std::vector<AnnotatedSample>& samples, SplitMode mode,
                      std::uint64_t seed);
SplitSpec make_splits(const std::vector<ManifestRecord>& records, SplitMode mode,
                      std::uint64_t seed);

SplitMode split_mode_from_string(const std::string& name);
std::string to_string(SplitMode mode);

// ---------------------------------------------------------------------------
// Synthetic desk-scale dataset.

enum class ShapeFamily { kBar, kEllipse, kLShape, kTShape };

std::string to_string(ShapeFamily family);

/// Parametric object description the generator draws and annotates from.
/// length1/length2 are the bar length (length2 unused), the ellipse semi-axes
/// (major, minor), or the two limb lengths of the L / the stem and crossbar
/// of the T. All grasps derive analytically from these parameters.
struct SyntheticObject {
    ShapeFamily family = ShapeFamily::kBar;
    Vec2 center;
    double rotation_deg = 0.0;
    double length1 = 48.0;
    double length2 = 0.0;
    double thickness = 12.0;
    std::array<std::uint8_t, 3> object_color{60, 60, 60};
    std::array<std::uint8_t, 3> background_color{210, 210, 210};
};

/// Ground-truth grasps of an object: perpendicular to the local elongation,
/// opening = thickness plus a small margin. Bars and ellipses admit several
/// offsets along their length; L-shapes one grasp per limb (exactly two,
/// at distinct orientations); T-shapes one stem and two crossbar grasps.
std::vector<GraspRectangle> object_grasps(const SyntheticObject& object);

/// Rasterizes the object on its plain background (3x3 supersampled coverage).
ImageU8 render_object(const SyntheticObject& object, int image_size);

struct SyntheticConfig {
    int count = 200;
    int image_size = 96;
    int views_per_object = 2;
    std::vector<ShapeFamily> families{ShapeFamily::kBar, ShapeFamily::kEllipse,
                                      ShapeFamily::kLShape, ShapeFamily::kTShape};
    std::uint64_t seed = 0;
};

/// Renders parametric objects (bars, ellipses, L-shapes, T-shapes) at random
/// pose and color on plain backgrounds, with exhaustive ground-truth grasps
/// derived from the generating parameters. Every sample carries at least two
/// grasps; samples of the same object share geometry but differ in pose.
std::vector<AnnotatedSample> generate_synthetic(const SyntheticConfig& config);
std::vector<AnnotatedSample> generate_synthetic(int n, std::uint64_t seed);

/// Writes images, annotation files and the manifest of a dataset under
/// `out_dir` (images/<id>.png, annotations/<id>cpos.txt, manifest.txt).
std::string write_dataset(const std::vector<AnnotatedSample>& samples,
                          const std::string& out_dir);

/// Deterministic content hash of a dataset (images + labels + identifiers).
std::uint64_t dataset_hash(const std::vector<AnnotatedSample>& samples);

/// Derives a decorrelated per-item random stream from a base seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index,
                          std::uint64_t stream = 0);

} // namespace graspmap
