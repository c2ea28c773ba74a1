#pragma once

#include <optional>
#include <vector>

#include "graspmap/types.hpp"

namespace graspmap {

/// Rectangle-metric gates: a prediction is valid when IoU with some ground
/// truth reaches kIouThreshold and the orientations differ by at most
/// kAngleThresholdDeg.
inline constexpr double kIouThreshold = 0.25;
inline constexpr double kAngleThresholdDeg = 30.0;

/// Intersection-over-union of two oriented rectangles, computed by exact
/// convex polygon clipping. Symmetric, in [0, 1].
double iou(const GraspRectangle& a, const GraspRectangle& b);

/// Smallest difference between two orientations under the 180-degree grasp
/// identification; result in [0, 90].
double angle_difference(double a_deg, double b_deg);

struct EvalVerdict {
    bool valid = false;
    double best_iou = 0.0;
    double angle_diff = 90.0;           // against the matched ground truth
    std::optional<int> matched_gt_index;
};

/// Applies the rectangle metric against every ground truth: valid iff some
/// gt passes both gates. The verdict reports the gt maximizing IoU among
/// those passing the angle gate, else the overall max-IoU gt.
/// Throws EmptyGroundTruthError.
EvalVerdict is_valid_grasp(const GraspRectangle& pred,
                           const std::vector<GraspRectangle>& gts);

/// Ranked rectangle hypotheses for one sample, best first, plus the count of
/// hypotheses that were discarded before decoding.
struct SamplePrediction {
    std::vector<GraspRectangle> ranked;
    int discarded = 0;

    int total_hypotheses() const { return static_cast<int>(ranked.size()) + discarded; }
};

struct EvalReport {
    double accuracy_top1 = 0.0;   // percent, top-ranked surviving hypothesis
    double accuracy_lower = 0.0;  // percent, every hypothesis an independent trial
    double accuracy_upper = 0.0;  // percent, any valid hypothesis counts
    int n_samples = 0;
    int n_discarded = 0;
};

struct PerSampleResult {
    EvalVerdict top1;
    int n_valid = 0;      // valid hypotheses among survivors
    int n_hypotheses = 0; // survivors + discarded
};

/// Aggregates the rectangle metric over aligned prediction / ground-truth
/// lists. Discarded hypotheses count as failures for top1 and the lower
/// limit and are simply absent for the upper limit.
/// Throws LengthMismatchError when the lists are not aligned.
EvalReport evaluate(const std::vector<SamplePrediction>& predictions,
                    const std::vector<std::vector<GraspRectangle>>& gts,
                    std::vector<PerSampleResult>* per_sample = nullptr);

/// Mean over all unordered pairs of (1 - cosine similarity) of the flattened
/// maps; the hypothesis-diversity diagnostic. Throws ZeroNormMapError if any
/// map has zero norm and DimensionMismatchError on shape disagreement.
double avg_cosine_distance(const std::vector<BeliefMap>& maps);

} // namespace graspmap
