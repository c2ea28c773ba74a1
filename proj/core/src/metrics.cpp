#include "graspmap/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "graspmap/geometry.hpp"

namespace graspmap {

namespace {

double polygon_area(const std::vector<Vec2>& poly) {
    double s = 0.0;
    const std::size_t n = poly.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2& a = poly[i];
        const Vec2& b = poly[(i + 1) % n];
        s += a.x * b.y - b.x * a.y;
    }
    return std::abs(s) / 2.0;
}

/// Sutherland-Hodgman clip of a convex polygon against the half-plane on the
/// left of edge a->b (counter-clockwise clip polygon).
std::vector<Vec2> clip_half_plane(const std::vector<Vec2>& poly, const Vec2& a, const Vec2& b) {
    std::vector<Vec2> out;
    const std::size_t n = poly.size();
    auto side = [&](const Vec2& p) {
        return (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
    };
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2& p = poly[i];
        const Vec2& q = poly[(i + 1) % n];
        const double sp = side(p);
        const double sq = side(q);
        if (sp >= 0.0) out.push_back(p);
        if ((sp > 0.0 && sq < 0.0) || (sp < 0.0 && sq > 0.0)) {
            const double t = sp / (sp - sq);
            out.push_back({p.x + t * (q.x - p.x), p.y + t * (q.y - p.y)});
        }
    }
    return out;
}

std::vector<Vec2> convex_intersection(const std::vector<Vec2>& subject,
                                      const std::vector<Vec2>& clip) {
    std::vector<Vec2> poly = subject;
    const std::size_t n = clip.size();
    for (std::size_t i = 0; i < n && !poly.empty(); ++i) {
        poly = clip_half_plane(poly, clip[i], clip[(i + 1) % n]);
    }
    return poly;
}

} // namespace

double iou(const GraspRectangle& a, const GraspRectangle& b) {
    const auto ca = rectangle_to_corners(a);
    const auto cb = rectangle_to_corners(b);
    const std::vector<Vec2> pa(ca.begin(), ca.end());
    const std::vector<Vec2> pb(cb.begin(), cb.end());
    const auto inter = convex_intersection(pa, pb);
    if (inter.size() < 3) return 0.0;
    const double ai = polygon_area(inter);
    const double au = a.area() + b.area() - ai;
    if (au <= 0.0) return 0.0;
    return std::clamp(ai / au, 0.0, 1.0);
}

double angle_difference(double a_deg, double b_deg) {
    double d = std::fmod(std::abs(a_deg - b_deg), 180.0);
    return std::min(d, 180.0 - d);
}

EvalVerdict is_valid_grasp(const GraspRectangle& pred,
                           const std::vector<GraspRectangle>& gts) {
    if (gts.empty()) throw EmptyGroundTruthError("is_valid_grasp: no ground truth");
    EvalVerdict verdict;
    double best_passing_iou = -1.0;
    double best_any_iou = -1.0;
    int best_passing = -1;
    int best_any = -1;
    std::vector<double> ious(gts.size());
    for (std::size_t i = 0; i < gts.size(); ++i) {
        const double v = iou(pred, gts[i]);
        ious[i] = v;
        const double ad = angle_difference(pred.theta, gts[i].theta);
        if (v >= kIouThreshold && ad <= kAngleThresholdDeg && v > best_passing_iou) {
            best_passing_iou = v;
            best_passing = static_cast<int>(i);
        }
        if (v > best_any_iou) {
            best_any_iou = v;
            best_any = static_cast<int>(i);
        }
    }
    const int chosen = best_passing >= 0 ? best_passing : best_any;
    verdict.valid = best_passing >= 0;
    verdict.best_iou = ious[chosen];
    verdict.angle_diff = angle_difference(pred.theta, gts[chosen].theta);
    verdict.matched_gt_index = chosen;
    return verdict;
}

EvalReport evaluate(const std::vector<SamplePrediction>& predictions,
                    const std::vector<std::vector<GraspRectangle>>& gts,
                    std::vector<PerSampleResult>* per_sample) {
    if (predictions.size() != gts.size()) {
        throw LengthMismatchError("evaluate: prediction/ground-truth lists not aligned");
    }
    EvalReport report;
    report.n_samples = static_cast<int>(predictions.size());
    if (per_sample) per_sample->clear();

    long top1_hits = 0;
    long valid_hyps = 0;
    long total_hyps = 0;
    long upper_hits = 0;
    for (std::size_t s = 0; s < predictions.size(); ++s) {
        const SamplePrediction& pred = predictions[s];
        PerSampleResult result;
        result.n_hypotheses = pred.total_hypotheses();
        report.n_discarded += pred.discarded;
        bool any_valid = false;
        for (std::size_t i = 0; i < pred.ranked.size(); ++i) {
            const EvalVerdict v = is_valid_grasp(pred.ranked[i], gts[s]);
            if (i == 0) result.top1 = v;
            if (v.valid) {
                ++result.n_valid;
                any_valid = true;
            }
        }
        top1_hits += (!pred.ranked.empty() && result.top1.valid) ? 1 : 0;
        valid_hyps += result.n_valid;
        total_hyps += result.n_hypotheses;
        upper_hits += any_valid ? 1 : 0;
        if (per_sample) per_sample->push_back(result);
    }
    if (report.n_samples > 0) {
        report.accuracy_top1 = 100.0 * top1_hits / report.n_samples;
        report.accuracy_upper = 100.0 * upper_hits / report.n_samples;
    }
    if (total_hyps > 0) {
        report.accuracy_lower = 100.0 * valid_hyps / total_hyps;
    }
    return report;
}

double avg_cosine_distance(const std::vector<BeliefMap>& maps) {
    if (maps.size() < 2) {
        throw std::invalid_argument("avg_cosine_distance: need at least 2 maps");
    }
    const std::size_t m = maps.size();
    std::vector<double> norms(m);
    for (std::size_t i = 0; i < m; ++i) {
        if (!maps[i].same_shape(maps[0])) {
            throw DimensionMismatchError("avg_cosine_distance: map dimensions differ");
        }
        double s = 0.0;
        for (double v : maps[i].values()) s += v * v;
        norms[i] = std::sqrt(s);
        if (norms[i] <= 0.0) throw ZeroNormMapError("avg_cosine_distance: zero-norm map");
    }
    double total = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = i + 1; j < m; ++j) {
            double dot = 0.0;
            const auto& a = maps[i].values();
            const auto& b = maps[j].values();
            for (std::size_t t = 0; t < a.size(); ++t) dot += a[t] * b[t];
            total += 1.0 - dot / (norms[i] * norms[j]);
            ++pairs;
        }
    }
    return total / static_cast<double>(pairs);
}

} // namespace graspmap
