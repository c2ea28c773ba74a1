#include "graspmap/mhp_loss.hpp"

#include <algorithm>
#include <stdexcept>

namespace graspmap {

double l2_loss(const BeliefMap& pred, const BeliefMap& gt) {
    if (!pred.same_shape(gt)) {
        throw DimensionMismatchError("l2_loss: map dimensions differ");
    }
    const auto& a = pred.values();
    const auto& b = gt.values();
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

MetaLossResult hindsight_meta_loss(const HypothesisSet& hyps, const BeliefMap& gt,
                                   double epsilon) {
    const int m = hyps.num_hypotheses();
    if (m < 1) throw std::invalid_argument("hindsight_meta_loss: no hypotheses");
    if (epsilon < 0.0 || epsilon >= 1.0) {
        throw std::invalid_argument("hindsight_meta_loss: epsilon must be in [0, 1)");
    }
    MetaLossResult result;
    result.per_hypothesis.resize(m);
    for (int i = 0; i < m; ++i) {
        result.per_hypothesis[i] = l2_loss(hyps.maps[i], gt);
        if (result.per_hypothesis[i] < result.per_hypothesis[result.winner]) {
            result.winner = i;
        }
    }
    result.weights.assign(m, m > 1 ? epsilon / (m - 1) : 0.0);
    result.weights[result.winner] = m > 1 ? 1.0 - epsilon : 1.0;
    result.total = 0.0;
    for (int i = 0; i < m; ++i) {
        result.total += result.weights[i] * result.per_hypothesis[i];
    }
    return result;
}

std::size_t select_gt_random_index(std::size_t count, std::mt19937_64& rng) {
    if (count == 0) throw EmptyGroundTruthError("select_gt_random: empty list");
    std::uniform_int_distribution<std::size_t> dist(0, count - 1);
    return dist(rng);
}

const BeliefMap& select_gt_random(const std::vector<BeliefMap>& gts, std::mt19937_64& rng) {
    return gts[select_gt_random_index(gts.size(), rng)];
}

std::size_t select_gt_largest_index(const std::vector<GraspRectangle>& gts) {
    if (gts.empty()) throw EmptyGroundTruthError("select_gt_largest: empty list");
    std::size_t best = 0;
    for (std::size_t i = 1; i < gts.size(); ++i) {
        if (gts[i].area() > gts[best].area()) best = i;
    }
    return best;
}

const GraspRectangle& select_gt_largest(const std::vector<GraspRectangle>& gts) {
    return gts[select_gt_largest_index(gts)];
}

std::vector<double> apply_hypothesis_dropout(const std::vector<double>& weights,
                                             double rate, std::mt19937_64& rng) {
    if (rate < 0.0 || rate >= 1.0) {
        throw std::invalid_argument("apply_hypothesis_dropout: rate must be in [0, 1)");
    }
    if (weights.empty()) {
        throw std::invalid_argument("apply_hypothesis_dropout: empty weights");
    }
    if (rate == 0.0) return weights;
    std::vector<double> out(weights.size());
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double sum = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        const bool drop = unit(rng) < rate;
        out[i] = drop ? 0.0 : weights[i];
        sum += out[i];
    }
    if (sum <= 0.0) {
        // Everything dropped (or only zero-weight survivors): keep the winner.
        const std::size_t winner = static_cast<std::size_t>(
            std::max_element(weights.begin(), weights.end()) - weights.begin());
        std::fill(out.begin(), out.end(), 0.0);
        out[winner] = 1.0;
        return out;
    }
    for (double& w : out) w /= sum;
    return out;
}

} // namespace graspmap
