#pragma once

#include <random>
#include <vector>

#include "graspmap/types.hpp"

namespace graspmap {

/// Soft-oracle weight given to the non-winning hypotheses.
inline constexpr double kDefaultEpsilon = 0.05;
inline constexpr double kDefaultHypothesisDropout = 0.05;

/// Squared Euclidean norm between two maps (sum of per-pixel squared
/// differences). Throws DimensionMismatchError.
double l2_loss(const BeliefMap& pred, const BeliefMap& gt);

struct MetaLossResult {
    double total = 0.0;
    std::vector<double> per_hypothesis;  // L_m
    std::vector<double> weights;         // winner 1-eps, others eps/(M-1); sums to 1
    int winner = 0;                      // argmin of L_m, ties to lowest index
};

/// Hindsight meta-loss with an epsilon-soft oracle: the hypothesis closest to
/// the ground truth carries weight 1-eps and every other one eps/(M-1), so
/// total = (1-eps) min_m L_m + eps/(M-1) sum_{m != argmin} L_m.
/// For M=1 the epsilon term vanishes and this is plain L2 regression.
/// Throws DimensionMismatchError.
MetaLossResult hindsight_meta_loss(const HypothesisSet& hyps, const BeliefMap& gt,
                                   double epsilon = kDefaultEpsilon);

/// Uniform ground-truth choice among the available maps, reproducible under
/// a fixed generator state. Throws EmptyGroundTruthError.
const BeliefMap& select_gt_random(const std::vector<BeliefMap>& gts, std::mt19937_64& rng);
std::size_t select_gt_random_index(std::size_t count, std::mt19937_64& rng);

/// The most stable grasp: maximum w*h area, ties broken by lowest index.
/// Throws EmptyGroundTruthError.
const GraspRectangle& select_gt_largest(const std::vector<GraspRectangle>& gts);
std::size_t select_gt_largest_index(const std::vector<GraspRectangle>& gts);

/// Hypothesis dropout on meta-loss weights: each weight is independently
/// zeroed with probability `rate`, survivors are rescaled to sum 1. When all
/// mass is dropped the winner (the largest input weight) is restored with
/// weight 1. Requires 0 <= rate < 1.
std::vector<double> apply_hypothesis_dropout(const std::vector<double>& weights,
                                             double rate, std::mt19937_64& rng);

} // namespace graspmap
