#pragma once

#include <cstdint>
#include <vector>

#include "graspmap/types.hpp"

namespace graspmap {

/// Symmetric 2x2 covariance.
struct Cov2 {
    double xx = 1.0;
    double xy = 0.0;
    double yy = 1.0;

    double det() const { return xx * yy - xy * xy; }
    double trace() const { return xx + yy; }
    double min_eigenvalue() const;
    double max_eigenvalue() const;
    /// Unit eigenvector of the largest eigenvalue.
    Vec2 major_axis() const;
};

/// Result of fitting a K-component Gaussian mixture to a belief map.
/// nll is the negative weighted log-likelihood normalized by total map mass,
/// so it is invariant to uniform positive rescaling of the map.
struct GmmFit {
    std::vector<double> weights;    // phi_k, sums to 1
    std::vector<Vec2> means;        // mu_k
    std::vector<Cov2> covariances;  // sigma_k, eigenvalues >= kVarianceFloor
    double nll = 0.0;
    int iterations = 0;
    bool converged = false;
    std::vector<double> log_likelihood_trace;  // normalized, one entry per iteration

    int num_components() const { return static_cast<int>(weights.size()); }
};

/// Diagonal loading applied to covariances to keep them positive definite.
inline constexpr double kVarianceFloor = 0.25;  // px^2

/// Fits discarded when their normalized nll exceeds this (or they fail /
/// do not converge). Calibrated so clean rendered maps pass with wide margin.
inline constexpr double kDefaultDiscardNll = 12.0;

struct EmConfig {
    int k = 2;
    int max_iter = 1000;
    double tol = 1e-6;       // relative change of normalized log-likelihood
    std::uint64_t seed = 0;  // only used to scatter means on degenerate maps
};

/// Weighted-pixel EM: every pixel center is a data point weighted by its
/// confidence (weights normalized to sum 1). Means initialize at the two
/// highest-valued pixels at least 3 px apart; covariances start isotropic
/// with variance (width/16)^2. The weighted log-likelihood is non-decreasing
/// across iterations. Throws EmptyMapError when the map has no mass.
GmmFit em_fit(const BeliefMap& map, const EmConfig& config = {});

struct RankConfig {
    EmConfig em;
    double discard_nll = kDefaultDiscardNll;
};

struct RankedHypotheses {
    /// (hypothesis index, fit), ascending nll; ties broken by index.
    std::vector<std::pair<int, GmmFit>> ranked;
    /// Hypothesis indices discarded as too noisy to carry a grasp.
    std::vector<int> discarded;
};

/// Ranks hypothesis maps by goodness of their two-component fit (ascending
/// nll). Hypotheses whose fit fails, does not converge, or exceeds the
/// discard threshold are excluded and reported separately.
/// Throws AllDiscardedError when nothing survives.
RankedHypotheses rank_hypotheses(const std::vector<BeliefMap>& maps,
                                 const RankConfig& config = {});

} // namespace graspmap
