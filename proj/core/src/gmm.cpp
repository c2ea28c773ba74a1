#include "graspmap/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace graspmap {

double Cov2::min_eigenvalue() const {
    const double mean = (xx + yy) / 2.0;
    const double disc = std::sqrt(std::max(0.0, (xx - yy) * (xx - yy) / 4.0 + xy * xy));
    return mean - disc;
}

double Cov2::max_eigenvalue() const {
    const double mean = (xx + yy) / 2.0;
    const double disc = std::sqrt(std::max(0.0, (xx - yy) * (xx - yy) / 4.0 + xy * xy));
    return mean + disc;
}

Vec2 Cov2::major_axis() const {
    const double lam = max_eigenvalue();
    // (A - lam I) has rank <= 1; its null direction is the eigenvector.
    Vec2 v1{xy, lam - xx};
    Vec2 v2{lam - yy, xy};
    Vec2 v = v1.norm() >= v2.norm() ? v1 : v2;
    const double n = v.norm();
    if (n < 1e-15) return {1.0, 0.0};  // isotropic: any direction
    return v * (1.0 / n);
}

namespace {

// Pixels lighter than this fraction of the peak carry no useful mass and are
// excluded from the weighted point set up front (fixed for all iterations, so
// EM monotonicity on the reduced set is preserved).
constexpr double kMassCutoff = 1e-12;

struct WeightedPoints {
    std::vector<Vec2> xs;
    std::vector<double> ws;  // normalized to sum 1
};

WeightedPoints collect_points(const BeliefMap& map) {
    const double peak = map.max_value();
    WeightedPoints pts;
    if (peak <= 0.0) return pts;
    const double cutoff = peak * kMassCutoff;
    double total = 0.0;
    for (int y = 0; y < map.height(); ++y) {
        for (int x = 0; x < map.width(); ++x) {
            const double w = map.at(x, y);
            if (w > cutoff) {
                pts.xs.push_back({static_cast<double>(x), static_cast<double>(y)});
                pts.ws.push_back(w);
                total += w;
            }
        }
    }
    for (double& w : pts.ws) w /= total;
    return pts;
}

struct Component {
    double phi;
    Vec2 mu;
    Cov2 cov;
    // cached for density evaluation
    double log_norm;
    double ixx, ixy, iyy;  // inverse covariance

    void refresh() {
        const double det = cov.det();
        const double inv_det = 1.0 / det;
        ixx = cov.yy * inv_det;
        iyy = cov.xx * inv_det;
        ixy = -cov.xy * inv_det;
        log_norm = -std::log(2.0 * M_PI) - 0.5 * std::log(det);
    }

    double log_pdf(const Vec2& p) const {
        const double dx = p.x - mu.x;
        const double dy = p.y - mu.y;
        const double q = dx * dx * ixx + 2.0 * dx * dy * ixy + dy * dy * iyy;
        return log_norm - 0.5 * q;
    }
};

void apply_variance_floor(Cov2& c) {
    if (c.min_eigenvalue() < kVarianceFloor) {
        c.xx += kVarianceFloor;
        c.yy += kVarianceFloor;
    }
}

/// Greedy peak-pick initialization: highest-valued pixels pairwise >= 3 px
/// apart. Falls back to seeded random scatter when the map cannot supply
/// k distinct peaks.
std::vector<Vec2> initial_means(const BeliefMap& map, int k, std::uint64_t seed) {
    struct Pix {
        double v;
        int x, y;
    };
    std::vector<Pix> pix;
    pix.reserve(map.size());
    for (int y = 0; y < map.height(); ++y) {
        for (int x = 0; x < map.width(); ++x) {
            if (map.at(x, y) > 0.0) pix.push_back({map.at(x, y), x, y});
        }
    }
    std::stable_sort(pix.begin(), pix.end(),
                     [](const Pix& a, const Pix& b) { return a.v > b.v; });
    std::vector<Vec2> means;
    for (const Pix& p : pix) {
        if (static_cast<int>(means.size()) == k) break;
        const Vec2 cand{static_cast<double>(p.x), static_cast<double>(p.y)};
        bool ok = true;
        for (const Vec2& m : means) {
            if ((cand - m).norm() < 3.0) {
                ok = false;
                break;
            }
        }
        if (ok) means.push_back(cand);
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ux(0.0, map.width() - 1.0);
    std::uniform_real_distribution<double> uy(0.0, map.height() - 1.0);
    while (static_cast<int>(means.size()) < k) {
        means.push_back({ux(rng), uy(rng)});
    }
    return means;
}

} // namespace

GmmFit em_fit(const BeliefMap& map, const EmConfig& config) {
    if (config.k < 1) throw std::invalid_argument("em_fit: k must be >= 1");
    const WeightedPoints pts = collect_points(map);
    if (pts.xs.empty()) throw EmptyMapError("em_fit: map has zero total mass");

    const int k = config.k;
    const std::size_t n = pts.xs.size();

    std::vector<Component> comps(k);
    {
        auto means = initial_means(map, k, config.seed);
        const double var0 = (map.width() / 16.0) * (map.width() / 16.0);
        for (int j = 0; j < k; ++j) {
            comps[j].phi = 1.0 / k;
            comps[j].mu = means[j];
            comps[j].cov = {var0, 0.0, var0};
            comps[j].refresh();
        }
    }

    GmmFit fit;
    std::vector<double> resp(n * k);
    std::vector<double> logp(k);
    double prev_ll = 0.0;

    int iter = 0;
    for (; iter < config.max_iter; ++iter) {
        // E step: responsibilities and the weighted log-likelihood of the
        // current parameters, via per-pixel log-sum-exp.
        double ll = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double mx = -INFINITY;
            for (int j = 0; j < k; ++j) {
                logp[j] = std::log(comps[j].phi) + comps[j].log_pdf(pts.xs[i]);
                mx = std::max(mx, logp[j]);
            }
            double sum = 0.0;
            for (int j = 0; j < k; ++j) {
                resp[i * k + j] = std::exp(logp[j] - mx);
                sum += resp[i * k + j];
            }
            const double inv = 1.0 / sum;
            for (int j = 0; j < k; ++j) resp[i * k + j] *= inv;
            ll += pts.ws[i] * (mx + std::log(sum));
        }
        fit.log_likelihood_trace.push_back(ll);

        const bool done =
            iter > 0 && std::abs(ll - prev_ll) < config.tol * std::max(1.0, std::abs(prev_ll));
        prev_ll = ll;
        if (done) {
            fit.converged = true;
            break;
        }

        // M step: weighted maximum-likelihood updates.
        for (int j = 0; j < k; ++j) {
            double nk = 0.0;
            Vec2 mu{0.0, 0.0};
            for (std::size_t i = 0; i < n; ++i) {
                const double r = pts.ws[i] * resp[i * k + j];
                nk += r;
                mu.x += r * pts.xs[i].x;
                mu.y += r * pts.xs[i].y;
            }
            if (nk <= 0.0) {
                // Component starved of all mass; pin it where it is.
                comps[j].phi = 0.0;
                continue;
            }
            mu.x /= nk;
            mu.y /= nk;
            Cov2 cov{0.0, 0.0, 0.0};
            for (std::size_t i = 0; i < n; ++i) {
                const double r = pts.ws[i] * resp[i * k + j];
                const double dx = pts.xs[i].x - mu.x;
                const double dy = pts.xs[i].y - mu.y;
                cov.xx += r * dx * dx;
                cov.xy += r * dx * dy;
                cov.yy += r * dy * dy;
            }
            cov.xx /= nk;
            cov.xy /= nk;
            cov.yy /= nk;
            apply_variance_floor(cov);
            if (cov.det() <= 0.0 || !std::isfinite(cov.det())) {
                throw SingularCovarianceError("em_fit: covariance update not positive definite");
            }
            comps[j].phi = nk;
            comps[j].mu = mu;
            comps[j].cov = cov;
            comps[j].refresh();
        }
    }

    fit.iterations = static_cast<int>(fit.log_likelihood_trace.size());
    fit.nll = -prev_ll;
    fit.weights.resize(k);
    fit.means.resize(k);
    fit.covariances.resize(k);
    for (int j = 0; j < k; ++j) {
        fit.weights[j] = comps[j].phi;
        fit.means[j] = comps[j].mu;
        fit.covariances[j] = comps[j].cov;
    }
    return fit;
}

RankedHypotheses rank_hypotheses(const std::vector<BeliefMap>& maps,
                                 const RankConfig& config) {
    if (maps.empty()) throw std::invalid_argument("rank_hypotheses: no maps");
    RankedHypotheses out;
    for (int i = 0; i < static_cast<int>(maps.size()); ++i) {
        bool keep = false;
        GmmFit fit;
        try {
            fit = em_fit(maps[i], config.em);
            keep = fit.converged && fit.nll <= config.discard_nll;
        } catch (const Error&) {
            keep = false;
        }
        if (keep) {
            out.ranked.emplace_back(i, std::move(fit));
        } else {
            out.discarded.push_back(i);
        }
    }
    if (out.ranked.empty()) {
        throw AllDiscardedError("rank_hypotheses: every hypothesis was discarded");
    }
    std::stable_sort(out.ranked.begin(), out.ranked.end(),
                     [](const auto& a, const auto& b) { return a.second.nll < b.second.nll; });
    return out;
}

} // namespace graspmap
