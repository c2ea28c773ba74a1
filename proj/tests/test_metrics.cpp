#include <doctest.h>

#include <random>

#include "graspmap/geometry.hpp"
#include "graspmap/metrics.hpp"
#include "oracles.hpp"

using namespace graspmap;

TEST_CASE("iou basics") {
    const GraspRectangle r(10, 20, 33, 7, 13);
    CHECK(iou(r, r) == doctest::Approx(1.0).epsilon(1e-12));

    // Two axis-aligned 1x1 squares offset by 0.5 horizontally: 0.5 / 1.5.
    const GraspRectangle a(0, 0, 0, 1, 1);
    const GraspRectangle b(0.5, 0, 0, 1, 1);
    CHECK(iou(a, b) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

    // Disjoint.
    CHECK(iou(a, GraspRectangle(10, 10, 0, 1, 1)) == doctest::Approx(0.0));
}

TEST_CASE("iou is symmetric, bounded, and agrees with the rasterization oracle") {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double max_err = 0.0;
    for (int i = 0; i < 100; ++i) {
        const GraspRectangle a(40 + 40 * unit(rng), 40 + 40 * unit(rng), 180 * unit(rng),
                               15 + 25 * unit(rng), 15 + 35 * unit(rng));
        // Bias the pair towards overlap so the interesting branch is hit.
        const GraspRectangle b(a.x + 30 * (unit(rng) - 0.5), a.y + 30 * (unit(rng) - 0.5),
                               180 * unit(rng), 15 + 25 * unit(rng), 15 + 35 * unit(rng));
        const double v = iou(a, b);
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
        CHECK(v == doctest::Approx(iou(b, a)).epsilon(1e-12));
        max_err = std::max(max_err, std::abs(v - oracle::rasterized_iou(a, b)));
    }
    CHECK(max_err < 1e-2);
}

TEST_CASE("angle_difference wraps at 180") {
    CHECK(angle_difference(0, 180) == doctest::Approx(0.0));
    CHECK(angle_difference(10, 175) == doctest::Approx(15.0));
    CHECK(angle_difference(30, 30) == doctest::Approx(0.0));
    CHECK(angle_difference(0, 90) == doctest::Approx(90.0));
    CHECK(angle_difference(179, 1) == doctest::Approx(2.0));
    // Symmetry and 180-invariance.
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> a(0.0, 360.0);
    for (int i = 0; i < 200; ++i) {
        const double x = a(rng), y = a(rng);
        CHECK(angle_difference(x, y) == doctest::Approx(angle_difference(y, x)));
        CHECK(angle_difference(x + 180, y) == doctest::Approx(angle_difference(x, y)));
        CHECK(angle_difference(x, y) >= 0.0);
        CHECK(angle_difference(x, y) <= 90.0);
    }
}

TEST_CASE("is_valid_grasp applies both gates") {
    const GraspRectangle gt(50, 50, 0, 10, 20);

    SUBCASE("exact match") {
        const EvalVerdict v = is_valid_grasp(gt, {gt});
        CHECK(v.valid);
        CHECK(v.best_iou == doctest::Approx(1.0));
        CHECK(v.angle_diff == doctest::Approx(0.0));
        CHECK(v.matched_gt_index == 0);
    }
    SUBCASE("angle gate fails even with high IoU") {
        const GraspRectangle pred(50, 50, 45, 10, 20);
        REQUIRE(iou(pred, gt) >= 0.25);
        CHECK_FALSE(is_valid_grasp(pred, {gt}).valid);
    }
    SUBCASE("valid against any ground truth") {
        // Constructed pair: same center, 20 deg apart, overlapping enough.
        const GraspRectangle pred(50, 50, 20, 10, 20);
        const double v = iou(pred, gt);
        CHECK(v >= 0.25);
        CHECK(std::abs(v - oracle::rasterized_iou(pred, gt)) < 1e-2);
        std::vector<GraspRectangle> gts = {
            GraspRectangle(200, 200, 90, 5, 5), GraspRectangle(10, 10, 10, 4, 8),
            GraspRectangle(90, 90, 150, 6, 9), gt, GraspRectangle(30, 80, 70, 7, 7)};
        const EvalVerdict verdict = is_valid_grasp(pred, gts);
        CHECK(verdict.valid);
        CHECK(verdict.matched_gt_index == 3);
        CHECK(verdict.angle_diff == doctest::Approx(20.0));
    }
    SUBCASE("adding ground truths never invalidates") {
        std::mt19937_64 rng(9);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        for (int i = 0; i < 50; ++i) {
            const GraspRectangle pred(50 + 20 * unit(rng), 50 + 20 * unit(rng),
                                      180 * unit(rng), 8 + 10 * unit(rng),
                                      12 + 10 * unit(rng));
            std::vector<GraspRectangle> gts = {gt};
            const bool before = is_valid_grasp(pred, gts).valid;
            gts.push_back(GraspRectangle(52, 48, 170 * unit(rng), 9, 18));
            const bool after = is_valid_grasp(pred, gts).valid;
            if (before) CHECK(after);
        }
    }
    SUBCASE("empty ground truth") {
        CHECK_THROWS_AS(is_valid_grasp(gt, {}), EmptyGroundTruthError);
    }
}

TEST_CASE("evaluate unrolls the three accuracies") {
    const GraspRectangle gt(50, 50, 0, 10, 20);
    const GraspRectangle good = gt;
    const GraspRectangle bad(50, 50, 90, 10, 20);  // angle gate fails

    SUBCASE("all predictions match") {
        std::vector<SamplePrediction> preds(4);
        for (auto& p : preds) p.ranked = {good};
        const EvalReport r = evaluate(preds, std::vector<std::vector<GraspRectangle>>(
                                                 4, {gt}));
        CHECK(r.accuracy_top1 == doctest::Approx(100.0));
        CHECK(r.accuracy_lower == doctest::Approx(100.0));
        CHECK(r.accuracy_upper == doctest::Approx(100.0));
        CHECK(r.n_samples == 4);
    }
    SUBCASE("top-ranked invalid, second valid") {
        SamplePrediction p;
        p.ranked = {bad, good};
        const EvalReport r = evaluate({p}, {{gt}});
        CHECK(r.accuracy_top1 == doctest::Approx(0.0));
        CHECK(r.accuracy_upper == doctest::Approx(100.0));
        CHECK(r.accuracy_lower == doctest::Approx(50.0));
    }
    SUBCASE("discarded hypotheses are lower/top1 failures, absent for upper") {
        SamplePrediction p;
        p.ranked = {good};
        p.discarded = 3;
        const EvalReport r = evaluate({p}, {{gt}});
        CHECK(r.accuracy_top1 == doctest::Approx(100.0));
        CHECK(r.accuracy_upper == doctest::Approx(100.0));
        CHECK(r.accuracy_lower == doctest::Approx(25.0));
        CHECK(r.n_discarded == 3);
    }
    SUBCASE("length mismatch") {
        CHECK_THROWS_AS(evaluate({SamplePrediction{}}, {}), LengthMismatchError);
    }
    SUBCASE("lower and top1 never exceed upper") {
        std::mt19937_64 rng(31);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        std::vector<SamplePrediction> preds;
        std::vector<std::vector<GraspRectangle>> gts;
        for (int s = 0; s < 40; ++s) {
            SamplePrediction p;
            for (int m = 0; m < 5; ++m) {
                if (unit(rng) < 0.2) {
                    ++p.discarded;
                } else {
                    p.ranked.push_back(GraspRectangle(
                        45 + 10 * unit(rng), 45 + 10 * unit(rng),
                        unit(rng) < 0.5 ? 5 * unit(rng) : 90 * unit(rng), 10, 20));
                }
            }
            preds.push_back(p);
            gts.push_back({gt});
        }
        const EvalReport r = evaluate(preds, gts);
        CHECK(r.accuracy_lower <= r.accuracy_upper + 1e-9);
        CHECK(r.accuracy_top1 <= r.accuracy_upper + 1e-9);
    }
}

TEST_CASE("avg_cosine_distance") {
    BeliefMap a(8, 8, 0.0);
    a.at(1, 1) = 1.0;
    BeliefMap b = a;

    SUBCASE("identical maps have distance 0") {
        CHECK(avg_cosine_distance({a, b}) == doctest::Approx(0.0).epsilon(1e-12));
    }
    SUBCASE("disjoint support has distance 1") {
        BeliefMap c(8, 8, 0.0);
        c.at(5, 5) = 0.7;
        CHECK(avg_cosine_distance({a, c}) == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("zero-norm map raises") {
        BeliefMap z(8, 8, 0.0);
        CHECK_THROWS_AS(avg_cosine_distance({a, z}), ZeroNormMapError);
    }
    SUBCASE("dimension mismatch raises") {
        BeliefMap big(16, 16, 0.1);
        CHECK_THROWS_AS(avg_cosine_distance({a, big}), DimensionMismatchError);
    }
    SUBCASE("pairwise mean over three maps") {
        BeliefMap c(8, 8, 0.0);
        c.at(5, 5) = 0.7;
        // pairs: (a,b)=0, (a,c)=1, (b,c)=1 -> mean 2/3
        CHECK(avg_cosine_distance({a, b, c}) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    }
}
