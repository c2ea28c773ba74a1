#include <doctest.h>

#include <array>
#include <random>

#include "graspmap/mhp_loss.hpp"

using namespace graspmap;

namespace {

BeliefMap random_map(int w, int h, std::mt19937_64& rng) {
    BeliefMap m(w, h);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (double& v : m.values()) v = unit(rng);
    return m;
}

BeliefMap const_map(int w, int h, double v) { return BeliefMap(w, h, v); }

} // namespace

TEST_CASE("l2_loss is the squared Euclidean norm") {
    CHECK(l2_loss(const_map(8, 8, 0.3), const_map(8, 8, 0.3)) == doctest::Approx(0.0));

    BeliefMap gt(8, 8, 0.0);
    gt.at(3, 4) = 1.0;
    CHECK(l2_loss(const_map(8, 8, 0.0), gt) == doctest::Approx(1.0));

    // Scalar-loop oracle on a random pair.
    std::mt19937_64 rng(2);
    const BeliefMap a = random_map(8, 8, rng);
    const BeliefMap b = random_map(8, 8, rng);
    double expected = 0.0;
    for (int y = 0; y < 8; ++y) {
        for (int x = 0; x < 8; ++x) {
            expected += (a.at(x, y) - b.at(x, y)) * (a.at(x, y) - b.at(x, y));
        }
    }
    CHECK(l2_loss(a, b) == doctest::Approx(expected).epsilon(1e-12));

    CHECK_THROWS_AS(l2_loss(const_map(8, 8, 0.0), const_map(4, 4, 0.0)),
                    DimensionMismatchError);
}

TEST_CASE("hindsight meta-loss hand cases") {
    // Construct hypotheses with exact losses 1.0 and 3.0 against a zero gt:
    // maps are 4x4 with constant values 0.25 and sqrt(3)/4.
    BeliefMap gt(4, 4, 0.0);
    HypothesisSet hyps;
    hyps.maps.push_back(const_map(4, 4, 0.25));               // L = 16*(1/16) = 1
    hyps.maps.push_back(const_map(4, 4, std::sqrt(3.0) / 4)); // L = 3

    SUBCASE("M=2, L=[1,3], eps=0.05 -> 1.1") {
        const MetaLossResult r = hindsight_meta_loss(hyps, gt, 0.05);
        CHECK(r.per_hypothesis[0] == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(r.per_hypothesis[1] == doctest::Approx(3.0).epsilon(1e-12));
        CHECK(r.total == doctest::Approx(1.1).epsilon(1e-12));
        CHECK(r.winner == 0);
        CHECK(r.weights[0] == doctest::Approx(0.95));
        CHECK(r.weights[1] == doctest::Approx(0.05));
    }
    SUBCASE("eps=0 reduces to the pure minimum") {
        const MetaLossResult r = hindsight_meta_loss(hyps, gt, 0.0);
        CHECK(r.total == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(r.weights[0] == doctest::Approx(1.0));
        CHECK(r.weights[1] == doctest::Approx(0.0));
    }
    SUBCASE("identical hypotheses give L1 regardless of eps") {
        HypothesisSet same;
        same.maps = {hyps.maps[0], hyps.maps[0], hyps.maps[0]};
        for (double eps : {0.0, 0.05, 0.3}) {
            const MetaLossResult r = hindsight_meta_loss(same, gt, eps);
            CHECK(r.total == doctest::Approx(1.0).epsilon(1e-12));
            CHECK(r.winner == 0);  // tie broken by lowest index
        }
    }
    SUBCASE("M=1 is plain L2 regression") {
        HypothesisSet one;
        one.maps = {hyps.maps[1]};
        const MetaLossResult r = hindsight_meta_loss(one, gt, 0.05);
        CHECK(r.total == doctest::Approx(3.0).epsilon(1e-12));
        CHECK(r.weights.size() == 1);
        CHECK(r.weights[0] == doctest::Approx(1.0));
    }
}

TEST_CASE("meta-loss weights sum to one and obey the lower bound") {
    std::mt19937_64 rng(77);
    BeliefMap gt = random_map(6, 6, rng);
    for (int m = 2; m <= 6; ++m) {
        HypothesisSet hyps;
        for (int i = 0; i < m; ++i) hyps.maps.push_back(random_map(6, 6, rng));
        const MetaLossResult r = hindsight_meta_loss(hyps, gt, 0.05);
        double sum = 0.0;
        double min_loss = r.per_hypothesis[0];
        for (int i = 0; i < m; ++i) {
            sum += r.weights[i];
            min_loss = std::min(min_loss, r.per_hypothesis[i]);
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(r.weights[r.winner] == doctest::Approx(0.95));
        CHECK(r.total >= (1.0 - 0.05) * min_loss - 1e-12);
    }
}

TEST_CASE("meta-loss decreases when the winner improves and is permutation invariant") {
    BeliefMap gt(4, 4, 0.0);
    HypothesisSet hyps;
    hyps.maps = {const_map(4, 4, 0.25), const_map(4, 4, 0.5)};
    const double before = hindsight_meta_loss(hyps, gt, 0.05).total;
    hyps.maps[0] = const_map(4, 4, 0.2);
    const double after = hindsight_meta_loss(hyps, gt, 0.05).total;
    CHECK(after < before);

    HypothesisSet swapped;
    swapped.maps = {hyps.maps[1], hyps.maps[0]};
    const MetaLossResult a = hindsight_meta_loss(hyps, gt, 0.05);
    const MetaLossResult b = hindsight_meta_loss(swapped, gt, 0.05);
    CHECK(a.total == doctest::Approx(b.total).epsilon(1e-12));
    CHECK(a.winner == 0);
    CHECK(b.winner == 1);
}

TEST_CASE("meta-loss gradient equals weight times per-map L2 gradient") {
    // Central finite differences on every pixel of every hypothesis.
    std::mt19937_64 rng(5);
    BeliefMap gt = random_map(8, 8, rng);
    HypothesisSet hyps;
    for (int i = 0; i < 3; ++i) hyps.maps.push_back(random_map(8, 8, rng));
    const MetaLossResult base = hindsight_meta_loss(hyps, gt, 0.05);
    const double step = 1e-5;
    double max_rel = 0.0;
    for (int m = 0; m < 3; ++m) {
        for (int i = 0; i < 64; ++i) {
            const double analytic =
                2.0 * base.weights[m] * (hyps.maps[m].values()[i] - gt.values()[i]);
            HypothesisSet plus = hyps, minus = hyps;
            plus.maps[m].values()[i] += step;
            minus.maps[m].values()[i] -= step;
            const double fd = (hindsight_meta_loss(plus, gt, 0.05).total -
                               hindsight_meta_loss(minus, gt, 0.05).total) /
                              (2 * step);
            const double rel = std::abs(fd - analytic) /
                               std::max({std::abs(fd), std::abs(analytic), 1e-8});
            max_rel = std::max(max_rel, rel);
        }
    }
    CHECK(max_rel < 1e-4);
}

TEST_CASE("select_gt_random is uniform and seeded") {
    std::vector<BeliefMap> gts;
    for (int i = 0; i < 4; ++i) gts.push_back(const_map(4, 4, 0.1 * (i + 1)));

    SUBCASE("single gt returns it") {
        std::mt19937_64 rng(0);
        std::vector<BeliefMap> one = {gts[0]};
        CHECK(&select_gt_random(one, rng) == &one[0]);
    }
    SUBCASE("sequences are reproducible under a fixed seed") {
        std::mt19937_64 a(123), b(123);
        for (int i = 0; i < 50; ++i) {
            CHECK(select_gt_random_index(3, a) == select_gt_random_index(3, b));
        }
    }
    SUBCASE("frequencies over 10000 draws") {
        std::mt19937_64 rng(7);
        std::array<int, 4> counts{};
        for (int i = 0; i < 10000; ++i) ++counts[select_gt_random_index(4, rng)];
        for (int c : counts) {
            CHECK(c >= 2200);
            CHECK(c <= 2800);
        }
    }
    SUBCASE("empty list raises") {
        std::mt19937_64 rng(0);
        CHECK_THROWS_AS(select_gt_random_index(0, rng), EmptyGroundTruthError);
    }
}

TEST_CASE("select_gt_largest maximizes area with index tie-break") {
    std::vector<GraspRectangle> gts = {GraspRectangle(0, 0, 0, 2, 4),   // 8
                                       GraspRectangle(0, 0, 0, 4, 8),   // 32
                                       GraspRectangle(0, 0, 0, 8, 4)};  // 32
    CHECK(select_gt_largest_index(gts) == 1);
    CHECK(select_gt_largest_index({gts[0]}) == 0);
    CHECK_THROWS_AS(select_gt_largest({}), EmptyGroundTruthError);

    // Linear-scan oracle on random lists.
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> unit(0.1, 10.0);
    for (int t = 0; t < 100; ++t) {
        std::vector<GraspRectangle> list;
        for (int i = 0; i < 7; ++i) {
            list.push_back(GraspRectangle(0, 0, 0, unit(rng), unit(rng)));
        }
        std::size_t best = 0;
        for (std::size_t i = 0; i < list.size(); ++i) {
            if (list[i].area() > list[best].area()) best = i;
        }
        CHECK(select_gt_largest_index(list) == best);
    }
}

TEST_CASE("hypothesis dropout") {
    const std::vector<double> weights = {0.95, 0.0125, 0.0125, 0.0125, 0.0125};

    SUBCASE("rate 0 leaves weights unchanged") {
        std::mt19937_64 rng(1);
        CHECK(apply_hypothesis_dropout(weights, 0.0, rng) == weights);
    }
    SUBCASE("survivors sum to 1 under a deterministic mask") {
        std::mt19937_64 a(42), b(42);
        const auto wa = apply_hypothesis_dropout(weights, 0.05, a);
        const auto wb = apply_hypothesis_dropout(weights, 0.05, b);
        CHECK(wa == wb);
        double sum = 0.0;
        for (double w : wa) sum += w;
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    }
    SUBCASE("drop frequency matches the rate") {
        std::mt19937_64 rng(11);
        std::array<int, 5> dropped{};
        const int trials = 10000;
        for (int t = 0; t < trials; ++t) {
            const auto w = apply_hypothesis_dropout(weights, 0.05, rng);
            for (int i = 0; i < 5; ++i) {
                if (w[i] == 0.0 && weights[i] != 0.0) ++dropped[i];
            }
        }
        for (int d : dropped) {
            CHECK(d >= static_cast<int>(0.04 * trials));
            CHECK(d <= static_cast<int>(0.06 * trials));
        }
    }
    SUBCASE("all dropped restores the winner") {
        std::mt19937_64 rng(3);
        const auto w = apply_hypothesis_dropout(weights, 0.999, rng);
        // With rate ~1 everything drops; the winner comes back with weight 1.
        CHECK(w[0] == doctest::Approx(1.0));
        for (int i = 1; i < 5; ++i) CHECK(w[i] == 0.0);
    }
    SUBCASE("zero-weight survivors count as all-dropped") {
        std::vector<double> pure_min = {1.0, 0.0, 0.0};
        // Find a seed that drops the winner but keeps a zero-weight slot.
        for (std::uint64_t seed = 0; seed < 200; ++seed) {
            std::mt19937_64 probe(seed);
            std::uniform_real_distribution<double> unit(0.0, 1.0);
            const bool d0 = unit(probe) < 0.5;
            const bool d1 = unit(probe) < 0.5;
            const bool d2 = unit(probe) < 0.5;
            if (d0 && !(d1 && d2)) {
                std::mt19937_64 rng(seed);
                const auto w = apply_hypothesis_dropout(pure_min, 0.5, rng);
                CHECK(w[0] == doctest::Approx(1.0));
                return;
            }
        }
        FAIL("no suitable seed found");
    }
}
