#include <doctest.h>

#include <filesystem>
#include <random>

#include "graspmap/network.hpp"
#include "graspmap/trainer.hpp"

using namespace graspmap;

namespace {

NetworkConfig tiny_config(int heads, std::uint64_t seed) {
    NetworkConfig cfg;
    cfg.input_width = 16;
    cfg.input_height = 16;
    cfg.num_heads = heads;
    cfg.encoder_channels = {4, 8};
    cfg.decoder_channels = {4};
    cfg.dropout_rate = 0.0;
    cfg.seed = seed;
    return cfg;
}

FloatImage random_image(int w, int h, std::uint64_t seed) {
    FloatImage img;
    img.width = w;
    img.height = h;
    img.chw.resize(static_cast<std::size_t>(3) * w * h);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (double& v : img.chw) v = unit(rng);
    return img;
}

BeliefMap random_map(int w, int h, std::uint64_t seed) {
    BeliefMap m(w, h);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (double& v : m.values()) v = unit(rng);
    return m;
}

/// Training loss under the current parameters (used by finite differences).
/// Uses the training forward path so the surface matches the backward pass;
/// with dropout_rate 0 the rng is inert.
double loss_at(const Regressor& net, const FloatImage& img, const BeliefMap& gt,
               double epsilon) {
    Regressor::TrainContext ctx;
    std::mt19937_64 rng(0);
    const HypothesisSet hyps = net.forward_train(img, rng, ctx);
    return hindsight_meta_loss(hyps, gt, epsilon).total;
}

} // namespace

TEST_CASE("config validation") {
    CHECK_NOTHROW(tiny_config(1, 0).validate());
    NetworkConfig bad = tiny_config(1, 0);
    bad.decoder_channels = {4, 4};
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = tiny_config(0, 0);
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = tiny_config(1, 0);
    bad.input_width = 17;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    NetworkConfig dflt;
    CHECK_NOTHROW(dflt.validate());
    CHECK(dflt.output_width() == 128);
    CHECK(dflt.output_height() == 128);
}

TEST_CASE("forward contracts") {
    const NetworkConfig cfg = tiny_config(3, 42);
    const Regressor net(cfg);
    const FloatImage img = random_image(16, 16, 1);

    SUBCASE("shapes and finiteness") {
        const HypothesisSet hyps = net.forward(img);
        REQUIRE(hyps.num_hypotheses() == 3);
        for (const BeliefMap& m : hyps.maps) {
            CHECK(m.width() == 8);
            CHECK(m.height() == 8);
            for (double v : m.values()) {
                CHECK(std::isfinite(v));
                CHECK(v >= 0.0);
                CHECK(v <= 1.0);
            }
        }
    }
    SUBCASE("eval forward is a pure function") {
        const HypothesisSet a = net.forward(img);
        const HypothesisSet b = net.forward(img);
        for (int m = 0; m < 3; ++m) {
            CHECK(a.maps[m].values() == b.maps[m].values());
        }
    }
    SUBCASE("zero weights give all-zero maps") {
        Regressor zeroed(cfg);
        for (ParameterTensor& p : zeroed.parameters()) {
            std::fill(p.values.begin(), p.values.end(), 0.0);
        }
        const HypothesisSet hyps = zeroed.forward(img);
        for (const BeliefMap& m : hyps.maps) {
            for (double v : m.values()) CHECK(v == 0.0);
        }
    }
    SUBCASE("wrong input size raises") {
        CHECK_THROWS_AS(net.forward(random_image(32, 32, 2)), ShapeMismatchError);
    }
    SUBCASE("head replication breaks symmetry") {
        const HypothesisSet hyps = net.forward(img);
        CHECK(hyps.maps[0].values() != hyps.maps[1].values());
    }
}

TEST_CASE("analytic gradients match central finite differences") {
    // Full downsized network, every layer type engaged.
    for (int heads : {1, 3}) {
        const NetworkConfig cfg = tiny_config(heads, 7 + heads);
        Regressor net(cfg);
        const FloatImage img = random_image(16, 16, 5);
        const BeliefMap gt = random_map(8, 8, 6);
        const double epsilon = 0.05;

        GradientBuffer grads = net.make_gradient_buffer();
        std::mt19937_64 rng(0);
        backward_step(net, img, gt, epsilon, /*hypothesis_dropout=*/0.0, rng, grads);

        std::mt19937_64 pick(99);
        double max_rel = 0.0;
        for (int probe = 0; probe < 60; ++probe) {
            const std::size_t t = pick() % net.parameters().size();
            ParameterTensor& p = net.parameters()[t];
            const std::size_t i = pick() % p.numel();
            const double analytic = grads[t][i];
            const double saved = p.values[i];
            double best = 1e9;
            for (double step : {1e-4, 1e-5, 1e-6}) {
                p.values[i] = saved + step;
                const double up = loss_at(net, img, gt, epsilon);
                p.values[i] = saved - step;
                const double down = loss_at(net, img, gt, epsilon);
                p.values[i] = saved;
                const double fd = (up - down) / (2 * step);
                const double rel = std::abs(fd - analytic) /
                                   std::max({std::abs(fd), std::abs(analytic), 1e-8});
                best = std::min(best, rel);
            }
            max_rel = std::max(max_rel, best);
        }
        CHECK(max_rel < 1e-4);
    }
}

TEST_CASE("gradient is zero at the optimum and scales linearly") {
    const NetworkConfig cfg = tiny_config(2, 11);
    Regressor net(cfg);
    const FloatImage img = random_image(16, 16, 3);

    // gt equal to one head's output: that head's data gradient vanishes.
    Regressor::TrainContext ctx;
    std::mt19937_64 fwd_rng(0);
    const HypothesisSet hyps = net.forward_train(img, fwd_rng, ctx);
    GradientBuffer grads = net.make_gradient_buffer();
    std::mt19937_64 rng(0);
    const MetaLossResult meta =
        backward_step(net, img, hyps.maps[0], 0.0, 0.0, rng, grads);
    CHECK(meta.total == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(meta.winner == 0);
    for (const auto& g : grads) {
        for (double v : g) CHECK(std::abs(v) < 1e-12);
    }
}

TEST_CASE("training-mode dropout is reproducible under a seed") {
    NetworkConfig cfg = tiny_config(1, 2);
    cfg.dropout_rate = 0.5;
    const Regressor net(cfg);
    const FloatImage img = random_image(16, 16, 9);
    Regressor::TrainContext ctx_a, ctx_b;
    std::mt19937_64 ra(55), rb(55), rc(56);
    const HypothesisSet a = net.forward_train(img, ra, ctx_a);
    const HypothesisSet b = net.forward_train(img, rb, ctx_b);
    CHECK(a.maps[0].values() == b.maps[0].values());
    Regressor::TrainContext ctx_c;
    const HypothesisSet c = net.forward_train(img, rc, ctx_c);
    CHECK(a.maps[0].values() != c.maps[0].values());
}

TEST_CASE("checkpoint round trip preserves config and parameters") {
    const NetworkConfig cfg = tiny_config(4, 77);
    Regressor net(cfg);
    const std::string path = "/tmp/graspmap_test_ckpt.bin";
    save_checkpoint(path, net);
    const Regressor back = load_checkpoint(path);

    CHECK(back.config().num_heads == 4);
    CHECK(back.config().input_width == 16);
    CHECK(back.config().encoder_channels == cfg.encoder_channels);
    REQUIRE(back.parameters().size() == net.parameters().size());
    for (std::size_t t = 0; t < net.parameters().size(); ++t) {
        const auto& a = net.parameters()[t];
        const auto& b = back.parameters()[t];
        CHECK(a.name == b.name);
        CHECK(a.shape == b.shape);
        for (std::size_t i = 0; i < a.numel(); ++i) {
            CHECK(b.values[i] == doctest::Approx(a.values[i]).epsilon(1e-6));
        }
    }
    // Same prediction through the round trip (f32 quantization tolerance).
    const FloatImage img = random_image(16, 16, 4);
    const HypothesisSet ha = net.forward(img);
    const HypothesisSet hb = back.forward(img);
    for (int m = 0; m < 4; ++m) {
        for (std::size_t i = 0; i < ha.maps[m].values().size(); ++i) {
            CHECK(hb.maps[m].values()[i] ==
                  doctest::Approx(ha.maps[m].values()[i]).epsilon(1e-5));
        }
    }
    CHECK_THROWS_AS(load_checkpoint("/tmp/missing_ckpt.bin"), IoError);
}
