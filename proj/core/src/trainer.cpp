#include "graspmap/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <numeric>
#include <thread>

#include "graspmap/logging.hpp"

namespace graspmap {

GtPolicy gt_policy_from_string(const std::string& name) {
    if (name == "auto") return GtPolicy::kAuto;
    if (name == "random") return GtPolicy::kRandom;
    if (name == "largest_area") return GtPolicy::kLargestArea;
    throw ConfigError("unknown gt policy: " + name);
}

std::string to_string(GtPolicy policy) {
    switch (policy) {
        case GtPolicy::kAuto: return "auto";
        case GtPolicy::kRandom: return "random";
        case GtPolicy::kLargestArea: return "largest_area";
    }
    return "?";
}

SgdState make_sgd_state(const std::vector<ParameterTensor>& params) {
    SgdState state;
    state.velocity.resize(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
        state.velocity[i].assign(params[i].numel(), 0.0);
    }
    return state;
}

void sgd_step(std::vector<ParameterTensor>& params, const TrainConfig& config,
              SgdState& state) {
    if (state.velocity.size() != params.size()) {
        throw std::invalid_argument("sgd_step: state does not match parameters");
    }
    for (std::size_t t = 0; t < params.size(); ++t) {
        ParameterTensor& p = params[t];
        std::vector<double>& v = state.velocity[t];
        for (std::size_t i = 0; i < p.numel(); ++i) {
            const double g = p.grad[i];
            if (!std::isfinite(g)) {
                throw NonFiniteGradientError("sgd_step: non-finite gradient in " + p.name);
            }
            v[i] = config.momentum * v[i] -
                   config.learning_rate * (g + config.weight_decay * p.values[i]);
            p.values[i] += v[i];
        }
    }
}

MetaLossResult backward_step(const Regressor& net, const FloatImage& image,
                             const BeliefMap& gt, double epsilon,
                             double hypothesis_dropout_rate, std::mt19937_64& rng,
                             GradientBuffer& grads) {
    Regressor::TrainContext ctx;
    HypothesisSet hyps = net.forward_train(image, rng, ctx);
    MetaLossResult meta = hindsight_meta_loss(hyps, gt, epsilon);
    std::vector<double> weights = meta.weights;
    if (hypothesis_dropout_rate > 0.0) {
        weights = apply_hypothesis_dropout(weights, hypothesis_dropout_rate, rng);
    }
    // d(total)/d(map_m) = w_m * 2 (P_m - G); the argmin is treated as constant.
    std::vector<BeliefMap> grad_maps;
    grad_maps.reserve(hyps.maps.size());
    for (std::size_t m = 0; m < hyps.maps.size(); ++m) {
        BeliefMap g(gt.width(), gt.height());
        const double wm = weights[m];
        if (wm != 0.0) {
            const auto& pv = hyps.maps[m].values();
            const auto& gv = gt.values();
            for (std::size_t i = 0; i < g.values().size(); ++i) {
                g.values()[i] = 2.0 * wm * (pv[i] - gv[i]);
            }
        }
        grad_maps.push_back(std::move(g));
    }
    net.backward(ctx, grad_maps, grads);
    return meta;
}

namespace {

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

struct SamplePlan {
    int sample_index = 0;
    std::uint64_t step_seed = 0;  // drives dropout masks and gt choice
};

} // namespace

std::string format_epoch_record(const EpochRecord& r) {
    char buf[160];
    if (r.val_accuracy >= 0.0) {
        std::snprintf(buf, sizeof(buf),
                      "epoch=%d train_loss=%.6f val_accuracy=%.2f timestamp=%s", r.epoch,
                      r.train_loss, r.val_accuracy, r.timestamp.c_str());
    } else {
        std::snprintf(buf, sizeof(buf), "epoch=%d train_loss=%.6f timestamp=%s", r.epoch,
                      r.train_loss, r.timestamp.c_str());
    }
    return buf;
}

TrainResult train(const std::vector<PreprocessedSample>& dataset, const SplitFold& fold,
                  const NetworkConfig& net_config, const TrainConfig& train_config,
                  const EpochSink& sink) {
    if (fold.train.empty()) throw EmptyFoldError("train: empty training fold");
    net_config.validate();

    // Pre-render every ground-truth map once; training reuses them heavily.
    const GridSpec grid(net_config.output_width(), net_config.output_height());
    std::vector<std::vector<BeliefMap>> gt_maps(dataset.size());
    std::vector<std::size_t> largest_index(dataset.size(), 0);
    for (int idx : fold.train) {
        const auto& sample = dataset[idx];
        if (sample.rects.empty()) {
            throw EmptyFoldError("train: sample " + sample.source_id +
                                 " has no usable ground truth");
        }
        for (const GraspRectangle& r : sample.rects) {
            gt_maps[idx].push_back(render_belief_map(r, grid));
        }
        largest_index[idx] = select_gt_largest_index(sample.rects);
    }

    Regressor net(net_config);
    SgdState sgd = make_sgd_state(net.parameters());
    const int batch_size = train_config.resolved_batch_size(net_config.num_heads);
    const GtPolicy policy = train_config.resolved_gt_policy(net_config.num_heads);
    const int threads = train_config.threads > 0
                            ? train_config.threads
                            : std::max(1u, std::thread::hardware_concurrency());

    TrainResult result{Regressor(net_config), {}, 0.0, -1};
    std::vector<ParameterTensor> best_params = net.parameters();

    std::mt19937_64 order_rng(derive_seed(train_config.seed, 0, 0x6f7264));
    std::vector<int> order(fold.train);

    for (int epoch = 0; epoch < train_config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), order_rng);
        double epoch_loss = 0.0;
        std::size_t steps = 0;

        for (std::size_t start = 0; start < order.size(); start += batch_size) {
            const std::size_t end = std::min(order.size(), start + batch_size);
            const int n = static_cast<int>(end - start);

            // Per-sample randomness is pinned up front so multi-threaded
            // execution stays bitwise deterministic.
            std::vector<SamplePlan> plans(n);
            for (int i = 0; i < n; ++i) {
                plans[i].sample_index = order[start + i];
                plans[i].step_seed = order_rng();
            }

            std::vector<GradientBuffer> buffers(n);
            std::vector<double> losses(n, 0.0);
            auto run_sample = [&](int i) {
                const SamplePlan& plan = plans[i];
                const auto& sample = dataset[plan.sample_index];
                std::mt19937_64 rng(plan.step_seed);
                const auto& maps = gt_maps[plan.sample_index];
                const BeliefMap* gt = nullptr;
                if (policy == GtPolicy::kRandom) {
                    gt = &maps[select_gt_random_index(maps.size(), rng)];
                } else {
                    gt = &maps[largest_index[plan.sample_index]];
                }
                buffers[i] = net.make_gradient_buffer();
                const MetaLossResult meta =
                    backward_step(net, sample.image, *gt, train_config.epsilon,
                                  train_config.hypothesis_dropout, rng, buffers[i]);
                losses[i] = meta.total;
            };

            if (threads > 1 && n > 1) {
                std::vector<std::thread> pool;
                std::atomic<int> next{0};
                for (int t = 0; t < std::min(threads, n); ++t) {
                    pool.emplace_back([&]() {
                        for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
                            run_sample(i);
                        }
                    });
                }
                for (auto& th : pool) th.join();
            } else {
                for (int i = 0; i < n; ++i) run_sample(i);
            }

            // Average gradients over the batch in sample order.
            auto& params = net.parameters();
            const double inv = 1.0 / n;
            for (std::size_t t = 0; t < params.size(); ++t) {
                std::fill(params[t].grad.begin(), params[t].grad.end(), 0.0);
                for (int i = 0; i < n; ++i) {
                    const auto& buf = buffers[i][t];
                    for (std::size_t j = 0; j < buf.size(); ++j) {
                        params[t].grad[j] += buf[j] * inv;
                    }
                }
            }
            sgd_step(net.parameters(), train_config, sgd);
            for (int i = 0; i < n; ++i) epoch_loss += losses[i];
            steps += n;
        }

        EpochRecord record;
        record.epoch = epoch + 1;
        record.train_loss = epoch_loss / static_cast<double>(steps);
        record.timestamp = utc_timestamp();

        const bool eval_now = !fold.test.empty() &&
                              ((epoch + 1) % std::max(1, train_config.val_interval) == 0 ||
                               epoch + 1 == train_config.epochs);
        if (eval_now) {
            std::vector<int> val_idx = fold.test;
            if (train_config.val_max_samples > 0 &&
                static_cast<int>(val_idx.size()) > train_config.val_max_samples) {
                val_idx.resize(train_config.val_max_samples);
            }
            const EvalReport report = evaluate_model(net, dataset, val_idx);
            record.val_accuracy = report.accuracy_top1;
            if (record.val_accuracy >= result.best_val_accuracy || result.best_epoch < 0) {
                result.best_val_accuracy = record.val_accuracy;
                result.best_epoch = record.epoch;
                best_params = net.parameters();
            }
        }
        result.log.push_back(record);
        if (sink) sink(record);
        log_debug("train: " + format_epoch_record(record));
    }

    if (result.best_epoch < 0) {
        // No validation ran; keep the final parameters.
        best_params = net.parameters();
    }
    result.net = Regressor(net_config);
    result.net.parameters() = std::move(best_params);
    return result;
}

Prediction predict(const Regressor& net, const FloatImage& image,
                   const RankConfig& rank_config) {
    const HypothesisSet hyps = net.forward(image);
    Prediction prediction;
    RankedHypotheses ranked;
    try {
        ranked = rank_hypotheses(hyps.maps, rank_config);
    } catch (const AllDiscardedError&) {
        prediction.discarded = hyps.num_hypotheses();
        throw;
    }
    prediction.discarded = static_cast<int>(ranked.discarded.size());
    for (auto& [index, fit] : ranked.ranked) {
        try {
            GraspRectangle rect = decode_belief_map(hyps.maps[index], fit);
            prediction.ranked.emplace_back(rect, std::move(fit));
        } catch (const DegenerateMapError&) {
            ++prediction.discarded;
        }
    }
    if (prediction.ranked.empty()) {
        throw AllDiscardedError("predict: no hypothesis decoded to a rectangle");
    }
    return prediction;
}

SamplePrediction to_sample_prediction(const Prediction& prediction) {
    SamplePrediction sp;
    sp.discarded = prediction.discarded;
    for (const auto& [rect, fit] : prediction.ranked) sp.ranked.push_back(rect);
    return sp;
}

EvalReport evaluate_model(const Regressor& net,
                          const std::vector<PreprocessedSample>& samples,
                          const std::vector<int>& indices,
                          const RankConfig& rank_config,
                          std::vector<PerSampleResult>* per_sample) {
    std::vector<SamplePrediction> predictions;
    std::vector<std::vector<GraspRectangle>> gts;
    for (int idx : indices) {
        if (samples[idx].rects.empty()) continue;  // nothing to score against
        SamplePrediction sp;
        try {
            sp = to_sample_prediction(predict(net, samples[idx].image, rank_config));
        } catch (const AllDiscardedError&) {
            sp.ranked.clear();
            sp.discarded = net.config().num_heads;
        }
        predictions.push_back(std::move(sp));
        gts.push_back(samples[idx].rects);
    }
    return evaluate(predictions, gts, per_sample);
}

} // namespace graspmap
