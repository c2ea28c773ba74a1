#pragma once

#include <functional>
#include <string>
#include <vector>

#include "graspmap/gmm.hpp"
#include "graspmap/metrics.hpp"
#include "graspmap/mhp_loss.hpp"
#include "graspmap/network.hpp"

namespace graspmap {

enum class GtPolicy {
    kAuto,         // random for M > 1, largest_area for M = 1
    kRandom,       // uniform among the sample's ground-truth maps
    kLargestArea,  // the maximum-area rectangle
};

GtPolicy gt_policy_from_string(const std::string& name);
std::string to_string(GtPolicy policy);

struct TrainConfig {
    double learning_rate = 0.0005;
    double momentum = 0.9;
    double weight_decay = 0.0005;
    int epochs = 50;
    int batch_size = 0;  // 0 -> 5 for M > 1, 20 for M = 1
    double epsilon = kDefaultEpsilon;
    double hypothesis_dropout = kDefaultHypothesisDropout;
    GtPolicy gt_policy = GtPolicy::kAuto;
    std::uint64_t seed = 0;
    int val_interval = 1;      // epochs between held-out evaluations
    int val_max_samples = 0;   // 0 = evaluate the whole held-out fold
    int threads = 0;           // 0 = hardware concurrency

    int resolved_batch_size(int num_heads) const {
        if (batch_size > 0) return batch_size;
        return num_heads > 1 ? 5 : 20;
    }
    GtPolicy resolved_gt_policy(int num_heads) const {
        if (gt_policy != GtPolicy::kAuto) return gt_policy;
        return num_heads > 1 ? GtPolicy::kRandom : GtPolicy::kLargestArea;
    }
};

/// Classic velocity-form SGD with L2 weight decay folded into the gradient:
/// v <- momentum*v - lr*(g + wd*w); w <- w + v. Uses the .grad field of each
/// parameter. Throws NonFiniteGradientError on non-finite gradients.
struct SgdState {
    std::vector<std::vector<double>> velocity;
};
SgdState make_sgd_state(const std::vector<ParameterTensor>& params);
void sgd_step(std::vector<ParameterTensor>& params, const TrainConfig& config,
              SgdState& state);

struct EpochRecord {
    int epoch = 0;
    double train_loss = 0.0;
    double val_accuracy = -1.0;  // percent; -1 when not evaluated this epoch
    std::string timestamp;
};
using EpochSink = std::function<void(const EpochRecord&)>;

struct TrainLogEntry;

struct TrainResult {
    Regressor net;                  // parameters at the best validation accuracy
    std::vector<EpochRecord> log;
    double best_val_accuracy = 0.0;
    int best_epoch = -1;
};

/// One forward/backward step on a single sample: forward in training mode,
/// hindsight meta-loss against `gt`, hypothesis dropout on the oracle
/// weights, and backpropagation. Gradients are accumulated into `grads`.
MetaLossResult backward_step(const Regressor& net, const FloatImage& image,
                             const BeliefMap& gt, double epsilon,
                             double hypothesis_dropout_rate, std::mt19937_64& rng,
                             GradientBuffer& grads);

/// SGD-with-momentum training over a split fold. Ground truth per step
/// follows the policy; per-epoch train loss and held-out rectangle-metric
/// accuracy go to the sink. Returns the parameters checkpointed at the best
/// validation accuracy. Throws EmptyFoldError.
TrainResult train(const std::vector<PreprocessedSample>& dataset, const SplitFold& fold,
                  const NetworkConfig& net_config, const TrainConfig& train_config,
                  const EpochSink& sink = nullptr);

struct Prediction {
    /// (decoded rectangle, its fit), best-ranked first.
    std::vector<std::pair<GraspRectangle, GmmFit>> ranked;
    int discarded = 0;
};

/// Eval-mode forward, nll ranking, and per-hypothesis decoding. Hypotheses
/// that fail ranking or decode as degenerate count as discarded.
/// Throws AllDiscardedError when no hypothesis yields a rectangle.
Prediction predict(const Regressor& net, const FloatImage& image,
                   const RankConfig& rank_config = {});

SamplePrediction to_sample_prediction(const Prediction& prediction);

/// Rectangle-metric evaluation of a trained network over samples.
EvalReport evaluate_model(const Regressor& net,
                          const std::vector<PreprocessedSample>& samples,
                          const std::vector<int>& indices,
                          const RankConfig& rank_config = {},
                          std::vector<PerSampleResult>* per_sample = nullptr);

/// Serializes one epoch record as a line-oriented key=value record.
std::string format_epoch_record(const EpochRecord& record);

} // namespace graspmap
