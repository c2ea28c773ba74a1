#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "graspmap/dataset.hpp"
#include "graspmap/types.hpp"

namespace graspmap {

/// Fully-convolutional encoder-decoder configuration. Strided 3x3
/// convolutions halve the resolution once per encoder stage; each decoder
/// stage doubles it back with nearest-neighbor upsampling + convolution, so
/// the output grid is half the input (one more encoder than decoder stage).
/// Every trunk stage is conv + per-channel instance norm + leaky relu.
/// The M heads share the trunk and differ only in their final convolution.
struct NetworkConfig {
    int input_width = 256;
    int input_height = 256;
    int input_channels = 3;
    int num_heads = 1;
    std::vector<int> encoder_channels{16, 32, 64};
    std::vector<int> decoder_channels{32, 16};
    double dropout_rate = 0.5;
    std::uint64_t seed = 0;

    int output_width() const { return input_width / 2; }
    int output_height() const { return input_height / 2; }
    void validate() const;
};

/// Planar C x H x W activation block.
struct Tensor3 {
    int c = 0, h = 0, w = 0;
    std::vector<double> v;

    Tensor3() = default;
    Tensor3(int c_, int h_, int w_)
        : c(c_), h(h_), w(w_), v(static_cast<std::size_t>(c_) * h_ * w_, 0.0) {}
    std::size_t size() const { return v.size(); }
    double* plane(int ci) { return v.data() + static_cast<std::size_t>(ci) * h * w; }
    const double* plane(int ci) const {
        return v.data() + static_cast<std::size_t>(ci) * h * w;
    }
};

/// Named parameter block with its gradient, shapes always aligned.
struct ParameterTensor {
    std::string name;
    std::vector<int> shape;
    std::vector<double> values;
    std::vector<double> grad;

    std::size_t numel() const { return values.size(); }
};

/// Per-parameter-tensor gradient buffers (accumulated per sample, summed in
/// deterministic order by the trainer).
using GradientBuffer = std::vector<std::vector<double>>;

class Regressor {
public:
    explicit Regressor(const NetworkConfig& config);

    const NetworkConfig& config() const { return config_; }
    std::vector<ParameterTensor>& parameters() { return params_; }
    const std::vector<ParameterTensor>& parameters() const { return params_; }
    std::size_t parameter_count() const;

    /// Per-trunk-stage activation cache (conv -> instance norm -> leaky relu).
    struct TrunkCache {
        Tensor3 conv_in;
        Tensor3 conv_out;
        std::vector<double> mean;     // per channel
        std::vector<double> inv_std;  // per channel
        Tensor3 norm_out;             // pre-relu
    };

    /// Activation cache of one training forward pass, consumed by backward().
    struct TrainContext {
        std::vector<TrunkCache> trunk;
        std::vector<double> dropout_mask;  // junction mask, scaled
        Tensor3 head_in;
        std::vector<Tensor3> head_pre;  // per head
        bool training = false;
    };

    /// Eval-mode forward: deterministic, no dropout, pure function of the
    /// parameters and input. Output maps are clamped to [0, 1].
    HypothesisSet forward(const FloatImage& image) const;

    /// Training-mode forward; the junction dropout mask is drawn from `rng`.
    HypothesisSet forward_train(const FloatImage& image, std::mt19937_64& rng,
                                TrainContext& ctx) const;

    /// Backpropagates dL/d(output map) of every head through the cache into
    /// `grads` (accumulated, aligned with parameters()).
    void backward(const TrainContext& ctx, const std::vector<BeliefMap>& grad_maps,
                  GradientBuffer& grads) const;

    GradientBuffer make_gradient_buffer() const;

private:
    Tensor3 run_trunk(const FloatImage& image, bool training, std::mt19937_64* rng,
                      TrainContext* ctx) const;

    NetworkConfig config_;
    std::vector<ParameterTensor> params_;
    // Layer bookkeeping: parameter indices plus stride/upsample placement.
    struct LayerRef {
        int weight = 0;
        int bias = 0;
        int norm_scale = -1;  // trunk stages only
        int norm_shift = -1;
        int stride = 1;
        bool upsample_before = false;
    };
    std::vector<LayerRef> trunk_;  // encoder then decoder
    std::vector<LayerRef> heads_;
};

/// Checkpoint format: magic "GCKPT1", a network-config record, then one
/// record per tensor (u32 name length, name, u32 rank, u32 dims,
/// little-endian f32 values).
void save_checkpoint(const std::string& path, const Regressor& net);
Regressor load_checkpoint(const std::string& path);

} // namespace graspmap
