#include "graspmap/network.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

namespace graspmap {

void NetworkConfig::validate() const {
    if (num_heads < 1) throw std::invalid_argument("NetworkConfig: num_heads must be >= 1");
    if (encoder_channels.empty()) {
        throw std::invalid_argument("NetworkConfig: encoder_channels empty");
    }
    if (encoder_channels.size() != decoder_channels.size() + 1) {
        throw std::invalid_argument(
            "NetworkConfig: need one more encoder stage than decoder stages "
            "(output must be half the input resolution)");
    }
    const int down = 1 << encoder_channels.size();
    if (input_width % down != 0 || input_height % down != 0) {
        throw std::invalid_argument("NetworkConfig: input not divisible by the "
                                    "encoder downsampling factor");
    }
    if (input_width < down || input_height < down) {
        throw std::invalid_argument("NetworkConfig: input too small");
    }
    if (dropout_rate < 0.0 || dropout_rate >= 1.0) {
        throw std::invalid_argument("NetworkConfig: dropout_rate must be in [0, 1)");
    }
    if (input_channels != 3) {
        throw std::invalid_argument("NetworkConfig: expected 3 input channels");
    }
}

namespace {

constexpr int kKernel = 3;
constexpr int kPad = 1;

// Trunk nonlinearity: leaky rectifier. The small negative-side slope keeps
// units recoverable; from-scratch training at this scale kills plain relu
// stacks within an epoch.
constexpr double kReluSlope = 0.01;

constexpr double kNormEpsilon = 1e-5;

int conv_out(int in, int stride) { return (in + 2 * kPad - kKernel) / stride + 1; }

/// 3x3 convolution, pad 1.
void conv_forward(const Tensor3& in, const std::vector<double>& weight,
                  const std::vector<double>& bias, int stride, Tensor3& out) {
    const int oc_n = static_cast<int>(bias.size());
    const int ic_n = in.c;
    const int oh = conv_out(in.h, stride);
    const int ow = conv_out(in.w, stride);
    out = Tensor3(oc_n, oh, ow);
    for (int oc = 0; oc < oc_n; ++oc) {
        double* outp = out.plane(oc);
        const double b = bias[oc];
        for (std::size_t i = 0; i < static_cast<std::size_t>(oh) * ow; ++i) outp[i] = b;
        for (int ic = 0; ic < ic_n; ++ic) {
            const double* inp = in.plane(ic);
            const double* w0 =
                &weight[(static_cast<std::size_t>(oc) * ic_n + ic) * kKernel * kKernel];
            for (int ky = 0; ky < kKernel; ++ky) {
                for (int kx = 0; kx < kKernel; ++kx) {
                    const double wv = w0[ky * kKernel + kx];
                    if (wv == 0.0) continue;
                    for (int oy = 0; oy < oh; ++oy) {
                        const int iy = oy * stride + ky - kPad;
                        if (iy < 0 || iy >= in.h) continue;
                        const double* inrow = inp + static_cast<std::size_t>(iy) * in.w;
                        double* outrow = outp + static_cast<std::size_t>(oy) * ow;
                        for (int ox = 0; ox < ow; ++ox) {
                            const int ix = ox * stride + kx - kPad;
                            if (ix < 0 || ix >= in.w) continue;
                            outrow[ox] += wv * inrow[ix];
                        }
                    }
                }
            }
        }
    }
}

/// Gradients of conv_forward: fills d_weight/d_bias (accumulating) and d_in.
void conv_backward(const Tensor3& in, const std::vector<double>& weight, int stride,
                   const Tensor3& d_out, std::vector<double>& d_weight,
                   std::vector<double>& d_bias, Tensor3* d_in) {
    const int oc_n = d_out.c;
    const int ic_n = in.c;
    if (d_in) *d_in = Tensor3(in.c, in.h, in.w);
    for (int oc = 0; oc < oc_n; ++oc) {
        const double* doutp = d_out.plane(oc);
        double db = 0.0;
        for (std::size_t i = 0; i < static_cast<std::size_t>(d_out.h) * d_out.w; ++i) {
            db += doutp[i];
        }
        d_bias[oc] += db;
        for (int ic = 0; ic < ic_n; ++ic) {
            const double* inp = in.plane(ic);
            double* dinp = d_in ? d_in->plane(ic) : nullptr;
            const std::size_t wbase =
                (static_cast<std::size_t>(oc) * ic_n + ic) * kKernel * kKernel;
            for (int ky = 0; ky < kKernel; ++ky) {
                for (int kx = 0; kx < kKernel; ++kx) {
                    const double wv = weight[wbase + ky * kKernel + kx];
                    double dw = 0.0;
                    for (int oy = 0; oy < d_out.h; ++oy) {
                        const int iy = oy * stride + ky - kPad;
                        if (iy < 0 || iy >= in.h) continue;
                        const double* inrow = inp + static_cast<std::size_t>(iy) * in.w;
                        double* dinrow =
                            dinp ? dinp + static_cast<std::size_t>(iy) * in.w : nullptr;
                        const double* dorow = doutp + static_cast<std::size_t>(oy) * d_out.w;
                        for (int ox = 0; ox < d_out.w; ++ox) {
                            const int ix = ox * stride + kx - kPad;
                            if (ix < 0 || ix >= in.w) continue;
                            dw += dorow[ox] * inrow[ix];
                            if (dinrow) dinrow[ix] += wv * dorow[ox];
                        }
                    }
                    d_weight[wbase + ky * kKernel + kx] += dw;
                }
            }
        }
    }
}

/// Per-channel instance normalization with affine parameters. Purely
/// per-sample, so training and evaluation share one code path and per-sample
/// work can run concurrently without shared state.
void norm_forward(const Tensor3& in, const std::vector<double>& scale,
                  const std::vector<double>& shift, Tensor3& out,
                  std::vector<double>& mean, std::vector<double>& inv_std) {
    const std::size_t plane = static_cast<std::size_t>(in.h) * in.w;
    out = Tensor3(in.c, in.h, in.w);
    mean.assign(in.c, 0.0);
    inv_std.assign(in.c, 0.0);
    for (int c = 0; c < in.c; ++c) {
        const double* ip = in.plane(c);
        double m = 0.0;
        for (std::size_t i = 0; i < plane; ++i) m += ip[i];
        m /= static_cast<double>(plane);
        double var = 0.0;
        for (std::size_t i = 0; i < plane; ++i) var += (ip[i] - m) * (ip[i] - m);
        var /= static_cast<double>(plane);
        const double is = 1.0 / std::sqrt(var + kNormEpsilon);
        mean[c] = m;
        inv_std[c] = is;
        double* op = out.plane(c);
        const double g = scale[c];
        const double b = shift[c];
        for (std::size_t i = 0; i < plane; ++i) op[i] = g * (ip[i] - m) * is + b;
    }
}

void norm_backward(const Tensor3& in, const std::vector<double>& scale,
                   const std::vector<double>& mean, const std::vector<double>& inv_std,
                   const Tensor3& d_out, std::vector<double>& d_scale,
                   std::vector<double>& d_shift, Tensor3& d_in) {
    const std::size_t plane = static_cast<std::size_t>(in.h) * in.w;
    const double n = static_cast<double>(plane);
    d_in = Tensor3(in.c, in.h, in.w);
    for (int c = 0; c < in.c; ++c) {
        const double* ip = in.plane(c);
        const double* dop = d_out.plane(c);
        double* dip = d_in.plane(c);
        const double m = mean[c];
        const double is = inv_std[c];
        double sum_dy = 0.0, sum_dy_xhat = 0.0;
        for (std::size_t i = 0; i < plane; ++i) {
            const double xhat = (ip[i] - m) * is;
            sum_dy += dop[i];
            sum_dy_xhat += dop[i] * xhat;
        }
        d_shift[c] += sum_dy;
        d_scale[c] += sum_dy_xhat;
        const double g = scale[c];
        for (std::size_t i = 0; i < plane; ++i) {
            const double xhat = (ip[i] - m) * is;
            dip[i] = g * is * (dop[i] - sum_dy / n - xhat * sum_dy_xhat / n);
        }
    }
}

void relu_forward(Tensor3& t) {
    for (double& x : t.v) x = x > 0.0 ? x : kReluSlope * x;
}

void relu_backward(const Tensor3& pre, Tensor3& d) {
    for (std::size_t i = 0; i < d.v.size(); ++i) {
        if (pre.v[i] <= 0.0) d.v[i] *= kReluSlope;
    }
}

void upsample2x_forward(const Tensor3& in, Tensor3& out) {
    out = Tensor3(in.c, in.h * 2, in.w * 2);
    for (int c = 0; c < in.c; ++c) {
        const double* ip = in.plane(c);
        double* op = out.plane(c);
        for (int y = 0; y < out.h; ++y) {
            const double* irow = ip + static_cast<std::size_t>(y / 2) * in.w;
            double* orow = op + static_cast<std::size_t>(y) * out.w;
            for (int x = 0; x < out.w; ++x) orow[x] = irow[x / 2];
        }
    }
}

void upsample2x_backward(const Tensor3& d_out, Tensor3& d_in) {
    d_in = Tensor3(d_out.c, d_out.h / 2, d_out.w / 2);
    for (int c = 0; c < d_out.c; ++c) {
        const double* dop = d_out.plane(c);
        double* dip = d_in.plane(c);
        for (int y = 0; y < d_out.h; ++y) {
            const double* dorow = dop + static_cast<std::size_t>(y) * d_out.w;
            double* dirow = dip + static_cast<std::size_t>(y / 2) * d_in.w;
            for (int x = 0; x < d_out.w; ++x) dirow[x / 2] += dorow[x];
        }
    }
}

BeliefMap clamp01_to_map(const Tensor3& pre) {
    BeliefMap map(pre.w, pre.h);
    for (int y = 0; y < pre.h; ++y) {
        for (int x = 0; x < pre.w; ++x) {
            const double v = pre.plane(0)[static_cast<std::size_t>(y) * pre.w + x];
            map.at(x, y) = std::clamp(v, 0.0, 1.0);
        }
    }
    return map;
}

// Training-time head output is linear: the maps are regressed directly and
// the dominant zero background keeps full gradient (any clamp here starves
// it). Delivered maps go through the hard clamp on the evaluation path.
BeliefMap linear_to_map(const Tensor3& pre) {
    BeliefMap map(pre.w, pre.h);
    for (int y = 0; y < pre.h; ++y) {
        for (int x = 0; x < pre.w; ++x) {
            map.at(x, y) = pre.plane(0)[static_cast<std::size_t>(y) * pre.w + x];
        }
    }
    return map;
}

} // namespace

Regressor::Regressor(const NetworkConfig& config) : config_(config) {
    config_.validate();
    std::mt19937_64 rng(config_.seed);

    auto add_tensor = [&](const std::string& name, std::vector<int> shape, double lo,
                          double hi) {
        ParameterTensor p;
        p.name = name;
        p.shape = std::move(shape);
        std::size_t n = 1;
        for (int d : p.shape) n *= static_cast<std::size_t>(d);
        p.values.resize(n);
        if (lo == hi) {
            std::fill(p.values.begin(), p.values.end(), lo);
        } else {
            std::uniform_real_distribution<double> dist(lo, hi);
            for (double& x : p.values) x = dist(rng);
        }
        p.grad.assign(n, 0.0);
        params_.push_back(std::move(p));
        return static_cast<int>(params_.size() - 1);
    };

    // Trunk stages: conv (no bias; the normalization shift replaces it) +
    // instance norm + leaky relu. Fan-in-scaled uniform weight init.
    auto add_trunk = [&](const std::string& name, int in_c, int out_c, int stride,
                         bool upsample) {
        const double bound = std::sqrt(6.0 / (in_c * kKernel * kKernel));
        LayerRef ref;
        ref.weight = add_tensor(name + ".weight", {out_c, in_c, kKernel, kKernel},
                                -bound, bound);
        ref.bias = -1;
        ref.norm_scale = add_tensor(name + ".norm_scale", {out_c}, 1.0, 1.0);
        ref.norm_shift = add_tensor(name + ".norm_shift", {out_c}, 0.0, 0.0);
        ref.stride = stride;
        ref.upsample_before = upsample;
        trunk_.push_back(ref);
    };

    int in_c = config_.input_channels;
    for (std::size_t i = 0; i < config_.encoder_channels.size(); ++i) {
        add_trunk("enc" + std::to_string(i), in_c, config_.encoder_channels[i], 2, false);
        in_c = config_.encoder_channels[i];
    }
    for (std::size_t i = 0; i < config_.decoder_channels.size(); ++i) {
        add_trunk("dec" + std::to_string(i), in_c, config_.decoder_channels[i], 1, true);
        in_c = config_.decoder_channels[i];
    }
    for (int m = 0; m < config_.num_heads; ++m) {
        // Heads share the trunk and differ only here; independent draws break
        // the symmetry between hypotheses. The small positive bias keeps the
        // output off the lower clamp at the start.
        const std::string name = "head" + std::to_string(m);
        const double bound = std::sqrt(6.0 / (in_c * kKernel * kKernel));
        LayerRef ref;
        ref.weight = add_tensor(name + ".weight", {1, in_c, kKernel, kKernel},
                                -bound, bound);
        ref.bias = add_tensor(name + ".bias", {1}, 0.1, 0.1);
        ref.stride = 1;
        heads_.push_back(ref);
    }
}

std::size_t Regressor::parameter_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.numel();
    return n;
}

GradientBuffer Regressor::make_gradient_buffer() const {
    GradientBuffer g(params_.size());
    for (std::size_t i = 0; i < params_.size(); ++i) {
        g[i].assign(params_[i].numel(), 0.0);
    }
    return g;
}

Tensor3 Regressor::run_trunk(const FloatImage& image, bool training,
                             std::mt19937_64* rng, TrainContext* ctx) const {
    if (image.width != config_.input_width || image.height != config_.input_height ||
        image.chw.size() != static_cast<std::size_t>(3) * image.width * image.height) {
        throw ShapeMismatchError("Regressor: input image does not match the configured "
                                 "input size");
    }
    Tensor3 x(3, image.height, image.width);
    x.v = image.chw;

    const std::size_t encoder_stages = config_.encoder_channels.size();
    for (std::size_t li = 0; li < trunk_.size(); ++li) {
        const LayerRef& layer = trunk_[li];
        if (layer.upsample_before) {
            Tensor3 up;
            upsample2x_forward(x, up);
            x = std::move(up);
        }
        TrunkCache cache;
        const std::vector<double> zero_bias(
            params_[layer.norm_scale].numel(), 0.0);
        conv_forward(x, params_[layer.weight].values, zero_bias, layer.stride,
                     cache.conv_out);
        if (ctx) cache.conv_in = std::move(x);
        Tensor3 normed;
        norm_forward(cache.conv_out, params_[layer.norm_scale].values,
                     params_[layer.norm_shift].values, normed, cache.mean, cache.inv_std);
        if (ctx) cache.norm_out = normed;
        x = std::move(normed);
        relu_forward(x);

        // Dropout sits at the encoder-decoder junction.
        if (li + 1 == encoder_stages && training && config_.dropout_rate > 0.0) {
            std::uniform_real_distribution<double> unit(0.0, 1.0);
            const double keep = 1.0 - config_.dropout_rate;
            std::vector<double> mask(x.size());
            for (double& m : mask) m = (unit(*rng) < keep) ? 1.0 / keep : 0.0;
            for (std::size_t i = 0; i < x.v.size(); ++i) x.v[i] *= mask[i];
            if (ctx) ctx->dropout_mask = std::move(mask);
        }
        if (ctx) ctx->trunk.push_back(std::move(cache));
    }
    return x;
}

HypothesisSet Regressor::forward(const FloatImage& image) const {
    Tensor3 trunk_out = run_trunk(image, /*training=*/false, nullptr, nullptr);
    HypothesisSet hyps;
    for (const LayerRef& head : heads_) {
        Tensor3 pre;
        conv_forward(trunk_out, params_[head.weight].values, params_[head.bias].values,
                     1, pre);
        hyps.maps.push_back(clamp01_to_map(pre));
    }
    return hyps;
}

HypothesisSet Regressor::forward_train(const FloatImage& image, std::mt19937_64& rng,
                                       TrainContext& ctx) const {
    ctx = TrainContext{};
    ctx.training = true;
    Tensor3 trunk_out = run_trunk(image, /*training=*/true, &rng, &ctx);
    ctx.head_in = trunk_out;
    HypothesisSet hyps;
    for (const LayerRef& head : heads_) {
        Tensor3 pre;
        conv_forward(trunk_out, params_[head.weight].values, params_[head.bias].values,
                     1, pre);
        ctx.head_pre.push_back(pre);
        hyps.maps.push_back(linear_to_map(pre));
    }
    return hyps;
}

void Regressor::backward(const TrainContext& ctx, const std::vector<BeliefMap>& grad_maps,
                         GradientBuffer& grads) const {
    if (!ctx.training) throw std::logic_error("Regressor::backward: stale context");
    if (grad_maps.size() != heads_.size()) {
        throw ShapeMismatchError("Regressor::backward: one gradient map per head required");
    }
    const Tensor3& head_input = ctx.head_in;
    Tensor3 d_trunk(head_input.c, head_input.h, head_input.w);

    for (std::size_t m = 0; m < heads_.size(); ++m) {
        const Tensor3& pre = ctx.head_pre[m];
        Tensor3 d_pre(pre.c, pre.h, pre.w);
        const BeliefMap& gm = grad_maps[m];
        if (gm.width() != pre.w || gm.height() != pre.h) {
            throw ShapeMismatchError("Regressor::backward: gradient map shape mismatch");
        }
        // Linear training head: the map gradient is the pre-act gradient.
        for (int y = 0; y < pre.h; ++y) {
            for (int x = 0; x < pre.w; ++x) {
                d_pre.v[static_cast<std::size_t>(y) * pre.w + x] = gm.at(x, y);
            }
        }
        Tensor3 d_in;
        conv_backward(head_input, params_[heads_[m].weight].values, 1, d_pre,
                      grads[heads_[m].weight], grads[heads_[m].bias], &d_in);
        for (std::size_t i = 0; i < d_trunk.v.size(); ++i) d_trunk.v[i] += d_in.v[i];
    }

    // Trunk layers in reverse.
    const std::size_t encoder_stages = config_.encoder_channels.size();
    Tensor3 d_out = std::move(d_trunk);
    for (int li = static_cast<int>(trunk_.size()) - 1; li >= 0; --li) {
        const LayerRef& layer = trunk_[li];
        const TrunkCache& cache = ctx.trunk[li];
        // Junction dropout acted after this layer's relu.
        if (static_cast<std::size_t>(li) + 1 == encoder_stages && !ctx.dropout_mask.empty()) {
            for (std::size_t i = 0; i < d_out.v.size(); ++i) {
                d_out.v[i] *= ctx.dropout_mask[i];
            }
        }
        relu_backward(cache.norm_out, d_out);
        Tensor3 d_conv_out;
        norm_backward(cache.conv_out, params_[layer.norm_scale].values, cache.mean,
                      cache.inv_std, d_out, grads[layer.norm_scale],
                      grads[layer.norm_shift], d_conv_out);
        Tensor3 d_in;
        std::vector<double> bias_scratch(params_[layer.norm_scale].numel(), 0.0);
        conv_backward(cache.conv_in, params_[layer.weight].values, layer.stride,
                      d_conv_out, grads[layer.weight], bias_scratch,
                      li > 0 ? &d_in : nullptr);
        if (li > 0) {
            if (layer.upsample_before) {
                Tensor3 d_down;
                upsample2x_backward(d_in, d_down);
                d_out = std::move(d_down);
            } else {
                d_out = std::move(d_in);
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

constexpr char kCheckpointMagic[6] = {'G', 'C', 'K', 'P', 'T', '1'};

void put_u32(std::ostream& out, std::uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), 4);
}
void put_u64(std::ostream& out, std::uint64_t v) {
    out.write(reinterpret_cast<const char*>(&v), 8);
}
void put_f64(std::ostream& out, double v) {
    out.write(reinterpret_cast<const char*>(&v), 8);
}
std::uint32_t get_u32(std::istream& in) {
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 4);
    return v;
}
std::uint64_t get_u64(std::istream& in) {
    std::uint64_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 8);
    return v;
}
double get_f64(std::istream& in) {
    double v = 0;
    in.read(reinterpret_cast<char*>(&v), 8);
    return v;
}

} // namespace

void save_checkpoint(const std::string& path, const Regressor& net) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("save_checkpoint: cannot open " + path);
    out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
    const NetworkConfig& cfg = net.config();
    put_u32(out, static_cast<std::uint32_t>(cfg.input_width));
    put_u32(out, static_cast<std::uint32_t>(cfg.input_height));
    put_u32(out, static_cast<std::uint32_t>(cfg.input_channels));
    put_u32(out, static_cast<std::uint32_t>(cfg.num_heads));
    put_u32(out, static_cast<std::uint32_t>(cfg.encoder_channels.size()));
    for (int c : cfg.encoder_channels) put_u32(out, static_cast<std::uint32_t>(c));
    put_u32(out, static_cast<std::uint32_t>(cfg.decoder_channels.size()));
    for (int c : cfg.decoder_channels) put_u32(out, static_cast<std::uint32_t>(c));
    put_f64(out, cfg.dropout_rate);
    put_u64(out, cfg.seed);

    put_u32(out, static_cast<std::uint32_t>(net.parameters().size()));
    for (const ParameterTensor& p : net.parameters()) {
        put_u32(out, static_cast<std::uint32_t>(p.name.size()));
        out.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
        put_u32(out, static_cast<std::uint32_t>(p.shape.size()));
        for (int d : p.shape) put_u32(out, static_cast<std::uint32_t>(d));
        std::vector<float> buf(p.values.begin(), p.values.end());
        out.write(reinterpret_cast<const char*>(buf.data()),
                  static_cast<std::streamsize>(buf.size() * sizeof(float)));
    }
    if (!out) throw IoError("save_checkpoint: write failed for " + path);
}

Regressor load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("load_checkpoint: cannot open " + path);
    char magic[sizeof(kCheckpointMagic)];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) {
        throw IoError("load_checkpoint: bad magic in " + path);
    }
    NetworkConfig cfg;
    cfg.input_width = static_cast<int>(get_u32(in));
    cfg.input_height = static_cast<int>(get_u32(in));
    cfg.input_channels = static_cast<int>(get_u32(in));
    cfg.num_heads = static_cast<int>(get_u32(in));
    cfg.encoder_channels.assign(get_u32(in), 0);
    for (int& c : cfg.encoder_channels) c = static_cast<int>(get_u32(in));
    cfg.decoder_channels.assign(get_u32(in), 0);
    for (int& c : cfg.decoder_channels) c = static_cast<int>(get_u32(in));
    cfg.dropout_rate = get_f64(in);
    cfg.seed = get_u64(in);
    if (!in) throw IoError("load_checkpoint: truncated config in " + path);

    Regressor net(cfg);
    const std::uint32_t count = get_u32(in);
    if (count != net.parameters().size()) {
        throw IoError("load_checkpoint: tensor count mismatch in " + path);
    }
    for (ParameterTensor& p : net.parameters()) {
        const std::uint32_t name_len = get_u32(in);
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        if (name != p.name) throw IoError("load_checkpoint: unexpected tensor " + name);
        const std::uint32_t rank = get_u32(in);
        std::vector<int> shape(rank);
        for (std::uint32_t i = 0; i < rank; ++i) shape[i] = static_cast<int>(get_u32(in));
        if (shape != p.shape) throw IoError("load_checkpoint: shape mismatch for " + name);
        std::vector<float> buf(p.numel());
        in.read(reinterpret_cast<char*>(buf.data()),
                static_cast<std::streamsize>(buf.size() * sizeof(float)));
        if (!in) throw IoError("load_checkpoint: truncated values in " + path);
        for (std::size_t i = 0; i < buf.size(); ++i) p.values[i] = buf[i];
    }
    return net;
}

} // namespace graspmap
