#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "camid/audio.hpp"  // detail byte/file helpers
#include "camid/error.hpp"
#include "camid/fusion.hpp"
#include "camid/rng.hpp"
#include "camid/tensor.hpp"

namespace camid {

enum class LayerKind : std::uint32_t {
    Conv2d = 0,
    Relu = 1,
    MaxPool2d = 2,
    GlobalAvgPool = 3,
    Dense = 4,
    Softmax = 5,
};

inline const char* to_string(LayerKind k) {
    switch (k) {
        case LayerKind::Conv2d: return "conv2d";
        case LayerKind::Relu: return "relu";
        case LayerKind::MaxPool2d: return "maxpool2d";
        case LayerKind::GlobalAvgPool: return "global_avg_pool";
        case LayerKind::Dense: return "dense";
        case LayerKind::Softmax: return "softmax";
    }
    return "?";
}

inline LayerKind layer_kind_from_string(const std::string& s) {
    for (const auto k : {LayerKind::Conv2d, LayerKind::Relu, LayerKind::MaxPool2d,
                         LayerKind::GlobalAvgPool, LayerKind::Dense, LayerKind::Softmax}) {
        if (s == to_string(k)) return k;
    }
    throw ValidationError("unknown layer kind: '" + s + "'");
}

struct LayerSpec {
    LayerKind kind = LayerKind::Relu;
    std::size_t out_channels = 0;  // conv2d
    std::size_t kernel = 0;        // conv2d, maxpool2d
    std::size_t stride = 1;        // conv2d, maxpool2d
    std::size_t padding = 0;       // conv2d
    std::size_t units = 0;         // dense

    static LayerSpec conv2d(std::size_t out_channels, std::size_t kernel, std::size_t stride = 1,
                            std::size_t padding = 0) {
        return {LayerKind::Conv2d, out_channels, kernel, stride, padding, 0};
    }
    static LayerSpec relu() { return {LayerKind::Relu, 0, 0, 1, 0, 0}; }
    static LayerSpec maxpool2d(std::size_t kernel, std::size_t stride) {
        return {LayerKind::MaxPool2d, 0, kernel, stride, 0, 0};
    }
    static LayerSpec global_avg_pool() { return {LayerKind::GlobalAvgPool, 0, 0, 1, 0, 0}; }
    static LayerSpec dense(std::size_t units) {
        return {LayerKind::Dense, 0, 0, 1, 0, units};
    }
    static LayerSpec softmax() { return {LayerKind::Softmax, 0, 0, 1, 0, 0}; }
};

struct NetworkSpec {
    std::vector<LayerSpec> layers;
    std::size_t num_classes = 0;
    std::vector<std::size_t> input_shape;  // (C, H, W) or (n)

    // Output shape after each layer; shapes[0] is the input shape. Doubles
    // as validation: throws where the chain breaks.
    std::vector<std::vector<std::size_t>> shapes() const {
        if (layers.size() < 2) throw ValidationError("network needs at least 2 layers");
        if (num_classes < 2) throw ValidationError("network needs at least 2 classes");
        if (input_shape.empty()) throw ValidationError("network input shape is empty");
        for (std::size_t i = 0; i < layers.size(); ++i) {
            const bool is_softmax = layers[i].kind == LayerKind::Softmax;
            if (is_softmax != (i + 1 == layers.size())) {
                throw ValidationError("network must end with exactly one softmax layer");
            }
        }

        std::vector<std::vector<std::size_t>> out;
        out.push_back(input_shape);
        for (std::size_t i = 0; i < layers.size(); ++i) {
            const LayerSpec& l = layers[i];
            const auto& in = out.back();
            const std::string at = "layer " + std::to_string(i) + " (" +
                                   std::string(to_string(l.kind)) + ")";
            switch (l.kind) {
                case LayerKind::Conv2d: {
                    if (in.size() != 3) throw ValidationError(at + ": needs a (C,H,W) input");
                    if (l.out_channels < 1 || l.kernel < 1 || l.stride < 1) {
                        throw ValidationError(at + ": channels, kernel and stride must be >= 1");
                    }
                    const std::size_t h = in[1] + 2 * l.padding, w = in[2] + 2 * l.padding;
                    if (h < l.kernel || w < l.kernel) {
                        throw ValidationError(at + ": kernel larger than padded input");
                    }
                    out.push_back({l.out_channels, (h - l.kernel) / l.stride + 1,
                                   (w - l.kernel) / l.stride + 1});
                    break;
                }
                case LayerKind::Relu:
                    out.push_back(in);
                    break;
                case LayerKind::MaxPool2d: {
                    if (in.size() != 3) throw ValidationError(at + ": needs a (C,H,W) input");
                    if (l.kernel < 1 || l.stride < 1) {
                        throw ValidationError(at + ": kernel and stride must be >= 1");
                    }
                    if (in[1] < l.kernel || in[2] < l.kernel) {
                        throw ValidationError(at + ": kernel larger than input");
                    }
                    out.push_back({in[0], (in[1] - l.kernel) / l.stride + 1,
                                   (in[2] - l.kernel) / l.stride + 1});
                    break;
                }
                case LayerKind::GlobalAvgPool:
                    if (in.size() != 3) throw ValidationError(at + ": needs a (C,H,W) input");
                    out.push_back({in[0]});
                    break;
                case LayerKind::Dense: {
                    if (l.units < 1) throw ValidationError(at + ": units must be >= 1");
                    out.push_back({l.units});
                    break;
                }
                case LayerKind::Softmax:
                    if (in.size() != 1) throw ValidationError(at + ": needs a flat input");
                    out.push_back(in);
                    break;
            }
        }
        const auto& final_shape = out.back();
        if (final_shape.size() != 1 || final_shape[0] != num_classes) {
            throw ValidationError("network output dimension does not equal the class count");
        }
        return out;
    }

    void validate() const { (void)shapes(); }

    std::size_t param_count() const {
        auto shp = shapes();
        std::size_t total = 0;
        for (std::size_t i = 0; i < layers.size(); ++i) {
            const LayerSpec& l = layers[i];
            if (l.kind == LayerKind::Conv2d) {
                total += l.out_channels * shp[i][0] * l.kernel * l.kernel + l.out_channels;
            } else if (l.kind == LayerKind::Dense) {
                total += l.units * numel_of(shp[i]) + l.units;
            }
        }
        return total;
    }

    // Canonical one-line description; also the cache/checkpoint signature.
    std::string describe() const {
        std::string s = "in=";
        for (std::size_t i = 0; i < input_shape.size(); ++i) {
            if (i) s += "x";
            s += std::to_string(input_shape[i]);
        }
        s += ";classes=" + std::to_string(num_classes);
        for (const LayerSpec& l : layers) {
            s += ";" + std::string(to_string(l.kind));
            switch (l.kind) {
                case LayerKind::Conv2d:
                    s += "(oc=" + std::to_string(l.out_channels) + ",k=" + std::to_string(l.kernel) +
                         ",s=" + std::to_string(l.stride) + ",p=" + std::to_string(l.padding) + ")";
                    break;
                case LayerKind::MaxPool2d:
                    s += "(k=" + std::to_string(l.kernel) + ",s=" + std::to_string(l.stride) + ")";
                    break;
                case LayerKind::Dense:
                    s += "(u=" + std::to_string(l.units) + ")";
                    break;
                default:
                    break;
            }
        }
        return s;
    }
};

// conv -> relu -> pool blocks with a global average pool head. Parameter
// count stays in the low thousands for typical inputs.
inline NetworkSpec default_network(std::vector<std::size_t> input_shape,
                                   std::size_t num_classes) {
    NetworkSpec spec;
    spec.input_shape = std::move(input_shape);
    spec.num_classes = num_classes;
    spec.layers = {
        LayerSpec::conv2d(8, 3, 1, 1),  LayerSpec::relu(), LayerSpec::maxpool2d(2, 2),
        LayerSpec::conv2d(16, 3, 1, 1), LayerSpec::relu(), LayerSpec::maxpool2d(2, 2),
        LayerSpec::conv2d(32, 3, 1, 1), LayerSpec::relu(), LayerSpec::global_avg_pool(),
        LayerSpec::dense(num_classes),  LayerSpec::softmax(),
    };
    return spec;
}

// Weight/bias pair per layer; empty tensors for parameterless layers.
// Conv weights are (out_c, in_c, k, k), dense weights (units, n_in).
struct LayerParams {
    Tensor weights;
    Tensor bias;
};

struct ParamSet {
    std::vector<LayerParams> layers;

    bool same_shape(const ParamSet& other) const {
        if (layers.size() != other.layers.size()) return false;
        for (std::size_t i = 0; i < layers.size(); ++i) {
            if (!layers[i].weights.same_shape(other.layers[i].weights)) return false;
            if (!layers[i].bias.same_shape(other.layers[i].bias)) return false;
        }
        return true;
    }

    void add(const ParamSet& other) {
        if (!same_shape(other)) throw ShapeError("ParamSet::add: shapes differ");
        for (std::size_t i = 0; i < layers.size(); ++i) {
            for (std::size_t j = 0; j < layers[i].weights.data.size(); ++j) {
                layers[i].weights.data[j] += other.layers[i].weights.data[j];
            }
            for (std::size_t j = 0; j < layers[i].bias.data.size(); ++j) {
                layers[i].bias.data[j] += other.layers[i].bias.data[j];
            }
        }
    }

    void scale(double s) {
        for (auto& l : layers) {
            for (double& v : l.weights.data) v *= s;
            for (double& v : l.bias.data) v *= s;
        }
    }
};

inline ParamSet zero_params(const NetworkSpec& spec) {
    const auto shp = spec.shapes();
    ParamSet p;
    p.layers.resize(spec.layers.size());
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        const LayerSpec& l = spec.layers[i];
        if (l.kind == LayerKind::Conv2d) {
            p.layers[i].weights.shape = {l.out_channels, shp[i][0], l.kernel, l.kernel};
            p.layers[i].weights.data.assign(numel_of(p.layers[i].weights.shape), 0.0);
            p.layers[i].bias.shape = {l.out_channels};
            p.layers[i].bias.data.assign(l.out_channels, 0.0);
        } else if (l.kind == LayerKind::Dense) {
            const std::size_t n_in = numel_of(shp[i]);
            p.layers[i].weights.shape = {l.units, n_in};
            p.layers[i].weights.data.assign(l.units * n_in, 0.0);
            p.layers[i].bias.shape = {l.units};
            p.layers[i].bias.data.assign(l.units, 0.0);
        }
    }
    return p;
}

// Uniform(-s, s) with s = scale * sqrt(6 / (fan_in + fan_out)); zero biases.
inline ParamSet init_params(const NetworkSpec& spec, std::uint64_t seed, double scale = 1.0) {
    const auto shp = spec.shapes();
    ParamSet p = zero_params(spec);
    Rng rng(seed);
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        const LayerSpec& l = spec.layers[i];
        double fan_in = 0.0, fan_out = 0.0;
        if (l.kind == LayerKind::Conv2d) {
            fan_in = static_cast<double>(shp[i][0] * l.kernel * l.kernel);
            fan_out = static_cast<double>(l.out_channels * l.kernel * l.kernel);
        } else if (l.kind == LayerKind::Dense) {
            fan_in = static_cast<double>(numel_of(shp[i]));
            fan_out = static_cast<double>(l.units);
        } else {
            continue;
        }
        const double s = scale * std::sqrt(6.0 / (fan_in + fan_out));
        for (double& v : p.layers[i].weights.data) v = rng.uniform(-s, s);
    }
    return p;
}

// Parameter tensors must have exactly the sizes the spec implies, or the
// layer kernels would index out of bounds.
inline void validate_params(const NetworkSpec& spec, const ParamSet& params) {
    const auto shp = spec.shapes();
    if (params.layers.size() != spec.layers.size()) {
        throw ShapeError("parameter set does not match the network layer count");
    }
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        const LayerSpec& l = spec.layers[i];
        std::size_t want_w = 0, want_b = 0;
        if (l.kind == LayerKind::Conv2d) {
            want_w = l.out_channels * shp[i][0] * l.kernel * l.kernel;
            want_b = l.out_channels;
        } else if (l.kind == LayerKind::Dense) {
            want_w = l.units * numel_of(shp[i]);
            want_b = l.units;
        }
        if (params.layers[i].weights.data.size() != want_w ||
            params.layers[i].bias.data.size() != want_b) {
            throw ShapeError("parameter tensor sizes do not match layer " + std::to_string(i));
        }
    }
}

// Activations after every layer (acts[0] = input, softmax excluded) plus
// max-pool winner indices. The signature ties a cache to the spec that
// produced it.
struct ForwardCache {
    std::vector<Tensor> acts;
    std::vector<std::vector<std::size_t>> pool_argmax;  // per layer, flat input indices
    std::string signature;
};

namespace detail {

inline void conv2d_forward(const Tensor& in, const LayerSpec& l, const LayerParams& p,
                           Tensor& out) {
    const std::size_t ic = in.shape[0], ih = in.shape[1], iw = in.shape[2];
    const std::size_t oc = out.shape[0], oh = out.shape[1], ow = out.shape[2];
    const long pad = static_cast<long>(l.padding);
    for (std::size_t o = 0; o < oc; ++o) {
        for (std::size_t oy = 0; oy < oh; ++oy) {
            for (std::size_t ox = 0; ox < ow; ++ox) {
                double acc = p.bias.data[o];
                const long y0 = static_cast<long>(oy * l.stride) - pad;
                const long x0 = static_cast<long>(ox * l.stride) - pad;
                for (std::size_t c = 0; c < ic; ++c) {
                    for (std::size_t ky = 0; ky < l.kernel; ++ky) {
                        const long iy = y0 + static_cast<long>(ky);
                        if (iy < 0 || iy >= static_cast<long>(ih)) continue;
                        for (std::size_t kx = 0; kx < l.kernel; ++kx) {
                            const long ix = x0 + static_cast<long>(kx);
                            if (ix < 0 || ix >= static_cast<long>(iw)) continue;
                            acc += in.data[(c * ih + iy) * iw + ix] *
                                   p.weights.data[((o * ic + c) * l.kernel + ky) * l.kernel + kx];
                        }
                    }
                }
                out.data[(o * oh + oy) * ow + ox] = acc;
            }
        }
    }
}

inline void conv2d_backward(const Tensor& in, const LayerSpec& l, const LayerParams& p,
                            const Tensor& dout, LayerParams& grad, Tensor& din) {
    const std::size_t ic = in.shape[0], ih = in.shape[1], iw = in.shape[2];
    const std::size_t oc = dout.shape[0], oh = dout.shape[1], ow = dout.shape[2];
    const long pad = static_cast<long>(l.padding);
    for (std::size_t o = 0; o < oc; ++o) {
        for (std::size_t oy = 0; oy < oh; ++oy) {
            for (std::size_t ox = 0; ox < ow; ++ox) {
                const double g = dout.data[(o * oh + oy) * ow + ox];
                if (g == 0.0) continue;
                grad.bias.data[o] += g;
                const long y0 = static_cast<long>(oy * l.stride) - pad;
                const long x0 = static_cast<long>(ox * l.stride) - pad;
                for (std::size_t c = 0; c < ic; ++c) {
                    for (std::size_t ky = 0; ky < l.kernel; ++ky) {
                        const long iy = y0 + static_cast<long>(ky);
                        if (iy < 0 || iy >= static_cast<long>(ih)) continue;
                        for (std::size_t kx = 0; kx < l.kernel; ++kx) {
                            const long ix = x0 + static_cast<long>(kx);
                            if (ix < 0 || ix >= static_cast<long>(iw)) continue;
                            const std::size_t in_idx = (c * ih + iy) * iw + ix;
                            const std::size_t w_idx =
                                ((o * ic + c) * l.kernel + ky) * l.kernel + kx;
                            grad.weights.data[w_idx] += g * in.data[in_idx];
                            din.data[in_idx] += g * p.weights.data[w_idx];
                        }
                    }
                }
            }
        }
    }
}

}  // namespace detail

// Runs every layer except the terminal softmax; returns the logits and the
// cache backward needs.
inline std::pair<Tensor, ForwardCache> forward(const NetworkSpec& spec, const ParamSet& params,
                                               const Tensor& input) {
    const auto shp = spec.shapes();
    if (input.shape != spec.input_shape) {
        throw ShapeError("forward: input shape does not match the network");
    }
    validate_params(spec, params);

    ForwardCache cache;
    cache.signature = spec.describe();
    cache.acts.reserve(spec.layers.size());
    cache.pool_argmax.resize(spec.layers.size());
    cache.acts.push_back(input);

    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        const LayerSpec& l = spec.layers[i];
        if (l.kind == LayerKind::Softmax) break;  // logits stop here
        const Tensor& in = cache.acts.back();
        Tensor out;
        out.shape = shp[i + 1];
        out.data.assign(numel_of(out.shape), 0.0);
        switch (l.kind) {
            case LayerKind::Conv2d:
                detail::conv2d_forward(in, l, params.layers[i], out);
                break;
            case LayerKind::Relu:
                for (std::size_t j = 0; j < in.data.size(); ++j) {
                    out.data[j] = in.data[j] > 0.0 ? in.data[j] : 0.0;
                }
                break;
            case LayerKind::MaxPool2d: {
                const std::size_t c_n = in.shape[0], ih = in.shape[1], iw = in.shape[2];
                const std::size_t oh = out.shape[1], ow = out.shape[2];
                auto& winners = cache.pool_argmax[i];
                winners.resize(out.numel());
                for (std::size_t c = 0; c < c_n; ++c) {
                    for (std::size_t oy = 0; oy < oh; ++oy) {
                        for (std::size_t ox = 0; ox < ow; ++ox) {
                            std::size_t best = (c * ih + oy * l.stride) * iw + ox * l.stride;
                            double best_v = in.data[best];
                            for (std::size_t ky = 0; ky < l.kernel; ++ky) {
                                for (std::size_t kx = 0; kx < l.kernel; ++kx) {
                                    const std::size_t idx =
                                        (c * ih + oy * l.stride + ky) * iw + ox * l.stride + kx;
                                    if (in.data[idx] > best_v) {  // first max wins
                                        best_v = in.data[idx];
                                        best = idx;
                                    }
                                }
                            }
                            const std::size_t out_idx = (c * oh + oy) * ow + ox;
                            out.data[out_idx] = best_v;
                            winners[out_idx] = best;
                        }
                    }
                }
                break;
            }
            case LayerKind::GlobalAvgPool: {
                const std::size_t hw = in.shape[1] * in.shape[2];
                for (std::size_t c = 0; c < in.shape[0]; ++c) {
                    double acc = 0.0;
                    for (std::size_t j = 0; j < hw; ++j) acc += in.data[c * hw + j];
                    out.data[c] = acc / static_cast<double>(hw);
                }
                break;
            }
            case LayerKind::Dense: {
                const LayerParams& p = params.layers[i];
                const std::size_t n_in = in.data.size();
                for (std::size_t u = 0; u < l.units; ++u) {
                    double acc = p.bias.data[u];
                    const double* row = &p.weights.data[u * n_in];
                    for (std::size_t j = 0; j < n_in; ++j) acc += row[j] * in.data[j];
                    out.data[u] = acc;
                }
                break;
            }
            case LayerKind::Softmax:
                break;
        }
        cache.acts.push_back(std::move(out));
    }
    return {cache.acts.back(), std::move(cache)};
}

// Max-subtracted for stability; output is positive and sums to 1.
inline std::vector<double> softmax(const std::vector<double>& logits) {
    if (logits.empty()) throw ValidationError("softmax of an empty vector");
    const double m = *std::max_element(logits.begin(), logits.end());
    std::vector<double> out(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - m);
        sum += out[i];
    }
    for (double& v : out) v /= sum;
    return out;
}

inline std::vector<double> softmax(const Tensor& logits) { return softmax(logits.data); }

// True class index per sample; the one-hot target columns are implicit.
struct TargetMatrix {
    std::size_t num_classes = 0;
    std::vector<std::size_t> labels;

    void validate() const {
        if (num_classes < 1) throw ValidationError("target matrix needs at least one class");
        for (const std::size_t l : labels) {
            if (l >= num_classes) {
                throw ValidationError("target label " + std::to_string(l) + " out of range");
            }
        }
    }
};

// -sum_n ln p_true(n), with the log argument clamped at 1e-15.
inline double cross_entropy(const ProbabilityMatrix& probs, const TargetMatrix& targets) {
    targets.validate();
    if (probs.num_classes() != targets.num_classes ||
        probs.num_samples() != targets.labels.size()) {
        throw ShapeError("cross_entropy: probability and target shapes differ");
    }
    double loss = 0.0;
    for (std::size_t n = 0; n < targets.labels.size(); ++n) {
        loss -= std::log(std::max(probs.at(n, targets.labels[n]), 1e-15));
    }
    return loss;
}

inline double cross_entropy_single(const std::vector<double>& probs, std::size_t label) {
    if (label >= probs.size()) throw ValidationError("cross_entropy: label out of range");
    return -std::log(std::max(probs[label], 1e-15));
}

// Gradients of the cross-entropy loss for the sample behind `cache`.
// Starts from the softmax+CE identity dlogits = p - t.
inline ParamSet backward(const NetworkSpec& spec, const ParamSet& params,
                         const ForwardCache& cache, const std::vector<double>& target_onehot) {
    const auto shp = spec.shapes();
    validate_params(spec, params);
    if (cache.signature != spec.describe() || cache.acts.size() != spec.layers.size()) {
        throw Error("backward: cache does not belong to this network");
    }
    for (std::size_t i = 0; i + 1 < cache.acts.size(); ++i) {
        if (cache.acts[i].shape != shp[i]) {
            throw Error("backward: cache activations do not match the network shapes");
        }
    }
    if (target_onehot.size() != spec.num_classes) {
        throw ShapeError("backward: target length does not equal the class count");
    }

    ParamSet grad = zero_params(spec);
    const std::vector<double> p = softmax(cache.acts.back());
    Tensor delta;
    delta.shape = {spec.num_classes};
    delta.data.resize(spec.num_classes);
    for (std::size_t i = 0; i < spec.num_classes; ++i) {
        delta.data[i] = p[i] - target_onehot[i];
    }

    // Walk layers in reverse, skipping the terminal softmax (already folded
    // into delta).
    for (std::size_t ri = spec.layers.size() - 1; ri-- > 0;) {
        const LayerSpec& l = spec.layers[ri];
        const Tensor& in = cache.acts[ri];
        Tensor din;
        din.shape = shp[ri];
        din.data.assign(numel_of(shp[ri]), 0.0);
        switch (l.kind) {
            case LayerKind::Conv2d:
                detail::conv2d_backward(in, l, params.layers[ri], delta, grad.layers[ri], din);
                break;
            case LayerKind::Relu:
                for (std::size_t j = 0; j < in.data.size(); ++j) {
                    din.data[j] = in.data[j] > 0.0 ? delta.data[j] : 0.0;
                }
                break;
            case LayerKind::MaxPool2d: {
                const auto& winners = cache.pool_argmax[ri];
                for (std::size_t j = 0; j < delta.data.size(); ++j) {
                    din.data[winners[j]] += delta.data[j];
                }
                break;
            }
            case LayerKind::GlobalAvgPool: {
                const std::size_t hw = in.shape[1] * in.shape[2];
                for (std::size_t c = 0; c < in.shape[0]; ++c) {
                    const double g = delta.data[c] / static_cast<double>(hw);
                    for (std::size_t j = 0; j < hw; ++j) din.data[c * hw + j] = g;
                }
                break;
            }
            case LayerKind::Dense: {
                const std::size_t n_in = in.data.size();
                for (std::size_t u = 0; u < l.units; ++u) {
                    const double g = delta.data[u];
                    grad.layers[ri].bias.data[u] += g;
                    for (std::size_t j = 0; j < n_in; ++j) {
                        grad.layers[ri].weights.data[u * n_in + j] += g * in.data[j];
                        din.data[j] += g * params.layers[ri].weights.data[u * n_in + j];
                    }
                }
                break;
            }
            case LayerKind::Softmax:
                break;
        }
        delta = std::move(din);
    }
    return grad;
}

// p <- p - lr * g, elementwise.
inline void sgd_step(ParamSet& params, const ParamSet& grads, double learning_rate) {
    if (!params.same_shape(grads)) throw ShapeError("sgd_step: gradient shapes differ");
    for (std::size_t i = 0; i < params.layers.size(); ++i) {
        for (std::size_t j = 0; j < params.layers[i].weights.data.size(); ++j) {
            params.layers[i].weights.data[j] -= learning_rate * grads.layers[i].weights.data[j];
        }
        for (std::size_t j = 0; j < params.layers[i].bias.data.size(); ++j) {
            params.layers[i].bias.data[j] -= learning_rate * grads.layers[i].bias.data[j];
        }
    }
}

struct TrainConfig {
    double learning_rate = 0.01;
    std::size_t batch_size = 16;
    std::size_t epochs = 10;
    std::uint64_t seed = 42;
    double init_scale = 1.0;

    void validate() const {
        if (!(learning_rate > 0.0)) throw ValidationError("learning_rate must be > 0");
        if (batch_size < 1) throw ValidationError("batch_size must be >= 1");
        if (epochs < 1) throw ValidationError("epochs must be >= 1");
        if (!(init_scale > 0.0)) throw ValidationError("init_scale must be > 0");
    }
};

struct Sample {
    Tensor input;
    std::size_t label = 0;
};

struct TrainResult {
    ParamSet params;
    std::vector<double> loss_history;  // mean per-sample loss after each epoch
};

// Mini-batch SGD with batch-mean gradients. Fully deterministic for a given
// seed: separate derived streams drive initialization and shuffling.
inline TrainResult train(const NetworkSpec& spec, const std::vector<Sample>& dataset,
                         const TrainConfig& cfg) {
    spec.validate();
    cfg.validate();
    if (dataset.empty()) throw ValidationError("train: dataset is empty");
    for (const Sample& s : dataset) {
        if (s.label >= spec.num_classes) {
            throw ValidationError("train: label " + std::to_string(s.label) + " out of range");
        }
    }

    TrainResult result;
    result.params = init_params(spec, derive_seed(cfg.seed, "init"), cfg.init_scale);
    Rng shuffle_rng(derive_seed(cfg.seed, "shuffle"));

    std::vector<std::size_t> order(dataset.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
            ParamSet batch_grad = zero_params(spec);
            for (std::size_t i = start; i < stop; ++i) {
                const Sample& s = dataset[order[i]];
                auto [logits, cache] = forward(spec, result.params, s.input);
                std::vector<double> target(spec.num_classes, 0.0);
                target[s.label] = 1.0;
                batch_grad.add(backward(spec, result.params, cache, target));
            }
            batch_grad.scale(1.0 / static_cast<double>(stop - start));
            sgd_step(result.params, batch_grad, cfg.learning_rate);
        }

        // Post-epoch loss over the full training set, in dataset order.
        double loss = 0.0;
        for (const Sample& s : dataset) {
            auto [logits, cache] = forward(spec, result.params, s.input);
            loss += cross_entropy_single(softmax(logits), s.label);
        }
        result.loss_history.push_back(loss / static_cast<double>(dataset.size()));
    }
    return result;
}

// Softmax output per sample, one matrix column each (stored row-major).
inline ProbabilityMatrix predict_probs(const NetworkSpec& spec, const ParamSet& params,
                                       const std::vector<Tensor>& samples) {
    ProbabilityMatrix m;
    for (std::size_t c = 0; c < spec.num_classes; ++c) m.class_ids.push_back(static_cast<int>(c));
    m.scores.reserve(samples.size() * spec.num_classes);
    for (std::size_t n = 0; n < samples.size(); ++n) {
        m.sample_ids.push_back(std::to_string(n));
        auto [logits, cache] = forward(spec, params, samples[n]);
        for (const double v : softmax(logits)) m.scores.push_back(v);
    }
    return m;
}

// --- NMC1 checkpoint ---------------------------------------------------
// magic "NMC1", u32 version, the network description, then per-layer
// float32 little-endian weight/bias blobs in layer order. Round-trips
// bit-exactly because parameters are stored as float32 on both sides.

inline void save_checkpoint(const std::filesystem::path& path, const NetworkSpec& spec,
                            const ParamSet& params) {
    validate_params(spec, params);
    std::vector<unsigned char> out;
    out.insert(out.end(), {'N', 'M', 'C', '1'});
    detail::push_u32le(out, 1);  // version
    detail::push_u32le(out, static_cast<std::uint32_t>(spec.num_classes));
    detail::push_u32le(out, static_cast<std::uint32_t>(spec.input_shape.size()));
    for (const std::size_t d : spec.input_shape) {
        detail::push_u32le(out, static_cast<std::uint32_t>(d));
    }
    detail::push_u32le(out, static_cast<std::uint32_t>(spec.layers.size()));
    for (const LayerSpec& l : spec.layers) {
        detail::push_u32le(out, static_cast<std::uint32_t>(l.kind));
        detail::push_u32le(out, static_cast<std::uint32_t>(l.out_channels));
        detail::push_u32le(out, static_cast<std::uint32_t>(l.kernel));
        detail::push_u32le(out, static_cast<std::uint32_t>(l.stride));
        detail::push_u32le(out, static_cast<std::uint32_t>(l.padding));
        detail::push_u32le(out, static_cast<std::uint32_t>(l.units));
    }
    auto push_blob = [&out](const Tensor& t) {
        detail::push_u32le(out, static_cast<std::uint32_t>(t.data.size()));
        for (const double v : t.data) {
            const auto f = static_cast<float>(v);
            std::uint32_t u;
            std::memcpy(&u, &f, 4);
            detail::push_u32le(out, u);
        }
    };
    for (const LayerParams& l : params.layers) {
        push_blob(l.weights);
        push_blob(l.bias);
    }
    detail::write_binary_file(path, out);
}

inline std::pair<NetworkSpec, ParamSet> load_checkpoint(const std::filesystem::path& path) {
    const auto bytes = detail::read_binary_file(path);
    const std::string where = path.string();
    std::size_t pos = 0;
    auto need = [&](std::size_t n) {
        if (pos + n > bytes.size()) throw DataError("truncated checkpoint: " + where);
    };
    auto u32 = [&]() {
        need(4);
        const std::uint32_t v = detail::read_u32le(bytes.data() + pos);
        pos += 4;
        return v;
    };

    need(4);
    if (std::memcmp(bytes.data(), "NMC1", 4) != 0) {
        throw DataError("not an NMC1 checkpoint: " + where);
    }
    pos = 4;
    if (u32() != 1) throw DataError("unsupported checkpoint version: " + where);

    NetworkSpec spec;
    spec.num_classes = u32();
    spec.input_shape.resize(u32());
    for (auto& d : spec.input_shape) d = u32();
    spec.layers.resize(u32());
    for (LayerSpec& l : spec.layers) {
        const std::uint32_t kind = u32();
        if (kind > 5) throw DataError("unknown layer kind in checkpoint: " + where);
        l.kind = static_cast<LayerKind>(kind);
        l.out_channels = u32();
        l.kernel = u32();
        l.stride = u32();
        l.padding = u32();
        l.units = u32();
    }
    spec.validate();

    ParamSet params = zero_params(spec);
    auto read_blob = [&](Tensor& t) {
        const std::uint32_t count = u32();
        if (count != t.data.size()) {
            throw DataError("checkpoint parameter blob has wrong size: " + where);
        }
        for (std::size_t i = 0; i < count; ++i) {
            const std::uint32_t u = u32();
            float f;
            std::memcpy(&f, &u, 4);
            t.data[i] = static_cast<double>(f);
        }
    };
    for (LayerParams& l : params.layers) {
        read_blob(l.weights);
        read_blob(l.bias);
    }
    if (pos != bytes.size()) throw DataError("trailing bytes in checkpoint: " + where);
    return {std::move(spec), std::move(params)};
}

}  // namespace camid
