#include "facet/network.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include "facet/kernels.hpp"
#include "facet/rng.hpp"

namespace facet {

const char* layer_kind_name(LayerKind k) {
    switch (k) {
        case LayerKind::conv: return "conv";
        case LayerKind::relu: return "relu";
        case LayerKind::maxpool: return "maxpool";
        case LayerKind::dense: return "dense";
        default: return "softmax";
    }
}

LayerSpec LayerSpec::conv2d(std::string name, int out_channels, int kernel, int stride, int pad) {
    LayerSpec s;
    s.kind = LayerKind::conv;
    s.name = std::move(name);
    s.out_channels = out_channels;
    s.kernel = kernel;
    s.stride = stride;
    s.pad = pad;
    return s;
}
LayerSpec LayerSpec::relu(std::string name) {
    LayerSpec s;
    s.kind = LayerKind::relu;
    s.name = std::move(name);
    return s;
}
LayerSpec LayerSpec::maxpool(std::string name, int pool, int pool_stride) {
    LayerSpec s;
    s.kind = LayerKind::maxpool;
    s.name = std::move(name);
    s.pool = pool;
    s.pool_stride = pool_stride > 0 ? pool_stride : pool;
    return s;
}
LayerSpec LayerSpec::dense(std::string name, int units) {
    LayerSpec s;
    s.kind = LayerKind::dense;
    s.name = std::move(name);
    s.units = units;
    return s;
}
LayerSpec LayerSpec::softmax(std::string name) {
    LayerSpec s;
    s.kind = LayerKind::softmax;
    s.name = std::move(name);
    return s;
}

Network Network::build(Shape input_shape, std::vector<LayerSpec> layers, uint64_t init_seed) {
    if (input_shape.dims.size() != 3)
        throw ShapeError("network input shape must be rank 3, got " + input_shape.str());
    Network net;
    net.input_shape_ = std::move(input_shape);
    net.layers_ = std::move(layers);
    net.params_.resize(net.layers_.size());
    net.output_shapes_.reserve(net.layers_.size());

    Rng rng(init_seed);
    Shape cur = net.input_shape_;
    for (size_t i = 0; i < net.layers_.size(); ++i) {
        const LayerSpec& spec = net.layers_[i];
        if (spec.name.empty()) throw ConfigError("layer " + std::to_string(i) + " has no name");
        for (size_t j = 0; j < i; ++j)
            if (net.layers_[j].name == spec.name)
                throw ConfigError("duplicate layer name '" + spec.name + "'");

        const int h = cur.dims[0], w = cur.dims[1], c = cur.dims[2];
        LayerParams& p = net.params_[i];
        switch (spec.kind) {
            case LayerKind::conv: {
                if (spec.kernel < 1 || spec.out_channels < 1 || spec.stride < 1 || spec.pad < 0)
                    throw ConfigError("layer '" + spec.name + "': bad conv parameters");
                const int oh = (h + 2 * spec.pad - spec.kernel) / spec.stride + 1;
                const int ow = (w + 2 * spec.pad - spec.kernel) / spec.stride + 1;
                if (oh < 1 || ow < 1)
                    throw ShapeError("layer '" + spec.name + "': kernel does not fit input " +
                                     cur.str());
                p.kernels = Tensor4(spec.kernel, spec.kernel, c, spec.out_channels);
                const double std = std::sqrt(2.0 / (spec.kernel * spec.kernel * c));
                for (auto& v : p.kernels.data) v = static_cast<float>(rng.normal() * std);
                p.bias.assign(spec.out_channels, 0.0f);
                cur = Shape{{oh, ow, spec.out_channels}};
                break;
            }
            case LayerKind::relu:
                break;
            case LayerKind::maxpool: {
                if (spec.pool < 1 || spec.pool_stride < 1)
                    throw ConfigError("layer '" + spec.name + "': bad pool parameters");
                const int oh = (h - spec.pool) / spec.pool_stride + 1;
                const int ow = (w - spec.pool) / spec.pool_stride + 1;
                if (oh < 1 || ow < 1)
                    throw ShapeError("layer '" + spec.name + "': pool does not fit input " + cur.str());
                cur = Shape{{oh, ow, c}};
                break;
            }
            case LayerKind::dense: {
                if (spec.units < 1) throw ConfigError("layer '" + spec.name + "': units must be >= 1");
                const int in_dim = h * w * c;
                p.weights = Mat(spec.units, in_dim);
                const double std = std::sqrt(2.0 / in_dim);
                for (auto& v : p.weights.data) v = static_cast<float>(rng.normal() * std);
                p.bias.assign(spec.units, 0.0f);
                cur = Shape{{1, 1, spec.units}};
                break;
            }
            case LayerKind::softmax:
                if (h != 1 || w != 1)
                    throw ShapeError("layer '" + spec.name + "': softmax needs a 1x1xC input, got " +
                                     cur.str());
                break;
        }
        net.output_shapes_.push_back(cur);
    }
    return net;
}

Network default_shapes_network(int num_classes, uint64_t init_seed) {
    return Network::build(Shape{{32, 32, 3}},
                          {LayerSpec::conv2d("conv1", 16, 5, 1, 2), LayerSpec::relu("relu1"),
                           LayerSpec::maxpool("pool1", 2), LayerSpec::conv2d("conv2", 32, 5, 1, 2),
                           LayerSpec::relu("relu2"), LayerSpec::maxpool("pool2", 2),
                           LayerSpec::dense("fc_code", 64), LayerSpec::relu("relu3"),
                           LayerSpec::dense("fc_class", num_classes), LayerSpec::softmax("softmax")},
                          init_seed);
}

int Network::layer_index(const std::string& name) const {
    for (size_t i = 0; i < layers_.size(); ++i)
        if (layers_[i].name == name) return static_cast<int>(i);
    return -1;
}

int Network::require_layer(const std::string& name) const {
    const int i = layer_index(name);
    if (i < 0) throw ConfigError("no layer named '" + name + "'");
    return i;
}

void Network::validate_selector(const UnitSelector& sel) const {
    const int li = require_layer(sel.layer);
    const Shape& out = output_shapes_[li];
    if (sel.unit < 0 || sel.unit >= out.dims[2])
        throw ConfigError("selector unit " + std::to_string(sel.unit) + " out of range for layer '" +
                          sel.layer + "' with " + std::to_string(out.dims[2]) + " channels");
    if (sel.location) {
        if (out.dims[0] == 1 && out.dims[1] == 1)
            throw ConfigError("selector location given for non-spatial layer '" + sel.layer + "'");
        const auto [r, c] = *sel.location;
        if (r < 0 || r >= out.dims[0] || c < 0 || c >= out.dims[1])
            throw ConfigError("selector location (" + std::to_string(r) + ", " + std::to_string(c) +
                              ") outside layer '" + sel.layer + "' extent " + out.str());
    }
}

bool Network::all_finite() const {
    for (const auto& p : params_) {
        for (float v : p.kernels.data)
            if (!std::isfinite(v)) return false;
        for (float v : p.weights.data)
            if (!std::isfinite(v)) return false;
        for (float v : p.bias)
            if (!std::isfinite(v)) return false;
    }
    return true;
}

namespace {

ImageTensor dense_forward(const ImageTensor& x, const Mat& w, const std::vector<float>& b) {
    const int in_dim = static_cast<int>(x.size());
    ImageTensor out(1, 1, w.rows);
#pragma omp parallel for schedule(static)
    for (int u = 0; u < w.rows; ++u) {
        double acc = b[u];
        const float* row = &w.data[static_cast<size_t>(u) * w.cols];
        for (int i = 0; i < in_dim; ++i) acc += static_cast<double>(row[i]) * x.data[i];
        out.data[u] = static_cast<float>(acc);
    }
    return out;
}

ImageTensor softmax_forward(const ImageTensor& x) {
    ImageTensor out(1, 1, x.c);
    float m = x.data[0];
    for (float v : x.data) m = std::max(m, v);
    double sum = 0.0;
    for (int i = 0; i < x.c; ++i) {
        const double e = std::exp(static_cast<double>(x.data[i]) - m);
        out.data[i] = static_cast<float>(e);
        sum += e;
    }
    for (int i = 0; i < x.c; ++i) out.data[i] = static_cast<float>(out.data[i] / sum);
    return out;
}

ImageTensor maxpool_forward(const ImageTensor& x, int pool, int stride) {
    const int oh = (x.h - pool) / stride + 1;
    const int ow = (x.w - pool) / stride + 1;
    ImageTensor out(oh, ow, x.c);
#pragma omp parallel for schedule(static)
    for (int oy = 0; oy < oh; ++oy)
        for (int ox = 0; ox < ow; ++ox)
            for (int ch = 0; ch < x.c; ++ch) {
                float m = x.at(oy * stride, ox * stride, ch);
                for (int py = 0; py < pool; ++py)
                    for (int px = 0; px < pool; ++px)
                        m = std::max(m, x.at(oy * stride + py, ox * stride + px, ch));
                out.at(oy, ox, ch) = m;
            }
    return out;
}

}  // namespace

ActivationTrace forward(const Network& net, const ImageTensor& x) {
    if (x.shape() != net.input_shape())
        throw ShapeError("forward: input " + x.shape().str() + " != network input " +
                         net.input_shape().str());
    ActivationTrace trace;
    trace.input = x;
    trace.outputs.reserve(net.layers().size());
    const ImageTensor* cur = &trace.input;
    for (size_t i = 0; i < net.layers().size(); ++i) {
        const LayerSpec& spec = net.layers()[i];
        const LayerParams& p = net.params()[i];
        ImageTensor out;
        switch (spec.kind) {
            case LayerKind::conv: {
                out = conv2d(*cur, p.kernels, spec.stride, spec.pad);
                for (int y = 0; y < out.h; ++y)
                    for (int xw = 0; xw < out.w; ++xw)
                        for (int ch = 0; ch < out.c; ++ch) out.at(y, xw, ch) += p.bias[ch];
                break;
            }
            case LayerKind::relu: {
                out = *cur;
                for (auto& v : out.data) v = std::max(v, 0.0f);
                break;
            }
            case LayerKind::maxpool:
                out = maxpool_forward(*cur, spec.pool, spec.pool_stride);
                break;
            case LayerKind::dense:
                out = dense_forward(*cur, p.weights, p.bias);
                break;
            case LayerKind::softmax:
                out = softmax_forward(*cur);
                break;
        }
        trace.outputs.push_back(std::move(out));
        cur = &trace.outputs.back();
    }
    return trace;
}

float activation_from_trace(const Network& net, const ActivationTrace& trace,
                            const UnitSelector& sel) {
    net.validate_selector(sel);
    const int li = net.require_layer(sel.layer);
    const ImageTensor& out = trace.outputs[li];
    if (sel.location) return out.at(sel.location->first, sel.location->second, sel.unit);
    if (out.h == 1 && out.w == 1) return out.at(0, 0, sel.unit);
    double acc = 0.0;
    for (int y = 0; y < out.h; ++y)
        for (int x = 0; x < out.w; ++x) acc += out.at(y, x, sel.unit);
    return static_cast<float>(acc / (static_cast<double>(out.h) * out.w));
}

float unit_activation(const Network& net, const ImageTensor& x, const UnitSelector& sel) {
    return activation_from_trace(net, forward(net, x), sel);
}

namespace {

// Backward through layer li. upstream matches the layer output; returns the
// gradient w.r.t. the layer input. When grads != nullptr, parameter
// gradients are accumulated into it.
ImageTensor backward_layer(const Network& net, int li, const ImageTensor& input,
                           const ImageTensor& output, const ImageTensor& upstream,
                           LayerParams* grads) {
    const LayerSpec& spec = net.layers()[li];
    const LayerParams& p = net.params()[li];
    switch (spec.kind) {
        case LayerKind::conv: {
            auto [gin, gk] = conv2d_grads(input, p.kernels, upstream, spec.stride, spec.pad);
            if (grads) {
                for (size_t i = 0; i < gk.data.size(); ++i) grads->kernels.data[i] += gk.data[i];
                for (int ch = 0; ch < upstream.c; ++ch) {
                    double acc = 0.0;
                    for (int y = 0; y < upstream.h; ++y)
                        for (int x = 0; x < upstream.w; ++x) acc += upstream.at(y, x, ch);
                    grads->bias[ch] += static_cast<float>(acc);
                }
            }
            return std::move(gin);
        }
        case LayerKind::relu: {
            ImageTensor gin(input.h, input.w, input.c);
            for (size_t i = 0; i < input.size(); ++i)
                gin.data[i] = input.data[i] > 0.0f ? upstream.data[i] : 0.0f;
            return gin;
        }
        case LayerKind::maxpool: {
            // route to the first maximum in scan order
            ImageTensor gin(input.h, input.w, input.c);
            for (int oy = 0; oy < output.h; ++oy)
                for (int ox = 0; ox < output.w; ++ox)
                    for (int ch = 0; ch < input.c; ++ch) {
                        int by = oy * spec.pool_stride, bx = ox * spec.pool_stride;
                        int my = by, mx = bx;
                        float m = input.at(by, bx, ch);
                        for (int py = 0; py < spec.pool; ++py)
                            for (int px = 0; px < spec.pool; ++px)
                                if (input.at(by + py, bx + px, ch) > m) {
                                    m = input.at(by + py, bx + px, ch);
                                    my = by + py;
                                    mx = bx + px;
                                }
                        gin.at(my, mx, ch) += upstream.at(oy, ox, ch);
                    }
            return gin;
        }
        case LayerKind::dense: {
            const int in_dim = static_cast<int>(input.size());
            ImageTensor gin(input.h, input.w, input.c);
#pragma omp parallel for schedule(static)
            for (int i = 0; i < in_dim; ++i) {
                double acc = 0.0;
                for (int u = 0; u < p.weights.rows; ++u)
                    acc += static_cast<double>(upstream.data[u]) * p.weights.at(u, i);
                gin.data[i] = static_cast<float>(acc);
            }
            if (grads) {
                for (int u = 0; u < p.weights.rows; ++u) {
                    const float g = upstream.data[u];
                    grads->bias[u] += g;
                    float* row = &grads->weights.data[static_cast<size_t>(u) * in_dim];
                    for (int i = 0; i < in_dim; ++i) row[i] += g * input.data[i];
                }
            }
            return gin;
        }
        case LayerKind::softmax: {
            // gin_i = y_i * (g_i - sum_j g_j y_j)
            double dot = 0.0;
            for (int i = 0; i < output.c; ++i)
                dot += static_cast<double>(upstream.data[i]) * output.data[i];
            ImageTensor gin(1, 1, output.c);
            for (int i = 0; i < output.c; ++i)
                gin.data[i] = static_cast<float>(output.data[i] * (upstream.data[i] - dot));
            return gin;
        }
    }
    throw Error(ErrorCategory::runtime, "unreachable layer kind");
}

ImageTensor backprop_from(const Network& net, const ActivationTrace& trace, int from_layer,
                          ImageTensor upstream, std::vector<LayerParams>* grads) {
    for (int i = from_layer; i >= 0; --i) {
        const ImageTensor& input = i == 0 ? trace.input : trace.outputs[i - 1];
        upstream = backward_layer(net, i, input, trace.outputs[i], upstream,
                                  grads ? &(*grads)[i] : nullptr);
    }
    return upstream;
}

}  // namespace

ImageTensor input_gradient(const Network& net, const ImageTensor& x, const UnitSelector& sel) {
    net.validate_selector(sel);
    const int li = net.require_layer(sel.layer);
    ActivationTrace trace = forward(net, x);
    const ImageTensor& out = trace.outputs[li];
    ImageTensor upstream(out.h, out.w, out.c);
    if (sel.location) {
        upstream.at(sel.location->first, sel.location->second, sel.unit) = 1.0f;
    } else if (out.h == 1 && out.w == 1) {
        upstream.at(0, 0, sel.unit) = 1.0f;
    } else {
        const float v = 1.0f / (static_cast<float>(out.h) * out.w);
        for (int y = 0; y < out.h; ++y)
            for (int xw = 0; xw < out.w; ++xw) upstream.at(y, xw, sel.unit) = v;
    }
    return backprop_from(net, trace, li, std::move(upstream), nullptr);
}

std::vector<float> layer_code_from_trace(const Network& net, const ActivationTrace& trace,
                                         const std::string& layer_name,
                                         std::optional<std::pair<int, int>> location) {
    const int li = net.require_layer(layer_name);
    const ImageTensor& out = trace.outputs[li];
    const bool spatial = out.h > 1 || out.w > 1;
    if (!spatial) {
        if (location) throw ConfigError("layer_code: location given for non-spatial layer '" +
                                        layer_name + "'");
        return out.data;
    }
    if (!location)
        throw ConfigError("layer_code: conv layer '" + layer_name + "' needs a location");
    const auto [r, c] = *location;
    if (r < 0 || r >= out.h || c < 0 || c >= out.w)
        throw ConfigError("layer_code: location outside layer extent " + out.shape().str());
    std::vector<float> code(out.c);
    for (int ch = 0; ch < out.c; ++ch) code[ch] = out.at(r, c, ch);
    return code;
}

std::vector<float> layer_code(const Network& net, const ImageTensor& x,
                              const std::string& layer_name,
                              std::optional<std::pair<int, int>> location) {
    return layer_code_from_trace(net, forward(net, x), layer_name, location);
}

namespace {

double dataset_loss(const Network& net, const LabeledDataset& data, int logits_layer,
                    double* accuracy) {
    double loss = 0.0;
    int correct = 0;
    for (size_t i = 0; i < data.size(); ++i) {
        const ActivationTrace trace = forward(net, data.images[i]);
        const ImageTensor& logits = trace.outputs[logits_layer];
        float m = logits.data[0];
        int arg = 0;
        for (int k = 1; k < logits.c; ++k)
            if (logits.data[k] > m) { m = logits.data[k]; arg = k; }
        double lse = 0.0;
        for (int k = 0; k < logits.c; ++k) lse += std::exp(static_cast<double>(logits.data[k]) - m);
        loss += m + std::log(lse) - logits.data[data.labels[i]];
        if (arg == data.labels[i]) ++correct;
    }
    if (accuracy) *accuracy = static_cast<double>(correct) / data.size();
    return loss / data.size();
}

}  // namespace

std::pair<Network, std::vector<EpochMetrics>> train(const Network& net, const LabeledDataset& data,
                                                    const TrainConfig& cfg) {
    if (data.size() == 0) throw DataError("train: empty dataset");
    if (cfg.learning_rate <= 0) throw ConfigError("train: learning_rate must be > 0");
    if (cfg.batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
    const int num_layers = static_cast<int>(net.layers().size());
    if (num_layers < 2 || net.layers().back().kind != LayerKind::softmax)
        throw ConfigError("train: network must end with a softmax layer");
    const int logits_layer = num_layers - 2;
    const int num_classes = net.output_shapes().back().dims[2];
    for (int label : data.labels)
        if (label < 0 || label >= num_classes)
            throw DataError("train: label " + std::to_string(label) + " outside class count " +
                            std::to_string(num_classes));

    Network out = net;
    auto zero_like = [&](const std::vector<LayerParams>& params) {
        std::vector<LayerParams> z(params.size());
        for (size_t i = 0; i < params.size(); ++i) {
            const auto& p = params[i];
            if (!p.kernels.data.empty())
                z[i].kernels = Tensor4(p.kernels.kh, p.kernels.kw, p.kernels.in_c, p.kernels.out_c);
            if (!p.weights.data.empty()) z[i].weights = Mat(p.weights.rows, p.weights.cols);
            z[i].bias.assign(p.bias.size(), 0.0f);
        }
        return z;
    };
    std::vector<LayerParams> velocity = zero_like(out.params());

    Rng rng(cfg.rng_seed);
    std::vector<int> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<EpochMetrics> metrics;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        // Fisher-Yates from the run RNG
        for (size_t i = order.size(); i > 1; --i) {
            const size_t j = rng.uniform_int(i);
            std::swap(order[i - 1], order[j]);
        }
        for (size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const size_t end = std::min(order.size(), start + cfg.batch_size);
            const float inv_batch = 1.0f / static_cast<float>(end - start);
            std::vector<LayerParams> grads = zero_like(out.params());
            for (size_t bi = start; bi < end; ++bi) {
                const int idx = order[bi];
                const ActivationTrace trace = forward(out, data.images[idx]);
                const ImageTensor& probs = trace.outputs.back();
                ImageTensor upstream(1, 1, num_classes);
                for (int k = 0; k < num_classes; ++k)
                    upstream.data[k] = (probs.data[k] - (k == data.labels[idx] ? 1.0f : 0.0f)) *
                                       inv_batch;
                backprop_from(out, trace, logits_layer, std::move(upstream), &grads);
            }
            for (int li = 0; li < num_layers; ++li) {
                auto update = [&](std::vector<float>& w, std::vector<float>& v,
                                  const std::vector<float>& g) {
                    for (size_t i = 0; i < w.size(); ++i) {
                        v[i] = cfg.momentum * v[i] - cfg.learning_rate * g[i];
                        w[i] += v[i];
                    }
                };
                update(out.params()[li].kernels.data, velocity[li].kernels.data,
                       grads[li].kernels.data);
                update(out.params()[li].weights.data, velocity[li].weights.data,
                       grads[li].weights.data);
                update(out.params()[li].bias, velocity[li].bias, grads[li].bias);
            }
        }
        EpochMetrics em;
        em.loss = dataset_loss(out, data, logits_layer, &em.accuracy);
        metrics.push_back(em);
    }
    return {std::move(out), std::move(metrics)};
}

double evaluate_accuracy(const Network& net, const LabeledDataset& data) {
    if (data.size() == 0) throw DataError("evaluate_accuracy: empty dataset");
    int correct = 0;
    for (size_t i = 0; i < data.size(); ++i) {
        const ActivationTrace trace = forward(net, data.images[i]);
        const ImageTensor& out = trace.outputs.back();
        int arg = 0;
        for (int k = 1; k < out.c; ++k)
            if (out.data[k] > out.data[arg]) arg = k;
        if (arg == data.labels[i]) ++correct;
    }
    return static_cast<double>(correct) / data.size();
}

// ---------------------------------------------------------------------------
// weight container

namespace {

constexpr char kNetMagic[8] = {'F', 'A', 'C', 'E', 'T', 'N', 'E', 'T'};
constexpr uint8_t kNetVersion = 1;

struct Cursor {
    const std::vector<uint8_t>& buf;
    size_t pos = 0;

    void need(size_t n, const std::string& part) const {
        if (pos + n > buf.size())
            throw IoError("weights file truncated: need " + std::to_string(n) + " bytes for " +
                          part + ", have " + std::to_string(buf.size() - pos));
    }
    uint8_t u8(const std::string& part) {
        need(1, part);
        return buf[pos++];
    }
    uint32_t u32(const std::string& part) {
        need(4, part);
        uint32_t v = static_cast<uint32_t>(buf[pos]) | (static_cast<uint32_t>(buf[pos + 1]) << 8) |
                     (static_cast<uint32_t>(buf[pos + 2]) << 16) |
                     (static_cast<uint32_t>(buf[pos + 3]) << 24);
        pos += 4;
        return v;
    }
    std::string str(const std::string& part) {
        const uint32_t len = u32(part + " length");
        if (len > 4096) throw IoError("weights file: implausible " + part + " length");
        need(len, part);
        std::string s(reinterpret_cast<const char*>(buf.data() + pos), len);
        pos += len;
        return s;
    }
};

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
    out.push_back(static_cast<uint8_t>(v & 0xFF));
    out.push_back(static_cast<uint8_t>((v >> 8) & 0xFF));
    out.push_back(static_cast<uint8_t>((v >> 16) & 0xFF));
    out.push_back(static_cast<uint8_t>((v >> 24) & 0xFF));
}

void check_tensor_shape(const std::string& layer, const char* what, const std::vector<int>& got,
                        const std::vector<int>& expected) {
    if (got != expected)
        throw ShapeError("layer '" + layer + "': stored " + what + " shape " + Shape{got}.str() +
                         " != expected " + Shape{expected}.str());
}

}  // namespace

void save_weights(const Network& net, const std::filesystem::path& path) {
    std::vector<uint8_t> buf;
    buf.insert(buf.end(), kNetMagic, kNetMagic + 8);
    buf.push_back(kNetVersion);
    put_u32(buf, static_cast<uint32_t>(net.input_shape().dims.size()));
    for (int d : net.input_shape().dims) put_u32(buf, static_cast<uint32_t>(d));
    put_u32(buf, static_cast<uint32_t>(net.layers().size()));
    for (size_t i = 0; i < net.layers().size(); ++i) {
        const LayerSpec& spec = net.layers()[i];
        const LayerParams& p = net.params()[i];
        put_u32(buf, static_cast<uint32_t>(spec.name.size()));
        buf.insert(buf.end(), spec.name.begin(), spec.name.end());
        buf.push_back(static_cast<uint8_t>(spec.kind));
        for (int v : {spec.out_channels, spec.kernel, spec.stride, spec.pad, spec.pool,
                      spec.pool_stride, spec.units})
            put_u32(buf, static_cast<uint32_t>(v));
        const uint32_t tensors = spec.kind == LayerKind::conv || spec.kind == LayerKind::dense ? 2 : 0;
        put_u32(buf, tensors);
        if (spec.kind == LayerKind::conv) {
            append_flt1(buf, {p.kernels.kh, p.kernels.kw, p.kernels.in_c, p.kernels.out_c},
                        p.kernels.data);
            append_flt1(buf, {static_cast<int>(p.bias.size())}, p.bias);
        } else if (spec.kind == LayerKind::dense) {
            append_flt1(buf, {p.weights.rows, p.weights.cols}, p.weights.data);
            append_flt1(buf, {static_cast<int>(p.bias.size())}, p.bias);
        }
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path.string() + " for writing");
    f.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!f) throw IoError("short write to " + path.string());
}

Network load_weights(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path.string());
    std::vector<uint8_t> buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    Cursor cur{buf};
    cur.need(8, "magic");
    if (std::memcmp(buf.data(), kNetMagic, 8) != 0)
        throw IoError(path.string() + ": bad weight-file magic");
    cur.pos = 8;
    const uint8_t version = cur.u8("format version");
    if (version != kNetVersion)
        throw IoError(path.string() + ": unsupported format version " + std::to_string(version));
    const uint32_t rank = cur.u32("input shape rank");
    if (rank != 3) throw IoError(path.string() + ": input shape must be rank 3");
    Shape input;
    for (uint32_t i = 0; i < rank; ++i)
        input.dims.push_back(static_cast<int>(cur.u32("input extent")));
    const uint32_t layer_count = cur.u32("layer count");
    if (layer_count > 1024) throw IoError(path.string() + ": implausible layer count");

    std::vector<LayerSpec> specs;
    struct StoredParams {
        std::vector<std::pair<std::vector<int>, std::vector<float>>> tensors;
    };
    std::vector<StoredParams> stored;
    for (uint32_t i = 0; i < layer_count; ++i) {
        LayerSpec spec;
        spec.name = cur.str("layer name");
        const uint8_t kind = cur.u8("layer kind");
        if (kind > 4) throw IoError(path.string() + ": bad layer kind " + std::to_string(kind));
        spec.kind = static_cast<LayerKind>(kind);
        spec.out_channels = static_cast<int>(cur.u32("conv out_channels"));
        spec.kernel = static_cast<int>(cur.u32("conv kernel"));
        spec.stride = static_cast<int>(cur.u32("conv stride"));
        spec.pad = static_cast<int>(cur.u32("conv pad"));
        spec.pool = static_cast<int>(cur.u32("pool size"));
        spec.pool_stride = static_cast<int>(cur.u32("pool stride"));
        spec.units = static_cast<int>(cur.u32("dense units"));
        const uint32_t tensors = cur.u32("tensor count");
        StoredParams sp;
        for (uint32_t t = 0; t < tensors; ++t)
            sp.tensors.push_back(parse_flt1(buf.data(), buf.size(), cur.pos,
                                            "layer '" + spec.name + "' tensor " + std::to_string(t)));
        specs.push_back(std::move(spec));
        stored.push_back(std::move(sp));
    }
    if (cur.pos != buf.size())
        throw IoError(path.string() + ": " + std::to_string(buf.size() - cur.pos) +
                      " trailing bytes");

    Network net = Network::build(input, specs, 0);
    for (uint32_t i = 0; i < layer_count; ++i) {
        LayerParams& p = net.params()[i];
        const LayerSpec& spec = net.layers()[i];
        if (spec.kind == LayerKind::conv) {
            if (stored[i].tensors.size() != 2)
                throw IoError("layer '" + spec.name + "': expected 2 parameter tensors");
            check_tensor_shape(spec.name, "kernels", stored[i].tensors[0].first,
                               {p.kernels.kh, p.kernels.kw, p.kernels.in_c, p.kernels.out_c});
            check_tensor_shape(spec.name, "bias", stored[i].tensors[1].first,
                               {static_cast<int>(p.bias.size())});
            p.kernels.data = std::move(stored[i].tensors[0].second);
            p.bias = std::move(stored[i].tensors[1].second);
        } else if (spec.kind == LayerKind::dense) {
            if (stored[i].tensors.size() != 2)
                throw IoError("layer '" + spec.name + "': expected 2 parameter tensors");
            check_tensor_shape(spec.name, "weights", stored[i].tensors[0].first,
                               {p.weights.rows, p.weights.cols});
            check_tensor_shape(spec.name, "bias", stored[i].tensors[1].first,
                               {static_cast<int>(p.bias.size())});
            p.weights.data = std::move(stored[i].tensors[0].second);
            p.bias = std::move(stored[i].tensors[1].second);
        } else if (!stored[i].tensors.empty()) {
            throw IoError("layer '" + spec.name + "': unexpected parameter tensors");
        }
    }
    return net;
}

}  // namespace facet
