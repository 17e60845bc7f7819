#pragma once

#include <optional>
#include <string>
#include <vector>

#include "facet/dataset.hpp"
#include "facet/tensor.hpp"

namespace facet {

enum class LayerKind { conv, relu, maxpool, dense, softmax };

const char* layer_kind_name(LayerKind k);

struct LayerSpec {
    LayerKind kind = LayerKind::relu;
    std::string name;
    // conv
    int out_channels = 0, kernel = 0, stride = 1, pad = 0;
    // maxpool
    int pool = 0, pool_stride = 0;
    // dense
    int units = 0;

    static LayerSpec conv2d(std::string name, int out_channels, int kernel, int stride, int pad);
    static LayerSpec relu(std::string name);
    static LayerSpec maxpool(std::string name, int pool, int pool_stride = 0);
    static LayerSpec dense(std::string name, int units);
    static LayerSpec softmax(std::string name);
};

struct LayerParams {
    Tensor4 kernels;          // conv
    Mat weights;              // dense, rows = units, cols = flattened input
    std::vector<float> bias;  // conv/dense
};

// Identifies a target neuron. location is only valid for conv layers; a conv
// selector without location targets the spatial mean of the channel.
struct UnitSelector {
    std::string layer;
    int unit = 0;
    std::optional<std::pair<int, int>> location;  // (row, col)
};

struct TrainConfig {
    float learning_rate = 0.05f;
    float momentum = 0.9f;
    int epochs = 18;
    int batch_size = 32;
    uint64_t rng_seed = 1;
};

struct EpochMetrics {
    double loss = 0.0;      // training-set cross-entropy after the epoch
    double accuracy = 0.0;  // training-set accuracy after the epoch
};

class Network {
public:
    Network() = default;

    // Validates the layer chain against the input shape and initializes
    // weights (He normal) from init_seed.
    static Network build(Shape input_shape, std::vector<LayerSpec> layers, uint64_t init_seed);

    const Shape& input_shape() const { return input_shape_; }
    const std::vector<LayerSpec>& layers() const { return layers_; }
    const std::vector<LayerParams>& params() const { return params_; }
    std::vector<LayerParams>& params() { return params_; }
    const std::vector<Shape>& output_shapes() const { return output_shapes_; }

    int layer_index(const std::string& name) const;  // -1 if absent
    int require_layer(const std::string& name) const;
    void validate_selector(const UnitSelector& sel) const;

    bool all_finite() const;

private:
    Shape input_shape_;
    std::vector<LayerSpec> layers_;
    std::vector<LayerParams> params_;
    std::vector<Shape> output_shapes_;
};

// input 32x32x3; conv 5x5x16 / relu / maxpool 2 / conv 5x5x32 / relu /
// maxpool 2 / dense 64 ("fc_code") / relu / dense C ("fc_class") / softmax
Network default_shapes_network(int num_classes, uint64_t init_seed);

struct ActivationTrace {
    ImageTensor input;
    std::vector<ImageTensor> outputs;  // one per layer; dense outputs are 1x1xU
};

ActivationTrace forward(const Network& net, const ImageTensor& x);

float activation_from_trace(const Network& net, const ActivationTrace& trace,
                            const UnitSelector& sel);
float unit_activation(const Network& net, const ImageTensor& x, const UnitSelector& sel);

// Exact gradient of unit_activation with respect to every input element.
ImageTensor input_gradient(const Network& net, const ImageTensor& x, const UnitSelector& sel);

// Dense layer: the full activation vector. Conv layer: the cross-channel
// column at the given location (location required for conv, rejected for
// dense).
std::vector<float> layer_code(const Network& net, const ImageTensor& x,
                              const std::string& layer_name,
                              std::optional<std::pair<int, int>> location = std::nullopt);
std::vector<float> layer_code_from_trace(const Network& net, const ActivationTrace& trace,
                                         const std::string& layer_name,
                                         std::optional<std::pair<int, int>> location = std::nullopt);

// SGD with momentum on softmax cross-entropy. Deterministic from
// cfg.rng_seed; the input network is untouched.
std::pair<Network, std::vector<EpochMetrics>> train(const Network& net, const LabeledDataset& data,
                                                    const TrainConfig& cfg);

double evaluate_accuracy(const Network& net, const LabeledDataset& data);

// Weight container: 8-byte magic, version byte, layer specs, and one FLT1
// payload per parameter tensor. Round-trips bit-identically.
void save_weights(const Network& net, const std::filesystem::path& path);
Network load_weights(const std::filesystem::path& path);

}  // namespace facet
