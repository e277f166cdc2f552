#pragma once

// Architecture descriptors and the network that instantiates them.
//
// A model is up to two trunks (image, feature) whose outputs are concatenated and fed to a
// head. The stand-alone CNN and FFN use one trunk each; the combined model uses both.

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "courtraster/nn/layers.hpp"

namespace courtraster::nn {

enum class ModelKind { Ffn, Cnn, Combined };
enum class LayerKind { Conv, MaxPool, Dense, BatchNorm2d, BatchNorm1d, Relu, Dropout, Flatten, Softmax };

std::string to_string(ModelKind k);
ModelKind model_kind_from_string(const std::string& s);
std::string to_string(LayerKind k);
LayerKind layer_kind_from_string(const std::string& s);

struct LayerSpec {
    LayerKind kind = LayerKind::Relu;
    std::size_t units = 0;  // filters for conv, width for dense; 0 otherwise
    double rate = 0.0;      // dropout probability; 0 otherwise

    friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

struct ModelSpec {
    ModelKind kind = ModelKind::Cnn;
    std::array<std::size_t, 3> image_shape{0, 0, 0};  // C, H, W
    std::size_t feature_dim = 0;
    std::size_t classes = kNumClasses;
    std::vector<LayerSpec> image_trunk;
    std::vector<LayerSpec> feature_trunk;
    std::vector<LayerSpec> head;  // ends with dense(classes), softmax

    bool uses_images() const { return !image_trunk.empty(); }
    bool uses_features() const { return kind != ModelKind::Cnn; }

    friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

struct ShapeReport {
    std::vector<Shape> image_chain;    // per-sample shape after each image-trunk layer
    std::vector<Shape> feature_chain;  // after each feature-trunk layer
    std::vector<Shape> head_chain;
    std::size_t image_out = 0;
    std::size_t feature_out = 0;
    std::size_t concat_width = 0;
    std::size_t param_count = 0;  // trainable scalars
};

// Throws ContractError when shapes do not chain or the head is not dense(classes) + softmax.
ShapeReport check_spec(const ModelSpec& spec);

ModelSpec build_cnn(std::size_t channels = 11, std::size_t height = 94, std::size_t width = 50,
                    std::size_t filters = 32, std::size_t blocks = 3, std::size_t dense = 400);
// depth 0 is plain multinomial logistic regression on the features.
ModelSpec build_ffn(std::size_t features = 198, std::vector<std::size_t> hidden = {256, 256});
// dropout > 0 inserts a dropout layer on the concatenated branch outputs.
ModelSpec build_combined(const ModelSpec& cnn, const ModelSpec& ffn, std::size_t hidden = 1000, double dropout = 0.0);

nlohmann::json spec_to_json(const ModelSpec& spec);
ModelSpec spec_from_json(const nlohmann::json& j);

template <class T>
class Sequential {
public:
    void add(std::unique_ptr<Layer<T>> layer) { layers_.push_back(std::move(layer)); }
    std::size_t size() const { return layers_.size(); }
    bool empty() const { return layers_.empty(); }
    Layer<T>& layer(std::size_t i) { return *layers_[i]; }

    // Runs layers [0, count). Returns the last activation (or the input when count == 0).
    const Tensor<T>& forward(const Tensor<T>& x, bool train, std::size_t count = SIZE_MAX);
    // Backpropagates through the layers run by the last forward. dx may be null.
    void backward(const Tensor<T>& dy, Tensor<T>* dx);
    // Index of the first layer whose last output holds a non-finite value, or -1.
    int first_non_finite() const;
    // Frees cached activations and gradients; the next forward reallocates them.
    void release_scratch();

private:
    std::vector<std::unique_ptr<Layer<T>>> layers_;
    const Tensor<T>* input_ = nullptr;
    std::vector<Tensor<T>> acts_;
    std::vector<Tensor<T>> grads_;
    std::size_t ran_ = 0;
};

struct NamedTensor {
    std::string name;
    Tensor<float> value;
};

template <class T>
class Network {
public:
    explicit Network(ModelSpec spec);

    const ModelSpec& spec() const { return spec_; }

    // Uniform +-sqrt(1/fan_in) weights, zero biases, unit gamma, zero beta; reseeds dropout masks.
    void init(std::uint64_t seed);
    void hold_dropout_masks(bool hold);

    // Either input may be null when the model does not use it. Returns [N, classes] logits.
    const Tensor<T>& forward(const Tensor<T>* images, const Tensor<T>* features, bool train);
    // dlogits is d(loss)/d(logits). Accumulates parameter gradients.
    void backward(const Tensor<T>& dlogits);

    void zero_grad();
    std::vector<Param<T>*> params();
    std::vector<std::pair<std::string, Tensor<T>*>> buffers();

    // All trainable tensors and buffers by stable name, in f32.
    std::vector<NamedTensor> state() const;
    void load_state(const std::vector<NamedTensor>& state);

    Sequential<T>& image_trunk() { return image_; }
    Sequential<T>& feature_trunk() { return feature_; }
    Sequential<T>& head() { return head_; }

    // Name of the first layer producing non-finite output in the last forward, if any.
    std::optional<std::string> non_finite_layer() const;
    // Frees per-batch buffers so an idle network holds little more than its parameters.
    void release_scratch();

private:
    ModelSpec spec_;
    ShapeReport shapes_;
    Sequential<T> image_, feature_, head_;
    Tensor<T> concat_;
    Tensor<T> dconcat_;
    Tensor<T> dimage_, dfeature_;

    struct Entry {
        std::string name;
        Tensor<T>* tensor;
    };
    std::vector<Entry> named_state();
};

}  // namespace courtraster::nn
