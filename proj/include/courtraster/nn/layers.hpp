#pragma once

// Layers with explicit forward/backward passes. Shapes exclude nothing: every tensor carries
// its batch axis first. Parameter gradients accumulate until zero_grad().

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "courtraster/nn/tensor.hpp"

namespace courtraster::nn {

inline constexpr double kBatchNormEps = 1e-5;
inline constexpr double kBatchNormMomentum = 0.9;

template <class T>
struct Param {
    std::string name;
    Tensor<T> value;
    Tensor<T> grad;
};

template <class T>
class Layer {
public:
    virtual ~Layer() = default;

    virtual std::string name() const = 0;
    // Per-sample output shape for a per-sample input shape. Throws ContractError.
    virtual Shape output_shape(const Shape& in) const = 0;
    virtual void forward(const Tensor<T>& x, Tensor<T>& y, bool train) = 0;
    // dx == nullptr skips the input gradient.
    virtual void backward(const Tensor<T>& x, const Tensor<T>& y, const Tensor<T>& dy, Tensor<T>* dx) = 0;

    virtual std::vector<Param<T>*> params() { return {}; }
    // Non-trainable state (batch-norm running statistics).
    virtual std::vector<std::pair<std::string, Tensor<T>*>> buffers() { return {}; }

    // Frees workspaces and caches kept between forward and backward.
    virtual void release_scratch() {}

    void zero_grad() {
        for (auto* p : params()) p->grad.zero();
    }
};

// 3x3 cross-correlation, stride 1, zero padding 1.
template <class T>
class Conv2d final : public Layer<T> {
public:
    Conv2d(std::size_t in_channels, std::size_t filters);
    std::string name() const override;
    Shape output_shape(const Shape& in) const override;
    void forward(const Tensor<T>& x, Tensor<T>& y, bool train) override;
    void backward(const Tensor<T>& x, const Tensor<T>& y, const Tensor<T>& dy, Tensor<T>* dx) override;
    std::vector<Param<T>*> params() override { return {&weight_, &bias_}; }

    Param<T>& weight() { return weight_; }
    Param<T>& bias() { return bias_; }
    std::size_t fan_in() const { return in_ * 9; }
    void release_scratch() override {
        std::vector<T>().swap(cols_);
        std::vector<T>().swap(tmp_);
    }

private:
    std::size_t in_, out_;
    Param<T> weight_;  // [filters, in, 3, 3]
    Param<T> bias_;    // [filters]
    std::vector<T> cols_;
    std::vector<T> tmp_;
};

// 2x2 max pooling, stride 2. Odd extents are padded with -inf; gradients route to the first
// maximal element in row-major window order.
template <class T>
class MaxPool2 final : public Layer<T> {
public:
    std::string name() const override { return "maxpool2"; }
    void release_scratch() override { std::vector<std::uint32_t>().swap(argmax_); }
    Shape output_shape(const Shape& in) const override;
    void forward(const Tensor<T>& x, Tensor<T>& y, bool train) override;
    void backward(const Tensor<T>& x, const Tensor<T>& y, const Tensor<T>& dy, Tensor<T>* dx) override;

private:
    std::vector<std::uint32_t> argmax_;
};

template <class T>
class Dense final : public Layer<T> {
public:
    Dense(std::size_t in, std::size_t out);
    std::string name() const override;
    Shape output_shape(const Shape& in) const override;
    void forward(const Tensor<T>& x, Tensor<T>& y, bool train) override;
    void backward(const Tensor<T>& x, const Tensor<T>& y, const Tensor<T>& dy, Tensor<T>* dx) override;
    std::vector<Param<T>*> params() override { return {&weight_, &bias_}; }

    Param<T>& weight() { return weight_; }
    Param<T>& bias() { return bias_; }
    std::size_t fan_in() const { return in_; }

private:
    std::size_t in_, out_;
    Param<T> weight_;  // [out, in]
    Param<T> bias_;    // [out]
};

// Normalizes per channel over (batch, spatial) for rank-4 input, per feature over the batch
// for rank-2 input. Train mode needs at least two samples.
template <class T>
class BatchNorm final : public Layer<T> {
public:
    explicit BatchNorm(std::size_t channels, bool spatial);
    std::string name() const override;
    Shape output_shape(const Shape& in) const override;
    void forward(const Tensor<T>& x, Tensor<T>& y, bool train) override;
    void backward(const Tensor<T>& x, const Tensor<T>& y, const Tensor<T>& dy, Tensor<T>* dx) override;
    std::vector<Param<T>*> params() override { return {&gamma_, &beta_}; }
    std::vector<std::pair<std::string, Tensor<T>*>> buffers() override {
        return {{"running_mean", &running_mean_}, {"running_var", &running_var_}};
    }

    Param<T>& gamma() { return gamma_; }
    Param<T>& beta() { return beta_; }
    Tensor<T>& running_mean() { return running_mean_; }
    Tensor<T>& running_var() { return running_var_; }
    // Normalized activations of the last train-mode forward, before the affine map.
    const std::vector<T>& normalized() const { return xhat_; }
    void release_scratch() override {
        std::vector<T>().swap(xhat_);
        std::vector<double>().swap(inv_std_);
    }

private:
    std::size_t channels_;
    bool spatial_;
    Param<T> gamma_, beta_;
    Tensor<T> running_mean_, running_var_;
    std::vector<T> xhat_;
    std::vector<double> inv_std_;
    bool last_train_ = false;
};

// Inverted dropout: in train mode each activation is zeroed with probability `rate` and the
// survivors scaled by 1 / (1 - rate); eval mode is the identity. Masks come from a private
// generator, so a seeded network draws the same masks on every run.
template <class T>
class Dropout final : public Layer<T> {
public:
    explicit Dropout(double rate);
    std::string name() const override;
    Shape output_shape(const Shape& in) const override { return in; }
    void forward(const Tensor<T>& x, Tensor<T>& y, bool train) override;
    void backward(const Tensor<T>& x, const Tensor<T>& y, const Tensor<T>& dy, Tensor<T>* dx) override;

    double rate() const { return rate_; }
    void seed(std::uint64_t s) { rng_.seed(s); }
    // While held, train-mode forwards reuse the last mask (finite-difference checks need this).
    void hold_mask(bool hold) { hold_ = hold; }

private:
    double rate_;
    std::mt19937_64 rng_;
    std::vector<T> mask_;  // 0 or 1 / (1 - rate) per element of the last train-mode forward
    bool last_train_ = false;
    bool hold_ = false;
};

template <class T>
class Relu final : public Layer<T> {
public:
    std::string name() const override { return "relu"; }
    Shape output_shape(const Shape& in) const override { return in; }
    void forward(const Tensor<T>& x, Tensor<T>& y, bool train) override;
    void backward(const Tensor<T>& x, const Tensor<T>& y, const Tensor<T>& dy, Tensor<T>* dx) override;
};

template <class T>
class Flatten final : public Layer<T> {
public:
    std::string name() const override { return "flatten"; }
    Shape output_shape(const Shape& in) const override { return {shape_size(in)}; }
    void forward(const Tensor<T>& x, Tensor<T>& y, bool train) override;
    void backward(const Tensor<T>& x, const Tensor<T>& y, const Tensor<T>& dy, Tensor<T>* dx) override;
};

// Row-wise softmax over [N, K] logits with max subtraction.
template <class T>
void softmax(const Tensor<T>& logits, Tensor<T>& probs);

struct LossResult {
    double loss = 0.0;   // mean over the batch
    std::size_t errors = 0;
};

// Mean cross-entropy against integer labels. Fills probs and grad (= (y - t) / N) when given.
template <class T>
LossResult softmax_logloss(const Tensor<T>& logits, const std::vector<int>& labels, Tensor<T>* probs,
                           Tensor<T>* grad);

// Uniform on [-sqrt(1/fan_in), sqrt(1/fan_in)].
double init_bound(std::size_t fan_in);

}  // namespace courtraster::nn
