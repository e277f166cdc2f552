#pragma once

// Mini-batch SGD with early stopping, evaluation, and dataset plumbing.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "courtraster/nn/model.hpp"

namespace courtraster::nn {

class TrainingError : public Error {
public:
    using Error::Error;
};

struct TrainConfig {
    double lr = 0.01;
    std::size_t batch_size = 64;
    std::size_t epochs = 30;
    std::uint64_t seed = 0;
    std::size_t patience = 5;  // epochs without validation improvement before stopping; 0 disables

    void check() const;
};

// Images [N, C, H, W] and/or features [N, F]; either tensor may be empty.
struct Dataset {
    Tensor<float> images;
    Tensor<float> features;
    std::vector<int> labels;

    std::size_t size() const { return labels.size(); }
    bool has_images() const { return !images.data.empty(); }
    bool has_features() const { return !features.data.empty(); }
    // Throws ContractError when tensor batch axes disagree with the label count.
    void check() const;
    Dataset subset(const std::vector<std::size_t>& rows) const;
};

struct Split {
    Dataset train, val, test;
    std::vector<std::size_t> train_rows, val_rows, test_rows;
};

// Random disjoint split with the given sizes; test takes the remainder.
Split split_counts(const Dataset& ds, std::size_t n_train, std::size_t n_val, std::uint64_t seed);
// Fractions must be positive and sum to 1 within 1e-9; counts are rounded, test takes the remainder.
Split split_fractions(const Dataset& ds, double train, double val, double test, std::uint64_t seed);

// Z-score per feature column. A constant column keeps std 1 so it maps to 0.
struct FeatureScaler {
    std::vector<double> mean;
    std::vector<double> stddev;

    static FeatureScaler fit(const Tensor<float>& features);
    void apply(Tensor<float>& features) const;
    bool empty() const { return mean.empty(); }
    nlohmann::json to_json() const;
    static FeatureScaler from_json(const nlohmann::json& j);
};

struct EpochStats {
    std::size_t epoch = 0;
    double train_loss = 0, train_error = 0;
    double val_loss = 0, val_error = 0;
};

struct TrainResult {
    std::vector<EpochStats> history;
    std::size_t best_epoch = 0;
    double best_val_loss = 0;
};

using EpochCallback = std::function<void(const EpochStats&)>;

// Trains an already initialised network and leaves it holding the best-validation parameters.
TrainResult train(Network<float>& net, const Dataset& train_set, const Dataset& val_set, const TrainConfig& cfg,
                  const EpochCallback& on_epoch = {});

struct EvalResult {
    double log_loss = 0;
    double error_rate = 0;
    std::size_t count = 0;
};

// Softmax outputs [N, 10] in eval mode.
Tensor<float> predict(Network<float>& net, const Dataset& ds, std::size_t batch = 256);
EvalResult evaluate(Network<float>& net, const Dataset& ds, std::size_t batch = 256);
// Log loss and error rate of given probabilities; probabilities are floored at 1e-15.
EvalResult score_probabilities(const Tensor<float>& probs, const std::vector<int>& labels);

// Role (1..5) whose made + missed mass is largest; lowest role wins ties.
int predicted_role(const float* probs);
// Made share of the predicted role's pair: p(made) / (p(made) + p(missed)).
double made_probability(const float* probs);

}  // namespace courtraster::nn
