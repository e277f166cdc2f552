#include "courtraster/nn/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace courtraster::nn {

namespace {

Tensor<float> gather(const Tensor<float>& src, const std::size_t* rows, std::size_t n) {
    Tensor<float> out;
    if (src.data.empty()) return out;
    Shape d = src.dims;
    d[0] = n;
    out.reshape(d);
    const std::size_t s = src.sample_size();
    for (std::size_t i = 0; i < n; ++i) std::copy_n(src.sample(rows[i]), s, out.sample(i));
    return out;
}

struct Batch {
    Tensor<float> images, features;
    std::vector<int> labels;
};

void fill_batch(const Dataset& ds, const std::size_t* rows, std::size_t n, Batch& b) {
    b.images = gather(ds.images, rows, n);
    b.features = gather(ds.features, rows, n);
    b.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) b.labels[i] = ds.labels[rows[i]];
}

const Tensor<float>& run(Network<float>& net, const Batch& b, bool train) {
    return net.forward(net.spec().uses_images() ? &b.images : nullptr,
                       net.spec().uses_features() ? &b.features : nullptr, train);
}

void check_inputs(const Network<float>& net, const Dataset& ds, const char* which) {
    ds.check();
    if (net.spec().uses_images() && !ds.has_images()) throw ContractError(std::string(which) + " set has no images");
    if (net.spec().uses_features() && !ds.has_features()) throw ContractError(std::string(which) + " set has no features");
}

}  // namespace

void TrainConfig::check() const {
    if (!(lr >= 0.0) || !std::isfinite(lr)) throw ConfigError("learning rate must be finite and >= 0");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
}

void Dataset::check() const {
    if (has_images() && (images.dims.size() != 4 || images.batch() != size())) {
        throw ContractError("image tensor " + shape_string(images.dims) + " does not match " + std::to_string(size()) + " labels");
    }
    if (has_features() && (features.dims.size() != 2 || features.batch() != size())) {
        throw ContractError("feature tensor " + shape_string(features.dims) + " does not match " + std::to_string(size()) +
                            " labels");
    }
    for (int l : labels) {
        if (l < 0 || l >= static_cast<int>(kNumClasses)) throw ContractError("label " + std::to_string(l) + " out of range");
    }
}

Dataset Dataset::subset(const std::vector<std::size_t>& rows) const {
    Dataset out;
    out.images = gather(images, rows.data(), rows.size());
    out.features = gather(features, rows.data(), rows.size());
    out.labels.reserve(rows.size());
    for (std::size_t r : rows) out.labels.push_back(labels.at(r));
    return out;
}

Split split_counts(const Dataset& ds, std::size_t n_train, std::size_t n_val, std::uint64_t seed) {
    ds.check();
    if (n_train + n_val > ds.size()) {
        throw ConfigError("split " + std::to_string(n_train) + "+" + std::to_string(n_val) + " exceeds " +
                          std::to_string(ds.size()) + " samples");
    }
    std::vector<std::size_t> order(ds.size());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    Split s;
    s.train_rows.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
    s.val_rows.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train),
                      order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
    s.test_rows.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), order.end());
    s.train = ds.subset(s.train_rows);
    s.val = ds.subset(s.val_rows);
    s.test = ds.subset(s.test_rows);
    return s;
}

Split split_fractions(const Dataset& ds, double train, double val, double test, std::uint64_t seed) {
    if (!(train > 0 && val > 0 && test > 0) || std::abs(train + val + test - 1.0) > 1e-9) {
        throw ConfigError("split fractions must be positive and sum to 1");
    }
    const auto n = static_cast<double>(ds.size());
    return split_counts(ds, static_cast<std::size_t>(std::llround(train * n)), static_cast<std::size_t>(std::llround(val * n)),
                        seed);
}

FeatureScaler FeatureScaler::fit(const Tensor<float>& f) {
    if (f.dims.size() != 2 || f.batch() == 0) throw ContractError("FeatureScaler::fit needs a non-empty [N, F] tensor");
    const std::size_t n = f.dims[0], w = f.dims[1];
    FeatureScaler s;
    s.mean.assign(w, 0.0);
    s.stddev.assign(w, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < w; ++j) s.mean[j] += f.data[i * w + j];
    }
    for (auto& m : s.mean) m /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < w; ++j) {
            const double d = f.data[i * w + j] - s.mean[j];
            s.stddev[j] += d * d;
        }
    }
    for (auto& sd : s.stddev) {
        sd = std::sqrt(sd / static_cast<double>(n));
        if (!(sd > 1e-12)) sd = 1.0;
    }
    return s;
}

void FeatureScaler::apply(Tensor<float>& f) const {
    if (f.data.empty()) return;
    if (f.dims.size() != 2 || f.dims[1] != mean.size()) {
        throw ContractError("FeatureScaler: width " + std::to_string(mean.size()) + " vs tensor " + shape_string(f.dims));
    }
    const std::size_t w = mean.size();
    for (std::size_t i = 0; i < f.data.size(); ++i) {
        const std::size_t j = i % w;
        f.data[i] = static_cast<float>((f.data[i] - mean[j]) / stddev[j]);
    }
}

nlohmann::json FeatureScaler::to_json() const { return {{"mean", mean}, {"std", stddev}}; }

FeatureScaler FeatureScaler::from_json(const nlohmann::json& j) {
    FeatureScaler s;
    s.mean = j.at("mean").get<std::vector<double>>();
    s.stddev = j.at("std").get<std::vector<double>>();
    if (s.mean.size() != s.stddev.size()) throw DataError("feature scaler mean/std lengths differ");
    return s;
}

TrainResult train(Network<float>& net, const Dataset& train_set, const Dataset& val_set, const TrainConfig& cfg,
                  const EpochCallback& on_epoch) {
    cfg.check();
    check_inputs(net, train_set, "train");
    check_inputs(net, val_set, "validation");
    if (train_set.size() < 2) throw ContractError("training needs at least two samples");

    std::mt19937_64 rng(cfg.seed);
    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), 0);
    TrainResult result;
    result.best_val_loss = std::numeric_limits<double>::infinity();
    std::vector<NamedTensor> best_state = net.state();
    std::size_t since_best = 0;
    Batch batch;
    Tensor<float> grad;
    const auto params = net.params();
    const auto lr = static_cast<float>(cfg.lr);

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double loss_sum = 0;
        std::size_t errors = 0, seen = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t n = std::min(cfg.batch_size, order.size() - start);
            if (n < 2) continue;  // batch norm needs two samples
            fill_batch(train_set, order.data() + start, n, batch);
            const auto& logits = run(net, batch, true);
            const LossResult lr_ = softmax_logloss<float>(logits, batch.labels, nullptr, &grad);
            if (!std::isfinite(lr_.loss)) {
                const auto layer = net.non_finite_layer();
                throw TrainingError("non-finite loss at epoch " + std::to_string(epoch) + "; first offending layer: " +
                                    layer.value_or("none (loss only)"));
            }
            net.zero_grad();
            net.backward(grad);
            for (auto* p : params) {
                for (std::size_t i = 0; i < p->value.data.size(); ++i) p->value.data[i] -= lr * p->grad.data[i];
            }
            loss_sum += lr_.loss * static_cast<double>(n);
            errors += lr_.errors;
            seen += n;
        }
        EpochStats st;
        st.epoch = epoch;
        st.train_loss = loss_sum / static_cast<double>(seen);
        st.train_error = static_cast<double>(errors) / static_cast<double>(seen);
        const EvalResult v = evaluate(net, val_set);
        st.val_loss = v.log_loss;
        st.val_error = v.error_rate;
        if (!std::isfinite(st.val_loss)) {
            throw TrainingError("non-finite validation loss at epoch " + std::to_string(epoch) + "; first offending layer: " +
                                net.non_finite_layer().value_or("none (loss only)"));
        }
        result.history.push_back(st);
        if (on_epoch) on_epoch(st);
        if (st.val_loss < result.best_val_loss) {
            result.best_val_loss = st.val_loss;
            result.best_epoch = epoch;
            best_state = net.state();
            since_best = 0;
        } else if (cfg.patience && ++since_best >= cfg.patience) {
            break;
        }
    }
    net.load_state(best_state);
    return result;
}

Tensor<float> predict(Network<float>& net, const Dataset& ds, std::size_t batch_size) {
    check_inputs(net, ds, "prediction");
    Tensor<float> probs({ds.size(), kNumClasses});
    std::vector<std::size_t> rows(ds.size());
    std::iota(rows.begin(), rows.end(), 0);
    Batch b;
    Tensor<float> p;
    for (std::size_t start = 0; start < ds.size(); start += batch_size) {
        const std::size_t n = std::min(batch_size, ds.size() - start);
        fill_batch(ds, rows.data() + start, n, b);
        softmax(run(net, b, false), p);
        std::copy(p.data.begin(), p.data.end(), probs.sample(start));
    }
    return probs;
}

EvalResult evaluate(Network<float>& net, const Dataset& ds, std::size_t batch_size) {
    check_inputs(net, ds, "evaluation");
    EvalResult r;
    r.count = ds.size();
    if (ds.size() == 0) return r;
    std::vector<std::size_t> rows(ds.size());
    std::iota(rows.begin(), rows.end(), 0);
    Batch b;
    double loss = 0;
    std::size_t errors = 0;
    for (std::size_t start = 0; start < ds.size(); start += batch_size) {
        const std::size_t n = std::min(batch_size, ds.size() - start);
        fill_batch(ds, rows.data() + start, n, b);
        const LossResult l = softmax_logloss<float>(run(net, b, false), b.labels, nullptr, nullptr);
        loss += l.loss * static_cast<double>(n);
        errors += l.errors;
    }
    r.log_loss = loss / static_cast<double>(ds.size());
    r.error_rate = static_cast<double>(errors) / static_cast<double>(ds.size());
    return r;
}

EvalResult score_probabilities(const Tensor<float>& probs, const std::vector<int>& labels) {
    if (probs.dims.size() != 2 || probs.dims[1] != kNumClasses || probs.batch() != labels.size()) {
        throw ContractError("score_probabilities: probabilities " + shape_string(probs.dims) + " vs " +
                            std::to_string(labels.size()) + " labels");
    }
    EvalResult r;
    r.count = labels.size();
    if (labels.empty()) return r;
    double loss = 0;
    std::size_t errors = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const float* p = probs.sample(i);
        loss -= std::log(std::max(static_cast<double>(p[labels[i]]), 1e-15));
        const auto arg = static_cast<int>(std::max_element(p, p + kNumClasses) - p);
        if (arg != labels[i]) ++errors;
    }
    r.log_loss = loss / static_cast<double>(labels.size());
    r.error_rate = static_cast<double>(errors) / static_cast<double>(labels.size());
    return r;
}

int predicted_role(const float* p) {
    int best = 0;
    double best_mass = -1;
    for (int r = 0; r < kPlayersPerTeam; ++r) {
        const double m = static_cast<double>(p[2 * r]) + p[2 * r + 1];
        if (m > best_mass) {
            best_mass = m;
            best = r;
        }
    }
    return best + 1;
}

double made_probability(const float* p) {
    const int r = predicted_role(p) - 1;
    const double made = p[2 * r], missed = p[2 * r + 1];
    return made + missed > 0 ? made / (made + missed) : 0.5;
}

}  // namespace courtraster::nn
