#include "courtraster/nn/model.hpp"

#include <cmath>
#include <map>
#include <random>

namespace courtraster::nn {

namespace {

struct KindName {
    LayerKind kind;
    const char* name;
};

constexpr KindName kLayerNames[] = {
    {LayerKind::Conv, "conv"},       {LayerKind::MaxPool, "maxpool"},
    {LayerKind::Dense, "dense"},     {LayerKind::BatchNorm2d, "batchnorm2d"},
    {LayerKind::BatchNorm1d, "batchnorm1d"}, {LayerKind::Relu, "relu"},
    {LayerKind::Flatten, "flatten"}, {LayerKind::Softmax, "softmax"},
    {LayerKind::Dropout, "dropout"},
};

// Shape after one layer; adds the layer's trainable scalar count to params.
Shape chain_one(const LayerSpec& l, const Shape& in, std::size_t& params, const std::string& where) {
    const auto fail = [&](const std::string& why) {
        throw ContractError(where + ": " + to_string(l.kind) + " " + why + " (input " + shape_string(in) + ")");
    };
    switch (l.kind) {
        case LayerKind::Conv:
            if (in.size() != 3) fail("needs a C x H x W input");
            if (l.units == 0) fail("needs at least one filter");
            params += l.units * (in[0] * 9 + 1);
            return {l.units, in[1], in[2]};
        case LayerKind::MaxPool:
            if (in.size() != 3) fail("needs a C x H x W input");
            return {in[0], (in[1] + 1) / 2, (in[2] + 1) / 2};
        case LayerKind::BatchNorm2d:
            if (in.size() != 3) fail("needs a C x H x W input");
            params += 2 * in[0];
            return in;
        case LayerKind::BatchNorm1d:
            if (in.size() != 1) fail("needs a flat input");
            params += 2 * in[0];
            return in;
        case LayerKind::Dense:
            if (in.size() != 1) fail("needs a flat input");
            if (l.units == 0) fail("needs at least one unit");
            params += l.units * (in[0] + 1);
            return {l.units};
        case LayerKind::Flatten:
            return {shape_size(in)};
        case LayerKind::Dropout:
            if (!(l.rate >= 0.0 && l.rate < 1.0)) fail("rate must be in [0, 1)");
            return in;
        case LayerKind::Relu:
        case LayerKind::Softmax:
            return in;
    }
    fail("unknown layer kind");
    return in;
}

std::vector<Shape> chain(const std::vector<LayerSpec>& layers, Shape in, std::size_t& params, const std::string& where,
                         bool allow_softmax_last) {
    std::vector<Shape> out;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        if (layers[i].kind == LayerKind::Softmax && !(allow_softmax_last && i + 1 == layers.size())) {
            throw ContractError(where + ": softmax may only end the head");
        }
        in = chain_one(layers[i], in, params, where + "[" + std::to_string(i) + "]");
        out.push_back(in);
    }
    return out;
}

template <class T>
std::unique_ptr<Layer<T>> make_layer(const LayerSpec& l, const Shape& in) {
    switch (l.kind) {
        case LayerKind::Conv: return std::make_unique<Conv2d<T>>(in[0], l.units);
        case LayerKind::MaxPool: return std::make_unique<MaxPool2<T>>();
        case LayerKind::Dense: return std::make_unique<Dense<T>>(in[0], l.units);
        case LayerKind::BatchNorm2d: return std::make_unique<BatchNorm<T>>(in[0], true);
        case LayerKind::BatchNorm1d: return std::make_unique<BatchNorm<T>>(in[0], false);
        case LayerKind::Relu: return std::make_unique<Relu<T>>();
        case LayerKind::Dropout: return std::make_unique<Dropout<T>>(l.rate);
        case LayerKind::Flatten: return std::make_unique<Flatten<T>>();
        case LayerKind::Softmax: break;
    }
    return nullptr;
}

template <class T>
void build_trunk(Sequential<T>& seq, const std::vector<LayerSpec>& layers, Shape in) {
    for (const auto& l : layers) {
        auto layer = make_layer<T>(l, in);
        std::size_t unused = 0;
        in = chain_one(l, in, unused, "build");
        if (layer) seq.add(std::move(layer));
    }
}

nlohmann::json layers_to_json(const std::vector<LayerSpec>& layers) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& l : layers) {
        nlohmann::json e = {{"kind", to_string(l.kind)}};
        if (l.units) e["units"] = l.units;
        if (l.kind == LayerKind::Dropout) e["rate"] = l.rate;
        a.push_back(e);
    }
    return a;
}

std::vector<LayerSpec> layers_from_json(const nlohmann::json& a) {
    std::vector<LayerSpec> out;
    for (const auto& e : a) {
        out.push_back({layer_kind_from_string(e.at("kind").get<std::string>()), e.value("units", std::size_t{0}),
                       e.value("rate", 0.0)});
    }
    return out;
}

template <class T>
bool all_finite(const Tensor<T>& t) {
    for (T v : t.data) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

}  // namespace

std::string to_string(ModelKind k) {
    switch (k) {
        case ModelKind::Ffn: return "ffn";
        case ModelKind::Cnn: return "cnn";
        case ModelKind::Combined: return "combined";
    }
    return "?";
}

ModelKind model_kind_from_string(const std::string& s) {
    if (s == "ffn") return ModelKind::Ffn;
    if (s == "cnn") return ModelKind::Cnn;
    if (s == "combined") return ModelKind::Combined;
    throw ConfigError("unknown model kind '" + s + "' (expected ffn, cnn or combined)");
}

std::string to_string(LayerKind k) {
    for (const auto& kn : kLayerNames) {
        if (kn.kind == k) return kn.name;
    }
    return "?";
}

LayerKind layer_kind_from_string(const std::string& s) {
    for (const auto& kn : kLayerNames) {
        if (s == kn.name) return kn.kind;
    }
    throw ConfigError("unknown layer kind '" + s + "'");
}

ShapeReport check_spec(const ModelSpec& spec) {
    ShapeReport r;
    const bool images = spec.kind != ModelKind::Ffn;
    if (images != !spec.image_trunk.empty()) {
        throw ContractError(to_string(spec.kind) + " model: image trunk " + (images ? "missing" : "not allowed"));
    }
    if (!spec.uses_features() && (!spec.feature_trunk.empty() || spec.feature_dim)) {
        throw ContractError("cnn model: feature inputs not allowed");
    }
    if (spec.uses_features() && spec.feature_dim == 0) throw ContractError(to_string(spec.kind) + " model: feature_dim is 0");
    if (images) {
        const Shape in{spec.image_shape[0], spec.image_shape[1], spec.image_shape[2]};
        if (shape_size(in) == 0) throw ContractError("image shape " + shape_string(in) + " is empty");
        r.image_chain = chain(spec.image_trunk, in, r.param_count, "image trunk", false);
        if (r.image_chain.back().size() != 1) throw ContractError("image trunk must end flat, got " + shape_string(r.image_chain.back()));
        r.image_out = r.image_chain.back()[0];
    }
    if (spec.uses_features()) {
        r.feature_chain = chain(spec.feature_trunk, {spec.feature_dim}, r.param_count, "feature trunk", false);
        r.feature_out = r.feature_chain.empty() ? spec.feature_dim : r.feature_chain.back()[0];
    }
    r.concat_width = r.image_out + r.feature_out;
    const auto& h = spec.head;
    if (spec.classes != kNumClasses) throw ContractError("model must have 10 classes, got " + std::to_string(spec.classes));
    if (h.size() < 2 || h.back().kind != LayerKind::Softmax || h[h.size() - 2].kind != LayerKind::Dense ||
        h[h.size() - 2].units != spec.classes) {
        throw ContractError("head must end with dense(10) followed by softmax");
    }
    r.head_chain = chain(h, {r.concat_width}, r.param_count, "head", true);
    return r;
}

ModelSpec build_cnn(std::size_t channels, std::size_t height, std::size_t width, std::size_t filters, std::size_t blocks,
                    std::size_t dense) {
    ModelSpec s;
    s.kind = ModelKind::Cnn;
    s.image_shape = {channels, height, width};
    for (std::size_t b = 0; b < blocks; ++b) {
        s.image_trunk.push_back({LayerKind::Conv, filters});
        s.image_trunk.push_back({LayerKind::BatchNorm2d, 0});
        s.image_trunk.push_back({LayerKind::Relu, 0});
        s.image_trunk.push_back({LayerKind::MaxPool, 0});
    }
    s.image_trunk.push_back({LayerKind::Flatten, 0});
    s.image_trunk.push_back({LayerKind::Dense, dense});
    s.image_trunk.push_back({LayerKind::BatchNorm1d, 0});
    s.image_trunk.push_back({LayerKind::Relu, 0});
    s.head = {{LayerKind::Dense, kNumClasses}, {LayerKind::Softmax, 0}};
    check_spec(s);
    return s;
}

ModelSpec build_ffn(std::size_t features, std::vector<std::size_t> hidden) {
    ModelSpec s;
    s.kind = ModelKind::Ffn;
    s.feature_dim = features;
    for (std::size_t h : hidden) {
        s.feature_trunk.push_back({LayerKind::Dense, h});
        s.feature_trunk.push_back({LayerKind::BatchNorm1d, 0});
        s.feature_trunk.push_back({LayerKind::Relu, 0});
    }
    s.head = {{LayerKind::Dense, kNumClasses}, {LayerKind::Softmax, 0}};
    check_spec(s);
    return s;
}

ModelSpec build_combined(const ModelSpec& cnn, const ModelSpec& ffn, std::size_t hidden, double dropout) {
    if (cnn.kind != ModelKind::Cnn || ffn.kind != ModelKind::Ffn) {
        throw ContractError("build_combined needs a cnn spec and an ffn spec");
    }
    ModelSpec s;
    s.kind = ModelKind::Combined;
    s.image_shape = cnn.image_shape;
    s.image_trunk = cnn.image_trunk;
    s.feature_dim = ffn.feature_dim;
    s.feature_trunk = ffn.feature_trunk;
    s.head.clear();
    if (dropout > 0.0) s.head.push_back({LayerKind::Dropout, 0, dropout});
    s.head.insert(s.head.end(), {{LayerKind::Dense, hidden},
              {LayerKind::BatchNorm1d, 0},
              {LayerKind::Relu, 0},
              {LayerKind::Dense, kNumClasses},
              {LayerKind::Softmax, 0}});
    check_spec(s);
    return s;
}

nlohmann::json spec_to_json(const ModelSpec& spec) {
    return {{"kind", to_string(spec.kind)},
            {"image_shape", spec.image_shape},
            {"feature_dim", spec.feature_dim},
            {"classes", spec.classes},
            {"image_trunk", layers_to_json(spec.image_trunk)},
            {"feature_trunk", layers_to_json(spec.feature_trunk)},
            {"head", layers_to_json(spec.head)}};
}

ModelSpec spec_from_json(const nlohmann::json& j) {
    ModelSpec s;
    try {
        s.kind = model_kind_from_string(j.at("kind").get<std::string>());
        s.image_shape = j.at("image_shape").get<std::array<std::size_t, 3>>();
        s.feature_dim = j.at("feature_dim").get<std::size_t>();
        s.classes = j.at("classes").get<std::size_t>();
        s.image_trunk = layers_from_json(j.at("image_trunk"));
        s.feature_trunk = layers_from_json(j.at("feature_trunk"));
        s.head = layers_from_json(j.at("head"));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("model spec: ") + e.what());
    }
    check_spec(s);
    return s;
}

// ---- Sequential ----

template <class T>
const Tensor<T>& Sequential<T>::forward(const Tensor<T>& x, bool train, std::size_t count) {
    const std::size_t n = std::min(count, layers_.size());
    input_ = &x;
    acts_.resize(layers_.size());
    for (std::size_t i = 0; i < n; ++i) layers_[i]->forward(i ? acts_[i - 1] : x, acts_[i], train);
    ran_ = n;
    return n ? acts_[n - 1] : x;
}

template <class T>
void Sequential<T>::release_scratch() {
    for (auto& l : layers_) l->release_scratch();
    std::vector<Tensor<T>>().swap(acts_);
    std::vector<Tensor<T>>().swap(grads_);
    input_ = nullptr;
    ran_ = 0;
}

template <class T>
void Sequential<T>::backward(const Tensor<T>& dy, Tensor<T>* dx) {
    if (ran_ == 0) {
        if (dx) *dx = dy;
        return;
    }
    grads_.resize(layers_.size());
    const Tensor<T>* g = &dy;
    for (std::size_t i = ran_; i-- > 0;) {
        const Tensor<T>& in = i ? acts_[i - 1] : *input_;
        Tensor<T>* out = i ? &grads_[i - 1] : dx;
        layers_[i]->backward(in, acts_[i], *g, out);
        g = out;
    }
}

template <class T>
int Sequential<T>::first_non_finite() const {
    for (std::size_t i = 0; i < ran_; ++i) {
        if (!all_finite(acts_[i])) return static_cast<int>(i);
    }
    return -1;
}

// ---- Network ----

template <class T>
Network<T>::Network(ModelSpec spec) : spec_(std::move(spec)), shapes_(check_spec(spec_)) {
    if (spec_.uses_images()) build_trunk(image_, spec_.image_trunk, {spec_.image_shape[0], spec_.image_shape[1], spec_.image_shape[2]});
    if (spec_.uses_features()) build_trunk(feature_, spec_.feature_trunk, {spec_.feature_dim});
    build_trunk(head_, spec_.head, {shapes_.concat_width});
}

template <class T>
void Network<T>::init(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const auto fill = [&](Param<T>& w, std::size_t fan_in) {
        std::uniform_real_distribution<double> u(-init_bound(fan_in), init_bound(fan_in));
        for (auto& v : w.value.data) v = static_cast<T>(u(rng));
    };
    for (auto* seq : {&image_, &feature_, &head_}) {
        for (std::size_t i = 0; i < seq->size(); ++i) {
            Layer<T>& l = seq->layer(i);
            if (auto* c = dynamic_cast<Conv2d<T>*>(&l)) {
                fill(c->weight(), c->fan_in());
                c->bias().value.zero();
            } else if (auto* d = dynamic_cast<Dense<T>*>(&l)) {
                fill(d->weight(), d->fan_in());
                d->bias().value.zero();
            } else if (auto* b = dynamic_cast<BatchNorm<T>*>(&l)) {
                std::fill(b->gamma().value.data.begin(), b->gamma().value.data.end(), T{1});
                b->beta().value.zero();
                b->running_mean().zero();
                std::fill(b->running_var().data.begin(), b->running_var().data.end(), T{1});
            } else if (auto* dr = dynamic_cast<Dropout<T>*>(&l)) {
                dr->seed(rng());
            }
        }
    }
    zero_grad();
}

template <class T>
void Network<T>::release_scratch() {
    for (auto* seq : {&image_, &feature_, &head_}) seq->release_scratch();
    for (auto* t : {&concat_, &dconcat_, &dimage_, &dfeature_}) *t = Tensor<T>();
}

template <class T>
void Network<T>::hold_dropout_masks(bool hold) {
    for (auto* seq : {&image_, &feature_, &head_}) {
        for (std::size_t i = 0; i < seq->size(); ++i) {
            if (auto* dr = dynamic_cast<Dropout<T>*>(&seq->layer(i))) dr->hold_mask(hold);
        }
    }
}

template <class T>
const Tensor<T>& Network<T>::forward(const Tensor<T>* images, const Tensor<T>* features, bool train) {
    std::size_t n = 0;
    const Tensor<T>* img_out = nullptr;
    const Tensor<T>* feat_out = nullptr;
    if (spec_.uses_images()) {
        if (!images) throw ContractError(to_string(spec_.kind) + " model needs images");
        const Shape want{spec_.image_shape[0], spec_.image_shape[1], spec_.image_shape[2]};
        if (images->dims.size() != 4 || Shape(images->dims.begin() + 1, images->dims.end()) != want) {
            throw ContractError("image batch " + shape_string(images->dims) + " does not match model input " + shape_string(want));
        }
        n = images->batch();
        img_out = &image_.forward(*images, train);
    }
    if (spec_.uses_features()) {
        if (!features) throw ContractError(to_string(spec_.kind) + " model needs features");
        if (features->dims.size() != 2 || features->dims[1] != spec_.feature_dim) {
            throw ContractError("feature batch " + shape_string(features->dims) + " does not match width " +
                                std::to_string(spec_.feature_dim));
        }
        if (img_out && features->batch() != n) throw ContractError("image and feature batch sizes differ");
        n = features->batch();
        feat_out = &feature_.forward(*features, train);
    }
    concat_.reshape({n, shapes_.concat_width});
    for (std::size_t s = 0; s < n; ++s) {
        T* row = concat_.sample(s);
        if (img_out) row = std::copy_n(img_out->sample(s), shapes_.image_out, row);
        if (feat_out) std::copy_n(feat_out->sample(s), shapes_.feature_out, row);
    }
    return head_.forward(concat_, train);
}

template <class T>
void Network<T>::backward(const Tensor<T>& dlogits) {
    head_.backward(dlogits, &dconcat_);
    const std::size_t n = dconcat_.batch();
    if (spec_.uses_images()) {
        dimage_.reshape({n, shapes_.image_out});
        for (std::size_t s = 0; s < n; ++s) std::copy_n(dconcat_.sample(s), shapes_.image_out, dimage_.sample(s));
        image_.backward(dimage_, nullptr);
    }
    if (spec_.uses_features() && !feature_.empty()) {
        dfeature_.reshape({n, shapes_.feature_out});
        for (std::size_t s = 0; s < n; ++s) {
            std::copy_n(dconcat_.sample(s) + shapes_.image_out, shapes_.feature_out, dfeature_.sample(s));
        }
        feature_.backward(dfeature_, nullptr);
    }
}

template <class T>
void Network<T>::zero_grad() {
    for (auto* p : params()) p->grad.zero();
}

template <class T>
std::vector<Param<T>*> Network<T>::params() {
    std::vector<Param<T>*> out;
    for (auto* seq : {&image_, &feature_, &head_}) {
        for (std::size_t i = 0; i < seq->size(); ++i) {
            for (auto* p : seq->layer(i).params()) out.push_back(p);
        }
    }
    return out;
}

template <class T>
std::vector<std::pair<std::string, Tensor<T>*>> Network<T>::buffers() {
    std::vector<std::pair<std::string, Tensor<T>*>> out;
    for (auto& e : named_state()) {
        const bool is_buffer = e.name.ends_with("running_mean") || e.name.ends_with("running_var");
        if (is_buffer) out.emplace_back(e.name, e.tensor);
    }
    return out;
}

template <class T>
std::vector<typename Network<T>::Entry> Network<T>::named_state() {
    std::vector<Entry> out;
    const std::pair<const char*, Sequential<T>*> trunks[] = {{"image", &image_}, {"feature", &feature_}, {"head", &head_}};
    for (auto [prefix, seq] : trunks) {
        for (std::size_t i = 0; i < seq->size(); ++i) {
            const std::string base = std::string(prefix) + "." + std::to_string(i) + ".";
            for (auto* p : seq->layer(i).params()) out.push_back({base + p->name, &p->value});
            for (auto& [name, t] : seq->layer(i).buffers()) out.push_back({base + name, t});
        }
    }
    return out;
}

template <class T>
std::vector<NamedTensor> Network<T>::state() const {
    std::vector<NamedTensor> out;
    for (auto& e : const_cast<Network*>(this)->named_state()) out.push_back({e.name, tensor_cast<float>(*e.tensor)});
    return out;
}

template <class T>
void Network<T>::load_state(const std::vector<NamedTensor>& state) {
    std::map<std::string, const Tensor<float>*> by_name;
    for (const auto& s : state) by_name[s.name] = &s.value;
    auto entries = named_state();
    if (entries.size() != state.size()) {
        throw DataError("checkpoint has " + std::to_string(state.size()) + " tensors, model expects " + std::to_string(entries.size()));
    }
    for (auto& e : entries) {
        auto it = by_name.find(e.name);
        if (it == by_name.end()) throw DataError("checkpoint is missing tensor " + e.name);
        if (it->second->dims != e.tensor->dims) {
            throw DataError("tensor " + e.name + " has shape " + shape_string(it->second->dims) + ", expected " +
                            shape_string(e.tensor->dims));
        }
        *e.tensor = tensor_cast<T>(*it->second);
    }
}

template <class T>
std::optional<std::string> Network<T>::non_finite_layer() const {
    const std::pair<const char*, const Sequential<T>*> trunks[] = {{"image", &image_}, {"feature", &feature_}, {"head", &head_}};
    for (auto [prefix, seq] : trunks) {
        const int i = seq->first_non_finite();
        if (i >= 0) {
            auto& l = const_cast<Sequential<T>*>(seq)->layer(static_cast<std::size_t>(i));
            return std::string(prefix) + "." + std::to_string(i) + " " + l.name();
        }
    }
    return std::nullopt;
}

template class Sequential<float>;
template class Sequential<double>;
template class Network<float>;
template class Network<double>;

}  // namespace courtraster::nn
