#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "courtraster/nn/model.hpp"
#include "courtraster/nn/train.hpp"

using namespace courtraster;
using namespace courtraster::nn;

namespace {

// Two Gaussian blobs in 4-D, labels 0 and 7.
Dataset separable(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<float> g(0.0f, 0.3f);
    Dataset ds;
    ds.features = Tensor<float>({n, 4});
    for (std::size_t i = 0; i < n; ++i) {
        const int label = i % 2 == 0 ? 0 : 7;
        const float c = label == 0 ? -1.5f : 1.5f;
        for (std::size_t k = 0; k < 4; ++k) ds.features.data[i * 4 + k] = c + g(rng);
        ds.labels.push_back(label);
    }
    return ds;
}

Dataset tiny_images(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> u(0, 1);
    Dataset ds;
    ds.images = Tensor<float>({n, 2, 8, 6});
    ds.features = Tensor<float>({n, 5});
    for (auto& v : ds.images.data) v = u(rng);
    for (auto& v : ds.features.data) v = u(rng);
    for (std::size_t i = 0; i < n; ++i) ds.labels.push_back(static_cast<int>(rng() % 10));
    return ds;
}

}  // namespace

TEST(ModelSpec, CnnShapeChainAtFullResolution) {
    const auto r = check_spec(build_cnn());
    ASSERT_EQ(r.image_chain.size(), 16u);
    EXPECT_EQ(r.image_chain[0], (Shape{32, 94, 50}));
    EXPECT_EQ(r.image_chain[3], (Shape{32, 47, 25}));
    EXPECT_EQ(r.image_chain[7], (Shape{32, 24, 13}));
    EXPECT_EQ(r.image_chain[11], (Shape{32, 12, 7}));
    EXPECT_EQ(r.image_chain[12], (Shape{2688}));
    EXPECT_EQ(r.image_out, 400u);
}

TEST(ModelSpec, CnnParameterCountByHand) {
    const std::size_t conv1 = 11 * 9 * 32 + 32, conv = 32 * 9 * 32 + 32, bn2 = 64;
    const std::size_t dense = 2688 * 400 + 400, bn1 = 800, head = 400 * 10 + 10;
    EXPECT_EQ(check_spec(build_cnn()).param_count, conv1 + 2 * conv + 3 * bn2 + dense + bn1 + head);
}

TEST(ModelSpec, CnnGrayAndRgbInputs) {
    EXPECT_EQ(check_spec(build_cnn(1)).image_chain[0], (Shape{32, 94, 50}));
    EXPECT_EQ(check_spec(build_cnn(3, 47, 25)).image_chain[12], (Shape{32 * 6 * 4}));
}

TEST(ModelSpec, FfnDefaultAndLogisticVariant) {
    const auto r = check_spec(build_ffn());
    EXPECT_EQ(r.feature_out, 256u);
    EXPECT_EQ(r.param_count, (198 * 256 + 256) + 512 + (256 * 256 + 256) + 512 + (256 * 10 + 10));
    const auto lr = check_spec(build_ffn(198, {}));
    EXPECT_EQ(lr.feature_out, 198u);
    EXPECT_EQ(lr.param_count, 198u * 10u + 10u);
}

TEST(ModelSpec, CombinedConcatenatesBranches) {
    const auto spec = build_combined(build_cnn(), build_ffn());
    const auto r = check_spec(spec);
    EXPECT_EQ(r.concat_width, 656u);
    ASSERT_FALSE(spec.head.empty());
    EXPECT_EQ(spec.head[0].kind, LayerKind::Dense);
    EXPECT_EQ(spec.head[0].units, 1000u);
    Network<float> net(spec);
    net.init(1);
    const auto& w = dynamic_cast<Dense<float>&>(net.head().layer(0)).weight().value;
    EXPECT_EQ(w.size(), 656u * 1000u);
}

TEST(ModelSpec, CombinedDropoutLeadsTheHead) {
    const auto spec = build_combined(build_cnn(11, 47, 25), build_ffn(), 1000, 0.5);
    ASSERT_GE(spec.head.size(), 2u);
    EXPECT_EQ(spec.head[0].kind, LayerKind::Dropout);
    EXPECT_EQ(spec.head[0].rate, 0.5);
    EXPECT_EQ(spec.head[1].units, 1000u);
    EXPECT_EQ(check_spec(spec).param_count, check_spec(build_combined(build_cnn(11, 47, 25), build_ffn())).param_count);
    EXPECT_EQ(spec_from_json(spec_to_json(spec)), spec);
    EXPECT_THROW(build_combined(build_cnn(), build_ffn(), 1000, 1.0), ContractError);
    // Dropout is inactive at inference: eval outputs do not depend on the mask generator.
    Network<float> a(spec), b(spec);
    a.init(4);
    b.init(4);
    dynamic_cast<Dropout<float>&>(b.head().layer(0)).seed(99);
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<float> u(0, 1);
    Tensor<float> img({4, 11, 47, 25}), feat({4, 198});
    for (auto& v : img.data) v = u(rng);
    for (auto& v : feat.data) v = u(rng);
    const auto ea = a.forward(&img, &feat, false);
    EXPECT_EQ(ea.data, b.forward(&img, &feat, false).data);
    const auto ta = a.forward(&img, &feat, true);
    EXPECT_NE(ta.data, b.forward(&img, &feat, true).data);
}

TEST(Network, ReleaseScratchKeepsResults) {
    Network<float> net(build_combined(build_cnn(2, 12, 8, 4, 2, 8), build_ffn(5, {6}), 10));
    net.init(6);
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<float> u(0, 1);
    Tensor<float> img({3, 2, 12, 8}), feat({3, 5});
    for (auto& v : img.data) v = u(rng);
    for (auto& v : feat.data) v = u(rng);
    const auto before = net.forward(&img, &feat, false);
    net.release_scratch();
    EXPECT_EQ(net.forward(&img, &feat, false).data, before.data);
    net.release_scratch();
    Tensor<float> dlogits({3, kNumClasses}, 0.1f);
    net.forward(&img, &feat, true);
    net.zero_grad();
    EXPECT_NO_THROW(net.backward(dlogits));
}

TEST(ModelSpec, BadSpecsThrow) {
    EXPECT_THROW(build_combined(build_ffn(), build_cnn()), ContractError);
    auto s = build_cnn();
    s.head.pop_back();
    EXPECT_THROW(check_spec(s), ContractError);
    s = build_cnn();
    s.head[0].units = 7;
    EXPECT_THROW(check_spec(s), ContractError);
    s = build_ffn();
    s.feature_dim = 0;
    EXPECT_THROW(check_spec(s), ContractError);
    EXPECT_THROW(model_kind_from_string("rnn"), ConfigError);
}

TEST(ModelSpec, JsonRoundTrip) {
    for (const auto& s : {build_cnn(3, 47, 25), build_ffn(198, {64}), build_combined(build_cnn(), build_ffn())}) {
        EXPECT_EQ(spec_from_json(spec_to_json(s)), s);
    }
}

TEST(Network, InitRespectsFanInBound) {
    Network<float> net(build_combined(build_cnn(11, 47, 25), build_ffn()));
    net.init(3);
    auto& conv = dynamic_cast<Conv2d<float>&>(net.image_trunk().layer(0));
    const double bc = init_bound(99);
    double maxabs = 0;
    for (float v : conv.weight().value.data) maxabs = std::max(maxabs, std::abs(static_cast<double>(v)));
    EXPECT_LE(maxabs, bc);
    EXPECT_GT(maxabs, 0.9 * bc);
    for (float v : conv.bias().value.data) EXPECT_EQ(v, 0.0f);
    auto& bn = dynamic_cast<BatchNorm<float>&>(net.image_trunk().layer(1));
    for (float v : bn.gamma().value.data) EXPECT_EQ(v, 1.0f);
    for (float v : bn.beta().value.data) EXPECT_EQ(v, 0.0f);
}

TEST(Network, InitIsDeterministic) {
    Network<float> a(build_ffn()), b(build_ffn()), c(build_ffn());
    a.init(5);
    b.init(5);
    c.init(6);
    const auto sa = a.state(), sb = b.state(), sc = c.state();
    bool differs = false;
    for (std::size_t i = 0; i < sa.size(); ++i) {
        EXPECT_EQ(sa[i].name, sb[i].name);
        EXPECT_EQ(sa[i].value.data, sb[i].value.data);
        differs = differs || sa[i].value.data != sc[i].value.data;
    }
    EXPECT_TRUE(differs);
}

TEST(Network, ZeroInputsGiveFiniteLogits) {
    Network<float> net(build_combined(build_cnn(11, 47, 25), build_ffn()));
    net.init(1);
    Tensor<float> img({2, 11, 47, 25}), feat({2, 198});
    const auto& logits = net.forward(&img, &feat, false);
    EXPECT_EQ(logits.dims, (Shape{2, 10}));
    for (float v : logits.data) EXPECT_TRUE(std::isfinite(v));
    const auto& t = net.forward(&img, &feat, true);
    for (float v : t.data) EXPECT_TRUE(std::isfinite(v));
}

TEST(Network, StateRoundTripReproducesOutputs) {
    Network<float> a(build_ffn(5, {8})), b(build_ffn(5, {8}));
    a.init(1);
    b.init(2);
    b.load_state(a.state());
    Tensor<float> x({3, 5});
    for (std::size_t i = 0; i < x.size(); ++i) x.data[i] = static_cast<float>(i) * 0.1f;
    EXPECT_EQ(a.forward(nullptr, &x, false).data, b.forward(nullptr, &x, false).data);
    auto bad = a.state();
    bad.pop_back();
    EXPECT_THROW(b.load_state(bad), DataError);
}

TEST(Split, CountsAreDisjointAndDeterministic) {
    const auto ds = separable(100, 1);
    const auto s = split_counts(ds, 60, 20, 9);
    EXPECT_EQ(s.train.size(), 60u);
    EXPECT_EQ(s.val.size(), 20u);
    EXPECT_EQ(s.test.size(), 20u);
    std::vector<int> seen(100, 0);
    for (const auto* rows : {&s.train_rows, &s.val_rows, &s.test_rows}) {
        for (auto r : *rows) ++seen[r];
    }
    for (int c : seen) EXPECT_EQ(c, 1);
    EXPECT_EQ(split_counts(ds, 60, 20, 9).val_rows, s.val_rows);
    EXPECT_NE(split_counts(ds, 60, 20, 10).val_rows, s.val_rows);
    EXPECT_THROW(split_counts(ds, 90, 20, 1), ConfigError);
}

TEST(Split, FractionsMustSumToOne) {
    const auto ds = separable(50, 1);
    const auto s = split_fractions(ds, 0.72, 0.14, 0.14, 1);
    EXPECT_EQ(s.train.size(), 36u);
    EXPECT_EQ(s.val.size(), 7u);
    EXPECT_EQ(s.test.size(), 7u);
    EXPECT_THROW(split_fractions(ds, 0.7, 0.2, 0.2, 1), ConfigError);
    EXPECT_THROW(split_fractions(ds, 0.0, 0.5, 0.5, 1), ConfigError);
}

TEST(FeatureScaler, StandardizesColumns) {
    Tensor<float> f({4, 2});
    f.data = {1, 5, 3, 5, 5, 5, 7, 5};
    const auto sc = FeatureScaler::fit(f);
    EXPECT_NEAR(sc.mean[0], 4.0, 1e-12);
    EXPECT_EQ(sc.stddev[1], 1.0);
    sc.apply(f);
    EXPECT_NEAR(f.data[0], -3.0 / std::sqrt(5.0), 1e-6);
    EXPECT_EQ(f.data[1], 0.0f);
    const auto back = FeatureScaler::from_json(sc.to_json());
    EXPECT_EQ(back.mean, sc.mean);
    EXPECT_EQ(back.stddev, sc.stddev);
}

TEST(Train, SeparableToyReachesHighAccuracy) {
    const auto ds = separable(400, 2);
    const auto s = split_counts(ds, 300, 50, 3);
    Network<float> net(build_ffn(4, {16}));
    net.init(1);
    TrainConfig cfg;
    cfg.epochs = 40;
    cfg.batch_size = 32;
    cfg.lr = 0.05;
    train(net, s.train, s.val, cfg);
    EXPECT_GE(1.0 - evaluate(net, s.train).error_rate, 0.99);
    EXPECT_GE(1.0 - evaluate(net, s.test).error_rate, 0.99);
}

TEST(Train, ZeroLearningRateLeavesParametersUnchanged) {
    const auto ds = separable(64, 3);
    const auto s = split_counts(ds, 48, 8, 1);
    Network<float> net(build_ffn(4, {8}));
    net.init(1);
    const auto before = net.state();
    TrainConfig cfg;
    cfg.lr = 0.0;
    cfg.epochs = 2;
    train(net, s.train, s.val, cfg);
    const auto after = net.state();
    for (std::size_t i = 0; i < before.size(); ++i) {
        if (before[i].name.find("running") != std::string::npos) continue;
        EXPECT_EQ(before[i].value.data, after[i].value.data) << before[i].name;
    }
}

TEST(Train, DeterministicUnderSeed) {
    const auto ds = tiny_images(60, 4);
    const auto s = split_counts(ds, 40, 10, 1);
    const auto spec = build_combined(build_cnn(2, 8, 6, 4, 1, 8), build_ffn(5, {6}), 12);
    TrainConfig cfg;
    cfg.epochs = 3;
    cfg.batch_size = 8;
    auto run = [&] {
        Network<float> net(spec);
        net.init(7);
        const auto r = train(net, s.train, s.val, cfg);
        return std::make_pair(r.history.back().val_loss, net.state());
    };
    const auto a = run(), b = run();
    EXPECT_EQ(a.first, b.first);
    for (std::size_t i = 0; i < a.second.size(); ++i) EXPECT_EQ(a.second[i].value.data, b.second[i].value.data);
}

TEST(Train, KeepsBestValidationParameters) {
    const auto ds = tiny_images(60, 5);
    const auto s = split_counts(ds, 40, 10, 1);
    Network<float> net(build_cnn(2, 8, 6, 4, 1, 8));
    net.init(1);
    TrainConfig cfg;
    cfg.epochs = 6;
    cfg.batch_size = 8;
    cfg.patience = 0;
    const auto r = train(net, s.train, s.val, cfg);
    EXPECT_EQ(r.history.size(), 6u);
    double best = 1e9;
    for (const auto& e : r.history) best = std::min(best, e.val_loss);
    EXPECT_EQ(r.best_val_loss, best);
    EXPECT_NEAR(evaluate(net, s.val).log_loss, best, 1e-6);
}

TEST(Train, NonFiniteLossNamesLayer) {
    auto ds = separable(64, 6);
    ds.features.data[3] = std::numeric_limits<float>::infinity();
    Network<float> net(build_ffn(4, {8}));
    net.init(1);
    TrainConfig cfg;
    cfg.epochs = 1;
    cfg.batch_size = 64;
    try {
        train(net, ds, separable(8, 7), cfg);
        FAIL() << "expected TrainingError";
    } catch (const TrainingError& e) {
        EXPECT_NE(std::string(e.what()).find("layer"), std::string::npos) << e.what();
    }
}

TEST(Train, RejectsBadConfig) {
    TrainConfig cfg;
    cfg.batch_size = 0;
    EXPECT_THROW(cfg.check(), ConfigError);
    cfg = {};
    cfg.lr = -1;
    EXPECT_THROW(cfg.check(), ConfigError);
}

TEST(Evaluate, UniformPredictionsGiveLnTen) {
    Tensor<float> p({5, 10}, 0.1f);
    const auto r = score_probabilities(p, {0, 1, 2, 3, 9});
    EXPECT_NEAR(r.log_loss, std::log(10.0), 1e-6);
    EXPECT_EQ(r.count, 5u);
}

TEST(Evaluate, PerfectPredictionsGiveZero) {
    Tensor<float> p({3, 10}, 0.0f);
    p.data[2] = p.data[10 + 5] = p.data[20 + 9] = 1.0f;
    const auto r = score_probabilities(p, {2, 5, 9});
    EXPECT_NEAR(r.log_loss, 0.0, 1e-12);
    EXPECT_EQ(r.error_rate, 0.0);
}

TEST(Evaluate, HandComputedThreeSamples) {
    Tensor<float> p({3, 10}, 0.0f);
    p.data[0] = 0.5f;
    p.data[1] = 0.5f;
    p.data[10 + 3] = 0.25f;
    p.data[10 + 4] = 0.75f;
    p.data[20 + 0] = 1.0f;
    const auto r = score_probabilities(p, {0, 3, 7});
    const double expected = (-std::log(0.5) - std::log(0.25) - std::log(1e-15)) / 3.0;
    EXPECT_NEAR(r.log_loss, expected, 1e-6);
    EXPECT_NEAR(r.error_rate, 2.0 / 3.0, 1e-12);
}

TEST(Evaluate, RoleAndMadeProbability) {
    std::vector<float> p(10, 0.0f);
    p[4] = 0.375f;  // role 3 made
    p[5] = 0.125f;  // role 3 missed
    p[0] = 0.25f;
    p[1] = 0.25f;
    EXPECT_EQ(predicted_role(p.data()), 1);  // tie 0.4 vs 0.4, lowest role wins
    p[5] = 0.25f;
    EXPECT_EQ(predicted_role(p.data()), 3);
    EXPECT_NEAR(made_probability(p.data()), 0.375 / 0.625, 1e-6);
}
