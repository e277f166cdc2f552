#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "courtraster/nn/layers.hpp"
#include "support/support.hpp"

using namespace courtraster;
using namespace courtraster::nn;

namespace {

Tensor<double> integer_tensor(Shape dims, std::mt19937_64& rng, int lo = -4, int hi = 4) {
    Tensor<double> t(std::move(dims));
    std::uniform_int_distribution<int> u(lo, hi);
    for (auto& v : t.data) v = u(rng);
    return t;
}

}  // namespace

TEST(Conv2d, IdentityKernelCopiesInput) {
    Conv2d<float> conv(1, 1);
    conv.weight().value.zero();
    conv.weight().value.data[4] = 1.0f;
    Tensor<float> x({2, 1, 5, 7}), y;
    std::mt19937_64 rng(1);
    for (auto& v : x.data) v = std::uniform_real_distribution<float>(-1, 1)(rng);
    conv.forward(x, y, false);
    EXPECT_EQ(y.dims, x.dims);
    EXPECT_EQ(y.data, x.data);
}

TEST(Conv2d, OnesKernelCountsNeighbours) {
    Conv2d<float> conv(1, 1);
    std::fill(conv.weight().value.data.begin(), conv.weight().value.data.end(), 1.0f);
    Tensor<float> x({1, 1, 5, 6}, 1.0f), y;
    conv.forward(x, y, false);
    EXPECT_EQ(y.data[0], 4.0f);
    EXPECT_EQ(y.data[5], 4.0f);
    EXPECT_EQ(y.data[1], 6.0f);
    EXPECT_EQ(y.data[1 * 6 + 1], 9.0f);
    EXPECT_EQ(y.data[3 * 6 + 4], 9.0f);
    EXPECT_EQ(y.data[4 * 6 + 5], 4.0f);
}

TEST(Conv2d, MatchesNestedLoopReferenceExactly) {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t N = trial < 25 ? 1 : 1 + rng() % 3, C = trial < 25 ? 1 : 1 + rng() % 4;
        const std::size_t H = trial < 25 ? 4 : 2 + rng() % 7, W = trial < 25 ? 4 : 2 + rng() % 7, F = 1 + rng() % 4;
        Conv2d<double> conv(C, F);
        conv.weight().value = integer_tensor({F, C, 3, 3}, rng);
        conv.bias().value = integer_tensor({F}, rng);
        const auto x = integer_tensor({N, C, H, W}, rng);
        Tensor<double> y;
        conv.forward(x, y, false);
        const auto ref = courtraster::fixtures::conv_reference(x, conv.weight().value, conv.bias().value);
        ASSERT_EQ(y.dims, ref.dims);
        ASSERT_EQ(y.data, ref.data) << "trial " << trial;
    }
}

TEST(Conv2d, FloatMatchesReferenceOnIntegers) {
    std::mt19937_64 rng(3);
    Conv2d<float> conv(11, 8);
    const auto w = integer_tensor({8, 11, 3, 3}, rng, -2, 2);
    const auto b = integer_tensor({8}, rng);
    const auto x = integer_tensor({3, 11, 12, 9}, rng, 0, 3);
    conv.weight().value = tensor_cast<float>(w);
    conv.bias().value = tensor_cast<float>(b);
    Tensor<float> y;
    conv.forward(tensor_cast<float>(x), y, false);
    EXPECT_EQ(tensor_cast<double>(y).data, courtraster::fixtures::conv_reference(x, w, b).data);
}

TEST(Conv2d, ShapeMismatchIsContractError) {
    Conv2d<float> conv(3, 4);
    Tensor<float> x({1, 2, 5, 5}), y;
    EXPECT_THROW(conv.forward(x, y, false), ContractError);
    EXPECT_THROW(conv.output_shape({2, 5, 5}), ContractError);
    EXPECT_EQ(conv.output_shape({3, 5, 6}), (Shape{4, 5, 6}));
}

TEST(MaxPool2, PicksWindowMax) {
    MaxPool2<float> pool;
    Tensor<float> x({1, 1, 2, 2}), y;
    x.data = {1, 2, 3, 4};
    pool.forward(x, y, false);
    ASSERT_EQ(y.size(), 1u);
    EXPECT_EQ(y.data[0], 4.0f);
}

TEST(MaxPool2, ConstantInputRoutesGradientToFirstIndex) {
    MaxPool2<float> pool;
    Tensor<float> x({1, 1, 4, 4}, 2.0f), y, dx;
    pool.forward(x, y, true);
    for (float v : y.data) EXPECT_EQ(v, 2.0f);
    Tensor<float> dy(y.dims, 1.0f);
    pool.backward(x, y, dy, &dx);
    for (std::size_t r = 0; r < 4; ++r) {
        for (std::size_t c = 0; c < 4; ++c) EXPECT_EQ(dx.data[r * 4 + c], (r % 2 == 0 && c % 2 == 0) ? 1.0f : 0.0f);
    }
}

TEST(MaxPool2, OddExtentsPadWithNegativeInfinity) {
    MaxPool2<float> pool;
    EXPECT_EQ(pool.output_shape({32, 47, 25}), (Shape{32, 24, 13}));
    EXPECT_EQ(pool.output_shape({32, 94, 50}), (Shape{32, 47, 25}));
    Tensor<float> x({1, 1, 3, 3}), y;
    x.data = {-1, -2, -3, -4, -5, -6, -7, -8, -9};
    pool.forward(x, y, false);
    EXPECT_EQ(y.data, (std::vector<float>{-1, -3, -7, -9}));
}

TEST(BatchNorm, NormalizesBatchStatistics) {
    BatchNorm<double> bn(1, false);
    Tensor<double> x({4, 1}), y;
    x.data = {3, 3, 7, 7};  // mean 5, variance 4
    bn.forward(x, y, true);
    double m = 0, v = 0;
    for (double a : y.data) m += a / 4;
    for (double a : y.data) v += (a - m) * (a - m) / 4;
    EXPECT_NEAR(m, 0.0, 1e-12);
    EXPECT_NEAR(v, 4.0 / (4.0 + kBatchNormEps), 1e-12);
}

TEST(BatchNorm, AffineMapsStandardizedInput) {
    BatchNorm<double> bn(1, false);
    std::fill(bn.gamma().value.data.begin(), bn.gamma().value.data.end(), 2.0);
    std::fill(bn.beta().value.data.begin(), bn.beta().value.data.end(), 3.0);
    Tensor<double> x({4, 1}), y;
    x.data = {-1, -1, 1, 1};
    bn.forward(x, y, true);
    double m = 0, v = 0;
    for (double a : y.data) m += a / 4;
    for (double a : y.data) v += (a - m) * (a - m) / 4;
    EXPECT_NEAR(m, 3.0, 1e-12);
    EXPECT_NEAR(v, 4.0, 1e-4);
}

TEST(BatchNorm, SpatialOutputStatisticsPerChannel) {
    std::mt19937_64 rng(4);
    std::normal_distribution<float> g(3.0f, 5.0f);
    BatchNorm<float> bn(3, true);
    Tensor<float> x({8, 3, 6, 5}), y;
    for (auto& v : x.data) v = g(rng);
    bn.forward(x, y, true);
    const auto& h = bn.normalized();
    for (std::size_t c = 0; c < 3; ++c) {
        double m = 0, v = 0, n = 0;
        for (std::size_t b = 0; b < 8; ++b) {
            for (std::size_t i = 0; i < 30; ++i) {
                m += h[(b * 3 + c) * 30 + i];
                n += 1;
            }
        }
        m /= n;
        for (std::size_t b = 0; b < 8; ++b) {
            for (std::size_t i = 0; i < 30; ++i) v += (h[(b * 3 + c) * 30 + i] - m) * (h[(b * 3 + c) * 30 + i] - m);
        }
        v /= n;
        EXPECT_LT(std::abs(m), 1e-5);
        EXPECT_LT(std::abs(v - 1.0), 1e-4);
    }
}

TEST(BatchNorm, RunningStatisticsUseMomentum) {
    BatchNorm<double> bn(1, false);
    Tensor<double> x({2, 1}), y;
    x.data = {4, 6};
    bn.forward(x, y, true);
    EXPECT_NEAR(bn.running_mean().data[0], 0.1 * 5.0, 1e-12);
    EXPECT_GE(bn.running_var().data[0], 0.0);
    bn.running_mean().data[0] = 5.0;
    bn.running_var().data[0] = 1.0;
    x.data = {5, 7};
    bn.forward(x, y, false);
    EXPECT_NEAR(y.data[1], 2.0 / std::sqrt(1.0 + kBatchNormEps), 1e-12);
}

TEST(BatchNorm, SingleSampleTrainingIsContractError) {
    BatchNorm<float> bn(2, false);
    Tensor<float> x({1, 2}), y;
    EXPECT_THROW(bn.forward(x, y, true), ContractError);
    EXPECT_NO_THROW(bn.forward(x, y, false));
}

TEST(Softmax, UniformLogitsGiveLnTen) {
    Tensor<double> z({3, 10}, 0.7), p;
    const auto r = softmax_logloss<double>(z, {0, 4, 9}, &p, nullptr);
    for (double v : p.data) EXPECT_NEAR(v, 0.1, 1e-15);
    EXPECT_NEAR(r.loss, std::log(10.0), 1e-12);
}

TEST(Softmax, LargeLogitIsStable) {
    Tensor<float> z({1, 10}, 0.0f), p, g;
    z.data[0] = 1000.0f;
    const auto r = softmax_logloss<float>(z, {0}, &p, &g);
    EXPECT_TRUE(std::isfinite(r.loss));
    EXPECT_NEAR(r.loss, 0.0, 1e-6);
    EXPECT_EQ(r.errors, 0u);
    for (float v : g.data) EXPECT_TRUE(std::isfinite(v));
}

TEST(Softmax, GradientIsProbabilitiesMinusTarget) {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> gauss(0, 2);
    Tensor<double> z({4, 10}), p, g;
    for (auto& v : z.data) v = gauss(rng);
    const std::vector<int> labels{1, 3, 5, 7};
    softmax_logloss<double>(z, labels, &p, &g);
    for (std::size_t n = 0; n < 4; ++n) {
        double s = 0;
        for (std::size_t k = 0; k < 10; ++k) {
            const double t = static_cast<int>(k) == labels[n] ? 1.0 : 0.0;
            EXPECT_NEAR(g.data[n * 10 + k], (p.data[n * 10 + k] - t) / 4.0, 1e-15);
            EXPECT_GT(p.data[n * 10 + k], 0.0);
            EXPECT_LT(p.data[n * 10 + k], 1.0);
            s += p.data[n * 10 + k];
        }
        EXPECT_NEAR(s, 1.0, 1e-6);
    }
}

TEST(Softmax, FiniteDifferenceOnRandomLogits) {
    std::mt19937_64 rng(6);
    std::normal_distribution<double> gauss(0, 3);
    for (int trial = 0; trial < 5; ++trial) {
        Tensor<double> z({3, 10});
        for (auto& v : z.data) v = gauss(rng);
        const auto c = courtraster::fixtures::check_logloss(z, {0, 5, 9});
        EXPECT_LT(c.rel_error, 1e-6) << c.what;
    }
}

TEST(Softmax, CountsErrors) {
    Tensor<double> z({2, 10}, 0.0);
    z.data[3] = 5;
    z.data[10 + 2] = 5;
    EXPECT_EQ(softmax_logloss<double>(z, {3, 4}, nullptr, nullptr).errors, 1u);
    EXPECT_THROW(softmax_logloss<double>(z, {3}, nullptr, nullptr), ContractError);
    EXPECT_THROW(softmax_logloss<double>(z, {3, 10}, nullptr, nullptr), ContractError);
}

TEST(Init, BoundMatchesFanIn) {
    EXPECT_NEAR(init_bound(1175), 0.02917, 1e-5);
    EXPECT_NEAR(init_bound(99), 0.1005, 1e-4);
    Conv2d<float> conv(11, 32);
    EXPECT_EQ(conv.fan_in(), 99u);
    Dense<float> dense(1175, 400);
    EXPECT_EQ(dense.fan_in(), 1175u);
}

TEST(Dense, ForwardIsAffine) {
    Dense<double> d(2, 3);
    d.weight().value.data = {1, 2, 3, 4, 5, 6};
    d.bias().value.data = {0.5, -1, 2};
    Tensor<double> x({1, 2}), y;
    x.data = {1, -1};
    d.forward(x, y, false);
    EXPECT_EQ(y.data, (std::vector<double>{-0.5, -2, 1}));
    Tensor<double> bad({1, 3});
    EXPECT_THROW(d.forward(bad, y, false), ContractError);
}

TEST(Relu, ClampsNegatives) {
    Relu<float> r;
    Tensor<float> x({1, 4}), y, dx;
    x.data = {-1, 0, 2, -3};
    r.forward(x, y, true);
    EXPECT_EQ(y.data, (std::vector<float>{0, 0, 2, 0}));
    Tensor<float> dy({1, 4}, 1.0f);
    r.backward(x, y, dy, &dx);
    EXPECT_EQ(dx.data, (std::vector<float>{0, 0, 1, 0}));
}

TEST(Dropout, EvalIsIdentity) {
    Dropout<float> d(0.5);
    d.seed(1);
    Tensor<float> x({2, 3}), y, dx;
    x.data = {1, -2, 3, 4, 5, -6};
    d.forward(x, y, false);
    EXPECT_EQ(y.data, x.data);
    Tensor<float> dy({2, 3}, 1.0f);
    d.backward(x, y, dy, &dx);
    EXPECT_EQ(dx.data, dy.data);
}

TEST(Dropout, TrainMaskDropsAtRateAndRescales) {
    Dropout<double> d(0.3);
    d.seed(7);
    Tensor<double> x({100, 100}, 1.0), y, dx;
    d.forward(x, y, true);
    std::size_t zeros = 0;
    double sum = 0;
    for (double v : y.data) {
        if (v == 0) {
            ++zeros;
        } else {
            EXPECT_DOUBLE_EQ(v, 1.0 / 0.7);
        }
        sum += v;
    }
    // 10000 Bernoulli(0.3) draws: four standard deviations is 0.0183.
    EXPECT_NEAR(static_cast<double>(zeros) / 1e4, 0.3, 0.0183);
    EXPECT_NEAR(sum / 1e4, 1.0, 0.04);
    Tensor<double> dy({100, 100}, 2.0);
    d.backward(x, y, dy, &dx);
    for (std::size_t i = 0; i < y.size(); ++i) EXPECT_EQ(dx.data[i], 2.0 * y.data[i]);
}

TEST(Dropout, MasksFollowSeedAndHold) {
    Dropout<float> a(0.5), b(0.5);
    a.seed(3);
    b.seed(3);
    Tensor<float> x({4, 16}, 1.0f), ya, yb, again;
    a.forward(x, ya, true);
    b.forward(x, yb, true);
    EXPECT_EQ(ya.data, yb.data);
    a.forward(x, again, true);
    EXPECT_NE(again.data, ya.data);
    a.hold_mask(true);
    a.forward(x, ya, true);
    a.forward(x, again, true);
    EXPECT_EQ(again.data, ya.data);
    EXPECT_THROW(Dropout<float>(1.0), ContractError);
    EXPECT_THROW(Dropout<float>(-0.1), ContractError);
    Dropout<float> none(0.0);
    none.forward(x, ya, true);
    EXPECT_EQ(ya.data, x.data);
}

TEST(GradientCheck, RandomizedSuitePasses) {
    const auto results = courtraster::fixtures::gradient_suite(2024);
    EXPECT_GE(results.size(), 20u);
    for (const auto& r : results) {
        EXPECT_LT(r.rel_error, 1e-4) << r.what;
        EXPECT_GT(r.checked, 0u) << r.what;
    }
}

TEST(GradientCheck, Conv2dAtCourtInputShape) {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> g(0, 1);
    Conv2d<double> conv(3, 2);
    for (auto* p : conv.params()) {
        for (auto& v : p->value.data) v = g(rng);
    }
    Tensor<double> x({2, 3, 5, 4});
    for (auto& v : x.data) v = g(rng);
    const auto c = courtraster::fixtures::check_layer(conv, x, true, 8);
    EXPECT_LT(c.rel_error, 1e-4);
}

TEST(GradientCheck, DetectsWrongGradient) {
    // Sanity for the checker itself: a mismatched analytic vector is flagged.
    EXPECT_GT(courtraster::fixtures::relative_error({1.0, 2.0}, {1.0, 2.1}), 1e-2);
    EXPECT_EQ(courtraster::fixtures::relative_error({0.0}, {0.0}), 0.0);
}
