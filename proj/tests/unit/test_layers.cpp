#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "printkind/gradcheck.hpp"
#include "printkind/layers.hpp"
#include "printkind/optim.hpp"

using namespace printkind;

namespace {

template <typename T>
BasicTensor<T> random_tensor(Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
    BasicTensor<T> t(std::move(shape));
    std::uniform_real_distribution<double> dist(lo, hi);
    for (auto& v : t.data()) v = static_cast<T>(dist(rng));
    return t;
}

template <typename T>
void randomize(Layer<T>& layer, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (auto& p : layer.parameters())
        for (auto& v : p.value.data()) v = static_cast<T>(dist(rng));
}

} // namespace

TEST(Conv2dLayer, ZeroUpstreamGradientGivesZeroGradients) {
    std::mt19937_64 rng(1);
    Conv2d<float> conv(2, 3, 3);
    randomize(conv, rng);
    const auto x = random_tensor<float>({2, 2, 6, 6}, rng);
    conv.forward(x);
    const auto gi = conv.backward(Tensor({2, 3, 6, 6}, 0.0f));
    for (float v : gi.data()) EXPECT_EQ(v, 0.0f);
    for (auto& p : conv.parameters())
        for (float v : p.grad.data()) EXPECT_EQ(v, 0.0f);
}

TEST(Conv2dLayer, IdentityKernelPassesGradientThrough) {
    std::mt19937_64 rng(2);
    Conv2d<float> conv(1, 1, 1);
    conv.weight().value[0] = 1.0f;
    conv.forward(random_tensor<float>({1, 1, 5, 5}, rng));
    const auto go = random_tensor<float>({1, 1, 5, 5}, rng);
    EXPECT_EQ(conv.backward(go), go);
}

TEST(Conv2dLayer, ChannelMismatchThrows) {
    Conv2d<float> conv(2, 3, 3);
    EXPECT_THROW(conv.forward(Tensor({1, 3, 8, 8})), ShapeError);
}

TEST(Conv2dLayer, BackwardBeforeForwardThrows) {
    Conv2d<float> conv(1, 1, 3);
    EXPECT_THROW(conv.backward(Tensor({1, 1, 4, 4})), std::logic_error);
}

TEST(Conv2dLayer, GradientShapeMismatchThrows) {
    Conv2d<float> conv(1, 2, 3);
    conv.forward(Tensor({1, 1, 4, 4}));
    EXPECT_THROW(conv.backward(Tensor({1, 1, 4, 4})), ShapeError);
}

TEST(Conv2dLayer, GradCheckSmallCase) {
    std::mt19937_64 rng(3);
    Conv2d<double> conv(2, 2, 3);
    randomize(conv, rng);
    const auto r = grad_check(conv, random_tensor<double>({1, 2, 6, 6}, rng), 1e-3, 1e-4);
    EXPECT_LT(r.max_rel_error, 1e-4) << r.worst_entry;
    EXPECT_TRUE(r.passed);
}

TEST(Conv2dLayer, GradCheckEveryPaperKernelSize) {
    for (std::size_t k : {2u, 3u, 4u, 6u, 10u, 11u}) {
        for (std::uint64_t seed = 0; seed < 3; ++seed) {
            std::mt19937_64 rng(seed * 31 + k);
            Conv2d<double> conv(2, 2, k);
            randomize(conv, rng);
            const auto r = grad_check(conv, random_tensor<double>({1, 2, 7, 7}, rng), 1e-3, 1e-4, seed);
            EXPECT_LT(r.max_rel_error, 1e-4) << "k=" << k << " " << r.worst_entry;
        }
    }
}

TEST(Conv2dLayer, FloatLayerChecksThroughShadow) {
    std::mt19937_64 rng(4);
    Conv2d<float> conv(1, 2, 4);
    randomize(conv, rng);
    const auto r = grad_check(conv, random_tensor<float>({2, 1, 6, 6}, rng), 1e-3, 1e-4);
    EXPECT_LT(r.max_rel_error, 1e-4) << r.worst_entry;
}

TEST(FullyConnectedLayer, GradCheckAtRoundoffLevel) {
    std::mt19937_64 rng(5);
    FullyConnected<double> fc(6, 4);
    randomize(fc, rng);
    const auto r = grad_check(fc, random_tensor<double>({3, 6}, rng), 1e-3, 1e-7);
    EXPECT_LT(r.max_rel_error, 1e-7) << r.worst_entry;
}

TEST(FullyConnectedLayer, FlattensHigherRankInput) {
    FullyConnected<float> fc(12, 2);
    EXPECT_EQ(fc.output_shape({5, 3, 2, 2}), (Shape{5, 2}));
    EXPECT_THROW(fc.output_shape({5, 3, 2, 3}), ShapeError);
    fc.forward(Tensor({5, 3, 2, 2}, 1.0f));
    EXPECT_EQ(fc.backward(Tensor({5, 2}, 1.0f)).shape(), (Shape{5, 3, 2, 2}));
}

TEST(ReluLayer, GradCheckAwayFromKink) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        std::mt19937_64 rng(100 + seed);
        auto x = random_tensor<double>({2, 3, 4, 4}, rng, 0.02, 1.0);
        std::bernoulli_distribution flip(0.5);
        for (double& v : x.data())
            if (flip(rng)) v = -v;
        Relu<double> relu;
        const auto r = grad_check(relu, x, 1e-3, 1e-4, seed);
        EXPECT_LT(r.max_rel_error, 1e-4) << r.worst_entry;
    }
}

TEST(AvgPoolLayer, GradCheckAndOddDimensions) {
    std::mt19937_64 rng(6);
    AvgPool2x2<double> pool;
    EXPECT_LT(grad_check(pool, random_tensor<double>({2, 2, 4, 6}, rng), 1e-3, 1e-4).max_rel_error, 1e-4);
    EXPECT_THROW(pool.forward(TensorD({1, 1, 5, 4})), ShapeError);
    AvgPool2x2<float> fpool;
    EXPECT_EQ(fpool.forward(Tensor({1, 1, 128, 128})).shape(), (Shape{1, 1, 64, 64}));
}

TEST(AvgPoolLayer, AllOnesUpstreamGivesQuarter) {
    AvgPool2x2<float> pool;
    const Tensor out = pool.forward(Tensor({2, 3, 8, 8}, 5.0f));
    const Tensor gi = pool.backward(Tensor(out.shape(), 1.0f));
    for (float v : gi.data()) EXPECT_EQ(v, 0.25f);
}

TEST(SoftmaxCrossEntropy, UniformLogitsGiveLn2) {
    SoftmaxCrossEntropy<float> loss;
    const int labels[] = {0, 1, 1};
    EXPECT_NEAR(loss.forward(Tensor({3, 2}, 0.7f), labels), std::log(2.0f), 1e-6);
}

TEST(SoftmaxCrossEntropy, SaturatedMarginNearZero) {
    SoftmaxCrossEntropy<float> loss;
    const int labels[] = {1};
    EXPECT_LT(loss.forward(Tensor({1, 2}, std::vector<float>{0.0f, 50.0f}), labels), 1e-6f);
}

TEST(SoftmaxCrossEntropy, LabelOutOfRangeThrows) {
    SoftmaxCrossEntropy<float> loss;
    const int labels[] = {2};
    EXPECT_THROW(loss.forward(Tensor({1, 2}), labels), DataError);
}

TEST(SoftmaxCrossEntropy, GradCheck) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        std::mt19937_64 rng(seed);
        const auto logits = random_tensor<double>({5, 2}, rng, -3, 3);
        std::vector<int> labels(5);
        for (int& l : labels) l = static_cast<int>(rng() % 2);
        const auto r = grad_check_softmax_xent(logits, labels, 1e-3, 1e-4);
        EXPECT_LT(r.max_rel_error, 1e-4) << r.worst_entry;
    }
}

TEST(Sgd, ZeroGradientLeavesParamsUnchanged) {
    Parameter<float> p{"w", Tensor({3}, 2.0f), Tensor({3}, 0.0f), 3};
    Parameter<float>* params[] = {&p};
    Sgd sgd(0.1, 0.9);
    sgd.step(params);
    for (float v : p.value.data()) EXPECT_EQ(v, 2.0f);
}

TEST(Sgd, PlainStepSubtractsGradient) {
    Parameter<float> p{"w", Tensor({2}, std::vector<float>{1.0f, -1.0f}), Tensor({2}, std::vector<float>{0.5f, 2.0f}), 2};
    Parameter<float>* params[] = {&p};
    Sgd sgd(1.0, 0.0);
    sgd.step(params);
    EXPECT_EQ(p.value[0], 0.5f);
    EXPECT_EQ(p.value[1], -3.0f);
}

TEST(Sgd, TwoMomentumStepsFollowRecurrence) {
    const float lr = 0.01f, g = 0.3f, p0 = 1.0f;
    Parameter<float> p{"w", Tensor({1}, p0), Tensor({1}, g), 1};
    Parameter<float>* params[] = {&p};
    Sgd sgd(lr, 0.9);
    sgd.step(params);
    sgd.step(params);
    // v1 = g, v2 = 0.9 g + g = 1.9 g  ->  p2 = p0 - lr (g + 1.9 g)
    EXPECT_NEAR(p.value[0], p0 - lr * (g + 1.9f * g), 1e-7);
}

TEST(Sgd, NonFiniteGradientAborts) {
    Parameter<float> a{"ok", Tensor({1}, 1.0f), Tensor({1}, 1.0f), 1};
    Parameter<float> b{"bad", Tensor({1}, 1.0f), Tensor({1}, std::nanf("")), 1};
    Parameter<float>* params[] = {&a, &b};
    Sgd sgd(0.1, 0.0);
    EXPECT_THROW(sgd.step(params), NumericError);
    EXPECT_EQ(a.value[0], 1.0f);
    EXPECT_THROW(Sgd(0.0, 0.5), DataError);
    EXPECT_THROW(Sgd(0.1, 1.0), DataError);
}

TEST(InitParams, DeterministicHeNormalAndZeroBias) {
    FullyConnected<float> a(100, 100), b(100, 100);
    auto pa = std::vector<Parameter<float>*>{&a.weight(), &a.bias()};
    auto pb = std::vector<Parameter<float>*>{&b.weight(), &b.bias()};
    init_params(pa, 99);
    init_params(pb, 99);
    EXPECT_EQ(a.weight().value, b.weight().value);
    for (float v : a.bias().value.data()) EXPECT_EQ(v, 0.0f);

    double sum = 0, sq = 0;
    const auto w = a.weight().value.data();
    for (float v : w) {
        sum += v;
        sq += double(v) * v;
    }
    const double mean = sum / double(w.size());
    const double sd = std::sqrt(sq / double(w.size()) - mean * mean);
    EXPECT_NEAR(sd, std::sqrt(2.0 / 100.0), 0.05 * std::sqrt(2.0 / 100.0));
}

TEST(Sequential, BackwardStopsWhenFirstLayerSkipsInputGradient) {
    Sequential<float> net;
    auto& conv = net.emplace<Conv2d<float>>(1, 2, 3);
    conv.set_input_grad_needed(false);
    net.emplace<Relu<float>>();
    net.emplace<AvgPool2x2<float>>();
    net.emplace<FullyConnected<float>>(2 * 2 * 2, 2);
    std::mt19937_64 rng(9);
    for (auto* p : net.parameters())
        for (float& v : p->value.data()) v = 0.3f * static_cast<float>(rng() % 7) - 1.0f;
    const Tensor logits = net.forward(Tensor({3, 1, 4, 4}, 0.5f));
    EXPECT_EQ(logits.shape(), (Shape{3, 2}));
    EXPECT_TRUE(net.backward(Tensor({3, 2}, 1.0f)).empty());
    EXPECT_EQ(net.parameters().size(), 4u);
}
