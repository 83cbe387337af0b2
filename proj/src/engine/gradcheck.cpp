#include "printkind/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace printkind {
namespace {

double probe_loss(Layer<double>& layer, const TensorD& input, const TensorD& probe) {
    const TensorD out = layer.forward(input);
    double sum = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) sum += probe[i] * out[i];
    return sum;
}

void track(GradCheckResult& r, double analytic, double numeric, const std::string& name, std::size_t index) {
    const double err = relative_error(analytic, numeric);
    if (r.worst_entry.empty() || err > r.max_rel_error) {
        r.max_rel_error = err;
        r.worst_entry = name + "[" + std::to_string(index) + "]";
    }
}

TensorD random_tensor(Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
    TensorD t(std::move(shape));
    std::uniform_real_distribution<double> dist(lo, hi);
    for (double& v : t.data()) v = dist(rng);
    return t;
}

void randomize_params(Layer<double>& layer, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (auto& p : layer.parameters()) {
        for (double& v : p.value.data()) v = dist(rng);
    }
}

} // namespace

double relative_error(double analytic, double numeric) {
    const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
    return std::abs(analytic - numeric) / denom;
}

GradCheckResult grad_check(Layer<double>& layer, const TensorD& input, double eps, double tol,
                           std::uint64_t probe_seed) {
    std::mt19937_64 rng(probe_seed);
    const Shape out_shape = layer.output_shape(input.shape());
    const TensorD probe = random_tensor(out_shape, rng);

    layer.forward(input);
    const TensorD grad_input = layer.backward(probe);
    std::vector<TensorD> grad_params;
    for (auto& p : layer.parameters()) grad_params.push_back(p.grad);

    GradCheckResult result;
    TensorD x = input;
    if (!grad_input.empty()) {
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double saved = x[i];
            x[i] = saved + eps;
            const double up = probe_loss(layer, x, probe);
            x[i] = saved - eps;
            const double down = probe_loss(layer, x, probe);
            x[i] = saved;
            track(result, grad_input[i], (up - down) / (2.0 * eps), "input", i);
        }
    }
    auto params = layer.parameters();
    for (std::size_t k = 0; k < params.size(); ++k) {
        auto& value = params[k].value;
        for (std::size_t i = 0; i < value.size(); ++i) {
            const double saved = value[i];
            value[i] = saved + eps;
            const double up = probe_loss(layer, input, probe);
            value[i] = saved - eps;
            const double down = probe_loss(layer, input, probe);
            value[i] = saved;
            track(result, grad_params[k][i], (up - down) / (2.0 * eps), params[k].name, i);
        }
    }
    result.passed = result.max_rel_error < tol;
    return result;
}

GradCheckResult grad_check(const Layer<float>& layer, const Tensor& input, double eps, double tol,
                           std::uint64_t probe_seed) {
    auto shadow = layer.shadow();
    return grad_check(*shadow, input.cast<double>(), eps, tol, probe_seed);
}

GradCheckResult grad_check_softmax_xent(const TensorD& logits, std::span<const int> labels, double eps, double tol) {
    SoftmaxCrossEntropy<double> loss;
    loss.forward(logits, labels);
    const TensorD analytic = loss.backward();
    GradCheckResult result;
    TensorD z = logits;
    for (std::size_t i = 0; i < z.size(); ++i) {
        const double saved = z[i];
        z[i] = saved + eps;
        const double up = loss.forward(z, labels);
        z[i] = saved - eps;
        const double down = loss.forward(z, labels);
        z[i] = saved;
        track(result, analytic[i], (up - down) / (2.0 * eps), "logits", i);
    }
    result.passed = result.max_rel_error < tol;
    return result;
}

std::vector<GradSuiteEntry> run_grad_suite(std::size_t seeds, double eps) {
    constexpr double tol = 1e-4;
    std::vector<GradSuiteEntry> entries;
    auto record = [&](const std::string& kind, const GradCheckResult& r) {
        auto it = std::find_if(entries.begin(), entries.end(), [&](const auto& e) { return e.kind == kind; });
        if (it == entries.end()) {
            entries.push_back({kind, 0.0, 0});
            it = std::prev(entries.end());
        }
        it->max_rel_error = std::max(it->max_rel_error, r.max_rel_error);
        ++it->cases;
    };

    for (std::size_t kernel : {2u, 3u, 4u, 6u, 10u, 11u}) {
        for (std::size_t s = 0; s < seeds; ++s) {
            std::mt19937_64 rng(1000 * kernel + s);
            Conv2d<double> conv(2, 3, kernel);
            randomize_params(conv, rng);
            const TensorD x = random_tensor({2, 2, 7, 7}, rng);
            record("conv k=" + std::to_string(kernel), grad_check(conv, x, eps, tol, s));
        }
    }
    for (std::size_t s = 0; s < seeds; ++s) {
        std::mt19937_64 rng(2000 + s);
        AvgPool2x2<double> pool;
        record("avgpool", grad_check(pool, random_tensor({2, 3, 6, 8}, rng), eps, tol, s));
    }
    for (std::size_t s = 0; s < seeds; ++s) {
        std::mt19937_64 rng(3000 + s);
        TensorD x = random_tensor({3, 4, 5, 5}, rng, 10.0 * eps + 0.04, 1.0);
        std::bernoulli_distribution flip(0.5);
        for (double& v : x.data()) {
            if (flip(rng)) v = -v;
        }
        Relu<double> relu;
        record("relu", grad_check(relu, x, eps, tol, s));
    }
    for (std::size_t s = 0; s < seeds; ++s) {
        std::mt19937_64 rng(4000 + s);
        FullyConnected<double> fc(12, 5);
        randomize_params(fc, rng);
        record("fully-connected", grad_check(fc, random_tensor({4, 3, 2, 2}, rng), eps, tol, s));
    }
    for (std::size_t s = 0; s < seeds; ++s) {
        std::mt19937_64 rng(5000 + s);
        const TensorD logits = random_tensor({6, 2}, rng, -3.0, 3.0);
        std::vector<int> labels(6);
        std::uniform_int_distribution<int> cls(0, 1);
        for (int& l : labels) l = cls(rng);
        record("softmax-xent", grad_check_softmax_xent(logits, labels, eps, tol));
    }
    return entries;
}

} // namespace printkind
