#include "printkind/optim.hpp"

#include <cmath>
#include <random>
#include <string>

namespace printkind {

Sgd::Sgd(double learning_rate, double momentum) : learning_rate_(learning_rate), momentum_(momentum) {
    if (!(learning_rate > 0.0)) throw DataError("learning rate must be positive");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw DataError("momentum must lie in [0, 1)");
}

void Sgd::step(std::span<Parameter<float>* const> params) {
    for (const auto* p : params) {
        if (!p->grad.all_finite()) throw NumericError("non-finite gradient in parameter '" + p->name + "'");
        if (p->grad.shape() != p->value.shape()) {
            throw ShapeError("gradient shape " + shape_string(p->grad.shape()) + " does not match parameter '" +
                             p->name + "' " + shape_string(p->value.shape()));
        }
    }
    if (velocity_.size() != params.size()) {
        velocity_.clear();
        for (const auto* p : params) velocity_.emplace_back(p->value.shape());
    }
    const auto lr = static_cast<float>(learning_rate_);
    const auto mu = static_cast<float>(momentum_);
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto value = params[i]->value.data();
        auto grad = params[i]->grad.data();
        auto vel = velocity_[i].data();
        for (std::size_t j = 0; j < value.size(); ++j) {
            vel[j] = mu * vel[j] + grad[j];
            value[j] -= lr * vel[j];
        }
    }
}

void init_params(std::span<Parameter<float>* const> params, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    for (auto* p : params) {
        if (p->fan_in == 0) {
            p->value.fill(0.0f);
            continue;
        }
        std::normal_distribution<double> dist(0.0, p->init_gain * std::sqrt(2.0 / static_cast<double>(p->fan_in)));
        for (float& v : p->value.data()) v = static_cast<float>(dist(rng));
    }
}

} // namespace printkind
