#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "printkind/layers.hpp"

namespace printkind {

// SGD with heavy-ball momentum: v <- momentum * v + grad; p <- p - lr * v.
class Sgd {
public:
    Sgd(double learning_rate, double momentum);

    // Throws NumericError naming the parameter if any gradient is non-finite; no parameter
    // is modified in that case.
    void step(std::span<Parameter<float>* const> params);

    double learning_rate() const { return learning_rate_; }
    double momentum() const { return momentum_; }

private:
    double learning_rate_;
    double momentum_;
    std::vector<Tensor> velocity_;
};

// He-normal weights (std = init_gain * sqrt(2 / fan_in)) from a seeded 64-bit Mersenne Twister, consumed in
// parameter order; biases are zeroed. Identical seeds give bit-identical parameters.
void init_params(std::span<Parameter<float>* const> params, std::uint64_t seed);

} // namespace printkind
