#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "printkind/arch.hpp"
#include "printkind/layers.hpp"

namespace printkind {

inline constexpr std::size_t kCropSize = 128;
// The logit layer starts small so a fresh model predicts near-uniform probabilities.
inline constexpr double kHeadInitGain = 0.1;

// Per-channel standardization applied to [0,1]-scaled pixels before the network.
struct InputNormalization {
    std::vector<float> mean;
    std::vector<float> stddev;

    static InputNormalization identity(std::size_t channels) {
        return {std::vector<float>(channels, 0.0f), std::vector<float>(channels, 1.0f)};
    }
};

// Conv/pool stack from an ArchSpec (ReLU after every conv), flattened into a single
// fully-connected layer producing the class logits.
class Model {
public:
    Model(ArchSpec arch, ChannelPlan plan, std::size_t input_size = kCropSize);

    static Model instantiate(const ArchSpec& arch, const ChannelPlan& plan, std::uint64_t seed,
                             std::size_t input_size = kCropSize);

    // Input: standardized [N, C, H, W] batch. Output: [N, classes] logits.
    Tensor forward(const Tensor& batch) { return net_.forward(batch); }
    void backward(const Tensor& grad_logits) { net_.backward(grad_logits); }

    std::vector<Parameter<float>*> parameters() { return net_.parameters(); }
    std::size_t parameter_count();

    const ArchSpec& arch() const { return arch_; }
    const ChannelPlan& plan() const { return plan_; }
    std::size_t input_size() const { return input_size_; }
    std::size_t input_channels() const { return plan_.input_channels; }
    std::size_t head_inputs() const { return head_inputs_; }

    InputNormalization& normalization() { return normalization_; }
    const InputNormalization& normalization() const { return normalization_; }

    // Writes `count` 8-bit images (each C x H x W, channel-planar) into a standardized batch.
    Tensor make_batch(std::span<const std::uint8_t> pixels, std::size_t count) const;

    Sequential<float>& network() { return net_; }

private:
    ArchSpec arch_;
    ChannelPlan plan_;
    std::size_t input_size_;
    std::size_t head_inputs_ = 0;
    InputNormalization normalization_;
    Sequential<float> net_;
};

} // namespace printkind
