#include "printkind/model.hpp"

#include "printkind/optim.hpp"

namespace printkind {

Model::Model(ArchSpec arch, ChannelPlan plan, std::size_t input_size)
    : arch_(std::move(arch)), plan_(std::move(plan)), input_size_(input_size),
      normalization_(InputNormalization::identity(plan_.input_channels)) {
    if (plan_.conv_channels.size() != arch_.conv_count()) {
        throw ShapeError("channel plan has " + std::to_string(plan_.conv_channels.size()) + " entries for " +
                         std::to_string(arch_.conv_count()) + " conv layers");
    }
    if (plan_.classes < 2) throw ShapeError("a classifier needs at least two classes");
    const FeatureShape out = output_shape(arch_, {plan_.input_channels, input_size, input_size}, &plan_);
    head_inputs_ = out.flattened();

    std::size_t channels = plan_.input_channels;
    std::size_t conv_index = 0;
    for (const auto& spec : arch_.layers) {
        if (spec.kind == LayerSpec::Kind::pool) {
            net_.emplace<AvgPool2x2<float>>();
            continue;
        }
        const std::size_t out_channels = plan_.conv_channels[conv_index];
        auto& conv = net_.emplace<Conv2d<float>>(channels, out_channels, spec.kernel, kernels::Padding::same,
                                                 "conv" + std::to_string(conv_index));
        if (conv_index == 0) conv.set_input_grad_needed(false);
        net_.emplace<Relu<float>>();
        channels = out_channels;
        ++conv_index;
    }
    auto& head = net_.emplace<FullyConnected<float>>(head_inputs_, plan_.classes, "head");
    head.weight().init_gain = kHeadInitGain;
    if (net_.size() == 1) head.set_input_grad_needed(false);
}

Model Model::instantiate(const ArchSpec& arch, const ChannelPlan& plan, std::uint64_t seed, std::size_t input_size) {
    Model model(arch, plan, input_size);
    init_params(model.parameters(), seed);
    return model;
}

std::size_t Model::parameter_count() {
    std::size_t total = 0;
    for (const auto* p : parameters()) total += p->value.size();
    return total;
}

Tensor Model::make_batch(std::span<const std::uint8_t> pixels, std::size_t count) const {
    const std::size_t c = plan_.input_channels;
    const std::size_t plane = input_size_ * input_size_;
    if (pixels.size() != count * c * plane) {
        throw ShapeError("batch pixel buffer has " + std::to_string(pixels.size()) + " bytes, expected " +
                         std::to_string(count * c * plane));
    }
    Tensor batch({count, c, input_size_, input_size_});
    auto out = batch.data();
    for (std::size_t n = 0; n < count; ++n) {
        for (std::size_t ch = 0; ch < c; ++ch) {
            const float mean = normalization_.mean[ch];
            const float inv = 1.0f / normalization_.stddev[ch];
            const std::size_t base = (n * c + ch) * plane;
            for (std::size_t i = 0; i < plane; ++i) {
                out[base + i] = (static_cast<float>(pixels[base + i]) / 255.0f - mean) * inv;
            }
        }
    }
    return batch;
}

} // namespace printkind
