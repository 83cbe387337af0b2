#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "printkind/kernels/layers.hpp"
#include "printkind/tensor.hpp"

namespace printkind {

enum class LayerKind { conv, avgpool, relu, fully_connected };

std::string_view to_string(LayerKind kind);

template <typename T>
struct Parameter {
    std::string name;
    BasicTensor<T> value;
    BasicTensor<T> grad;
    // Fan-in for He initialization; zero marks a bias (initialized to zero).
    std::size_t fan_in = 0;
    // Multiplier on the He standard deviation.
    double init_gain = 1.0;
};

// A differentiable layer. backward() consumes the cache written by the most recent forward()
// and fills the parameter gradients (overwriting, not accumulating).
template <typename T>
class Layer {
public:
    virtual ~Layer() = default;

    virtual LayerKind kind() const = 0;
    virtual BasicTensor<T> forward(const BasicTensor<T>& input) = 0;
    virtual BasicTensor<T> backward(const BasicTensor<T>& grad_output) = 0;
    virtual Shape output_shape(const Shape& input) const = 0;
    virtual std::span<Parameter<T>> parameters() { return {}; }

    // 64-bit copy of this layer (parameters included) for gradient checking.
    virtual std::unique_ptr<Layer<double>> shadow() const = 0;
};

template <typename T>
class Conv2d final : public Layer<T> {
public:
    Conv2d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel,
           kernels::Padding padding = kernels::Padding::same, std::string name = "conv");

    LayerKind kind() const override { return LayerKind::conv; }
    BasicTensor<T> forward(const BasicTensor<T>& input) override;
    BasicTensor<T> backward(const BasicTensor<T>& grad_output) override;
    Shape output_shape(const Shape& input) const override;
    std::span<Parameter<T>> parameters() override { return params_; }
    std::unique_ptr<Layer<double>> shadow() const override;

    // The first layer of a network has no use for its input gradient; backward() then
    // returns an empty tensor.
    void set_input_grad_needed(bool needed) { input_grad_needed_ = needed; }

    std::size_t in_channels() const { return in_channels_; }
    std::size_t out_channels() const { return out_channels_; }
    std::size_t kernel() const { return kernel_; }
    kernels::Padding padding() const { return padding_; }
    Parameter<T>& weight() { return params_[0]; }
    Parameter<T>& bias() { return params_[1]; }

private:
    kernels::ConvGeometry geometry(const Shape& input) const;

    std::size_t in_channels_;
    std::size_t out_channels_;
    std::size_t kernel_;
    kernels::Padding padding_;
    std::vector<Parameter<T>> params_;
    std::optional<BasicTensor<T>> cached_input_;
    bool input_grad_needed_ = true;
};

// 2x2 average pooling, stride 2.
template <typename T>
class AvgPool2x2 final : public Layer<T> {
public:
    LayerKind kind() const override { return LayerKind::avgpool; }
    BasicTensor<T> forward(const BasicTensor<T>& input) override;
    BasicTensor<T> backward(const BasicTensor<T>& grad_output) override;
    Shape output_shape(const Shape& input) const override;
    std::unique_ptr<Layer<double>> shadow() const override;

private:
    std::optional<Shape> cached_shape_;
};

template <typename T>
class Relu final : public Layer<T> {
public:
    LayerKind kind() const override { return LayerKind::relu; }
    BasicTensor<T> forward(const BasicTensor<T>& input) override;
    BasicTensor<T> backward(const BasicTensor<T>& grad_output) override;
    Shape output_shape(const Shape& input) const override { return input; }
    std::unique_ptr<Layer<double>> shadow() const override;

private:
    std::optional<BasicTensor<T>> cached_input_;
};

// Affine map x * W + b with W of shape [in_dim, out_dim]. Inputs of rank > 2 are flattened
// to [N, in_dim] and the input gradient is returned in the original shape.
template <typename T>
class FullyConnected final : public Layer<T> {
public:
    FullyConnected(std::size_t in_dim, std::size_t out_dim, std::string name = "fc");

    LayerKind kind() const override { return LayerKind::fully_connected; }
    BasicTensor<T> forward(const BasicTensor<T>& input) override;
    BasicTensor<T> backward(const BasicTensor<T>& grad_output) override;
    Shape output_shape(const Shape& input) const override;
    std::span<Parameter<T>> parameters() override { return params_; }
    std::unique_ptr<Layer<double>> shadow() const override;

    void set_input_grad_needed(bool needed) { input_grad_needed_ = needed; }

    std::size_t in_dim() const { return in_dim_; }
    std::size_t out_dim() const { return out_dim_; }
    Parameter<T>& weight() { return params_[0]; }
    Parameter<T>& bias() { return params_[1]; }

private:
    std::size_t in_dim_;
    std::size_t out_dim_;
    std::vector<Parameter<T>> params_;
    std::optional<BasicTensor<T>> cached_input_;
    bool input_grad_needed_ = true;
};

// Mean softmax cross-entropy over the batch, computed with max-subtraction.
template <typename T>
class SoftmaxCrossEntropy {
public:
    T forward(const BasicTensor<T>& logits, std::span<const int> labels);
    // (softmax - onehot) / N for the last forward() call.
    BasicTensor<T> backward() const;

    const BasicTensor<T>& probabilities() const { return probs_; }

private:
    BasicTensor<T> probs_;
    std::vector<int> labels_;
};

// Ordered stack of layers.
template <typename T>
class Sequential {
public:
    Sequential() = default;
    Sequential(Sequential&&) noexcept = default;
    Sequential& operator=(Sequential&&) noexcept = default;

    Layer<T>& add(std::unique_ptr<Layer<T>> layer);

    template <typename L, typename... Args>
    L& emplace(Args&&... args) {
        auto layer = std::make_unique<L>(std::forward<Args>(args)...);
        L& ref = *layer;
        add(std::move(layer));
        return ref;
    }

    BasicTensor<T> forward(const BasicTensor<T>& input);
    // Returns the gradient with respect to the network input (empty if the first layer
    // skips it).
    BasicTensor<T> backward(const BasicTensor<T>& grad_output);
    Shape output_shape(Shape input) const;

    std::vector<Parameter<T>*> parameters();
    std::size_t size() const { return layers_.size(); }
    Layer<T>& layer(std::size_t i) { return *layers_.at(i); }
    const Layer<T>& layer(std::size_t i) const { return *layers_.at(i); }

private:
    std::vector<std::unique_ptr<Layer<T>>> layers_;
};

} // namespace printkind
