#include "printkind/layers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace printkind {

std::string shape_string(const Shape& shape) {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += "x";
        s += std::to_string(shape[i]);
    }
    return s + "]";
}

std::string_view to_string(LayerKind kind) {
    switch (kind) {
    case LayerKind::conv: return "conv";
    case LayerKind::avgpool: return "avgpool";
    case LayerKind::relu: return "relu";
    case LayerKind::fully_connected: return "fully-connected";
    }
    return "unknown";
}

namespace {

void require_cache(bool present, std::string_view layer) {
    if (!present) throw std::logic_error(std::string(layer) + ": backward called before forward");
}

void require_same_shape(const Shape& got, const Shape& expected, std::string_view what) {
    if (got != expected) {
        throw ShapeError(std::string(what) + ": gradient shape " + shape_string(got) + " does not match " +
                         shape_string(expected));
    }
}

template <typename T>
Parameter<double> to_double(const Parameter<T>& p) {
    return {p.name, p.value.template cast<double>(), p.grad.template cast<double>(), p.fan_in, p.init_gain};
}

} // namespace

// ---- Conv2d ---------------------------------------------------------------------------------

template <typename T>
Conv2d<T>::Conv2d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel, kernels::Padding padding,
                  std::string name)
    : in_channels_(in_channels), out_channels_(out_channels), kernel_(kernel), padding_(padding) {
    if (in_channels == 0 || out_channels == 0 || kernel == 0) {
        throw ShapeError("conv layer needs positive channel counts and kernel size");
    }
    const Shape wshape{out_channels, in_channels, kernel, kernel};
    params_.push_back({name + ".weight", BasicTensor<T>(wshape), BasicTensor<T>(wshape), in_channels * kernel * kernel});
    params_.push_back({name + ".bias", BasicTensor<T>({out_channels}), BasicTensor<T>({out_channels}), 0});
}

template <typename T>
kernels::ConvGeometry Conv2d<T>::geometry(const Shape& input) const {
    if (input.size() != 4) throw ShapeError("conv expects a 4-D input, got " + shape_string(input));
    if (input[1] != in_channels_) {
        throw ShapeError("conv channel mismatch: input has " + std::to_string(input[1]) + " channels, weights expect " +
                         std::to_string(in_channels_));
    }
    return kernels::ConvGeometry::make(input[0], input[1], input[2], input[3], out_channels_, kernel_, padding_);
}

template <typename T>
Shape Conv2d<T>::output_shape(const Shape& input) const {
    const auto g = geometry(input);
    return {g.batch, g.out_channels, g.out_h, g.out_w};
}

template <typename T>
BasicTensor<T> Conv2d<T>::forward(const BasicTensor<T>& input) {
    const auto g = geometry(input.shape());
    BasicTensor<T> out({g.batch, g.out_channels, g.out_h, g.out_w});
    kernels::parallel::conv2d_forward<T>(g, input.data(), params_[0].value.data(), params_[1].value.data(), out.data());
    cached_input_ = input;
    return out;
}

template <typename T>
BasicTensor<T> Conv2d<T>::backward(const BasicTensor<T>& grad_output) {
    require_cache(cached_input_.has_value(), "conv");
    const auto g = geometry(cached_input_->shape());
    require_same_shape(grad_output.shape(), {g.batch, g.out_channels, g.out_h, g.out_w}, "conv backward");
    BasicTensor<T> grad_input;
    if (input_grad_needed_) grad_input = BasicTensor<T>(cached_input_->shape());
    kernels::parallel::conv2d_backward<T>(g, cached_input_->data(), params_[0].value.data(), grad_output.data(),
                                          grad_input.data(), params_[0].grad.data(), params_[1].grad.data());
    return grad_input;
}

template <typename T>
std::unique_ptr<Layer<double>> Conv2d<T>::shadow() const {
    auto copy = std::make_unique<Conv2d<double>>(in_channels_, out_channels_, kernel_, padding_);
    auto params = copy->parameters();
    for (std::size_t i = 0; i < params_.size(); ++i) params[i] = to_double(params_[i]);
    copy->set_input_grad_needed(input_grad_needed_);
    return copy;
}

// ---- AvgPool2x2 -----------------------------------------------------------------------------

template <typename T>
Shape AvgPool2x2<T>::output_shape(const Shape& input) const {
    if (input.size() != 4) throw ShapeError("avgpool expects a 4-D input, got " + shape_string(input));
    if (input[2] % 2 != 0 || input[3] % 2 != 0) {
        throw ShapeError("avgpool needs even spatial dimensions, got " + std::to_string(input[2]) + "x" +
                         std::to_string(input[3]));
    }
    return {input[0], input[1], input[2] / 2, input[3] / 2};
}

template <typename T>
BasicTensor<T> AvgPool2x2<T>::forward(const BasicTensor<T>& input) {
    BasicTensor<T> out(output_shape(input.shape()));
    const auto& s = input.shape();
    kernels::parallel::avgpool2x2_forward<T>(s[0] * s[1], s[2], s[3], input.data(), out.data());
    cached_shape_ = s;
    return out;
}

template <typename T>
BasicTensor<T> AvgPool2x2<T>::backward(const BasicTensor<T>& grad_output) {
    require_cache(cached_shape_.has_value(), "avgpool");
    const auto& s = *cached_shape_;
    require_same_shape(grad_output.shape(), output_shape(s), "avgpool backward");
    BasicTensor<T> grad_input(s);
    kernels::parallel::avgpool2x2_backward<T>(s[0] * s[1], s[2], s[3], grad_output.data(), grad_input.data());
    return grad_input;
}

template <typename T>
std::unique_ptr<Layer<double>> AvgPool2x2<T>::shadow() const {
    return std::make_unique<AvgPool2x2<double>>();
}

// ---- Relu -----------------------------------------------------------------------------------

template <typename T>
BasicTensor<T> Relu<T>::forward(const BasicTensor<T>& input) {
    BasicTensor<T> out(input.shape());
    kernels::parallel::relu_forward<T>(input.data(), out.data());
    cached_input_ = input;
    return out;
}

template <typename T>
BasicTensor<T> Relu<T>::backward(const BasicTensor<T>& grad_output) {
    require_cache(cached_input_.has_value(), "relu");
    require_same_shape(grad_output.shape(), cached_input_->shape(), "relu backward");
    BasicTensor<T> grad_input(grad_output.shape());
    kernels::parallel::relu_backward<T>(cached_input_->data(), grad_output.data(), grad_input.data());
    return grad_input;
}

template <typename T>
std::unique_ptr<Layer<double>> Relu<T>::shadow() const {
    return std::make_unique<Relu<double>>();
}

// ---- FullyConnected -------------------------------------------------------------------------

template <typename T>
FullyConnected<T>::FullyConnected(std::size_t in_dim, std::size_t out_dim, std::string name)
    : in_dim_(in_dim), out_dim_(out_dim) {
    if (in_dim == 0 || out_dim == 0) throw ShapeError("fully-connected layer needs positive dimensions");
    params_.push_back({name + ".weight", BasicTensor<T>({in_dim, out_dim}), BasicTensor<T>({in_dim, out_dim}), in_dim});
    params_.push_back({name + ".bias", BasicTensor<T>({out_dim}), BasicTensor<T>({out_dim}), 0});
}

template <typename T>
Shape FullyConnected<T>::output_shape(const Shape& input) const {
    if (input.size() < 2) throw ShapeError("fully-connected expects at least a 2-D input, got " + shape_string(input));
    const std::size_t features = shape_size(input) / input[0];
    if (features != in_dim_) {
        throw ShapeError("fully-connected dimension mismatch: input has " + std::to_string(features) +
                         " features, weights expect " + std::to_string(in_dim_));
    }
    return {input[0], out_dim_};
}

template <typename T>
BasicTensor<T> FullyConnected<T>::forward(const BasicTensor<T>& input) {
    BasicTensor<T> out(output_shape(input.shape()));
    kernels::parallel::fc_forward<T>(input.dim(0), in_dim_, out_dim_, input.data(), params_[0].value.data(),
                                     params_[1].value.data(), out.data());
    cached_input_ = input;
    return out;
}

template <typename T>
BasicTensor<T> FullyConnected<T>::backward(const BasicTensor<T>& grad_output) {
    require_cache(cached_input_.has_value(), "fully-connected");
    require_same_shape(grad_output.shape(), output_shape(cached_input_->shape()), "fully-connected backward");
    BasicTensor<T> grad_input;
    if (input_grad_needed_) grad_input = BasicTensor<T>(cached_input_->shape());
    kernels::parallel::fc_backward<T>(grad_output.dim(0), in_dim_, out_dim_, cached_input_->data(),
                                      params_[0].value.data(), grad_output.data(), grad_input.data(),
                                      params_[0].grad.data(), params_[1].grad.data());
    return grad_input;
}

template <typename T>
std::unique_ptr<Layer<double>> FullyConnected<T>::shadow() const {
    auto copy = std::make_unique<FullyConnected<double>>(in_dim_, out_dim_);
    auto params = copy->parameters();
    for (std::size_t i = 0; i < params_.size(); ++i) params[i] = to_double(params_[i]);
    copy->set_input_grad_needed(input_grad_needed_);
    return copy;
}

// ---- SoftmaxCrossEntropy --------------------------------------------------------------------

template <typename T>
T SoftmaxCrossEntropy<T>::forward(const BasicTensor<T>& logits, std::span<const int> labels) {
    if (logits.rank() != 2) throw ShapeError("softmax cross-entropy expects [N, classes] logits");
    const std::size_t n = logits.dim(0);
    const std::size_t classes = logits.dim(1);
    if (labels.size() != n) {
        throw ShapeError("softmax cross-entropy: " + std::to_string(labels.size()) + " labels for " +
                         std::to_string(n) + " rows");
    }
    probs_ = BasicTensor<T>(logits.shape());
    labels_.assign(labels.begin(), labels.end());
    T total{};
    for (std::size_t r = 0; r < n; ++r) {
        const int label = labels[r];
        if (label < 0 || static_cast<std::size_t>(label) >= classes) {
            throw DataError("label " + std::to_string(label) + " out of range for " + std::to_string(classes) +
                            " classes");
        }
        const T* z = logits.data().data() + r * classes;
        T* p = probs_.data().data() + r * classes;
        const T zmax = *std::max_element(z, z + classes);
        T denom{};
        for (std::size_t c = 0; c < classes; ++c) denom += std::exp(z[c] - zmax);
        const T log_denom = std::log(denom);
        for (std::size_t c = 0; c < classes; ++c) p[c] = std::exp(z[c] - zmax - log_denom);
        total += log_denom - (z[label] - zmax);
    }
    return total / static_cast<T>(n);
}

template <typename T>
BasicTensor<T> SoftmaxCrossEntropy<T>::backward() const {
    if (probs_.empty()) throw std::logic_error("softmax cross-entropy: backward called before forward");
    BasicTensor<T> grad = probs_;
    const std::size_t n = probs_.dim(0);
    const std::size_t classes = probs_.dim(1);
    const T scale = T(1) / static_cast<T>(n);
    for (std::size_t r = 0; r < n; ++r) {
        grad[r * classes + static_cast<std::size_t>(labels_[r])] -= T(1);
        for (std::size_t c = 0; c < classes; ++c) grad[r * classes + c] *= scale;
    }
    return grad;
}

// ---- Sequential -----------------------------------------------------------------------------

template <typename T>
Layer<T>& Sequential<T>::add(std::unique_ptr<Layer<T>> layer) {
    layers_.push_back(std::move(layer));
    return *layers_.back();
}

template <typename T>
BasicTensor<T> Sequential<T>::forward(const BasicTensor<T>& input) {
    if (layers_.empty()) return input;
    BasicTensor<T> x = layers_.front()->forward(input);
    for (std::size_t i = 1; i < layers_.size(); ++i) x = layers_[i]->forward(x);
    return x;
}

template <typename T>
BasicTensor<T> Sequential<T>::backward(const BasicTensor<T>& grad_output) {
    BasicTensor<T> g = grad_output;
    for (std::size_t i = layers_.size(); i-- > 0;) {
        g = layers_[i]->backward(g);
        if (g.empty()) break;
    }
    return g;
}

template <typename T>
Shape Sequential<T>::output_shape(Shape input) const {
    for (const auto& layer : layers_) input = layer->output_shape(input);
    return input;
}

template <typename T>
std::vector<Parameter<T>*> Sequential<T>::parameters() {
    std::vector<Parameter<T>*> out;
    for (auto& layer : layers_) {
        for (auto& p : layer->parameters()) out.push_back(&p);
    }
    return out;
}

template class Conv2d<float>;
template class Conv2d<double>;
template class AvgPool2x2<float>;
template class AvgPool2x2<double>;
template class Relu<float>;
template class Relu<double>;
template class FullyConnected<float>;
template class FullyConnected<double>;
template class SoftmaxCrossEntropy<float>;
template class SoftmaxCrossEntropy<double>;
template class Sequential<float>;
template class Sequential<double>;

} // namespace printkind
