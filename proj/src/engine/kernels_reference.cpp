#include <algorithm>

#include "printkind/errors.hpp"
#include "printkind/kernels/layers.hpp"

namespace printkind::kernels {

ConvGeometry ConvGeometry::make(std::size_t batch, std::size_t in_channels, std::size_t in_h, std::size_t in_w,
                                std::size_t out_channels, std::size_t kernel, Padding padding) {
    if (kernel == 0) throw ShapeError("convolution kernel size must be positive");
    ConvGeometry g;
    g.batch = batch;
    g.in_channels = in_channels;
    g.in_h = in_h;
    g.in_w = in_w;
    g.out_channels = out_channels;
    g.kernel = kernel;
    if (padding == Padding::same) {
        g.pad_top = g.pad_left = (kernel - 1) / 2;
        g.out_h = in_h;
        g.out_w = in_w;
    } else {
        if (kernel > in_h || kernel > in_w) {
            throw ShapeError("kernel " + std::to_string(kernel) + " larger than padded input " +
                             std::to_string(in_h) + "x" + std::to_string(in_w));
        }
        g.out_h = in_h - kernel + 1;
        g.out_w = in_w - kernel + 1;
    }
    return g;
}

namespace reference {

template <typename T>
void conv2d_forward(const ConvGeometry& g, std::span<const T> input, std::span<const T> weights,
                    std::span<const T> bias, std::span<T> output) {
    const auto k = g.kernel;
    for (std::size_t n = 0; n < g.batch; ++n) {
        for (std::size_t o = 0; o < g.out_channels; ++o) {
            for (std::size_t y = 0; y < g.out_h; ++y) {
                for (std::size_t x = 0; x < g.out_w; ++x) {
                    T sum{};
                    for (std::size_t c = 0; c < g.in_channels; ++c) {
                        for (std::size_t i = 0; i < k; ++i) {
                            const auto iy = static_cast<std::ptrdiff_t>(y + i) - static_cast<std::ptrdiff_t>(g.pad_top);
                            if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.in_h)) continue;
                            for (std::size_t j = 0; j < k; ++j) {
                                const auto ix =
                                    static_cast<std::ptrdiff_t>(x + j) - static_cast<std::ptrdiff_t>(g.pad_left);
                                if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(g.in_w)) continue;
                                sum += weights[((o * g.in_channels + c) * k + i) * k + j] *
                                       input[((n * g.in_channels + c) * g.in_h + iy) * g.in_w + ix];
                            }
                        }
                    }
                    output[((n * g.out_channels + o) * g.out_h + y) * g.out_w + x] = sum + bias[o];
                }
            }
        }
    }
}

template <typename T>
void conv2d_backward(const ConvGeometry& g, std::span<const T> input, std::span<const T> weights,
                     std::span<const T> grad_output, std::span<T> grad_input, std::span<T> grad_weights,
                     std::span<T> grad_bias) {
    const auto k = g.kernel;
    std::fill(grad_weights.begin(), grad_weights.end(), T{});
    std::fill(grad_bias.begin(), grad_bias.end(), T{});
    std::fill(grad_input.begin(), grad_input.end(), T{});
    for (std::size_t n = 0; n < g.batch; ++n) {
        for (std::size_t o = 0; o < g.out_channels; ++o) {
            for (std::size_t y = 0; y < g.out_h; ++y) {
                for (std::size_t x = 0; x < g.out_w; ++x) {
                    const T go = grad_output[((n * g.out_channels + o) * g.out_h + y) * g.out_w + x];
                    grad_bias[o] += go;
                    for (std::size_t c = 0; c < g.in_channels; ++c) {
                        for (std::size_t i = 0; i < k; ++i) {
                            const auto iy = static_cast<std::ptrdiff_t>(y + i) - static_cast<std::ptrdiff_t>(g.pad_top);
                            if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.in_h)) continue;
                            for (std::size_t j = 0; j < k; ++j) {
                                const auto ix =
                                    static_cast<std::ptrdiff_t>(x + j) - static_cast<std::ptrdiff_t>(g.pad_left);
                                if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(g.in_w)) continue;
                                const std::size_t wi = ((o * g.in_channels + c) * k + i) * k + j;
                                const std::size_t xi = ((n * g.in_channels + c) * g.in_h + iy) * g.in_w + ix;
                                grad_weights[wi] += go * input[xi];
                                if (!grad_input.empty()) grad_input[xi] += go * weights[wi];
                            }
                        }
                    }
                }
            }
        }
    }
}

template <typename T>
void avgpool2x2_forward(std::size_t planes, std::size_t h, std::size_t w, std::span<const T> input,
                        std::span<T> output) {
    const std::size_t oh = h / 2;
    const std::size_t ow = w / 2;
    for (std::size_t p = 0; p < planes; ++p) {
        const T* in = input.data() + p * h * w;
        T* out = output.data() + p * oh * ow;
        for (std::size_t y = 0; y < oh; ++y) {
            for (std::size_t x = 0; x < ow; ++x) {
                const T s = in[2 * y * w + 2 * x] + in[2 * y * w + 2 * x + 1] + in[(2 * y + 1) * w + 2 * x] +
                            in[(2 * y + 1) * w + 2 * x + 1];
                out[y * ow + x] = s * T(0.25);
            }
        }
    }
}

template <typename T>
void avgpool2x2_backward(std::size_t planes, std::size_t h, std::size_t w, std::span<const T> grad_output,
                         std::span<T> grad_input) {
    const std::size_t oh = h / 2;
    const std::size_t ow = w / 2;
    for (std::size_t p = 0; p < planes; ++p) {
        const T* go = grad_output.data() + p * oh * ow;
        T* gi = grad_input.data() + p * h * w;
        for (std::size_t y = 0; y < h; ++y) {
            for (std::size_t x = 0; x < w; ++x) gi[y * w + x] = go[(y / 2) * ow + x / 2] * T(0.25);
        }
    }
}

template <typename T>
void relu_forward(std::span<const T> input, std::span<T> output) {
    for (std::size_t i = 0; i < input.size(); ++i) output[i] = input[i] > T{} ? input[i] : T{};
}

template <typename T>
void relu_backward(std::span<const T> input, std::span<const T> grad_output, std::span<T> grad_input) {
    for (std::size_t i = 0; i < input.size(); ++i) grad_input[i] = input[i] > T{} ? grad_output[i] : T{};
}

template <typename T>
void fc_forward(std::size_t rows, std::size_t in_dim, std::size_t out_dim, std::span<const T> input,
                std::span<const T> weights, std::span<const T> bias, std::span<T> output) {
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t m = 0; m < out_dim; ++m) {
            T sum{};
            for (std::size_t d = 0; d < in_dim; ++d) sum += input[r * in_dim + d] * weights[d * out_dim + m];
            output[r * out_dim + m] = sum + bias[m];
        }
    }
}

template <typename T>
void fc_backward(std::size_t rows, std::size_t in_dim, std::size_t out_dim, std::span<const T> input,
                 std::span<const T> weights, std::span<const T> grad_output, std::span<T> grad_input,
                 std::span<T> grad_weights, std::span<T> grad_bias) {
    std::fill(grad_weights.begin(), grad_weights.end(), T{});
    std::fill(grad_bias.begin(), grad_bias.end(), T{});
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t d = 0; d < in_dim; ++d) {
            T sum{};
            for (std::size_t m = 0; m < out_dim; ++m) {
                const T go = grad_output[r * out_dim + m];
                sum += go * weights[d * out_dim + m];
                grad_weights[d * out_dim + m] += input[r * in_dim + d] * go;
            }
            if (!grad_input.empty()) grad_input[r * in_dim + d] = sum;
        }
        for (std::size_t m = 0; m < out_dim; ++m) grad_bias[m] += grad_output[r * out_dim + m];
    }
}

#define PRINTKIND_INSTANTIATE(T)                                                                                  \
    template void conv2d_forward<T>(const ConvGeometry&, std::span<const T>, std::span<const T>,               \
                                    std::span<const T>, std::span<T>);                                          \
    template void conv2d_backward<T>(const ConvGeometry&, std::span<const T>, std::span<const T>,              \
                                     std::span<const T>, std::span<T>, std::span<T>, std::span<T>);             \
    template void avgpool2x2_forward<T>(std::size_t, std::size_t, std::size_t, std::span<const T>, std::span<T>); \
    template void avgpool2x2_backward<T>(std::size_t, std::size_t, std::size_t, std::span<const T>,            \
                                         std::span<T>);                                                         \
    template void relu_forward<T>(std::span<const T>, std::span<T>);                                            \
    template void relu_backward<T>(std::span<const T>, std::span<const T>, std::span<T>);                       \
    template void fc_forward<T>(std::size_t, std::size_t, std::size_t, std::span<const T>, std::span<const T>, \
                                std::span<const T>, std::span<T>);                                              \
    template void fc_backward<T>(std::size_t, std::size_t, std::size_t, std::span<const T>, std::span<const T>, \
                                 std::span<const T>, std::span<T>, std::span<T>, std::span<T>);

PRINTKIND_INSTANTIATE(float)
PRINTKIND_INSTANTIATE(double)

} // namespace reference
} // namespace printkind::kernels
