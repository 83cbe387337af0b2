#pragma once

#include <cstddef>
#include <span>

namespace printkind::kernels {

enum class Padding { same, valid };

// Stride-1 square-kernel convolution geometry. `same` pads floor((k-1)/2) on the top/left and
// ceil((k-1)/2) on the bottom/right so even kernels also preserve the spatial size.
struct ConvGeometry {
    std::size_t batch = 0;
    std::size_t in_channels = 0;
    std::size_t in_h = 0;
    std::size_t in_w = 0;
    std::size_t out_channels = 0;
    std::size_t kernel = 0;
    std::size_t pad_top = 0;
    std::size_t pad_left = 0;
    std::size_t out_h = 0;
    std::size_t out_w = 0;

    static ConvGeometry make(std::size_t batch, std::size_t in_channels, std::size_t in_h, std::size_t in_w,
                             std::size_t out_channels, std::size_t kernel, Padding padding);

    std::size_t patch_size() const { return in_channels * kernel * kernel; }
    std::size_t input_size() const { return batch * in_channels * in_h * in_w; }
    std::size_t output_size() const { return batch * out_channels * out_h * out_w; }
    std::size_t weight_size() const { return out_channels * patch_size(); }
};

// Plain serial loops. These are the readable definitions of each kernel.
namespace reference {

template <typename T>
void conv2d_forward(const ConvGeometry& g, std::span<const T> input, std::span<const T> weights,
                    std::span<const T> bias, std::span<T> output);

// grad_input may be empty to skip the input gradient.
template <typename T>
void conv2d_backward(const ConvGeometry& g, std::span<const T> input, std::span<const T> weights,
                     std::span<const T> grad_output, std::span<T> grad_input, std::span<T> grad_weights,
                     std::span<T> grad_bias);

template <typename T>
void avgpool2x2_forward(std::size_t planes, std::size_t h, std::size_t w, std::span<const T> input,
                        std::span<T> output);

template <typename T>
void avgpool2x2_backward(std::size_t planes, std::size_t h, std::size_t w, std::span<const T> grad_output,
                         std::span<T> grad_input);

template <typename T>
void relu_forward(std::span<const T> input, std::span<T> output);

template <typename T>
void relu_backward(std::span<const T> input, std::span<const T> grad_output, std::span<T> grad_input);

// input [rows x in_dim], weights [in_dim x out_dim], output [rows x out_dim]
template <typename T>
void fc_forward(std::size_t rows, std::size_t in_dim, std::size_t out_dim, std::span<const T> input,
                std::span<const T> weights, std::span<const T> bias, std::span<T> output);

template <typename T>
void fc_backward(std::size_t rows, std::size_t in_dim, std::size_t out_dim, std::span<const T> input,
                 std::span<const T> weights, std::span<const T> grad_output, std::span<T> grad_input,
                 std::span<T> grad_weights, std::span<T> grad_bias);

} // namespace reference

// OpenMP kernels used by the engine. Convolutions lower to im2col + gemm per sample; every
// output element has a single writer and a fixed accumulation order, so results are
// bit-identical for any thread count.
namespace parallel {

template <typename T>
void conv2d_forward(const ConvGeometry& g, std::span<const T> input, std::span<const T> weights,
                    std::span<const T> bias, std::span<T> output);

template <typename T>
void conv2d_backward(const ConvGeometry& g, std::span<const T> input, std::span<const T> weights,
                     std::span<const T> grad_output, std::span<T> grad_input, std::span<T> grad_weights,
                     std::span<T> grad_bias);

template <typename T>
void avgpool2x2_forward(std::size_t planes, std::size_t h, std::size_t w, std::span<const T> input,
                        std::span<T> output);

template <typename T>
void avgpool2x2_backward(std::size_t planes, std::size_t h, std::size_t w, std::span<const T> grad_output,
                         std::span<T> grad_input);

template <typename T>
void relu_forward(std::span<const T> input, std::span<T> output);

template <typename T>
void relu_backward(std::span<const T> input, std::span<const T> grad_output, std::span<T> grad_input);

template <typename T>
void fc_forward(std::size_t rows, std::size_t in_dim, std::size_t out_dim, std::span<const T> input,
                std::span<const T> weights, std::span<const T> bias, std::span<T> output);

template <typename T>
void fc_backward(std::size_t rows, std::size_t in_dim, std::size_t out_dim, std::span<const T> input,
                 std::span<const T> weights, std::span<const T> grad_output, std::span<T> grad_input,
                 std::span<T> grad_weights, std::span<T> grad_bias);

} // namespace parallel

} // namespace printkind::kernels
