#include <algorithm>
#include <vector>

#include "printkind/kernels/gemm.hpp"
#include "printkind/kernels/layers.hpp"

namespace printkind::kernels::parallel {
namespace {

// Output positions are processed in column chunks [p0, p1) so the im2col buffer stays cache resident.
struct Span2d {
    std::size_t y, x0, x1; // one output row segment
};

template <typename F>
void for_each_row_segment(const ConvGeometry& g, std::size_t p0, std::size_t p1, F&& f) {
    for (std::size_t p = p0; p < p1;) {
        const std::size_t y = p / g.out_w;
        const std::size_t x0 = p % g.out_w;
        const std::size_t x1 = std::min(g.out_w, x0 + (p1 - p));
        f(Span2d{y, x0, x1}, p - p0);
        p += x1 - x0;
    }
}

// cols[(c, i, j), p - p0] = input[c, y + i - pad_top, x + j - pad_left], zero outside.
template <typename T>
void im2col(const ConvGeometry& g, const T* input, std::size_t p0, std::size_t p1, T* cols) {
    const std::size_t k = g.kernel;
    const std::size_t width = p1 - p0;
    const long long rows = static_cast<long long>(g.patch_size());
#pragma omp parallel for schedule(static)
    for (long long r = 0; r < rows; ++r) {
        const std::size_t c = static_cast<std::size_t>(r) / (k * k);
        const std::size_t i = (static_cast<std::size_t>(r) / k) % k;
        const std::size_t j = static_cast<std::size_t>(r) % k;
        const T* src = input + c * g.in_h * g.in_w;
        T* dst = cols + static_cast<std::size_t>(r) * width;
        const auto shift = static_cast<std::ptrdiff_t>(j) - static_cast<std::ptrdiff_t>(g.pad_left);
        for_each_row_segment(g, p0, p1, [&](Span2d s, std::size_t off) {
            T* row = dst + off - s.x0;
            const auto iy = static_cast<std::ptrdiff_t>(s.y + i) - static_cast<std::ptrdiff_t>(g.pad_top);
            const auto x0 = static_cast<std::ptrdiff_t>(s.x0), x1 = static_cast<std::ptrdiff_t>(s.x1);
            if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.in_h)) {
                std::fill(row + x0, row + x1, T{});
                return;
            }
            // valid x range: 0 <= x + shift < in_w
            const std::ptrdiff_t lo = std::clamp<std::ptrdiff_t>(-shift, x0, x1);
            const std::ptrdiff_t hi = std::clamp<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(g.in_w) - shift, lo, x1);
            std::fill(row + x0, row + lo, T{});
            const T* in_row = src + iy * static_cast<std::ptrdiff_t>(g.in_w) + shift;
            std::copy(in_row + lo, in_row + hi, row + lo);
            std::fill(row + hi, row + x1, T{});
        });
    }
}

// Scatter-add of column gradients back onto the input. Parallel over input channels; within a
// channel the (i, j, y, x) visiting order is fixed.
template <typename T>
void col2im(const ConvGeometry& g, const T* cols, std::size_t p0, std::size_t p1, T* grad_input) {
    const std::size_t k = g.kernel;
    const std::size_t width = p1 - p0;
    const long long channels = static_cast<long long>(g.in_channels);
#pragma omp parallel for schedule(static)
    for (long long cc = 0; cc < channels; ++cc) {
        const auto c = static_cast<std::size_t>(cc);
        T* dst = grad_input + c * g.in_h * g.in_w;
        for (std::size_t i = 0; i < k; ++i) {
            for (std::size_t j = 0; j < k; ++j) {
                const T* src = cols + ((c * k + i) * k + j) * width;
                const auto shift = static_cast<std::ptrdiff_t>(j) - static_cast<std::ptrdiff_t>(g.pad_left);
                for_each_row_segment(g, p0, p1, [&](Span2d s, std::size_t off) {
                    const auto iy = static_cast<std::ptrdiff_t>(s.y + i) - static_cast<std::ptrdiff_t>(g.pad_top);
                    if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.in_h)) return;
                    const auto x0 = static_cast<std::ptrdiff_t>(s.x0), x1 = static_cast<std::ptrdiff_t>(s.x1);
                    const std::ptrdiff_t lo = std::clamp<std::ptrdiff_t>(-shift, x0, x1);
                    const std::ptrdiff_t hi =
                        std::clamp<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(g.in_w) - shift, lo, x1);
                    T* d = dst + iy * static_cast<std::ptrdiff_t>(g.in_w) + shift;
                    const T* sp = src + off - s.x0;
#pragma omp simd
                    for (std::ptrdiff_t x = lo; x < hi; ++x) d[x] += sp[x];
                });
            }
        }
    }
}

// Columns per chunk: about 1 MiB of im2col data, rounded to whole 32-column groups.
template <typename T>
std::size_t chunk_columns(std::size_t patch, std::size_t plane) {
    const std::size_t budget = (std::size_t{1} << 20) / sizeof(T);
    std::size_t cols = std::max<std::size_t>(32, budget / std::max<std::size_t>(patch, 1) / 32 * 32);
    return std::min(cols, plane);
}

template <typename T>
std::vector<T>& scratch(int slot) {
    thread_local std::vector<T> buffers[3];
    return buffers[slot];
}

} // namespace

template <typename T>
void conv2d_forward(const ConvGeometry& g, std::span<const T> input, std::span<const T> weights,
                    std::span<const T> bias, std::span<T> output) {
    const std::size_t plane = g.out_h * g.out_w;
    const std::size_t patch = g.patch_size();
    const std::size_t chunk = chunk_columns<T>(patch, plane);
    auto& cols = scratch<T>(0);
    cols.resize(patch * chunk);
    for (std::size_t n = 0; n < g.batch; ++n) {
        const T* in = input.data() + n * g.in_channels * g.in_h * g.in_w;
        T* out = output.data() + n * g.out_channels * plane;
        for (std::size_t p0 = 0; p0 < plane; p0 += chunk) {
            const std::size_t p1 = std::min(plane, p0 + chunk);
            im2col(g, in, p0, p1, cols.data());
            gemm<T>(g.out_channels, p1 - p0, patch, row_major(weights.data(), patch),
                    row_major<T>(cols.data(), p1 - p0), out + p0, plane, false);
        }
        const long long oc = static_cast<long long>(g.out_channels);
#pragma omp parallel for schedule(static)
        for (long long o = 0; o < oc; ++o) {
            T* row = out + static_cast<std::size_t>(o) * plane;
            const T b = bias[static_cast<std::size_t>(o)];
#pragma omp simd
            for (std::size_t p = 0; p < plane; ++p) row[p] += b;
        }
    }
}

template <typename T>
void conv2d_backward(const ConvGeometry& g, std::span<const T> input, std::span<const T> weights,
                     std::span<const T> grad_output, std::span<T> grad_input, std::span<T> grad_weights,
                     std::span<T> grad_bias) {
    const std::size_t plane = g.out_h * g.out_w;
    const std::size_t patch = g.patch_size();
    const std::size_t ko = g.out_channels;
    const std::size_t chunk = chunk_columns<T>(patch, plane);
    auto& cols = scratch<T>(0);
    auto& grad_cols = scratch<T>(1);
    auto& grad_wt = scratch<T>(2); // dW^T, [patch, ko]
    cols.resize(patch * chunk);
    grad_cols.resize(grad_input.empty() ? 0 : patch * chunk);
    grad_wt.resize(patch * ko);
    std::fill(grad_bias.begin(), grad_bias.end(), T{});
    if (!grad_input.empty()) std::fill(grad_input.begin(), grad_input.end(), T{});
    const MatrixView<T> weights_t = row_major(weights.data(), patch).transposed();

    bool first = true;
    for (std::size_t n = 0; n < g.batch; ++n) {
        const T* in = input.data() + n * g.in_channels * g.in_h * g.in_w;
        const T* go = grad_output.data() + n * ko * plane;
        const long long oc = static_cast<long long>(ko);
#pragma omp parallel for schedule(static)
        for (long long o = 0; o < oc; ++o) {
            const T* row = go + static_cast<std::size_t>(o) * plane;
            T sum{};
            for (std::size_t p = 0; p < plane; ++p) sum += row[p];
            grad_bias[static_cast<std::size_t>(o)] += sum;
        }
        for (std::size_t p0 = 0; p0 < plane; p0 += chunk) {
            const std::size_t p1 = std::min(plane, p0 + chunk);
            const std::size_t width = p1 - p0;
            // dY[:, p0:p1] seen as [width, ko]
            const MatrixView<T> go_t{go + p0, 1, static_cast<std::ptrdiff_t>(plane)};
            im2col(g, in, p0, p1, cols.data());
            // dW^T[patch, ko] (+)= cols[patch, width] * dY^T[width, ko]
            gemm<T>(patch, ko, width, row_major<T>(cols.data(), width), go_t, grad_wt.data(), ko, !first);
            first = false;
            if (!grad_input.empty()) {
                // dcols[patch, width] = W^T[patch, ko] * dY[ko, p0:p1]
                gemm<T>(patch, width, ko, weights_t, {go + p0, static_cast<std::ptrdiff_t>(plane), 1},
                        grad_cols.data(), width, false);
                col2im(g, grad_cols.data(), p0, p1, grad_input.data() + n * g.in_channels * g.in_h * g.in_w);
            }
        }
    }
    const long long oc = static_cast<long long>(ko);
#pragma omp parallel for schedule(static)
    for (long long o = 0; o < oc; ++o) {
        for (std::size_t q = 0; q < patch; ++q)
            grad_weights[static_cast<std::size_t>(o) * patch + q] = grad_wt[q * ko + static_cast<std::size_t>(o)];
    }
}

template <typename T>
void avgpool2x2_forward(std::size_t planes, std::size_t h, std::size_t w, std::span<const T> input,
                        std::span<T> output) {
    const std::size_t oh = h / 2;
    const std::size_t ow = w / 2;
#pragma omp parallel for schedule(static)
    for (long long pp = 0; pp < static_cast<long long>(planes); ++pp) {
        const auto p = static_cast<std::size_t>(pp);
        const T* in = input.data() + p * h * w;
        T* out = output.data() + p * oh * ow;
        for (std::size_t y = 0; y < oh; ++y) {
            const T* r0 = in + 2 * y * w;
            const T* r1 = r0 + w;
            for (std::size_t x = 0; x < ow; ++x) {
                out[y * ow + x] = (r0[2 * x] + r0[2 * x + 1] + r1[2 * x] + r1[2 * x + 1]) * T(0.25);
            }
        }
    }
}

template <typename T>
void avgpool2x2_backward(std::size_t planes, std::size_t h, std::size_t w, std::span<const T> grad_output,
                         std::span<T> grad_input) {
    const std::size_t oh = h / 2;
    const std::size_t ow = w / 2;
#pragma omp parallel for schedule(static)
    for (long long pp = 0; pp < static_cast<long long>(planes); ++pp) {
        const auto p = static_cast<std::size_t>(pp);
        const T* go = grad_output.data() + p * oh * ow;
        T* gi = grad_input.data() + p * h * w;
        for (std::size_t y = 0; y < h; ++y) {
            const T* src = go + (y / 2) * ow;
            T* dst = gi + y * w;
            for (std::size_t x = 0; x < w; ++x) dst[x] = src[x / 2] * T(0.25);
        }
    }
}

template <typename T>
void relu_forward(std::span<const T> input, std::span<T> output) {
    const long long n = static_cast<long long>(input.size());
#pragma omp parallel for simd schedule(static)
    for (long long i = 0; i < n; ++i) output[i] = input[i] > T{} ? input[i] : T{};
}

template <typename T>
void relu_backward(std::span<const T> input, std::span<const T> grad_output, std::span<T> grad_input) {
    const long long n = static_cast<long long>(input.size());
#pragma omp parallel for simd schedule(static)
    for (long long i = 0; i < n; ++i) grad_input[i] = input[i] > T{} ? grad_output[i] : T{};
}

template <typename T>
void fc_forward(std::size_t rows, std::size_t in_dim, std::size_t out_dim, std::span<const T> input,
                std::span<const T> weights, std::span<const T> bias, std::span<T> output) {
    gemm<T>(rows, out_dim, in_dim, row_major(input.data(), in_dim), row_major(weights.data(), out_dim),
            output.data(), out_dim, false);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t m = 0; m < out_dim; ++m) output[r * out_dim + m] += bias[m];
    }
}

template <typename T>
void fc_backward(std::size_t rows, std::size_t in_dim, std::size_t out_dim, std::span<const T> input,
                 std::span<const T> weights, std::span<const T> grad_output, std::span<T> grad_input,
                 std::span<T> grad_weights, std::span<T> grad_bias) {
    const auto go = row_major(grad_output.data(), out_dim);
    gemm<T>(in_dim, out_dim, rows, row_major(input.data(), in_dim).transposed(), go, grad_weights.data(), out_dim,
            false);
    if (!grad_input.empty()) {
        gemm<T>(rows, in_dim, out_dim, go, row_major(weights.data(), out_dim).transposed(), grad_input.data(), in_dim,
                false);
    }
    std::fill(grad_bias.begin(), grad_bias.end(), T{});
    for (std::size_t r = 0; r < rows; ++r) {
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

} // namespace printkind::kernels::parallel
