#pragma once

#include <cstddef>

namespace printkind::kernels {

// Read-only strided matrix view: element (i, j) lives at data[i * row_stride + j * col_stride].
// Transposes are expressed by swapping the strides.
template <typename T>
struct MatrixView {
    const T* data;
    std::ptrdiff_t row_stride;
    std::ptrdiff_t col_stride;

    const T& operator()(std::size_t i, std::size_t j) const {
        return data[static_cast<std::ptrdiff_t>(i) * row_stride + static_cast<std::ptrdiff_t>(j) * col_stride];
    }

    MatrixView transposed() const { return {data, col_stride, row_stride}; }
};

template <typename T>
MatrixView<T> row_major(const T* data, std::size_t cols) {
    return {data, static_cast<std::ptrdiff_t>(cols), 1};
}

// C[m x n] (row-major, leading dimension ldc) = A[m x k] * B[k x n], or C += A * B when
// `accumulate` is set.
//
// OpenMP-parallel over output tiles. Every element of C is accumulated by exactly one
// thread, in increasing k order, so the result does not depend on the thread count.
template <typename T>
void gemm(std::size_t m, std::size_t n, std::size_t k, MatrixView<T> a, MatrixView<T> b, T* c,
          std::size_t ldc, bool accumulate);

// Serial textbook triple loop with the same k-ordered accumulation; kept for tests and
// benchmarks.
template <typename T>
void gemm_reference(std::size_t m, std::size_t n, std::size_t k, MatrixView<T> a, MatrixView<T> b, T* c,
                    std::size_t ldc, bool accumulate);

} // namespace printkind::kernels
