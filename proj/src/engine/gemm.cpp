#include "printkind/kernels/gemm.hpp"

#include <algorithm>
#include <cstdlib>
#include <memory>
#include <new>
#include <vector>

#if defined(__AVX512F__)
#include <immintrin.h>
#endif

namespace printkind::kernels {
namespace {

// Register tile: MR rows by two 64-byte vectors of columns.
template <typename T>
struct Blocking {
    static constexpr std::size_t mr = 8;
    static constexpr std::size_t nr = 2 * 64 / sizeof(T);
    static constexpr std::size_t kc = 256;
    static constexpr std::size_t mc = 16 * mr;
    static constexpr std::size_t nc = 8 * nr;
};

template <typename T>
struct AlignedBuffer {
    struct Free {
        void operator()(T* p) const { ::operator delete[](p, std::align_val_t{64}); }
    };
    std::unique_ptr<T[], Free> ptr;
    std::size_t capacity = 0;

    T* reserve(std::size_t count) {
        if (count > capacity) {
            ptr.reset(static_cast<T*>(::operator new[](count * sizeof(T), std::align_val_t{64})));
            capacity = count;
        }
        return ptr.get();
    }
};

// Packs A[ic:ic+mc, pc:pc+kc] into MR-row panels laid out k-major, zero-padding the tail panel.
template <typename T>
void pack_a_panel(MatrixView<T> a, std::size_t row0, std::size_t rows, std::size_t col0, std::size_t kc, T* out) {
    constexpr std::size_t mr = Blocking<T>::mr;
    for (std::size_t p = 0; p < kc; ++p) {
        for (std::size_t i = 0; i < mr; ++i) {
            out[p * mr + i] = i < rows ? a(row0 + i, col0 + p) : T{};
        }
    }
}

template <typename T>
void pack_b_panel(MatrixView<T> b, std::size_t row0, std::size_t kc, std::size_t col0, std::size_t cols, T* out) {
    constexpr std::size_t nr = Blocking<T>::nr;
    if (cols == nr && b.col_stride == 1) {
        for (std::size_t p = 0; p < kc; ++p) {
            const T* src = &b(row0 + p, col0);
            std::copy(src, src + nr, out + p * nr);
        }
        return;
    }
    for (std::size_t p = 0; p < kc; ++p) {
        for (std::size_t j = 0; j < nr; ++j) {
            out[p * nr + j] = j < cols ? b(row0 + p, col0 + j) : T{};
        }
    }
}

template <typename T>
inline void micro_kernel(std::size_t kc, const T* __restrict a, const T* __restrict b, T* __restrict c,
                         std::size_t ldc, bool load) {
    constexpr std::size_t mr = Blocking<T>::mr;
    constexpr std::size_t nr = Blocking<T>::nr;
    alignas(64) T acc[mr][nr];
    for (std::size_t i = 0; i < mr; ++i) {
        for (std::size_t j = 0; j < nr; ++j) acc[i][j] = load ? c[i * ldc + j] : T{};
    }
    for (std::size_t p = 0; p < kc; ++p) {
        const T* bp = b + p * nr;
        const T* ap = a + p * mr;
        for (std::size_t i = 0; i < mr; ++i) {
            const T ai = ap[i];
#pragma omp simd
            for (std::size_t j = 0; j < nr; ++j) acc[i][j] += ai * bp[j];
        }
    }
    for (std::size_t i = 0; i < mr; ++i) {
        for (std::size_t j = 0; j < nr; ++j) c[i * ldc + j] = acc[i][j];
    }
}

#if defined(__AVX512F__)
// 8 x 32 float tile held in 16 zmm accumulators.
template <>
inline void micro_kernel<float>(std::size_t kc, const float* __restrict a, const float* __restrict b,
                                float* __restrict c, std::size_t ldc, bool load) {
    static_assert(Blocking<float>::mr == 8 && Blocking<float>::nr == 32);
    __m512 c00, c01, c10, c11, c20, c21, c30, c31, c40, c41, c50, c51, c60, c61, c70, c71;
    if (load) {
        c00 = _mm512_loadu_ps(c + 0 * ldc), c01 = _mm512_loadu_ps(c + 0 * ldc + 16);
        c10 = _mm512_loadu_ps(c + 1 * ldc), c11 = _mm512_loadu_ps(c + 1 * ldc + 16);
        c20 = _mm512_loadu_ps(c + 2 * ldc), c21 = _mm512_loadu_ps(c + 2 * ldc + 16);
        c30 = _mm512_loadu_ps(c + 3 * ldc), c31 = _mm512_loadu_ps(c + 3 * ldc + 16);
        c40 = _mm512_loadu_ps(c + 4 * ldc), c41 = _mm512_loadu_ps(c + 4 * ldc + 16);
        c50 = _mm512_loadu_ps(c + 5 * ldc), c51 = _mm512_loadu_ps(c + 5 * ldc + 16);
        c60 = _mm512_loadu_ps(c + 6 * ldc), c61 = _mm512_loadu_ps(c + 6 * ldc + 16);
        c70 = _mm512_loadu_ps(c + 7 * ldc), c71 = _mm512_loadu_ps(c + 7 * ldc + 16);
    } else {
        c00 = c01 = c10 = c11 = c20 = c21 = c30 = c31 = _mm512_setzero_ps();
        c40 = c41 = c50 = c51 = c60 = c61 = c70 = c71 = _mm512_setzero_ps();
    }
    for (std::size_t p = 0; p < kc; ++p) {
        const __m512 b0 = _mm512_load_ps(b + p * 32);
        const __m512 b1 = _mm512_load_ps(b + p * 32 + 16);
        const float* ap = a + p * 8;
        __m512 av = _mm512_set1_ps(ap[0]);
        c00 = _mm512_fmadd_ps(av, b0, c00), c01 = _mm512_fmadd_ps(av, b1, c01);
        av = _mm512_set1_ps(ap[1]);
        c10 = _mm512_fmadd_ps(av, b0, c10), c11 = _mm512_fmadd_ps(av, b1, c11);
        av = _mm512_set1_ps(ap[2]);
        c20 = _mm512_fmadd_ps(av, b0, c20), c21 = _mm512_fmadd_ps(av, b1, c21);
        av = _mm512_set1_ps(ap[3]);
        c30 = _mm512_fmadd_ps(av, b0, c30), c31 = _mm512_fmadd_ps(av, b1, c31);
        av = _mm512_set1_ps(ap[4]);
        c40 = _mm512_fmadd_ps(av, b0, c40), c41 = _mm512_fmadd_ps(av, b1, c41);
        av = _mm512_set1_ps(ap[5]);
        c50 = _mm512_fmadd_ps(av, b0, c50), c51 = _mm512_fmadd_ps(av, b1, c51);
        av = _mm512_set1_ps(ap[6]);
        c60 = _mm512_fmadd_ps(av, b0, c60), c61 = _mm512_fmadd_ps(av, b1, c61);
        av = _mm512_set1_ps(ap[7]);
        c70 = _mm512_fmadd_ps(av, b0, c70), c71 = _mm512_fmadd_ps(av, b1, c71);
    }
    _mm512_storeu_ps(c + 0 * ldc, c00), _mm512_storeu_ps(c + 0 * ldc + 16, c01);
    _mm512_storeu_ps(c + 1 * ldc, c10), _mm512_storeu_ps(c + 1 * ldc + 16, c11);
    _mm512_storeu_ps(c + 2 * ldc, c20), _mm512_storeu_ps(c + 2 * ldc + 16, c21);
    _mm512_storeu_ps(c + 3 * ldc, c30), _mm512_storeu_ps(c + 3 * ldc + 16, c31);
    _mm512_storeu_ps(c + 4 * ldc, c40), _mm512_storeu_ps(c + 4 * ldc + 16, c41);
    _mm512_storeu_ps(c + 5 * ldc, c50), _mm512_storeu_ps(c + 5 * ldc + 16, c51);
    _mm512_storeu_ps(c + 6 * ldc, c60), _mm512_storeu_ps(c + 6 * ldc + 16, c61);
    _mm512_storeu_ps(c + 7 * ldc, c70), _mm512_storeu_ps(c + 7 * ldc + 16, c71);
}
#endif

} // namespace

template <typename T>
void gemm(std::size_t m, std::size_t n, std::size_t k, MatrixView<T> a, MatrixView<T> b, T* c, std::size_t ldc,
          bool accumulate) {
    using B = Blocking<T>;
    constexpr std::size_t mr = B::mr;
    constexpr std::size_t nr = B::nr;
    if (m == 0 || n == 0) return;
    if (k == 0) {
        if (!accumulate) {
            for (std::size_t i = 0; i < m; ++i) std::fill(c + i * ldc, c + i * ldc + n, T{});
        }
        return;
    }

    thread_local AlignedBuffer<T> a_buf;
    thread_local AlignedBuffer<T> b_buf;
    T* a_pack = a_buf.reserve(B::mc * B::kc);
    T* b_pack = b_buf.reserve(B::nc * B::kc);

    for (std::size_t jc = 0; jc < n; jc += B::nc) {
        const std::size_t nc = std::min(B::nc, n - jc);
        const std::size_t n_panels = (nc + nr - 1) / nr;
        for (std::size_t pc = 0; pc < k; pc += B::kc) {
            const std::size_t kc = std::min(B::kc, k - pc);
            const bool load = accumulate || pc > 0;
            for (std::size_t ic = 0; ic < m; ic += B::mc) {
                const std::size_t mc = std::min(B::mc, m - ic);
                const std::size_t m_panels = (mc + mr - 1) / mr;
                const long long tiles = static_cast<long long>(m_panels * n_panels);
#pragma omp parallel
                {
                    if (ic == 0) {
#pragma omp for schedule(static)
                        for (long long jp = 0; jp < static_cast<long long>(n_panels); ++jp) {
                            const std::size_t j0 = static_cast<std::size_t>(jp) * nr;
                            pack_b_panel(b, pc, kc, jc + j0, std::min(nr, nc - j0), b_pack + j0 * kc);
                        }
                    }
#pragma omp for schedule(static)
                    for (long long ip = 0; ip < static_cast<long long>(m_panels); ++ip) {
                        const std::size_t i0 = static_cast<std::size_t>(ip) * mr;
                        pack_a_panel(a, ic + i0, std::min(mr, mc - i0), pc, kc, a_pack + i0 * kc);
                    }
#pragma omp for schedule(static)
                    for (long long t = 0; t < tiles; ++t) {
                        const std::size_t jp = static_cast<std::size_t>(t) / m_panels;
                        const std::size_t ip = static_cast<std::size_t>(t) % m_panels;
                        const std::size_t i0 = ip * mr;
                        const std::size_t j0 = jp * nr;
                        const std::size_t rows = std::min(mr, mc - i0);
                        const std::size_t cols = std::min(nr, nc - j0);
                        T* c_tile = c + (ic + i0) * ldc + jc + j0;
                        if (rows == mr && cols == nr) {
                            micro_kernel<T>(kc, a_pack + i0 * kc, b_pack + j0 * kc, c_tile, ldc, load);
                        } else {
                            alignas(64) T tmp[mr * nr] = {};
                            if (load) {
                                for (std::size_t i = 0; i < rows; ++i) {
                                    std::copy(c_tile + i * ldc, c_tile + i * ldc + cols, tmp + i * nr);
                                }
                            }
                            micro_kernel<T>(kc, a_pack + i0 * kc, b_pack + j0 * kc, tmp, nr, true);
                            for (std::size_t i = 0; i < rows; ++i) {
                                std::copy(tmp + i * nr, tmp + i * nr + cols, c_tile + i * ldc);
                            }
                        }
                    }
                }
            }
        }
    }
}

template <typename T>
void gemm_reference(std::size_t m, std::size_t n, std::size_t k, MatrixView<T> a, MatrixView<T> b, T* c,
                    std::size_t ldc, bool accumulate) {
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            T sum = accumulate ? c[i * ldc + j] : T{};
            for (std::size_t p = 0; p < k; ++p) sum += a(i, p) * b(p, j);
            c[i * ldc + j] = sum;
        }
    }
}

template void gemm<float>(std::size_t, std::size_t, std::size_t, MatrixView<float>, MatrixView<float>, float*,
                          std::size_t, bool);
template void gemm<double>(std::size_t, std::size_t, std::size_t, MatrixView<double>, MatrixView<double>, double*,
                           std::size_t, bool);
template void gemm_reference<float>(std::size_t, std::size_t, std::size_t, MatrixView<float>, MatrixView<float>,
                                    float*, std::size_t, bool);
template void gemm_reference<double>(std::size_t, std::size_t, std::size_t, MatrixView<double>, MatrixView<double>,
                                     double*, std::size_t, bool);

} // namespace printkind::kernels
