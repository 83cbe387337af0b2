#include <omp.h>

#include <cstring>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "printkind/kernels/gemm.hpp"

using namespace printkind::kernels;

namespace {

std::vector<float> random_vector(std::size_t n, std::mt19937& rng) {
    std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
    std::vector<float> v(n);
    for (auto& x : v) x = dist(rng);
    return v;
}

// Restores the OpenMP thread count on scope exit.
struct ThreadScope {
    int saved = omp_get_max_threads();
    explicit ThreadScope(int n) { omp_set_num_threads(n); }
    ~ThreadScope() { omp_set_num_threads(saved); }
};

} // namespace

TEST(Gemm, MatchesTripleLoopOnRandomShapes) {
    std::mt19937 rng(7);
    std::uniform_int_distribution<std::size_t> dim(1, 70);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t m = dim(rng), n = dim(rng), k = dim(rng) * (trial % 5 == 0 ? 6 : 1);
        const bool trans_a = trial % 2 == 1;
        const bool trans_b = trial % 3 == 1;
        const auto a = random_vector(m * k, rng);
        const auto b = random_vector(k * n, rng);
        auto av = trans_a ? row_major(a.data(), m).transposed() : row_major(a.data(), k);
        auto bv = trans_b ? row_major(b.data(), k).transposed() : row_major(b.data(), n);
        auto c = random_vector(m * n, rng);
        auto expected = c;
        const bool accumulate = trial % 4 == 0;
        gemm<float>(m, n, k, av, bv, c.data(), n, accumulate);
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                double sum = accumulate ? expected[i * n + j] : 0.0;
                for (std::size_t p = 0; p < k; ++p) sum += double(av(i, p)) * double(bv(p, j));
                ASSERT_NEAR(c[i * n + j], sum, 1e-4 * (1.0 + std::sqrt(double(k)))) << m << "x" << n << "x" << k;
            }
        }
    }
}

TEST(Gemm, ResultIndependentOfThreadCount) {
    std::mt19937 rng(11);
    const std::size_t m = 37, n = 301, k = 517;
    const auto a = random_vector(m * k, rng);
    const auto b = random_vector(k * n, rng);
    std::vector<float> c1(m * n), c4(m * n);
    {
        ThreadScope one(1);
        gemm<float>(m, n, k, row_major(a.data(), k), row_major(b.data(), n), c1.data(), n, false);
    }
    {
        ThreadScope four(4);
        gemm<float>(m, n, k, row_major(a.data(), k), row_major(b.data(), n), c4.data(), n, false);
    }
    EXPECT_EQ(0, std::memcmp(c1.data(), c4.data(), c1.size() * sizeof(float)));
}

TEST(Gemm, EmptyInnerDimensionZeroesOutput) {
    std::vector<double> c(6, 3.0);
    const double* none = nullptr;
    gemm<double>(2, 3, 0, {none, 0, 1}, {none, 3, 1}, c.data(), 3, false);
    for (double v : c) EXPECT_EQ(v, 0.0);
}
