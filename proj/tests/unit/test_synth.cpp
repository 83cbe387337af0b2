#include <omp.h>

#include <cmath>
#include <filesystem>
#include <numbers>

#include <gtest/gtest.h>

#include "printkind/errors.hpp"
#include "printkind/io.hpp"
#include "printkind/manifest.hpp"
#include "printkind/synth.hpp"
#include "temp_dir.hpp"

using namespace printkind;

namespace {

constexpr double kPi = std::numbers::pi;

// Independent orientation oracle: central-difference gradients, angle folded into [0, pi),
// eight equal bins, magnitude weighted. Returns the largest bin's share.
double max_orientation_bin(const Image& im) {
    double bins[8] = {};
    double total = 0;
    for (std::size_t y = 1; y + 1 < im.height; ++y) {
        for (std::size_t x = 1; x + 1 < im.width; ++x) {
            const double gx = 0.5 * (double(im.at(x + 1, y)) - double(im.at(x - 1, y)));
            const double gy = 0.5 * (double(im.at(x, y + 1)) - double(im.at(x, y - 1)));
            const double mag = std::hypot(gx, gy);
            if (mag == 0) continue;
            double a = std::atan2(gy, gx);
            if (a < 0) a += kPi;
            if (a >= kPi) a -= kPi;
            bins[std::min(7, static_cast<int>(a / (kPi / 8)))] += mag;
            total += mag;
        }
    }
    double best = 0;
    for (double b : bins) best = std::max(best, b / total);
    return best;
}

std::size_t count_files(const std::filesystem::path& dir) {
    std::size_t n = 0;
    for (const auto& e : std::filesystem::recursive_directory_iterator(dir)) n += e.is_regular_file();
    return n;
}

} // namespace

TEST(EngravingTile, SameSeedSameBytes) {
    TextureParams p;
    p.orientation = 0.7;
    p.waviness = 1.0;
    p.orientation_jitter = 0.1;
    EXPECT_EQ(gen_engraving_tile(p, 5), gen_engraving_tile(p, 5));
    EXPECT_NE(gen_engraving_tile(p, 5), gen_engraving_tile(p, 6));
}

TEST(EngravingTile, HorizontalStrokesGiveConstantRows) {
    TextureParams p;
    p.orientation = 0.0;
    p.waviness = 0.0;
    const Image t = gen_engraving_tile(p, 3);
    ASSERT_EQ(t.width, 128u);
    bool rows_differ = false;
    for (std::size_t y = 0; y < t.height; ++y) {
        for (std::size_t x = 1; x < t.width; ++x) ASSERT_EQ(t.at(x, y), t.at(0, y)) << "row " << y;
        rows_differ |= t.at(0, y) != t.at(0, 0);
    }
    EXPECT_TRUE(rows_differ);
}

TEST(EngravingTile, OrientationDominatesHistogram) {
    const CorpusPlan plan = plan_corpus(reference_preset(), 16, 1, 1, 42);
    for (std::size_t b = 0; b < 16; ++b) {
        TextureParams p = plan.books[b].params;
        p.orientation = (static_cast<double>(b % 8) + 0.5) * kPi / 8; // bin centres
        p.orientation_jitter = 0.0;
        for (std::uint64_t seed = 0; seed < 4; ++seed) {
            EXPECT_GE(max_orientation_bin(gen_engraving_tile(p, seed)), 0.5) << plan.books[b].book_id;
        }
    }
}

TEST(EngravingTile, InvalidParamsRejected) {
    TextureParams p;
    p.width = 8.0;
    p.spacing = 8.0;
    EXPECT_THROW(gen_engraving_tile(p, 0), DataError);
    p = {};
    p.width = 0.5;
    EXPECT_THROW(gen_engraving_tile(p, 0), DataError);
}

TEST(LithoTile, SameSeedSameBytes) {
    TextureParams p;
    EXPECT_EQ(gen_litho_tile(p, 9), gen_litho_tile(p, 9));
    EXPECT_NE(gen_litho_tile(p, 9), gen_litho_tile(p, 10));
}

TEST(LithoTile, ZeroDensityIsBlankAtToneMean) {
    TextureParams p;
    p.density = 0.0;
    p.tone_mean = 143.0;
    for (auto v : gen_litho_tile(p, 1).pixels) ASSERT_EQ(v, 143);
}

TEST(LithoTile, InkFractionMatchesDensity) {
    TextureParams p;
    p.density = 0.3;
    p.tone_mean = 140;
    p.contrast = 120;
    const Image t = gen_litho_tile(p, 4);
    const double paper = p.tone_mean + p.density * p.contrast;
    std::size_t ink = 0;
    for (auto v : t.pixels) ink += v < paper - p.contrast / 2;
    EXPECT_NEAR(double(ink) / double(t.pixels.size()), 0.3, 0.01);
}

TEST(LithoTile, IsotropicHistogram) {
    const CorpusPlan plan = plan_corpus(reference_preset(), 1, 20, 1, 42);
    for (std::size_t b = 1; b < plan.books.size(); ++b) {
        for (std::uint64_t seed = 0; seed < 4; ++seed) {
            EXPECT_LE(max_orientation_bin(gen_litho_tile(plan.books[b].params, seed)), 0.25)
                << plan.books[b].book_id;
        }
    }
}

TEST(LithoTile, InvalidParamsRejected) {
    TextureParams p;
    p.density = 1.0;
    EXPECT_THROW(gen_litho_tile(p, 0), DataError);
    p = {};
    p.tone_mean = 255.0;
    EXPECT_THROW(gen_litho_tile(p, 0), DataError);
}

TEST(ScanNoise, ZeroParamsLeaveTileUntouched) {
    TextureParams p;
    const Image t = gen_litho_tile(p, 2);
    EXPECT_EQ(apply_scan_noise(t, {}, 77), t);
}

TEST(ScanNoise, FullSaltPepperSaturates) {
    NoiseParams n;
    n.salt_pepper = 1.0;
    const Image out = apply_scan_noise(Image(64, 64, 1, 128), n, 3);
    std::size_t black = 0;
    for (auto v : out.pixels) {
        ASSERT_TRUE(v == 0 || v == 255);
        black += v == 0;
    }
    EXPECT_GT(black, 0u);
    EXPECT_LT(black, out.pixels.size());
}

TEST(ScanNoise, BlurMassWithinThreeSigma) {
    const std::size_t size = 65, c = 32;
    const double sigma = 2.0;
    std::vector<float> plane(size * size, 0.0f);
    plane[c * size + c] = 1.0f;
    gaussian_blur(plane, size, size, sigma);
    double total = 0, inside = 0;
    for (std::size_t y = 0; y < size; ++y) {
        for (std::size_t x = 0; x < size; ++x) {
            const double v = plane[y * size + x];
            total += v;
            if (std::abs(double(x) - double(c)) <= 3 * sigma && std::abs(double(y) - double(c)) <= 3 * sigma)
                inside += v;
        }
    }
    EXPECT_NEAR(total, 1.0, 1e-5);
    EXPECT_GE(inside / total, 0.99);
    // Discrete oracle: sampled Gaussian weights over a radius of 8 = ceil(4 sigma), squared
    // because the window is separable.
    double all = 0, near = 0;
    for (int i = -8; i <= 8; ++i) {
        const double w = std::exp(-0.5 * i * i / (sigma * sigma));
        all += w;
        if (std::abs(i) <= 6) near += w;
    }
    EXPECT_NEAR(inside / total, (near / all) * (near / all), 1e-5);
}

TEST(ScanNoise, DeterministicPerSeed) {
    NoiseParams n;
    n.blur_sigma = 0.7;
    n.bleed_through_opacity = 0.3;
    n.gradient_amplitude = 15;
    n.salt_pepper = 0.01;
    const Image t = gen_engraving_tile(TextureParams{}, 1);
    EXPECT_EQ(apply_scan_noise(t, n, 8), apply_scan_noise(t, n, 8));
    EXPECT_NE(apply_scan_noise(t, n, 8), apply_scan_noise(t, n, 9));
    n.bleed_through_opacity = 1.5;
    EXPECT_THROW(apply_scan_noise(t, n, 8), DataError);
}

TEST(Corpus, SmallestCorpusHasTwoRows) {
    const CorpusPlan plan = plan_corpus(reference_preset(), 1, 1, 1, 0);
    const Manifest m = plan.manifest();
    ASSERT_EQ(m.records.size(), 2u);
    EXPECT_EQ(m.records[0].label, Label::wood_engraving);
    EXPECT_EQ(m.records[1].label, Label::lithography);
    EXPECT_THROW(plan_corpus(reference_preset(), 0, 1, 1, 0), DataError);
}

TEST(Corpus, UnevenBookCountsBalanceToTableOne) {
    const CorpusPlan plan = plan_corpus(reference_preset(), 14, 18, 170, 3);
    const Manifest balanced = balance_manifest(plan.manifest(), 2235, 3);
    EXPECT_EQ(balanced.count(Label::wood_engraving), 2235u);
    EXPECT_EQ(balanced.count(Label::lithography), 2235u);
}

TEST(Corpus, TilesIndependentOfScheduleAndByteIdenticalPerSeed) {
    TempDir dir;
    const CorpusPlan plan = plan_corpus(reference_preset(), 2, 3, 5, 42);
    const int saved = omp_get_max_threads();
    omp_set_num_threads(1);
    gen_corpus(plan, dir / "a");
    omp_set_num_threads(3);
    gen_corpus(plan_corpus(reference_preset(), 2, 3, 5, 42), dir / "b");
    omp_set_num_threads(saved);
    ASSERT_EQ(count_files(dir / "a"), 5u * 5u + 2u);
    for (const auto& e : std::filesystem::recursive_directory_iterator(dir / "a")) {
        if (!e.is_regular_file()) continue;
        const auto rel = std::filesystem::relative(e.path(), dir / "a");
        EXPECT_EQ(read_file(e.path()), read_file(dir / "b" / rel)) << rel;
    }
    const Manifest m = read_manifest(dir / "a" / "manifest.csv");
    EXPECT_EQ(m.records.size(), 25u);
    EXPECT_EQ(read_image(dir / "a" / m.records[7].path), plan.tile(1, 2));

    gen_corpus(plan_corpus(reference_preset(), 2, 3, 5, 43), dir / "c");
    EXPECT_NE(read_file(dir / "a" / m.records[0].path), read_file(dir / "c" / m.records[0].path));
}

TEST(Corpus, BooksDrawDistinctStyles) {
    const CorpusPlan plan = plan_corpus(reference_preset(), 3, 3, 1, 1);
    EXPECT_NE(plan.books[0].params.spacing, plan.books[1].params.spacing);
    EXPECT_NE(plan.books[3].params.grain, plan.books[4].params.grain);
    EXPECT_EQ(synth_preset("hard").name, "hard");
    EXPECT_THROW(synth_preset("soft"), DataError);
}
