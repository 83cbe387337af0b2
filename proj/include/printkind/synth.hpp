#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "printkind/image.hpp"
#include "printkind/manifest.hpp"

namespace printkind {

inline constexpr std::size_t kTileSize = 128;

// Both textures share tone_mean (average gray level) and contrast (paper minus ink), so neither
// class can be told apart by brightness alone.
struct TextureParams {
    // engraving
    double spacing = 7.0;            // px between stroke centres
    double width = 2.0;              // stroke width, px
    double orientation = 0.0;        // stroke direction, radians (0 = horizontal strokes)
    double orientation_jitter = 0.0; // per-tile uniform +- jitter, radians
    double waviness = 0.0;           // sinusoid amplitude across the stroke, px
    double wave_period = 48.0;       // px along the stroke
    // lithography
    double grain = 2.0;   // finest noise lattice spacing, px
    double density = 0.3; // fraction of ink pixels, [0, 1)
    // shared
    double tone_mean = 150.0;
    double contrast = 140.0;

    void validate_engraving() const;
    void validate_litho() const;
};

struct NoiseParams {
    double blur_sigma = 0.0;
    double bleed_through_opacity = 0.0;
    double gradient_amplitude = 0.0; // gray levels added at the bright end, subtracted at the dark end
    double salt_pepper = 0.0;        // per-pixel replacement probability

    void validate() const;
    bool is_identity() const {
        return blur_sigma == 0 && bleed_through_opacity == 0 && gradient_amplitude == 0 && salt_pepper == 0;
    }
};

Image gen_engraving_tile(const TextureParams& params, std::uint64_t seed, std::size_t size = kTileSize);
Image gen_litho_tile(const TextureParams& params, std::uint64_t seed, std::size_t size = kTileSize);

// Separable Gaussian with kernel radius ceil(4 sigma) and clamped borders, in place.
void gaussian_blur(std::vector<float>& plane, std::size_t width, std::size_t height, double sigma);

// Blur -> brightness gradient -> mirrored bleed-through bars -> salt and pepper.
Image apply_scan_noise(const Image& tile, const NoiseParams& noise, std::uint64_t seed);

struct Range {
    double lo = 0.0;
    double hi = 0.0;
};

// Parameter ranges for one class; each book draws one value per field.
struct TextureRanges {
    Range spacing, width, orientation, orientation_jitter, waviness, wave_period;
    Range grain, density;
    Range tone_mean, contrast;
};

// Per-tile draws.
struct NoiseRanges {
    Range blur_sigma, bleed_through_opacity, gradient_amplitude, salt_pepper;
};

struct SynthPreset {
    std::string name;
    TextureRanges engraving;
    TextureRanges lithography;
    NoiseRanges noise;
};

SynthPreset reference_preset();
SynthPreset hard_preset();
const SynthPreset& synth_preset(std::string_view name); // "reference" or "hard"

struct SynthBook {
    std::string book_id;
    Label label;
    TextureParams params;
};

struct CorpusPlan {
    SynthPreset preset;
    std::uint64_t seed = 0;
    std::size_t crops_per_book = 0;
    std::size_t crops_per_page = 8; // tiles are grouped into synthetic pages for image-level splits
    std::vector<SynthBook> books;

    // The tile after texture generation and scan noise.
    Image tile(std::size_t book, std::size_t index) const;
    CropRecord record(std::size_t book, std::size_t index) const;
    Manifest manifest() const;
};

CorpusPlan plan_corpus(const SynthPreset& preset, std::size_t engraving_books, std::size_t litho_books,
                       std::size_t crops_per_book, std::uint64_t seed);

// Writes crops/<book_id>/<crop_id>.pgm, manifest.csv and params.json under out_dir.
Manifest gen_corpus(const CorpusPlan& plan, const std::filesystem::path& out_dir);

std::string corpus_params_json(const CorpusPlan& plan);

} // namespace printkind
