#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "printkind/manifest.hpp"
#include "printkind/model.hpp"

namespace printkind {

// Decoded crops of one split, channel-planar, in manifest order.
struct CropSet {
    std::size_t channels = 1;
    std::size_t size = kCropSize;
    std::vector<std::uint8_t> pixels;
    std::vector<int> labels;
    std::vector<std::size_t> rows; // index into the manifest each crop came from

    std::size_t count() const { return labels.size(); }
    std::size_t image_bytes() const { return channels * size * size; }
    std::span<const std::uint8_t> image(std::size_t i) const {
        return {pixels.data() + i * image_bytes(), image_bytes()};
    }
};

// Loads the rows of `split` (all rows if nullopt); paths resolve against base_dir. Every crop
// must be size x size with the requested channel count.
CropSet load_crops(const Manifest& manifest, const std::filesystem::path& base_dir, std::optional<Split> split,
                   std::size_t channels = 1, std::size_t size = kCropSize);

// Keeps the first `n` crops of each class (in order); for overfit runs.
CropSet take_per_class(const CropSet& set, std::size_t n);

// Per-channel mean and standard deviation of [0,1]-scaled pixels.
InputNormalization compute_normalization(const CropSet& set);

} // namespace printkind
